"""Language-model toolkit: back-off n-grams, LSTM LMs, and n-gram approximations of neural LMs."""

__version__ = "0.1.0"
