"""Count-based back-off n-gram language models.

Counting, interpolated modified Kneser-Ney estimation, back-off queries and
perplexity, ARPA serialization, relative-entropy pruning, and static
interpolation of two models.
"""

from .counts import NGramCounts, count_ngrams
from .model import BackoffModel, perplexity, stream_log10_probs
from .kneser_ney import DiscountSet, estimate_discounts, estimate_kn
from .arpa import read_arpa, write_arpa
from .prune import PruneConfig, prune_entropy
from .interpolate import interpolate, mixed_stream_log10_probs, tune_lambda

__all__ = [
    "NGramCounts",
    "count_ngrams",
    "BackoffModel",
    "perplexity",
    "stream_log10_probs",
    "DiscountSet",
    "estimate_discounts",
    "estimate_kn",
    "read_arpa",
    "write_arpa",
    "PruneConfig",
    "prune_entropy",
    "interpolate",
    "mixed_stream_log10_probs",
    "tune_lambda",
]
