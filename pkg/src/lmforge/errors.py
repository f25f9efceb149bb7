"""Shared exception types."""


class ConfigurationError(ValueError):
    """A parameter or config file value is outside its legal range."""


class EmptyCorpusError(ValueError):
    """No usable tokens in the input text."""


class SegmentationIntegrityError(ValueError):
    """A word's morph decomposition violates the tagging convention."""


class VocabularyMismatchError(ValueError):
    """Two artifacts that must share a vocabulary do not."""


class ArpaFormatError(ValueError):
    """Malformed ARPA file; message carries the offending line number."""
