"""Tokenized-text ingestion: capped vocabularies, id streams, morph tagging, corpus stats.

Text is whitespace-tokenized, one sentence per line.  Sentence ends are encoded
in-stream as a single ``<eos>`` token, out-of-vocabulary tokens as ``<unk>``;
no other special symbols exist.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Iterator

import numpy as np

from .errors import ConfigurationError, EmptyCorpusError, SegmentationIntegrityError

UNK = "<unk>"
EOS = "<eos>"
CONTINUATION_MARK = "+"


class Vocabulary:
    """Frequency-capped token <-> id map with reserved ``<unk>``/``<eos>`` entries.

    Entries are ordered by (count descending, token ascending); ids are the
    positions in that order.  ``<unk>`` and ``<eos>`` are always present and
    never evicted by the cap.
    """

    __slots__ = ("entries", "cap", "_id_of", "unk_id", "eos_id")

    def __init__(self, entries: list[tuple[str, int]], cap: int):
        self.entries = list(entries)
        self.cap = cap
        self._id_of = {token: i for i, (token, _) in enumerate(self.entries)}
        if len(self._id_of) != len(self.entries):
            raise ValueError("duplicate token in vocabulary entries")
        if UNK not in self._id_of or EOS not in self._id_of:
            raise ValueError("vocabulary must contain %r and %r" % (UNK, EOS))
        if len(self.entries) > cap:
            raise ValueError("vocabulary exceeds its cap")
        self.unk_id = self._id_of[UNK]
        self.eos_id = self._id_of[EOS]

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, token: str) -> bool:
        return token in self._id_of

    def id_of(self, token: str) -> int:
        """Id of a retained token; raises KeyError for OOV."""
        return self._id_of[token]

    def id_or_unk(self, token: str) -> int:
        return self._id_of.get(token, self.unk_id)

    def token(self, token_id: int) -> str:
        return self.entries[token_id][0]

    def count(self, token_id: int) -> int:
        return self.entries[token_id][1]

    def sha256(self) -> str:
        """Content hash; models record it to refuse mismatched streams."""
        h = hashlib.sha256()
        for token, count in self.entries:
            h.update(token.encode("utf-8"))
            h.update(b"\x00")
            h.update(str(count).encode("ascii"))
            h.update(b"\n")
        return h.hexdigest()

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fp:
            for token, count in self.entries:
                fp.write(f"{token}\t{count}\n")

    @classmethod
    def load(cls, path, cap: int | None = None) -> "Vocabulary":
        entries = []
        with open(path, encoding="utf-8") as fp:
            for line in fp:
                token, count = line.rstrip("\n").split("\t")
                entries.append((token, int(count)))
        return cls(entries, cap if cap is not None else len(entries))


@dataclass
class TokenStream:
    """A corpus as one continuous id sequence; sentence boundaries are eos ids."""

    ids: np.ndarray
    vocab: Vocabulary

    def __post_init__(self):
        self.ids = np.asarray(self.ids, dtype=np.int32)
        if self.ids.size and not (0 <= self.ids.min() and self.ids.max() < len(self.vocab)):
            raise ValueError("token id out of vocabulary range")
        if self.ids.size and self.ids[-1] != self.vocab.eos_id:
            raise ValueError("stream must end with eos")

    def __len__(self) -> int:
        return int(self.ids.size)


@dataclass(frozen=True)
class CorpusStats:
    token_count: int
    type_count: int
    oov_token_count: int

    @property
    def oov_rate(self) -> float:
        return self.oov_token_count / self.token_count if self.token_count else 0.0


def _iter_lines(text: str | Iterable[str]) -> Iterator[str]:
    if isinstance(text, str):
        return iter(text.splitlines())
    return iter(text)


def build_vocabulary(text: str | Iterable[str], cap: int) -> Vocabulary:
    """Build the cap most frequent token types, ties broken lexicographically.

    ``<eos>`` is credited one count per line, ``<unk>`` the total count of all
    evicted types; both survive the cap unconditionally.
    """
    if cap < 2:
        raise ConfigurationError(f"vocabulary cap must be >= 2, got {cap}")
    counts: Counter[str] = Counter()
    n_lines = 0
    for line in _iter_lines(text):
        n_lines += 1
        counts.update(line.split())
    if not counts:
        raise EmptyCorpusError("empty corpus: no tokens in input text")
    counts.pop(UNK, None)
    counts.pop(EOS, None)
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    kept = ranked[: cap - 2]
    unk_count = sum(c for _, c in ranked[cap - 2 :])
    entries = kept + [(UNK, unk_count), (EOS, n_lines)]
    entries.sort(key=lambda kv: (-kv[1], kv[0]))
    return Vocabulary(entries, cap)


def normalize(text: str | Iterable[str], vocab: Vocabulary) -> TokenStream:
    """Map text to ids: OOV -> unk, one eos per line, token order preserved."""
    out: list[int] = []
    id_or_unk = vocab.id_or_unk
    eos = vocab.eos_id
    for line in _iter_lines(text):
        out.extend(id_or_unk(t) for t in line.split())
        out.append(eos)
    return TokenStream(np.array(out, dtype=np.int32), vocab)


def detokenize(stream: TokenStream) -> str:
    """Inverse of normalize up to OOV collapse: ids back to surface lines."""
    vocab = stream.vocab
    lines: list[str] = []
    current: list[str] = []
    for i in stream.ids:
        if i == vocab.eos_id:
            lines.append(" ".join(current))
            current = []
        else:
            current.append(vocab.token(int(i)))
    if current:
        lines.append(" ".join(current))
    return "\n".join(lines) + "\n" if lines else ""


def corpus_stats(stream: TokenStream, vocab: Vocabulary) -> CorpusStats:
    """Token/type/OOV counts of a normalized stream; eos is excluded throughout."""
    ids = stream.ids
    real = ids[ids != vocab.eos_id]
    return CorpusStats(
        token_count=int(real.size),
        type_count=int(np.unique(real).size),
        oov_token_count=int(np.count_nonzero(real == vocab.unk_id)),
    )


def tag_morphs(words: Iterable[list[str]]) -> list[str]:
    """Flatten per-word morph lists, prefixing non-initial morphs with "+".

    The marker is glued to the morph string, so "ma" and "+ma" are distinct
    token types downstream.
    """
    out: list[str] = []
    for morphs in words:
        if not morphs:
            raise SegmentationIntegrityError("word with empty morph list")
        if any(not m for m in morphs):
            raise SegmentationIntegrityError("empty morph string in segmentation")
        out.append(morphs[0])
        out.extend(CONTINUATION_MARK + m for m in morphs[1:])
    return out


def detag_morphs(tokens: Iterable[str]) -> tuple[list[str], int]:
    """Rebuild words from tagged morphs: inverse of tag_morphs.

    A continuation token with no preceding word is recovered as word-initial;
    the number of such recoveries is returned alongside the words.
    """
    words: list[str] = []
    dangling = 0
    for tok in tokens:
        if tok.startswith(CONTINUATION_MARK) and len(tok) > len(CONTINUATION_MARK):
            if words:
                words[-1] += tok[len(CONTINUATION_MARK) :]
            else:
                words.append(tok[len(CONTINUATION_MARK) :])
                dangling += 1
        else:
            words.append(tok)
    return words, dangling
