"""Cross-sentence n-gram counting over a continuous token stream.

Per-order tables are trie-encoded: the order-k gram (w1 .. wk) is stored as the
int64 key ``parent_row * V + id(wk)`` where ``parent_row`` is the position of
its length-(k-1) prefix in the sorted order-(k-1) key array and V the
vocabulary size.  Order-1 keys are the token ids themselves, one row per
vocabulary entry.  This keeps counting, estimation and lookup as flat numpy
array passes even for streams of tens of millions of tokens.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..corpus import TokenStream, Vocabulary
from ..errors import ConfigurationError

MAX_ORDER = 9


@dataclass
class NGramCounts:
    """Raw sliding-window counts for orders 1..order plus count-of-counts.

    For order k the stream is left-padded with k-1 eos tokens, so every order
    sees exactly T windows (T = stream length) and each order's counts are the
    suffix marginals of the order above.  The all-eos gram is force-inserted
    with count 0 at orders 2..order-1; it is the context of the first window
    at the next order up and must exist as a trie row.
    """

    order: int
    vocab: Vocabulary
    keys: list[np.ndarray] = field(repr=False)    # keys[k-1]: sorted int64 keys of order k
    counts: list[np.ndarray] = field(repr=False)  # raw window counts, aligned with keys

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def ngrams(self, order: int) -> int:
        return int(self.keys[order - 1].size)

    def count_of_counts(self, order: int) -> tuple[int, int, int, int]:
        """(n1, n2, n3, n4): number of order-k grams occurring exactly 1..4 times."""
        c = self.counts[order - 1]
        c = c[(c >= 1) & (c <= 4)]
        binned = np.bincount(c, minlength=5)
        return tuple(int(binned[i]) for i in range(1, 5))

    def decode(self, order: int) -> np.ndarray:
        """Token-id matrix (N, order) of the order-k grams, in key order."""
        return decode_keys(self.keys, order, self.vocab_size)

    def as_dict(self, order: int) -> dict[tuple[int, ...], int]:
        """Plain ngram->count dict; intended for tests on small corpora."""
        mat = self.decode(order)
        counts = self.counts[order - 1]
        return {
            tuple(int(t) for t in row): int(c)
            for row, c in zip(mat, counts)
            if c > 0
        }

    def suffix_rows(self, order: int) -> np.ndarray:
        """Row (at order-1) of each order-k gram's length-(k-1) suffix."""
        return suffix_rows(self.keys, order, self.vocab_size)


def decode_keys(keys: list[np.ndarray], order: int, vocab_size: int) -> np.ndarray:
    key = keys[order - 1]
    out = np.empty((key.size, order), dtype=np.int64)
    for col in range(order - 1, -1, -1):
        out[:, col] = key % vocab_size
        if col:
            key = keys[col - 1][key // vocab_size]
    return out


def suffix_rows(keys: list[np.ndarray], order: int, vocab_size: int) -> np.ndarray:
    if order < 2:
        raise ValueError("suffixes are defined for order >= 2")
    rows = keys[1] % vocab_size  # suffix of a bigram is its last unigram row
    for k in range(3, order + 1):
        key = keys[k - 1]
        skey = rows[key // vocab_size] * vocab_size + key % vocab_size
        rows = np.searchsorted(keys[k - 2], skey)
        if not np.array_equal(keys[k - 2][rows], skey):
            raise AssertionError("suffix closure violated in trie tables")
    return rows


def count_ngrams(stream: TokenStream, n: int) -> NGramCounts:
    """Count all orders 1..n over the continuous stream (windows cross eos)."""
    if not 1 <= n <= MAX_ORDER:
        raise ConfigurationError(f"n-gram order must be in [1, {MAX_ORDER}], got {n}")
    ids = np.asarray(stream.ids, dtype=np.int64)
    if ids.size == 0:
        raise ConfigurationError("cannot count n-grams of an empty stream")
    vocab = stream.vocab
    vocab_size = len(vocab)
    eos = int(vocab.eos_id)

    keys: list[np.ndarray] = [np.arange(vocab_size, dtype=np.int64)]
    counts: list[np.ndarray] = [np.bincount(ids, minlength=vocab_size).astype(np.int64)]
    rows = ids  # rows[i]: trie row of the order-k window ending at position i
    sentinel = eos  # row of the all-eos gram at the current order
    for k in range(2, n + 1):
        prefix = np.empty_like(rows)
        prefix[0] = sentinel
        prefix[1:] = rows[:-1]
        wkeys = prefix * vocab_size + ids
        ukeys, rows, ucounts = np.unique(wkeys, return_inverse=True, return_counts=True)
        rows = rows.reshape(-1)
        ucounts = ucounts.astype(np.int64)
        if k < n:
            skey = np.int64(sentinel) * vocab_size + eos
            pos = int(np.searchsorted(ukeys, skey))
            if pos == ukeys.size or ukeys[pos] != skey:
                ukeys = np.insert(ukeys, pos, skey)
                ucounts = np.insert(ucounts, pos, 0)
                rows = np.where(rows >= pos, rows + 1, rows)
            sentinel = pos
        keys.append(ukeys)
        counts.append(ucounts)
    return NGramCounts(order=n, vocab=vocab, keys=keys, counts=counts)
