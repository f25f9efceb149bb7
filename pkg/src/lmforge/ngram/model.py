"""Back-off model storage, query recursion and perplexity evaluation.

A model reuses the trie key encoding of :mod:`lmforge.ngram.counts`: per order
a sorted int64 key array plus aligned log10 probability and log10 back-off
weight arrays.  Back-off weights exist only for grams that are the context of
some stored higher-order gram (``has_bow``); everywhere else the weight is 1
(log 0) and the field is omitted on serialization.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..corpus import TokenStream, Vocabulary
from ..errors import VocabularyMismatchError
from .counts import decode_keys, suffix_rows

LOG10_FLOOR = -99.0  # ARPA-compatible stand-in for log10(0)


@dataclass
class BackoffModel:
    """Per-order tables of (log10 prob, log10 back-off weight) keyed by id n-grams."""

    vocab: Vocabulary
    order: int
    keys: list[np.ndarray] = field(repr=False)
    logp: list[np.ndarray] = field(repr=False)
    logbow: list[np.ndarray] = field(repr=False)   # orders 1..n-1; 0.0 where absent
    has_bow: list[np.ndarray] = field(repr=False)  # bool, orders 1..n-1

    def __post_init__(self):
        self._eos_ctx_rows: list[int] | None = None

    @property
    def vocab_size(self) -> int:
        return len(self.vocab)

    def ngram_count(self, order: int) -> int:
        return int(self.keys[order - 1].size)

    def total_ngrams(self) -> int:
        return sum(self.ngram_count(k) for k in range(1, self.order + 1))

    def decode(self, order: int) -> np.ndarray:
        return decode_keys(self.keys, order, self.vocab_size)

    def suffix_rows(self, order: int) -> np.ndarray:
        return suffix_rows(self.keys, order, self.vocab_size)

    def rows_of(self, grams: np.ndarray) -> np.ndarray:
        """Trie rows of an (N, k) id matrix; -1 where the gram is not stored."""
        grams = np.atleast_2d(np.asarray(grams, dtype=np.int64))
        v = self.vocab_size
        rows = grams[:, 0].copy()
        np.clip(rows, 0, v - 1, out=rows)  # ids are validated upstream
        for col in range(1, grams.shape[1]):
            valid = rows >= 0
            key = np.where(valid, rows, 0) * v + grams[:, col]
            table = self.keys[col]
            idx = np.searchsorted(table, key)
            idx_c = np.minimum(idx, table.size - 1)
            found = valid & (idx < table.size) & (table[idx_c] == key)
            rows = np.where(found, idx_c, -1)
        return rows

    def eos_context_row(self, length: int) -> int:
        """Row of the all-eos gram of the given length, or -1 if absent."""
        if self._eos_ctx_rows is None:
            rows: list[int] = [int(self.vocab.eos_id)]
            v = self.vocab_size
            for k in range(2, self.order + 1):
                prev = rows[-1]
                if prev < 0:
                    rows.append(-1)
                    continue
                key = np.int64(prev) * v + self.vocab.eos_id
                table = self.keys[k - 1]
                idx = int(np.searchsorted(table, key))
                rows.append(idx if idx < table.size and table[idx] == key else -1)
            self._eos_ctx_rows = rows
        return self._eos_ctx_rows[length - 1]

    def context_count(self, order: int) -> int:
        """Number of stored grams at `order` that carry a back-off weight."""
        if order >= self.order:
            return 0
        return int(np.count_nonzero(self.has_bow[order - 1]))

    def conditional_log10(self, grams: np.ndarray) -> np.ndarray:
        """log10 P(last column | preceding columns) for an (N, m) id matrix.

        Histories longer than order-1 are truncated on the left; the back-off
        recursion adds the context's weight whenever the gram is not stored at
        an order and descends.
        """
        grams = np.atleast_2d(np.asarray(grams, dtype=np.int64))
        m = grams.shape[1]
        width = min(m, self.order)
        grams = grams[:, m - width :]
        n_rows = grams.shape[0]

        gram_rows = []  # rows of the order-k gram ending at the target
        ctx_rows = []   # rows of the length-k context preceding the target
        for k in range(1, width + 1):
            gram_rows.append(self.rows_of(grams[:, width - k :]))
            if k < width:
                ctx_rows.append(self.rows_of(grams[:, width - 1 - k : -1]))

        res = np.zeros(n_rows)
        acc = np.zeros(n_rows)
        unresolved = np.ones(n_rows, dtype=bool)
        for k in range(width, 0, -1):
            rows = gram_rows[k - 1]
            found = unresolved & (rows >= 0)
            if np.any(found):
                res[found] = acc[found] + self.logp[k - 1][rows[found]]
                unresolved &= ~found
            if k > 1 and np.any(unresolved):
                ctx = ctx_rows[k - 2]
                bow = np.where(ctx >= 0, self.logbow[k - 2][np.maximum(ctx, 0)], 0.0)
                acc[unresolved] += bow[unresolved]
        if np.any(unresolved):  # unigrams cover the full vocabulary
            raise AssertionError("query fell through the unigram table")
        return res

    def query(self, history, token_id: int) -> float:
        """Scalar back-off query; history may be any length (left-truncated)."""
        hist = list(history)[-(self.order - 1) :] if self.order > 1 else []
        gram = np.array([hist + [token_id]], dtype=np.int64)
        return float(self.conditional_log10(gram)[0])


def stream_log10_probs(model: BackoffModel, ids: np.ndarray) -> np.ndarray:
    """Per-token log10 probabilities of a stream under the back-off recursion.

    The stream is scored as one continuous sequence; the first tokens see the
    all-eos padding context, matching how the model was estimated.
    """
    ids = np.asarray(ids, dtype=np.int64)
    n = model.order
    v = model.vocab_size
    t = ids.size
    if t == 0:
        return np.zeros(0)

    rows_per_order = [ids]  # order-1 gram rows: the ids themselves
    prefix_per_order: list[np.ndarray] = []
    for k in range(2, n + 1):
        prev = rows_per_order[-1]
        prefix = np.empty_like(prev)
        prefix[0] = model.eos_context_row(k - 1)
        prefix[1:] = prev[:-1]
        valid = prefix >= 0
        key = np.where(valid, prefix, 0) * v + ids
        table = model.keys[k - 1]
        idx = np.searchsorted(table, key)
        idx_c = np.minimum(idx, table.size - 1)
        found = valid & (idx < table.size) & (table[idx_c] == key)
        rows_per_order.append(np.where(found, idx_c, -1))
        prefix_per_order.append(prefix)

    res = np.zeros(t)
    acc = np.zeros(t)
    unresolved = np.ones(t, dtype=bool)
    for k in range(n, 0, -1):
        rows = rows_per_order[k - 1]
        found = unresolved & (rows >= 0)
        if np.any(found):
            res[found] = acc[found] + model.logp[k - 1][rows[found]]
            unresolved &= ~found
        if k > 1 and np.any(unresolved):
            ctx = prefix_per_order[k - 2]
            bow = np.where(ctx >= 0, model.logbow[k - 2][np.maximum(ctx, 0)], 0.0)
            acc[unresolved] += bow[unresolved]
    if np.any(unresolved):
        raise AssertionError("query fell through the unigram table")
    return res


def check_stream_vocab(model: BackoffModel, stream: TokenStream) -> None:
    if stream.vocab is model.vocab:
        return
    if stream.vocab.sha256() != model.vocab.sha256():
        raise VocabularyMismatchError("stream vocabulary differs from model vocabulary")


def perplexity(model: BackoffModel, stream: TokenStream) -> tuple[float, float, int]:
    """(perplexity, total log10 probability, scored tokens incl. eos)."""
    check_stream_vocab(model, stream)
    lp = stream_log10_probs(model, stream.ids)
    total = float(lp.sum())
    t = int(lp.size)
    return 10.0 ** (-total / t), total, t


def recompute_bows(model: BackoffModel) -> None:
    """Recompute every back-off weight from the stored probabilities.

    bow(h) = (1 - sum of stored P(w|h)) / (1 - sum of the same words' lower
    order estimates); contexts whose stored words exhaust the vocabulary get
    weight 1.  Stored probabilities are never touched, so the pass is order
    independent.
    """
    v = model.vocab_size
    for k in range(1, model.order):
        child_keys = model.keys[k]
        parents = child_keys // v
        p_child = 10.0 ** model.logp[k]
        p_lower = 10.0 ** model.logp[k - 1][model.suffix_rows(k + 1)]
        size = model.keys[k - 1].size
        num = 1.0 - np.bincount(parents, weights=p_child, minlength=size)
        den = 1.0 - np.bincount(parents, weights=p_lower, minlength=size)
        has = np.zeros(size, dtype=bool)
        has[parents] = True
        eps = 1e-12
        safe_num = np.where(num > eps, num, 1.0)
        safe_den = np.where(den > eps, den, 1.0)
        logbow = np.where(has, np.log10(safe_num) - np.log10(safe_den), 0.0)
        # stored words exhaust the vocabulary: weight is never used, pin to 1
        logbow[has & (den <= eps)] = 0.0
        # stored mass already sums to 1 but unseen words remain: weight -> 0
        logbow[has & (num <= eps) & (den > eps)] = LOG10_FLOOR
        model.logbow[k - 1] = logbow
        model.has_bow[k - 1] = has
    model._eos_ctx_rows = None


def joint_history_log10(model: BackoffModel, order: int) -> np.ndarray:
    """log10 of the model's own joint probability of every stored order-k gram.

    Chained from the stored conditionals: the gram (prefix, w) multiplies its
    prefix's joint probability by its stored conditional.
    """
    v = model.vocab_size
    joint = model.logp[0].astype(np.float64)
    for k in range(2, order + 1):
        parents = model.keys[k - 1] // v
        joint = joint[parents] + model.logp[k - 1]
    return joint


def log10_floor(values: np.ndarray) -> np.ndarray:
    """log10 with zeros mapped to the ARPA floor instead of -inf."""
    out = np.full(values.shape, LOG10_FLOOR)
    positive = values > 0
    np.log10(values, out=out, where=positive)
    return np.maximum(out, LOG10_FLOOR)


def context_prob_sum(model: BackoffModel, context: np.ndarray) -> float:
    """Sum of P(w|context) over the full vocabulary, by direct query."""
    v = model.vocab_size
    context = np.asarray(context, dtype=np.int64).reshape(-1)
    grams = np.concatenate(
        [np.tile(context, (v, 1)), np.arange(v, dtype=np.int64)[:, None]], axis=1
    )
    return float((10.0 ** model.conditional_log10(grams)).sum())
