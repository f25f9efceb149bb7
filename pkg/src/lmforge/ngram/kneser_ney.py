"""Interpolated modified Kneser-Ney estimation from trie-encoded counts.

The highest order uses raw window counts; every lower order replaces them with
continuation counts (number of distinct one-token left extensions observed at
the order above).  Three discounts per order are estimated from the
count-of-counts of the counts actually used at that order:

    Y  = n1 / (n1 + 2 n2)
    D1 = 1 - 2 Y n2 / n1
    D2 = 2 - 3 Y n3 / n2
    D3 = 3 - 4 Y n4 / n3        (applied to counts >= 3)

clamped into [0, i).  When n2, n3 or n4 vanishes the order falls back to a
single discount D = Y and a warning is emitted.  Discounted mass is
redistributed through interpolation, so a context's back-off weight is exactly
its interpolation weight gamma(h); stored probabilities already include the
interpolated lower-order share and the model sums to one by construction.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .counts import NGramCounts
from .model import BackoffModel, log10_floor


@dataclass(frozen=True)
class DiscountSet:
    """Per-order absolute discounts for counts of 1, 2 and >=3."""

    d1: tuple[float, ...]
    d2: tuple[float, ...]
    d3plus: tuple[float, ...]

    def for_order(self, order: int) -> tuple[float, float, float]:
        return self.d1[order - 1], self.d2[order - 1], self.d3plus[order - 1]


def _order_discounts(adjusted: np.ndarray, order: int) -> tuple[float, float, float]:
    small = adjusted[(adjusted >= 1) & (adjusted <= 4)]
    binned = np.bincount(small, minlength=5)
    n1, n2, n3, n4 = (int(binned[i]) for i in range(1, 5))
    y = n1 / (n1 + 2.0 * n2) if n1 + 2 * n2 > 0 else 0.0
    if n2 == 0 or n3 == 0 or n4 == 0:
        warnings.warn(
            f"degenerate count-of-counts at order {order} "
            f"(n1={n1}, n2={n2}, n3={n3}, n4={n4}); using single discount D={y:.4f}"
        )
        return y, y, y
    d1 = min(max(1.0 - 2.0 * y * n2 / n1, 0.0), 1.0 - 1e-12)
    d2 = min(max(2.0 - 3.0 * y * n3 / n2, 0.0), 2.0 - 1e-12)
    d3 = min(max(3.0 - 4.0 * y * n4 / n3, 0.0), 3.0 - 1e-12)
    return d1, d2, d3


def estimate_discounts(counts: NGramCounts) -> DiscountSet:
    """Discounts per order, from the adjusted counts each order estimates with."""
    adjusted = _adjusted_counts(counts)
    trips = [_order_discounts(adjusted[k - 1], k) for k in range(1, counts.order + 1)]
    return DiscountSet(
        d1=tuple(t[0] for t in trips),
        d2=tuple(t[1] for t in trips),
        d3plus=tuple(t[2] for t in trips),
    )


def _adjusted_counts(counts: NGramCounts) -> list[np.ndarray]:
    n = counts.order
    adjusted: list[np.ndarray] = [None] * n  # type: ignore[list-item]
    adjusted[n - 1] = counts.counts[n - 1]
    for k in range(n - 1, 0, -1):
        upper = counts.counts[k]
        srows = counts.suffix_rows(k + 1)
        adjusted[k - 1] = np.bincount(
            srows[upper > 0], minlength=counts.keys[k - 1].size
        ).astype(np.int64)
    return adjusted


def estimate_kn(counts: NGramCounts) -> BackoffModel:
    """Estimate an interpolated modified-KN back-off model; no cutoffs, no pruning.

    Every trie row becomes a model entry, including the count-0 all-eos rows
    whose probability equals their own back-off estimate: they exist so that
    every stored gram's prefix is stored one order down (ARPA well-formedness).
    """
    n = counts.order
    v = counts.vocab_size
    adjusted = _adjusted_counts(counts)

    probs: list[np.ndarray] = []
    gammas: list[np.ndarray] = []  # gammas[k-1]: weight per context row (order k-1)
    for k in range(1, n + 1):
        a = adjusted[k - 1].astype(np.float64)
        d1, d2, d3 = _order_discounts(adjusted[k - 1], k)
        if k == 1:
            prefix = np.zeros(a.size, dtype=np.int64)
            n_ctx = 1
        else:
            prefix = counts.keys[k - 1] // v
            n_ctx = counts.keys[k - 2].size
        denom = np.bincount(prefix, weights=a, minlength=n_ctx)
        ints = adjusted[k - 1]
        t1 = np.bincount(prefix[ints == 1], minlength=n_ctx)
        t2 = np.bincount(prefix[ints == 2], minlength=n_ctx)
        t3 = np.bincount(prefix[ints >= 3], minlength=n_ctx)
        with np.errstate(invalid="ignore"):
            gamma = np.where(denom > 0, (d1 * t1 + d2 * t2 + d3 * t3) / np.maximum(denom, 1.0), 0.0)
        discount = np.select([ints == 1, ints == 2, ints >= 3], [d1, d2, d3], default=0.0)
        base = np.where(denom[prefix] > 0, np.maximum(a - discount, 0.0) / np.maximum(denom[prefix], 1.0), 0.0)
        if k == 1:
            lower = np.full(a.size, 1.0 / v)
        else:
            lower = probs[k - 2][counts.suffix_rows(k)]
        probs.append(base + gamma[prefix] * lower)
        gammas.append(gamma)

    logp = [log10_floor(p) for p in probs]
    logbow: list[np.ndarray] = []
    has_bow: list[np.ndarray] = []
    for k in range(1, n):
        size = counts.keys[k - 1].size
        parents = counts.keys[k] // v
        has = np.zeros(size, dtype=bool)
        has[parents] = True
        bow = np.where(has, log10_floor(gammas[k]), 0.0)
        logbow.append(bow)
        has_bow.append(has)

    return BackoffModel(
        vocab=counts.vocab,
        order=n,
        keys=[k.copy() for k in counts.keys],
        logp=logp,
        logbow=logbow,
        has_bow=has_bow,
    )
