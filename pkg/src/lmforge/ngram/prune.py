"""Relative-entropy pruning of back-off models.

Each gram of order >= 2 is scored by the increase in the model's weighted
relative entropy caused by removing it: with h the context, w the word, h' the
back-off context and bow'(h) the recomputed weight after removal,

    d = -P(h) * [ P(w|h) * (ln P(w|h') + ln bow'(h) - ln P(w|h))
                  + (1 - sum_stored P(.|h)) * (ln bow'(h) - ln bow(h)) ]

where P(h) is the model's own joint probability of the history.  Grams whose
relative perplexity change exp(d) - 1 falls below the threshold are removed.
All scores are computed against the unpruned model in a single pass; grams
that still have stored continuations and grams that are the suffix of a
surviving higher-order entry are kept so the pruned table stays well formed.
Unigrams are never pruned.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigurationError
from .model import BackoffModel, joint_history_log10, recompute_bows

_LN10 = math.log(10.0)


@dataclass(frozen=True)
class PruneConfig:
    theta: float = 0.0
    target_ngram_count: int | None = None

    def __post_init__(self):
        if self.theta < 0:
            raise ConfigurationError(f"pruning threshold must be >= 0, got {self.theta}")
        if self.target_ngram_count is not None and self.target_ngram_count < 1:
            raise ConfigurationError("target n-gram count must be positive")


def _perplexity_changes(model: BackoffModel) -> list[np.ndarray]:
    """Relative training-perplexity change for removing each gram, per order 2..n."""
    v = model.vocab_size
    out: list[np.ndarray] = []
    for k in range(2, model.order + 1):
        keys = model.keys[k - 1]
        parents = keys // v
        p = 10.0 ** model.logp[k - 1]
        suffix_grams = model.decode(k)[:, 1:]
        p_low = 10.0 ** model.conditional_log10(suffix_grams)
        size = model.keys[k - 2].size
        num = 1.0 - np.bincount(parents, weights=p, minlength=size)
        den = 1.0 - np.bincount(parents, weights=p_low, minlength=size)
        old_bow_ln = model.logbow[k - 2] * _LN10
        ph = 10.0 ** joint_history_log10(model, k - 1)

        new_bow_ln = np.log(np.maximum(num[parents] + p, 1e-300)) - np.log(
            np.maximum(den[parents] + p_low, 1e-300)
        )
        delta_logp = np.log(np.maximum(p_low, 1e-300)) + new_bow_ln - np.log(p)
        delta_entropy = -ph[parents] * (
            p * delta_logp + num[parents] * (new_bow_ln - old_bow_ln[parents])
        )
        out.append(np.expm1(delta_entropy))
    return out


def _removal_masks(
    model: BackoffModel, changes: list[np.ndarray], theta: float
) -> list[np.ndarray]:
    """Top-down removal decisions; True marks a gram to drop.

    Processed from the top order so that a gram is only removable once none of
    its continuations survive and no surviving entry needs it as a suffix.
    """
    v = model.vocab_size
    n = model.order
    below = theta > 0.0 and np.ndarray  # placeholder to keep lambdas readable
    masks: list[np.ndarray] = [np.zeros(0, dtype=bool)] * (n - 1)
    child_keep_parents: np.ndarray | None = None
    suffix_keep: np.ndarray | None = None
    for k in range(n, 1, -1):
        change = changes[k - 2]
        if theta > 0.0:
            remove = change < theta
        else:
            remove = change <= 0.0
        if child_keep_parents is not None:
            remove &= ~child_keep_parents
        if suffix_keep is not None:
            remove &= ~suffix_keep
        masks[k - 2] = remove
        keep = ~remove
        size = model.keys[k - 2].size
        child_keep_parents = (
            np.bincount(model.keys[k - 1][keep] // v, minlength=size) > 0
        )
        suffix_keep = np.zeros(size, dtype=bool)
        suffix_keep[model.suffix_rows(k)[keep]] = True
    return masks


def _apply(model: BackoffModel, masks: list[np.ndarray]) -> BackoffModel:
    v = model.vocab_size
    n = model.order
    keys = [model.keys[0].copy()]
    logp = [model.logp[0].copy()]
    remap: np.ndarray | None = None  # old row -> new row at order k-1
    for k in range(2, n + 1):
        key = model.keys[k - 1]
        if remap is not None:
            key = remap[key // v] * v + key % v  # parent remap is monotone: order kept
        keep = ~masks[k - 2]
        keys.append(key[keep])
        logp.append(model.logp[k - 1][keep])
        remap = np.cumsum(keep) - 1
    pruned = BackoffModel(
        vocab=model.vocab,
        order=n,
        keys=keys,
        logp=logp,
        logbow=[np.zeros(a.size) for a in keys[:-1]],
        has_bow=[np.zeros(a.size, dtype=bool) for a in keys[:-1]],
    )
    recompute_bows(pruned)
    return pruned


def prune_entropy(model: BackoffModel, cfg: PruneConfig) -> BackoffModel:
    """Prune to a threshold, or bisect the threshold to hit a target size.

    Budget mode searches theta so the total entry count lands within 5% of
    ``target_ngram_count``; unigram rows are a fixed part of that total.
    """
    if model.order == 1:
        return model
    changes = _perplexity_changes(model)

    def total_after(theta: float) -> tuple[int, list[np.ndarray]]:
        masks = _removal_masks(model, changes, theta)
        removed = sum(int(m.sum()) for m in masks)
        return model.total_ngrams() - removed, masks

    if cfg.target_ngram_count is None:
        _, masks = total_after(cfg.theta)
        return _apply(model, masks)

    target = cfg.target_ngram_count
    count, masks = total_after(cfg.theta)
    if count <= target:
        return _apply(model, masks)
    lo = cfg.theta
    hi = max(float(max(c.max() for c in changes if c.size)), lo) + 1.0
    best = (count, masks)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        count, masks = total_after(mid)
        if abs(count - target) < abs(best[0] - target):
            best = (count, masks)
        if abs(count - target) <= 0.05 * target:
            break
        if count > target:
            lo = mid
        else:
            hi = mid
    if abs(best[0] - target) > 0.05 * target:
        raise ConfigurationError(
            f"budget pruning cannot reach {target} entries within 5% "
            f"(closest achievable: {best[0]})"
        )
    return _apply(model, best[1])
