"""ARPA text format reader/writer.

Layout: ``\\data\\`` header with ``ngram k=<count>`` lines, one ``\\k-grams:``
section per order with ``<log10prob>\\t<w1> .. <wk>[\\t<log10bow>]`` entries
(back-off weight omitted at the top order and for grams that are not the
context of any stored higher-order gram), ``\\end\\`` footer.  Probabilities
are printed with six decimal places.  Writing streams section by section and
never materializes the full text.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import IO, Iterator

import numpy as np

from ..corpus import EOS, UNK, Vocabulary
from ..errors import ArpaFormatError
from .model import BackoffModel

_NGRAM_COUNT_RE = re.compile(r"^ngram (\d+)=(\d+)$")
_SECTION_RE = re.compile(r"^\\(\d+)-grams:$")

_WRITE_CHUNK = 262144


def write_arpa(model: BackoffModel, dest: str | Path | IO[str]) -> None:
    if hasattr(dest, "write"):
        _write(model, dest)  # type: ignore[arg-type]
    else:
        with open(dest, "w", encoding="utf-8") as fp:
            _write(model, fp)


def _write(model: BackoffModel, fp: IO[str]) -> None:
    n = model.order
    fp.write("\\data\\\n")
    for k in range(1, n + 1):
        fp.write(f"ngram {k}={model.ngram_count(k)}\n")
    tokens = [t for t, _ in model.vocab.entries]
    for k in range(1, n + 1):
        fp.write(f"\n\\{k}-grams:\n")
        logp = model.logp[k - 1]
        size = logp.size
        for start in range(0, size, _WRITE_CHUNK):
            stop = min(start + _WRITE_CHUNK, size)
            mat = _decode_slice(model, k, start, stop)
            if k < n:
                bows = model.logbow[k - 1][start:stop]
                has = model.has_bow[k - 1][start:stop]
            lines = []
            for i in range(stop - start):
                words = " ".join(tokens[t] for t in mat[i])
                if k < n and has[i]:
                    lines.append(f"{logp[start + i]:.6f}\t{words}\t{bows[i]:.6f}\n")
                else:
                    lines.append(f"{logp[start + i]:.6f}\t{words}\n")
            fp.write("".join(lines))
    fp.write("\n\\end\\\n")


def _decode_slice(model: BackoffModel, order: int, start: int, stop: int) -> np.ndarray:
    key = model.keys[order - 1][start:stop]
    out = np.empty((key.size, order), dtype=np.int64)
    v = model.vocab_size
    for col in range(order - 1, -1, -1):
        out[:, col] = key % v
        if col:
            key = model.keys[col - 1][key // v]
    return out


def _numbered_lines(fp: IO[str]) -> Iterator[tuple[int, str]]:
    for lineno, line in enumerate(fp, start=1):
        yield lineno, line.rstrip("\n")


def read_arpa(source: str | Path | IO[str], vocab: Vocabulary | None = None) -> BackoffModel:
    """Parse an ARPA file; malformed input raises with the offending line number.

    When `vocab` is given its tokens must match the unigram section in id
    order and the model is attached to it; otherwise a count-less vocabulary
    is rebuilt from the unigram section.
    """
    if hasattr(source, "read"):
        return _read(source, vocab)  # type: ignore[arg-type]
    with open(source, encoding="utf-8") as fp:
        return _read(fp, vocab)


def _read(fp: IO[str], vocab: Vocabulary | None) -> BackoffModel:
    lines = _numbered_lines(fp)

    lineno = 0
    for lineno, line in lines:
        if line.strip() == "\\data\\":
            break
        if line.strip():
            raise ArpaFormatError(f"line {lineno}: expected \\data\\ header")
    else:
        raise ArpaFormatError("missing \\data\\ header")

    declared: dict[int, int] = {}
    for lineno, line in lines:
        if not line.strip():
            break
        m = _NGRAM_COUNT_RE.match(line.strip())
        if not m:
            raise ArpaFormatError(f"line {lineno}: malformed count line {line!r}")
        declared[int(m.group(1))] = int(m.group(2))
    if not declared or sorted(declared) != list(range(1, max(declared) + 1)):
        raise ArpaFormatError("count header must declare contiguous orders from 1")
    order = max(declared)

    # (logp, token tuple, bow or None) per order, in file order
    entries: list[list[tuple[float, tuple[str, ...], float | None]]] = [
        [] for _ in range(order)
    ]
    current: int | None = None
    ended = False
    for lineno, line in lines:
        stripped = line.strip()
        if not stripped:
            continue
        if stripped == "\\end\\":
            ended = True
            break
        m = _SECTION_RE.match(stripped)
        if m:
            current = int(m.group(1))
            if not 1 <= current <= order:
                raise ArpaFormatError(f"line {lineno}: section order {current} not declared")
            continue
        if current is None:
            raise ArpaFormatError(f"line {lineno}: entry outside any \\k-grams: section")
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise ArpaFormatError(f"line {lineno}: expected 2 or 3 tab-separated fields")
        try:
            logp = float(fields[0])
            bow = float(fields[2]) if len(fields) == 3 else None
        except ValueError:
            raise ArpaFormatError(f"line {lineno}: non-numeric probability field") from None
        words = tuple(fields[1].split(" "))
        if len(words) != current or any(not w for w in words):
            raise ArpaFormatError(
                f"line {lineno}: token count does not match {current}-gram section"
            )
        if bow is not None and current == order:
            raise ArpaFormatError(f"line {lineno}: back-off weight on a top-order gram")
        entries[current - 1].append((logp, words, bow))
    if not ended:
        raise ArpaFormatError("missing \\end\\ footer")
    for k in range(1, order + 1):
        if len(entries[k - 1]) != declared[k]:
            raise ArpaFormatError(
                f"ngram {k}={declared[k]} declared but {len(entries[k - 1])} entries found"
            )

    unigrams = [w[0] for _, w, _ in entries[0]]
    if vocab is None:
        if UNK not in unigrams or EOS not in unigrams:
            raise ArpaFormatError(f"unigram section must include {UNK} and {EOS}")
        vocab = Vocabulary([(t, 0) for t in unigrams], cap=len(unigrams))
    else:
        if len(vocab) != len(unigrams) or any(
            vocab.token(i) != t for i, t in enumerate(unigrams)
        ):
            raise ArpaFormatError("unigram section does not match the supplied vocabulary")
    v = len(vocab)

    keys: list[np.ndarray] = [np.arange(v, dtype=np.int64)]
    logp_arrays: list[np.ndarray] = []
    logbow_arrays: list[np.ndarray] = []
    has_bow_arrays: list[np.ndarray] = []

    seen = np.zeros(v, dtype=bool)
    logp1 = np.zeros(v)
    bow1 = np.zeros(v)
    has1 = np.zeros(v, dtype=bool)
    for logp, words, bow in entries[0]:
        i = vocab.id_of(words[0])
        if seen[i]:
            raise ArpaFormatError(f"duplicate unigram {words[0]!r}")
        seen[i] = True
        logp1[i] = logp
        if bow is not None:
            bow1[i] = bow
            has1[i] = True
    logp_arrays.append(logp1)
    if order > 1:
        logbow_arrays.append(bow1)
        has_bow_arrays.append(has1)

    for k in range(2, order + 1):
        section = entries[k - 1]
        ids = np.empty((len(section), k), dtype=np.int64)
        for r, (_, words, _) in enumerate(section):
            for c, w in enumerate(words):
                try:
                    ids[r, c] = vocab.id_of(w)
                except KeyError:
                    raise ArpaFormatError(
                        f"{k}-gram entry {r + 1} uses token {w!r} with no unigram"
                    ) from None
        rows = ids[:, 0].copy()
        for col in range(1, k - 1):
            key = rows * v + ids[:, col]
            table = keys[col]
            idx = np.searchsorted(table, key)
            idx_c = np.minimum(idx, table.size - 1)
            bad = (idx >= table.size) | (table[idx_c] != key)
            if np.any(bad):
                r = int(np.flatnonzero(bad)[0])
                raise ArpaFormatError(
                    f"dangling {k}-gram entry {r + 1}: prefix not stored at order {k - 1}"
                )
            rows = idx_c
        key = rows * v + ids[:, k - 1]
        perm = np.argsort(key, kind="stable")
        key = key[perm]
        if np.any(key[1:] == key[:-1]):
            raise ArpaFormatError(f"duplicate {k}-gram entry in section")
        logp_k = np.array([e[0] for e in section])[perm]
        keys.append(key)
        logp_arrays.append(logp_k)
        if k < order:
            bows = np.array([e[2] if e[2] is not None else 0.0 for e in section])[perm]
            has = np.array([e[2] is not None for e in section])[perm]
            logbow_arrays.append(bows)
            has_bow_arrays.append(has)

    return BackoffModel(
        vocab=vocab,
        order=order,
        keys=keys,
        logp=logp_arrays,
        logbow=logbow_arrays,
        has_bow=has_bow_arrays,
    )
