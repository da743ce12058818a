"""Exact minimum signed-sum partition and the inequalities built on it.

``s_min(e)`` is ``min_A |sum_{A} e - sum_{A^c} e|`` over all subsets ``A``.
The side with the larger sum is reported as ``F`` and the other as ``G``,
so ``sum(F) = M + s_min`` and ``sum(G) = M``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .star_model import InvalidInputError

MAX_PARTITION_SIZE = 30
_CHUNK_BITS = 18


@dataclass(frozen=True)
class PartitionResult:
    s_min: float
    subset_mask: int
    f_values: tuple[float, ...]
    g_values: tuple[float, ...]
    m: float
    f_min: float
    f_avg: float
    g_avg: float | None
    signs: NDArray[np.int64]

    @property
    def n(self) -> int:
        return int(self.signs.size)


def _as_positive(e: ArrayLike | Sequence[float]) -> NDArray[np.float64]:
    e = np.asarray(e, dtype=float).reshape(-1)
    if e.size < 1:
        raise InvalidInputError("partition needs at least one element")
    if not np.all(np.isfinite(e)) or np.any(e <= 0.0):
        raise InvalidInputError("partition elements must be finite and positive")
    return e


def _best_mask(e: NDArray[np.float64]) -> int:
    """Lowest mask (element 0 always included) among the minimizers.

    Two sums closer than ``1e-12 * sum(e)`` count as tied so that rounding in
    different summation orders cannot change the chosen subset.
    """
    n = e.size
    total = float(np.sum(e))
    tie = 1e-12 * total
    free = n - 1
    n_masks = 1 << free
    bit_idx = np.arange(free, dtype=np.int64)
    best_val = np.inf
    best_mask = 0
    chunk = 1 << min(free, _CHUNK_BITS)
    for start in range(0, n_masks, chunk):
        hi = np.arange(start, min(start + chunk, n_masks), dtype=np.int64)
        bits = ((hi[:, None] >> bit_idx) & 1).astype(float)
        sum_a = e[0] + bits @ e[1:]
        vals = np.abs(2.0 * sum_a - total)
        local = float(vals.min())
        if local < best_val - tie:
            best_val = local
            best_mask = int(hi[np.flatnonzero(vals <= local + tie)[0]])
    return (best_mask << 1) | 1


def s_min(e: ArrayLike | Sequence[float]) -> PartitionResult:
    e = _as_positive(e)
    n = e.size
    if n > MAX_PARTITION_SIZE:
        raise InvalidInputError(f"exact partition limited to n <= {MAX_PARTITION_SIZE}, got {n}")
    mask = _best_mask(e)
    in_a = ((mask >> np.arange(n)) & 1).astype(bool)
    sum_a = float(np.sum(e[in_a]))
    sum_c = float(np.sum(e[~in_a]))
    if sum_a < sum_c:
        in_a = ~in_a
        mask = int(np.sum(1 << np.flatnonzero(in_a))) if in_a.any() else 0
        sum_a, sum_c = sum_c, sum_a
    f = e[in_a]
    g = e[~in_a]
    signs = np.where(in_a, 1, -1).astype(np.int64)
    signs.setflags(write=False)
    value = abs(sum_a - sum_c)
    return PartitionResult(
        s_min=value,
        subset_mask=mask,
        f_values=tuple(float(x) for x in f),
        g_values=tuple(float(x) for x in g),
        m=sum_c,
        f_min=float(f.min()),
        f_avg=(sum_c + value) / f.size,
        g_avg=sum_c / g.size if g.size else None,
        signs=signs,
    )


def lemma4_check(result: PartitionResult) -> bool:
    """The minimum imbalance never exceeds the smallest element on the heavy side."""
    return result.s_min <= result.f_min + 1e-12


def lemma5_gap(e: ArrayLike | Sequence[float]) -> float:
    """``n (n-1) mean(e)**2 - sum_{i != j} e_i e_j``; non-negative for positive ``e``."""
    e = _as_positive(e)
    n = e.size
    if n < 2:
        raise InvalidInputError("pairwise bound needs n >= 2")
    # the difference reduces to sum((e - mean)**2); evaluate that form to avoid cancellation
    return float(np.sum((e - e.mean()) ** 2))


def lemma6_cross_term(e: ArrayLike | Sequence[float], c: ArrayLike | Sequence[int]) -> float:
    """``sum_{i != j} c_i c_j e_i e_j`` for signs ``c`` attaining the minimum imbalance.

    Computed as ``(c . e)**2 - sum(e**2)``. Strictly negative whenever
    ``n >= 2``.
    """
    e = _as_positive(e)
    c = np.asarray(c, dtype=float).reshape(-1)
    if e.size < 2:
        raise InvalidInputError("cross term needs n >= 2")
    if c.shape != e.shape or not np.all(np.abs(c) == 1.0):
        raise InvalidInputError("signs must be a +/-1 vector matching e")
    signed = float(c @ e)
    best = s_min(e).s_min
    if abs(abs(signed) - best) > 1e-12 * max(1.0, float(np.sum(e))):
        raise InvalidInputError(
            f"signs give |sum c e| = {abs(signed):.17g}, not the minimum {best:.17g}"
        )
    return signed**2 - float(np.sum(e**2))


def s_min_exhaustive(e: Sequence[float]) -> float:
    """Reference value of the minimum imbalance by plain enumeration of all subsets.

    Kept deliberately naive and separate from ``s_min`` so it can serve as a
    cross-check.
    """
    vals = [float(x) for x in e]
    best = float("inf")
    for mask in range(1 << len(vals)):
        left = 0.0
        right = 0.0
        for i, x in enumerate(vals):
            if mask >> i & 1:
                left += x
            else:
                right += x
        best = min(best, abs(left - right))
    return best
