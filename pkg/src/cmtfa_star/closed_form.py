"""Closed-form CMTFA solutions for star covariances.

Non-dominant loadings give the rank-one reduced matrix ``alpha alpha'``;
dominant loadings give a rank ``n - 1`` matrix with the same off-diagonal and
a modified diagonal. All matrices are returned in the caller's input order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .star_model import AlphaVector, InvalidInputError, as_alpha, classify_dominance

RankClass = Literal["RankOne", "RankNMinusOne"]

# Dominance margins within this band are treated as the boundary.
BOUNDARY_TOL = 1e-12


class DominanceError(InvalidInputError):
    """Raised when a construction is applied on the wrong side of dominance."""


@dataclass(frozen=True)
class CmtfaSolution:
    sigma_t: NDArray[np.float64]
    d: NDArray[np.float64]
    rank_class: RankClass
    trace_sigma_t: float

    @property
    def n(self) -> int:
        return int(self.d.size)

    @property
    def objective(self) -> float:
        """Total diagonal mass ``sum(d)``; larger is better."""
        return float(np.sum(self.d))


@dataclass(frozen=True)
class SignVectorPhi:
    entries: NDArray[np.float64]


def _freeze(*arrays: NDArray) -> None:
    for a in arrays:
        a.setflags(write=False)


def rank_one_candidate(alpha: AlphaVector | ArrayLike) -> CmtfaSolution:
    """``alpha alpha'`` with ``d = 1 - alpha**2``, without any dominance check.

    This is always feasible; it is the optimum only for non-dominant loadings.
    """
    alpha = as_alpha(alpha)
    a = alpha.values
    sigma_t = np.outer(a, a)
    d = 1.0 - a**2
    _freeze(sigma_t, d)
    return CmtfaSolution(sigma_t, d, "RankOne", float(np.sum(a**2)))


def solve_nd(alpha: AlphaVector | ArrayLike) -> CmtfaSolution:
    alpha = as_alpha(alpha)
    dom = classify_dominance(alpha)
    if dom.dominant:
        raise DominanceError(f"solve_nd needs non-dominant loadings (margin {dom.margin:.17g})")
    return rank_one_candidate(alpha)


def _dm_diagonal(canon: NDArray[np.float64]) -> NDArray[np.float64]:
    mag = np.abs(canon)
    total_rest = np.sum(mag[1:])
    diag = np.empty_like(mag)
    diag[0] = mag[0] * total_rest
    # sum over j not in {1, i} of |alpha_j| is total_rest - |alpha_i|
    diag[1:] = mag[1:] * (mag[0] - (total_rest - mag[1:]))
    return diag


def solve_dm(alpha: AlphaVector | ArrayLike) -> CmtfaSolution:
    """Rank ``n - 1`` solution for dominant loadings.

    Diagonal in canonical order: ``|a_1| * sum_{i>1} |a_i|`` for the leading
    entry and ``|a_i| * (|a_1| - sum_{j not in {1,i}} |a_j|)`` for the rest.
    The boundary (largest loading equal to the sum of the others) is accepted.
    """
    alpha = as_alpha(alpha)
    dom = classify_dominance(alpha)
    if dom.margin > BOUNDARY_TOL:
        raise DominanceError(f"solve_dm needs dominant loadings (margin {dom.margin:.17g})")
    canon = alpha.canonical()
    sigma_c = np.outer(canon, canon)
    np.fill_diagonal(sigma_c, _dm_diagonal(canon))
    sigma_t = alpha.uncanonical_matrix(sigma_c)
    d = 1.0 - np.diag(sigma_t)
    if np.any(d < -1e-12):
        raise InvalidInputError(f"negative diagonal in dominant solution: {d.tolist()}")
    d = np.maximum(d, 0.0)
    _freeze(sigma_t, d)
    return CmtfaSolution(sigma_t, d, "RankNMinusOne", float(np.trace(sigma_t)))


def solve(alpha: AlphaVector | ArrayLike) -> CmtfaSolution:
    """Dispatch on dominance; the boundary goes to the rank-one form."""
    alpha = as_alpha(alpha)
    if classify_dominance(alpha).dominant:
        return solve_dm(alpha)
    return solve_nd(alpha)


def null_vector_phi(alpha: AlphaVector | ArrayLike) -> SignVectorPhi:
    """Sign vector spanning the null space of the dominant solution.

    In canonical order ``phi_1 = +1`` and ``phi_i = -1`` exactly when
    ``alpha_1 alpha_i > 0``.
    """
    alpha = as_alpha(alpha)
    if not classify_dominance(alpha).dominant:
        raise DominanceError("null_vector_phi needs dominant loadings")
    canon = alpha.canonical()
    phi = np.where(canon[0] * canon > 0, -1.0, 1.0)
    phi[0] = 1.0
    out = alpha.uncanonical_vector(phi)
    _freeze(out)
    return SignVectorPhi(out)


def dm_column_identity_residual(solution: CmtfaSolution, alpha: AlphaVector | ArrayLike) -> float:
    """Infinity norm of ``col_1 - sum_{g>=2} gamma_1 gamma_g col_g`` (canonical order)."""
    alpha = as_alpha(alpha)
    if solution.rank_class != "RankNMinusOne":
        raise InvalidInputError("column identity applies to rank n-1 solutions only")
    if solution.n != alpha.n:
        raise InvalidInputError("solution and loadings differ in size")
    perm = alpha.sort_perm
    m = solution.sigma_t[np.ix_(perm, perm)]
    gamma = alpha.signs[perm].astype(float)
    combo = m[:, 1:] @ (gamma[0] * gamma[1:])
    return float(np.max(np.abs(m[:, 0] - combo)))
