"""Null-space optimality certificates for CMTFA solutions.

A diagonal ``d >= 0`` is optimal iff ``Sigma - diag(d)`` is PSD and singular
and there are null-space vectors ``t_i`` whose entrywise squares sum to the
all-ones vector, up to non-negative multipliers on coordinates where
``d_j = 0``. With ``T = [t_1 ... t_r]`` the condition reads
``diag(T T') = 1`` on every coordinate with ``d_j > 0``.

Dominant loadings: the single sign column ``phi`` does the job.
Non-dominant loadings: ``T = V B`` where the first ``n - 1`` columns of ``V``
span the null space of ``alpha alpha'``, the last column is a signed
combination of them, and ``B = sqrt(beta)`` is chosen so each row of ``T``
has unit norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from . import partition
from .closed_form import (
    CmtfaSolution,
    DominanceError,
    null_vector_phi,
    rank_one_candidate,
    solve_dm,
    solve_nd,
)
from .star_model import (
    AlphaVector,
    InvalidInputError,
    StarCovariance,
    as_alpha,
    as_sigma,
    build_sigma_x,
    classify_dominance,
)

CaseTag = Literal["SumSquaresEqualsOne", "SumSquaresBelowOne", "SumSquaresAboveOne"]

DEFAULT_TOL = 1e-8
CASE_TOL = 1e-12


class DominanceViolation(DominanceError):
    """The unit-row-norm construction needs ``beta_nn > 1``: the loadings are dominant."""


@dataclass(frozen=True)
class NullBasisConstruction:
    """All quantities in canonical order (largest ``|alpha|`` first)."""

    v_matrix: NDArray[np.float64]
    c: NDArray[np.float64]
    beta: NDArray[np.float64]
    alpha_tilde: NDArray[np.float64]
    case_tag: CaseTag


@dataclass(frozen=True)
class Certificate:
    t_matrix: NDArray[np.float64]
    mu: dict[int, float] = field(default_factory=dict)
    row_norm_residual: float = np.nan
    null_residual: float = np.nan
    min_eig: float = np.nan
    verdict: bool = False
    case_tag: CaseTag | None = None
    construction: NullBasisConstruction | None = field(default=None, repr=False)


def _normalized_tail(alpha: AlphaVector) -> NDArray[np.float64]:
    canon = alpha.canonical()
    return canon[1:] / canon[0]


def _case(tail: NDArray[np.float64]) -> CaseTag:
    gap = 1.0 - float(np.sum(tail**2))
    if abs(gap) <= CASE_TOL:
        return "SumSquaresEqualsOne"
    return "SumSquaresBelowOne" if gap > 0 else "SumSquaresAboveOne"


def _choose_c(alpha: AlphaVector) -> tuple[NDArray[np.float64], CaseTag]:
    tail = _normalized_tail(alpha)
    case = _case(tail)
    if case == "SumSquaresEqualsOne":
        # beta_nn will be 0, so these signs never reach T
        return np.ones(tail.size), case
    if case == "SumSquaresBelowOne":
        return np.sign(tail), case
    part = partition.s_min(np.abs(tail))
    return part.signs.astype(float) * np.sign(tail), case


def choose_c(alpha: AlphaVector | ArrayLike) -> tuple[NDArray[np.float64], CaseTag]:
    """Signs for the combination column of ``V``, and which case applies.

    Below one (sum of squared normalized loadings): ``c_j = sign(alpha~_j)``.
    Above one: signs that make ``sum c_j alpha~_j`` equal the minimum
    partition imbalance of ``|alpha~_2| ... |alpha~_n|``.
    """
    alpha = as_alpha(alpha)
    if classify_dominance(alpha).dominant:
        raise DominanceError("the rank-one certificate exists only for non-dominant loadings")
    return _choose_c(alpha)


def solve_beta(alpha: AlphaVector | ArrayLike, c: ArrayLike, case_tag: CaseTag) -> NDArray[np.float64]:
    """Diagonal of ``beta = B B'`` giving every row of ``V B`` unit norm."""
    alpha = as_alpha(alpha)
    tail = _normalized_tail(alpha)
    c = np.asarray(c, dtype=float)
    if c.shape != tail.shape:
        raise InvalidInputError("c must have n - 1 entries")
    n = alpha.n
    beta = np.empty(n)
    if case_tag == "SumSquaresEqualsOne":
        beta[:-1] = 1.0
        beta[-1] = 0.0
        return beta
    sq = float(np.sum(tail**2))
    num = 1.0 - sq
    den = float(c @ tail) ** 2 - sq
    if den == 0.0:
        beta_nn = np.inf if num > 0 else -np.inf
    else:
        beta_nn = num / den
    if beta_nn > 1.0 + CASE_TOL:
        raise DominanceViolation(f"dominance violation: beta_nn = {beta_nn:.17g} > 1")
    if beta_nn < -CASE_TOL:
        raise InvalidInputError(f"negative beta_nn = {beta_nn:.17g}; c does not fit case {case_tag}")
    beta_nn = min(max(beta_nn, 0.0), 1.0)
    beta[-1] = beta_nn
    beta[:-1] = 1.0 - c**2 * beta_nn
    return np.clip(beta, 0.0, 1.0)


def null_basis_construction(alpha: AlphaVector | ArrayLike) -> NullBasisConstruction:
    """Build ``V``, ``c`` and ``beta`` without a dominance pre-check.

    Dominant loadings surface as ``DominanceViolation`` from the ``beta``
    solve rather than as an up-front rejection.
    """
    alpha = as_alpha(alpha)
    tail = _normalized_tail(alpha)
    c, case = _choose_c(alpha)
    beta = solve_beta(alpha, c, case)
    n = alpha.n
    v = np.zeros((n, n))
    v[0, :-1] = -tail
    v[1:, :-1] = np.eye(n - 1)
    v[0, -1] = -float(c @ tail)
    v[1:, -1] = c
    return NullBasisConstruction(v, c, beta, np.concatenate([[1.0], tail]), case)


def build_t_nd(alpha: AlphaVector | ArrayLike, tol: float = DEFAULT_TOL) -> Certificate:
    """Certificate for the rank-one solution, verified against it.

    Raises ``DominanceViolation`` when the loadings are dominant.
    """
    alpha = as_alpha(alpha)
    cons = null_basis_construction(alpha)
    t_canon = cons.v_matrix * np.sqrt(cons.beta)
    t = alpha.uncanonical_rows(t_canon)
    cert = Certificate(t, case_tag=cons.case_tag, construction=cons)
    return verify_certificate(build_sigma_x(alpha), solve_nd(alpha), cert, tol)


def build_t_dm(alpha: AlphaVector | ArrayLike, tol: float = DEFAULT_TOL) -> Certificate:
    alpha = as_alpha(alpha)
    if not classify_dominance(alpha).dominant:
        raise DominanceError("build_t_dm needs dominant loadings")
    phi = null_vector_phi(alpha).entries
    cert = Certificate(phi.reshape(-1, 1).copy())
    return verify_certificate(build_sigma_x(alpha), solve_dm(alpha), cert, tol)


def build_certificate(alpha: AlphaVector | ArrayLike, tol: float = DEFAULT_TOL) -> Certificate:
    alpha = as_alpha(alpha)
    if classify_dominance(alpha).dominant:
        return build_t_dm(alpha, tol)
    return build_t_nd(alpha, tol)


def verify_certificate(
    sigma_x: StarCovariance | ArrayLike,
    solution: CmtfaSolution,
    cert: Certificate | ArrayLike,
    tol: float = DEFAULT_TOL,
) -> Certificate:
    """Check ``d >= 0``, ``Sigma - diag(d)`` PSD, ``(Sigma - diag(d)) T = 0`` and unit row norms.

    Coordinates with ``d_j <= tol`` may carry a row norm above one; the
    excess is absorbed by a multiplier ``mu_j = max(|T_j|**2 - 1, 0)``, which
    is the non-negative least-squares fit for a single coordinate vector.
    Returns a copy of ``cert`` with residuals and verdict filled in.
    """
    if tol <= 0:
        raise InvalidInputError("tol must be positive")
    s = as_sigma(sigma_x)
    if not isinstance(cert, Certificate):
        cert = Certificate(np.asarray(cert, dtype=float))
    t = np.asarray(cert.t_matrix, dtype=float)
    if t.ndim == 1:
        t = t.reshape(-1, 1)
    d = np.asarray(solution.d, dtype=float)
    n = s.shape[0]
    if d.shape != (n,) or t.shape[0] != n:
        raise InvalidInputError(
            f"dimension mismatch: sigma {s.shape}, d {d.shape}, T {t.shape}"
        )
    reduced = s - np.diag(d)
    min_eig = float(np.linalg.eigvalsh(0.5 * (reduced + reduced.T))[0])
    null_residual = float(np.max(np.abs(reduced @ t), initial=0.0))
    row_sq = np.sum(t**2, axis=1)
    mu: dict[int, float] = {}
    for j in np.flatnonzero(d <= tol):
        excess = float(row_sq[j] - 1.0)
        if excess > 0:
            mu[int(j)] = excess
    corrected = row_sq.copy()
    for j, m in mu.items():
        corrected[j] -= m
    row_norm_residual = float(np.max(np.abs(corrected - 1.0)))
    verdict = bool(
        row_norm_residual <= tol
        and null_residual <= tol
        and min_eig >= -tol
        and np.all(d >= 0.0)
    )
    return Certificate(
        t_matrix=t,
        mu=mu,
        row_norm_residual=row_norm_residual,
        null_residual=null_residual,
        min_eig=min_eig,
        verdict=verdict,
        case_tag=cert.case_tag,
        construction=cert.construction,
    )


def rank_one_null_certificate(alpha: AlphaVector | ArrayLike) -> Certificate:
    """Best-effort certificate for ``alpha alpha'`` on any loadings.

    Uses an orthonormal null-space basis of ``alpha alpha'`` (``T T'`` is then
    the projector ``I - alpha alpha' / |alpha|**2``). For dominant loadings no
    choice of null vectors reaches unit row norms, so verification fails.
    """
    alpha = as_alpha(alpha)
    a = alpha.values
    proj = np.eye(alpha.n) - np.outer(a, a) / float(a @ a)
    w, q = np.linalg.eigh(proj)
    basis = q[:, w > 0.5]
    return verify_certificate(build_sigma_x(alpha), rank_one_candidate(alpha), Certificate(basis))
