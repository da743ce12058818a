"""Kelley cutting-plane solver for CMTFA.

Maximizes ``sum(d)`` subject to ``Sigma - diag(d)`` PSD and
``0 <= d <= diag(Sigma)``. Every unit vector ``v`` gives a valid linear cut
``sum_i v_i**2 d_i <= v' Sigma v``; each round solves the LP over the cuts
gathered so far and adds the eigenvector of the most negative eigenvalue of
``Sigma - diag(d)`` until that eigenvalue clears ``-tol_feas``.

The LP and the eigensolver live in this subpackage, so the oracle never
touches the closed-form code.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..closed_form import CmtfaSolution
from ..star_model import InvalidInputError, StarCovariance, as_sigma
from .eigen import eig_sym
from .simplex import DenseLP, InfeasibleError

log = logging.getLogger(__name__)

OracleStatus = Literal["Optimal", "IterationLimit", "Infeasible"]

_DUPLICATE_COS = 1.0 - 1e-12


@dataclass(frozen=True)
class OracleSolution:
    d: NDArray[np.float64]
    objective: float
    iterations: int
    cuts: tuple[NDArray[np.float64], ...] = field(repr=False)
    status: OracleStatus
    min_eig: float
    # LP objective after each round; non-increasing because cuts only shrink the polytope
    history: tuple[float, ...] = field(default=(), repr=False)


def solve_cmtfa_numeric(
    sigma: StarCovariance | ArrayLike,
    tol_feas: float = 1e-8,
    max_iter: int = 500,
) -> OracleSolution:
    s = as_sigma(sigma)
    n = s.shape[0]
    if np.max(np.abs(s - s.T), initial=0.0) > 1e-12:
        raise InvalidInputError("covariance must be symmetric")
    diag = np.diag(s).copy()
    if np.any(diag < 0):
        raise InvalidInputError("covariance has a negative diagonal entry")

    # the coordinate cuts are exactly the upper bounds, so only the rest become LP rows
    cuts: list[NDArray[np.float64]] = [np.eye(n)[i] for i in range(n)]
    ones = np.ones(n) / np.sqrt(n)
    cuts.append(ones)
    lp = DenseLP(
        np.ones(n),
        a_ub=(ones**2)[None, :],
        b_ub=[float(ones @ s @ ones)],
        bounds=[(0.0, float(x)) for x in diag],
    )

    d = np.zeros(n)
    start = None
    lam = -np.inf
    history: list[float] = []
    status: OracleStatus = "IterationLimit"
    it = 0
    for it in range(1, max_iter + 1):
        try:
            d = lp.solve()
        except InfeasibleError:
            status = "Infeasible"
            break
        history.append(float(d.sum()))
        eig = eig_sym(s - np.diag(d), start=start)
        start = eig.eigenvectors
        lam = float(eig.eigenvalues[0])
        if lam >= -tol_feas:
            status = "Optimal"
            break
        v = eig.eigenvectors[:, 0]
        v = v / np.linalg.norm(v)
        if any(abs(float(v @ u)) > _DUPLICATE_COS for u in cuts):
            log.debug("repeated cut at iteration %d; no further progress possible", it)
            break
        cuts.append(v)
        lp.add_constraint(v**2, float(v @ s @ v))

    if status != "Optimal":
        # Sigma - diag(d) + |lam| I is PSD, so shifting d down restores feasibility
        shift = -lam if np.isfinite(lam) and lam < 0 else 0.0
        d = np.maximum(d - shift, 0.0)
        lam = float(eig_sym(s - np.diag(d)).eigenvalues[0])
    d = np.array(d)
    d.setflags(write=False)
    return OracleSolution(d, float(d.sum()), it, tuple(cuts), status, lam, tuple(history))


@dataclass(frozen=True)
class ComparisonReport:
    objective_gap: float
    d_gap: float
    closed_objective: float
    oracle_objective: float
    agree: bool


def compare(
    closed: CmtfaSolution,
    oracle: OracleSolution,
    objective_tol: float = 1e-4,
    entry_tol: float = 1e-3,
) -> ComparisonReport:
    """Objective and entrywise gaps between a closed-form and an oracle diagonal."""
    if closed.d.shape != oracle.d.shape:
        raise InvalidInputError("closed-form and oracle solutions differ in size")
    obj_gap = abs(closed.objective - oracle.objective)
    d_gap = float(np.max(np.abs(closed.d - oracle.d)))
    agree = obj_gap <= objective_tol and d_gap <= entry_tol
    return ComparisonReport(obj_gap, d_gap, closed.objective, oracle.objective, agree)
