"""Dense tableau simplex for small bounded LPs.

``DenseLP`` maximizes ``c . x`` subject to ``A x <= b`` and ``lo <= x <= hi``.
A first solve runs the two-phase primal simplex; rows added afterwards are
absorbed by dual simplex pivots from the previous optimal basis, which is
what a cutting-plane loop needs.

Anti-cycling: primal entering columns follow Dantzig's rule until the first
degenerate pivot and Bland's lowest-index rule from then on; dual pivots use
the lowest-index violated row and lowest-index ratio ties.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..star_model import InvalidInputError


class LPError(RuntimeError):
    pass


class InfeasibleError(LPError):
    """The constraint set is empty."""


class UnboundedError(LPError):
    """The objective is unbounded above."""


# rebuild the tableau from the original rows after this many incremental cuts
_REFACTOR_EVERY = 20


def _pivot(tab: NDArray[np.float64], row: int, col: int) -> None:
    tab[row] /= tab[row, col]
    col_vals = tab[:, col].copy()
    col_vals[row] = 0.0
    tab -= np.outer(col_vals, tab[row])


class DenseLP:
    """Incremental dense LP in inequality form with finite lower bounds."""

    def __init__(
        self,
        objective: ArrayLike,
        a_ub: ArrayLike | None = None,
        b_ub: ArrayLike | None = None,
        bounds: Sequence[tuple[float, float]] | None = None,
        tol: float = 1e-11,
    ) -> None:
        c = np.asarray(objective, dtype=float).reshape(-1)
        k = c.size
        if bounds is None:
            bounds = [(0.0, np.inf)] * k
        lo = np.array([bd[0] for bd in bounds], dtype=float)
        hi = np.array([bd[1] for bd in bounds], dtype=float)
        if lo.size != k:
            raise InvalidInputError("bounds and objective differ in length")
        if not np.all(np.isfinite(lo)):
            raise InvalidInputError("every variable needs a finite lower bound")
        if np.any(hi < lo):
            raise InfeasibleError("a variable has hi < lo")
        self.k = k
        self.tol = tol
        self._c = c
        self._lo = lo
        # standard form over y = x - lo: rows [A | S] y_s = rhs, slack sign in S
        self._rows: list[NDArray[np.float64]] = []
        self._rhs: list[float] = []
        self._tab: NDArray[np.float64] | None = None
        self._basis: list[int] = []
        self._since_refactor = 0
        self.pivots = 0
        for j in np.flatnonzero(np.isfinite(hi)):
            e = np.zeros(k)
            e[j] = 1.0
            self._append(e, hi[j])
        if a_ub is not None:
            a = np.asarray(a_ub, dtype=float).reshape(-1, k)
            b = np.asarray(b_ub, dtype=float).reshape(-1)
            if a.shape[0] != b.size:
                raise InvalidInputError("constraint rows and right-hand sides differ in count")
            for row, rhs in zip(a, b):
                self._append(row, rhs)

    @property
    def n_rows(self) -> int:
        return len(self._rows)

    def _append(self, a: NDArray[np.float64], b: float) -> None:
        self._rows.append(np.asarray(a, dtype=float).copy())
        self._rhs.append(float(b) - float(a @ self._lo))

    # -- standard-form matrices ---------------------------------------------

    def _standard(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        m = self.n_rows
        full = np.zeros((m, self.k + m))
        if m:
            full[:, : self.k] = np.array(self._rows)
            full[:, self.k :] = np.eye(m)
        return full, np.array(self._rhs)

    def _refactor(self) -> None:
        """Recompute the tableau from the original rows and the current basis."""
        full, rhs = self._standard()
        m = full.shape[0]
        bmat = full[:, self._basis]
        body = np.linalg.solve(bmat, np.hstack([full, rhs[:, None]]))
        cost = np.zeros(self.k + m)
        cost[: self.k] = self._c
        tab = np.zeros((m + 1, self.k + m + 1))
        tab[:m] = body
        tab[-1, :-1] = cost
        tab[-1] -= cost[self._basis] @ body
        for i, bv in enumerate(self._basis):
            tab[:m, bv] = 0.0
            tab[i, bv] = 1.0
            tab[-1, bv] = 0.0
        self._tab = tab
        self._since_refactor = 0

    # -- pivoting ------------------------------------------------------------

    def _primal(self, tab: NDArray[np.float64], basis: list[int], allowed: NDArray[np.bool_]) -> None:
        m = len(basis)
        n_cols = tab.shape[1] - 1
        tol = self.tol
        bland = False
        for _ in range(50 * (m + n_cols) + 1000):
            obj = np.where(allowed, tab[-1, :n_cols], 0.0)
            if bland:
                cand = np.flatnonzero(obj > tol)
                if cand.size == 0:
                    return
                col = int(cand[0])
            else:
                col = int(np.argmax(obj))
                if obj[col] <= tol:
                    return
            column = tab[:m, col]
            pos = column > tol
            if not np.any(pos):
                raise UnboundedError("LP objective is unbounded")
            ratios = np.full(m, np.inf)
            ratios[pos] = tab[:m, -1][pos] / column[pos]
            best = ratios.min()
            ties = np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))
            row = int(min(ties, key=lambda i: basis[i]))
            if best <= tol:
                bland = True
            _pivot(tab, row, col)
            basis[row] = col
            self.pivots += 1
        raise LPError("primal simplex exceeded its pivot budget")

    def _dual(self) -> None:
        tab = self._tab
        basis = self._basis
        m = len(basis)
        n_cols = tab.shape[1] - 1
        tol = self.tol
        for _ in range(50 * (m + n_cols) + 1000):
            rhs = tab[:m, -1]
            scale = max(1.0, float(np.max(np.abs(rhs)))) if m else 1.0
            bad = np.flatnonzero(rhs < -tol * scale)
            if bad.size == 0:
                return
            row = int(min(bad, key=lambda i: basis[i]))
            r = tab[row, :n_cols]
            neg = r < -tol
            if not np.any(neg):
                raise InfeasibleError("LP constraints are infeasible")
            ratios = np.full(n_cols, np.inf)
            ratios[neg] = tab[-1, :n_cols][neg] / r[neg]
            best = ratios.min()
            col = int(np.flatnonzero(ratios <= best + tol * max(1.0, abs(best)))[0])
            _pivot(tab, row, col)
            basis[row] = col
            self.pivots += 1
        raise LPError("dual simplex exceeded its pivot budget")

    def _cold_solve(self) -> None:
        full, rhs = self._standard()
        m, n_std = full.shape
        k = self.k
        neg = rhs < 0
        sign = np.where(neg, -1.0, 1.0)
        art = np.flatnonzero(neg)
        n_cols = n_std + art.size
        tab = np.zeros((m + 1, n_cols + 1))
        tab[:m, :n_std] = full * sign[:, None]
        tab[:m, -1] = rhs * sign
        basis = list(range(k, k + m))
        for j, i in enumerate(art):
            tab[i, n_std + j] = 1.0
            basis[i] = n_std + j
        allowed = np.ones(n_cols, dtype=bool)
        if art.size:
            tab[-1, n_std:n_cols] = -1.0
            for i in art:
                tab[-1] += tab[i]
            tab[-1, n_std:n_cols] = 0.0
            self._primal(tab, basis, allowed)
            if abs(tab[-1, -1]) > 1e-9 * max(1.0, float(np.max(np.abs(rhs)))):
                raise InfeasibleError("LP constraints are infeasible")
            # every row owns a slack, so [A | I] has full row rank and a basic
            # artificial (necessarily at zero) always has a pivot available
            for i, bv in enumerate(basis):
                if bv >= n_std:
                    nz = np.flatnonzero(np.abs(tab[i, :n_std]) > self.tol)
                    if nz.size == 0:
                        raise LPError("could not drive an artificial variable out of the basis")
                    _pivot(tab, i, int(nz[0]))
                    basis[i] = int(nz[0])
            tab = np.hstack([tab[:, :n_std], tab[:, -1:]])
        self._tab = tab
        self._basis = basis
        self._set_objective()
        self._primal(self._tab, self._basis, np.ones(self._tab.shape[1] - 1, dtype=bool))
        self._since_refactor = 0

    def _set_objective(self) -> None:
        tab = self._tab
        tab[-1, :] = 0.0
        tab[-1, : self.k] = self._c
        for i, bv in enumerate(self._basis):
            cb = tab[-1, bv]
            if cb != 0.0:
                tab[-1] -= cb * tab[i]

    # -- public API ------------------------------------------------------------

    def add_constraint(self, a: ArrayLike, b: float) -> None:
        """Append ``a . x <= b``; the next ``solve`` warm-starts if possible."""
        a = np.asarray(a, dtype=float).reshape(-1)
        if a.size != self.k:
            raise InvalidInputError("constraint row has the wrong length")
        self._append(a, b)
        if self._tab is None:
            return
        tab = self._tab
        m = len(self._basis)
        row = np.zeros(tab.shape[1] + 1)
        row[: self.k] = a
        row[-2] = 1.0
        row[-1] = self._rhs[-1]
        tab = np.hstack([tab[:, :-1], np.zeros((m + 1, 1)), tab[:, -1:]])
        for i, bv in enumerate(self._basis):
            if row[bv] != 0.0:
                row -= row[bv] * tab[i]
        self._tab = np.vstack([tab[:m], row, tab[-1:]])
        self._basis.append(tab.shape[1] - 2)
        self._since_refactor += 1

    def solve(self) -> NDArray[np.float64]:
        if self._tab is None:
            self._cold_solve()
        else:
            if self._since_refactor >= _REFACTOR_EVERY:
                self._refactor()
            self._dual()
            self._primal(self._tab, self._basis, np.ones(self._tab.shape[1] - 1, dtype=bool))
        return self._solution()

    def _solution(self) -> NDArray[np.float64]:
        m = len(self._basis)
        y = np.zeros(self._tab.shape[1] - 1)
        y[self._basis] = self._tab[:m, -1]
        # one solve against the original rows removes accumulated pivot error
        full, rhs = self._standard()
        try:
            refined = np.linalg.solve(full[:, self._basis], rhs)
        except np.linalg.LinAlgError:
            refined = None
        if refined is not None and np.all(np.isfinite(refined)):
            if np.max(np.abs(refined - y[self._basis]), initial=0.0) < 1e-6:
                y[self._basis] = refined
        return self._lo + np.maximum(y[: self.k], 0.0)

    @property
    def objective_value(self) -> float:
        return float(self._c @ self._solution())


def solve_lp(
    objective: ArrayLike,
    a_ub: ArrayLike | None = None,
    b_ub: ArrayLike | None = None,
    bounds: Sequence[tuple[float, float]] | None = None,
    tol: float = 1e-11,
) -> NDArray[np.float64]:
    """Maximize ``objective . x`` s.t. ``a_ub x <= b_ub`` and ``lo <= x <= hi``.

    Lower bounds must be finite (default 0); upper bounds may be ``inf``.
    Raises ``InfeasibleError`` or ``UnboundedError``.
    """
    return DenseLP(objective, a_ub, b_ub, bounds, tol).solve()
