"""Cyclic Jacobi eigensolver for small symmetric matrices."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from ..star_model import InvalidInputError

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: NDArray[np.float64]
    eigenvectors: NDArray[np.float64]


def _jacobi_sweeps(a: list[list[float]], q: list[list[float]], max_sweeps: int) -> bool:
    """Run cyclic sweeps on nested lists in place; True once off-diagonal mass vanishes.

    Scalar loops beat numpy slicing at the sizes the oracle uses (n <= 20).
    """
    n = len(a)
    eps2 = np.finfo(float).eps ** 2
    for _ in range(max_sweeps):
        off = sum(a[p][r] ** 2 for p in range(n) for r in range(p + 1, n))
        total = sum(x * x for row in a for x in row)
        if off <= eps2 * total:
            return True
        for p in range(n - 1):
            for r in range(p + 1, n):
                apr = a[p][r]
                if apr == 0.0:
                    continue
                theta = (a[r][r] - a[p][p]) / (2.0 * apr)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                ap = a[p]
                ar = a[r]
                for j in range(n):
                    x = ap[j]
                    y = ar[j]
                    ap[j] = c * x - s * y
                    ar[j] = s * x + c * y
                for row in a:
                    x = row[p]
                    y = row[r]
                    row[p] = c * x - s * y
                    row[r] = s * x + c * y
                ap[r] = ar[p] = 0.0
                for row in q:
                    x = row[p]
                    y = row[r]
                    row[p] = c * x - s * y
                    row[r] = s * x + c * y
    return False


def eig_sym(m: ArrayLike, start: ArrayLike | None = None, max_sweeps: int = 100) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.

    Rotations visit the strict upper triangle row by row, so results are
    deterministic. ``start`` is an optional orthogonal matrix, typically the
    eigenvectors of a nearby matrix; sweeps then run on ``start' m start``,
    which is already close to diagonal. Eigenvalues come back ascending with
    eigenvectors as the matching columns.
    """
    a = np.array(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"eig_sym needs a square matrix, got shape {a.shape}")
    scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
    if np.max(np.abs(a - a.T), initial=0.0) > 1e-12 * scale:
        raise InvalidInputError("eig_sym needs a symmetric matrix")
    a = 0.5 * (a + a.T)
    n = a.shape[0]
    q0 = None
    if start is not None:
        q0 = np.asarray(start, dtype=float)
        a = q0.T @ a @ q0
        a = 0.5 * (a + a.T)
    rows = a.tolist()
    q = np.eye(n).tolist()
    if not _jacobi_sweeps(rows, q, max_sweeps):
        log.warning("Jacobi did not converge in %d sweeps", max_sweeps)
    vecs = np.array(q, dtype=float).reshape(n, n)
    if q0 is not None:
        vecs = q0 @ vecs
    vals = np.array([rows[i][i] for i in range(n)])
    order = np.argsort(vals, kind="stable")
    return EigenDecomposition(vals[order], vecs[:, order])
