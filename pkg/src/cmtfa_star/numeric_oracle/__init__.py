"""Independent numerical CMTFA oracle: Jacobi eigensolver, dense simplex, cutting planes."""

from .cutting_plane import ComparisonReport, OracleSolution, compare, solve_cmtfa_numeric
from .eigen import EigenDecomposition, eig_sym
from .simplex import DenseLP, InfeasibleError, LPError, UnboundedError, solve_lp

__all__ = [
    "ComparisonReport",
    "DenseLP",
    "EigenDecomposition",
    "InfeasibleError",
    "LPError",
    "OracleSolution",
    "UnboundedError",
    "compare",
    "eig_sym",
    "solve_cmtfa_numeric",
    "solve_lp",
]
