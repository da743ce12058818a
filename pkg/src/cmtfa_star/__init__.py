"""Closed-form constrained minimum trace factor analysis for star-structured covariances."""

from .certificate import (
    Certificate,
    DominanceViolation,
    NullBasisConstruction,
    build_certificate,
    build_t_dm,
    build_t_nd,
    choose_c,
    solve_beta,
    verify_certificate,
)
from .closed_form import (
    CmtfaSolution,
    DominanceError,
    SignVectorPhi,
    dm_column_identity_residual,
    null_vector_phi,
    rank_one_candidate,
    solve,
    solve_dm,
    solve_nd,
)
from .numeric_oracle import OracleSolution, compare, eig_sym, solve_cmtfa_numeric, solve_lp
from .partition import PartitionResult, lemma4_check, lemma5_gap, lemma6_cross_term, s_min
from .star_model import (
    AlphaVector,
    DominanceClass,
    InvalidInputError,
    LatentSampleBatch,
    NonStarInputError,
    StarCovariance,
    build_sigma_x,
    classify_dominance,
    estimate_alpha,
    sample_covariance,
    sample_latent,
)

__version__ = "0.1.0"
