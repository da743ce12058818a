"""Star-structured Gaussian model: loadings, covariance, sampling, estimation.

A single latent ``Y ~ N(0, 1)`` drives ``n`` observables through
``X = alpha * Y + Z`` with independent ``Z_i ~ N(0, 1 - alpha_i**2)``, so the
population covariance has unit diagonal and off-diagonal ``alpha_i * alpha_j``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np
from numpy.typing import ArrayLike, NDArray


class InvalidInputError(ValueError):
    """Raised when a problem input violates the model's preconditions."""


class NonStarInputError(InvalidInputError):
    """Raised when a covariance matrix cannot be generated by a star model."""


@dataclass(frozen=True)
class AlphaVector:
    """Loadings ``alpha_1 ... alpha_n`` in the caller's input order.

    ``sort_perm[k]`` is the input index of the k-th entry in canonical order
    (non-increasing ``|alpha|``, ties broken by input index).
    """

    values: NDArray[np.float64]
    signs: NDArray[np.int64] = field(init=False)
    sort_perm: NDArray[np.int64] = field(init=False)

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=float).reshape(-1)
        if values.size < 2:
            raise InvalidInputError(f"need at least 2 loadings, got {values.size}")
        if not np.all(np.isfinite(values)):
            raise InvalidInputError("loadings must be finite")
        mags = np.abs(values)
        if np.any(mags <= 0.0) or np.any(mags >= 1.0):
            raise InvalidInputError(
                "loading out of range: every |alpha_i| must lie strictly in (0, 1)"
            )
        values.setflags(write=False)
        signs = np.where(values > 0, 1, -1).astype(np.int64)
        signs.setflags(write=False)
        perm = np.argsort(-mags, kind="stable").astype(np.int64)
        perm.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "signs", signs)
        object.__setattr__(self, "sort_perm", perm)

    @property
    def n(self) -> int:
        return int(self.values.size)

    def canonical(self) -> NDArray[np.float64]:
        """Loadings reordered so that ``|alpha_1|`` is the largest."""
        return self.values[self.sort_perm]

    def uncanonical_vector(self, v: ArrayLike) -> NDArray[np.float64]:
        """Map a vector indexed in canonical order back to input order."""
        v = np.asarray(v, dtype=float)
        out = np.empty_like(v)
        out[self.sort_perm] = v
        return out

    def uncanonical_matrix(self, m: ArrayLike) -> NDArray[np.float64]:
        """Map a square matrix indexed in canonical order back to input order."""
        m = np.asarray(m, dtype=float)
        out = np.empty_like(m)
        out[np.ix_(self.sort_perm, self.sort_perm)] = m
        return out

    def uncanonical_rows(self, m: ArrayLike) -> NDArray[np.float64]:
        m = np.asarray(m, dtype=float)
        out = np.empty_like(m)
        out[self.sort_perm] = m
        return out


def as_alpha(alpha: AlphaVector | ArrayLike) -> AlphaVector:
    if isinstance(alpha, AlphaVector):
        return alpha
    return AlphaVector(np.asarray(alpha, dtype=float))


@dataclass(frozen=True)
class StarCovariance:
    entries: NDArray[np.float64]

    @property
    def n(self) -> int:
        return int(self.entries.shape[0])


@dataclass(frozen=True)
class LatentSampleBatch:
    samples: NDArray[np.float64]
    seed: int
    noise_variances: NDArray[np.float64]


@dataclass(frozen=True)
class DominanceClass:
    label: Literal["Dominant", "NonDominant"]
    margin: float

    @property
    def dominant(self) -> bool:
        return self.label == "Dominant"


def classify_dominance(alpha: AlphaVector | ArrayLike) -> DominanceClass:
    """Compare the largest ``|alpha_i|`` against the sum of the others.

    ``margin = sum_{j>=2} |alpha_j| - |alpha_1|`` in canonical order; a
    non-negative margin (equality included) means non-dominant.
    """
    a = np.abs(as_alpha(alpha).canonical())
    margin = float(np.sum(a[1:]) - a[0])
    return DominanceClass("NonDominant" if margin >= 0 else "Dominant", margin)


def build_sigma_x(alpha: AlphaVector | ArrayLike) -> StarCovariance:
    """Unit-diagonal covariance with off-diagonal entries ``alpha_i alpha_j``."""
    a = as_alpha(alpha).values
    sigma = np.outer(a, a)
    np.fill_diagonal(sigma, 1.0)
    sigma.setflags(write=False)
    return StarCovariance(sigma)


def sample_latent(alpha: AlphaVector | ArrayLike, n_samples: int, seed: int) -> LatentSampleBatch:
    """Draw ``n_samples`` i.i.d. rows of ``X = alpha Y + Z``.

    Normals come from numpy's ``default_rng(seed)`` (PCG64, ziggurat), so a
    batch is reproducible for a fixed seed on a given numpy version.
    """
    alpha = as_alpha(alpha)
    if n_samples < 1:
        raise InvalidInputError(f"n_samples must be >= 1, got {n_samples}")
    rng = np.random.default_rng(seed)
    a = alpha.values
    noise_var = 1.0 - a**2
    y = rng.standard_normal(n_samples)
    z = rng.standard_normal((n_samples, a.size)) * np.sqrt(noise_var)
    samples = np.outer(y, a) + z
    return LatentSampleBatch(samples, int(seed), noise_var)


def sample_covariance(batch: LatentSampleBatch | ArrayLike) -> NDArray[np.float64]:
    """Unbiased (``N - 1``) sample covariance of the rows."""
    x = batch.samples if isinstance(batch, LatentSampleBatch) else np.asarray(batch, dtype=float)
    if x.ndim != 2 or x.shape[0] < 2:
        raise InvalidInputError("need at least 2 samples to form a covariance")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (x.shape[0] - 1)
    return 0.5 * (cov + cov.T)


def estimate_alpha(sigma_hat: ArrayLike) -> AlphaVector:
    """Invert the star structure of a (possibly noisy) covariance.

    Each ``alpha_i**2`` is the median over pairs ``j < k`` (both distinct from
    ``i``) of ``S_ij S_ik / S_jk``. The representative with ``alpha_1 > 0`` is
    returned; the other signs follow ``sign(S_1j)``.
    """
    s = np.asarray(sigma_hat, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise InvalidInputError("covariance must be a square matrix")
    n = s.shape[0]
    if n < 3:
        raise InvalidInputError("estimation needs n >= 3 variables")
    if not np.allclose(s, s.T, rtol=0.0, atol=1e-9):
        raise InvalidInputError("covariance must be symmetric")
    off = s[~np.eye(n, dtype=bool)]
    if np.any(off == 0.0):
        raise NonStarInputError("non-star input: zero off-diagonal covariance")

    sq = np.empty(n)
    for i in range(n):
        others = [j for j in range(n) if j != i]
        ratios = [s[i, j] * s[i, k] / s[j, k] for j, k in itertools.combinations(others, 2)]
        sq[i] = float(np.median(ratios))
    if np.any(sq <= 0.0) or np.any(sq >= 1.0):
        raise NonStarInputError(
            f"non-star input: estimated squared loadings {sq.tolist()} fall outside (0, 1)"
        )
    signs = np.ones(n)
    signs[1:] = np.sign(s[0, 1:])
    return AlphaVector(signs * np.sqrt(sq))


def _check_square(m: NDArray[np.float64], name: str = "matrix") -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InvalidInputError(f"{name} must be square, got shape {m.shape}")


def as_sigma(sigma: StarCovariance | ArrayLike | Sequence[Sequence[float]]) -> NDArray[np.float64]:
    m = sigma.entries if isinstance(sigma, StarCovariance) else np.asarray(sigma, dtype=float)
    _check_square(m, "covariance")
    return m
