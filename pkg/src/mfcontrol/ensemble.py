"""Equal-weight particle ensembles as empirical surrogates for the state law.

An ensemble holds N fields with weight 1/N each.  The law of the state only
ever enters the dynamics and costs through such ensembles, so measure-level
quantities (mean, moments, Wasserstein-2 distance) are defined directly on
them.  All reductions over particles are order-independent (see util.py).
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .spectral import SpectralField
from .util import column_mean, exact_sum, require_finite

__all__ = ["Ensemble", "empirical_mean", "moment_q", "wasserstein2"]


@dataclass(frozen=True)
class Ensemble:
    """N equally weighted spectral fields; rows of ``coeffs`` are particles."""

    coeffs: np.ndarray  # (N, M)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim == 1:
            c = c[None, :]
        if c.ndim != 2 or c.shape[0] < 1:
            raise ValueError("ensemble needs an (N, M) array with N >= 1")
        require_finite(c, "ensemble")
        c = c.copy()
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def n_particles(self) -> int:
        return self.coeffs.shape[0]

    @property
    def n_modes(self) -> int:
        return self.coeffs.shape[1]

    @classmethod
    def from_fields(cls, fields) -> "Ensemble":
        return cls(np.stack([f.coeffs for f in fields]))

    @classmethod
    def constant(cls, field: SpectralField, n_particles: int) -> "Ensemble":
        return cls(np.tile(field.coeffs, (n_particles, 1)))

    def particle(self, i: int) -> SpectralField:
        return SpectralField(self.coeffs[i])


def empirical_mean(e: Ensemble) -> SpectralField:
    """Coefficientwise ensemble average (the mean functional of the law)."""
    return SpectralField(column_mean(e.coeffs))


def moment_q(e: Ensemble, q: float) -> float:
    """q-th empirical moment of the H norm, (1/N) sum ||x_i||_H^q."""
    if q < 1.0:
        raise ValueError("moment exponent must satisfy q >= 1")
    norms_sq = np.einsum("ij,ij->i", e.coeffs, e.coeffs)
    return exact_sum(norms_sq ** (q / 2.0)) / e.n_particles


def wasserstein2(a: Ensemble, b: Ensemble) -> float:
    """Exact Wasserstein-2 distance between two equal-size ensembles.

    For equal weights the optimal coupling is a permutation, so the distance
    reduces to a minimum-cost perfect matching on the N x N matrix of squared
    H distances, solved here exactly in O(N^3).  Intended envelope: N <= 256.
    """
    if a.n_particles != b.n_particles:
        raise ValueError(
            f"ensemble sizes differ ({a.n_particles} vs {b.n_particles})"
        )
    if a.n_modes != b.n_modes:
        raise ValueError("ensembles live on different mode counts")
    cost = cdist(a.coeffs, b.coeffs, "sqeuclidean")
    rows, cols = linear_sum_assignment(cost)
    total = exact_sum(cost[rows, cols])
    # tiny negative round-off can appear for identical ensembles
    return float(np.sqrt(max(total, 0.0) / a.n_particles))
