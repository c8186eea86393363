"""Sine spectral basis on the unit interval.

State and control fields live in the span of the Dirichlet-Laplacian
eigenfunctions ``e_k(xi) = sqrt(2) sin(k pi xi)`` on (0, 1), represented by
their first M coefficients.  The squared norms used throughout are

    ||v||_H^2 = sum_k c_k^2            (L^2 norm, Parseval)
    ||v||_V^2 = sum_k (1 + (k pi)^2) c_k^2   (full H^1_0 norm)

With this V-norm the Laplacian satisfies the energy identity
``<L v, v> = ||v||_H^2 - ||v||_V^2`` exactly, i.e. the usual coercivity
inequality holds with both constants equal to one.  Dual pairings are plain
coefficient dot products.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.fft

from .util import require_finite

__all__ = [
    "SpectralField",
    "DirichletLaplacian",
    "norms",
    "apply_laplacian",
    "project",
    "to_physical",
    "collocation_grid",
    "collocation_values",
    "field_from_collocation",
    "eigenvalues",
]

_SQRT2 = np.sqrt(2.0)


def eigenvalues(n_modes: int) -> np.ndarray:
    """Dirichlet-Laplacian eigenvalues -(k pi)^2 for k = 1..M."""
    k = np.arange(1, n_modes + 1, dtype=float)
    return -((k * np.pi) ** 2)


@dataclass(frozen=True)
class SpectralField:
    """Coefficients on the sine eigenbasis; immutable after construction."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float)).copy()
        if c.ndim != 1:
            raise ValueError("coefficients must be one-dimensional")
        require_finite(c, "spectral field")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def n_modes(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def zero(cls, n_modes: int) -> "SpectralField":
        return cls(np.zeros(n_modes))

    @classmethod
    def unit_mode(cls, n_modes: int, mode: int, amplitude: float = 1.0) -> "SpectralField":
        """Field ``amplitude * e_mode`` (mode counted from 1)."""
        if not 1 <= mode <= n_modes:
            raise ValueError(f"mode {mode} outside 1..{n_modes}")
        c = np.zeros(n_modes)
        c[mode - 1] = amplitude
        return cls(c)

    def __add__(self, other):
        return SpectralField(self.coeffs + other.coeffs)

    def __sub__(self, other):
        return SpectralField(self.coeffs - other.coeffs)

    def __neg__(self):
        return SpectralField(-self.coeffs)

    def __mul__(self, scalar):
        return SpectralField(self.coeffs * float(scalar))

    __rmul__ = __mul__


@dataclass(frozen=True)
class DirichletLaplacian:
    """The generator L: diagonal on the sine basis with l1 = l2 = 1.

    ``l1``/``l2`` record the coercivity constants of the energy identity
    ``<L v, v> <= l1 ||v||_H^2 - l2 ||v||_V^2`` which, with the norms chosen
    here, holds as an exact identity.
    """

    n_modes: int
    eigenvalues: np.ndarray = field(init=False)
    l1: float = field(default=1.0, init=False)
    l2: float = field(default=1.0, init=False)

    def __post_init__(self):
        if self.n_modes < 1:
            raise ValueError("need at least one mode")
        ev = eigenvalues(self.n_modes)
        ev.setflags(write=False)
        object.__setattr__(self, "eigenvalues", ev)


def norms(v: SpectralField) -> tuple:
    """(H norm, V norm) of a field; the V norm always dominates."""
    c = v.coeffs
    k = np.arange(1, c.size + 1, dtype=float)
    h2 = float(np.dot(c, c))
    v2 = float(np.dot((1.0 + (k * np.pi) ** 2), c * c))
    return np.sqrt(h2), np.sqrt(v2)


def apply_laplacian(op: DirichletLaplacian, v: SpectralField) -> SpectralField:
    if v.n_modes != op.n_modes:
        raise ValueError(f"field has {v.n_modes} modes, operator expects {op.n_modes}")
    return SpectralField(op.eigenvalues * v.coeffs)


def project(v: SpectralField, n: int) -> SpectralField:
    """Galerkin projection onto the first ``n`` modes (idempotent contraction)."""
    if not 1 <= n <= v.n_modes:
        raise ValueError(f"projection level {n} outside 1..{v.n_modes}")
    c = v.coeffs.copy()
    c[n:] = 0.0
    return SpectralField(c)


def to_physical(v: SpectralField, grid) -> np.ndarray:
    """Evaluate the field at points of (0, 1)."""
    xi = np.asarray(grid, dtype=float)
    if np.any(xi <= 0.0) or np.any(xi >= 1.0):
        raise ValueError("grid points must lie strictly inside (0, 1)")
    k = np.arange(1, v.n_modes + 1)
    return (_SQRT2 * np.sin(np.pi * np.outer(xi, k))) @ v.coeffs


def collocation_grid(n_modes: int) -> np.ndarray:
    """The 2M+1 interior sine-collocation nodes j/(2M+2)."""
    n_x = 2 * n_modes + 1
    return np.arange(1, n_x + 1) / (n_x + 1.0)


def collocation_values(coeffs: np.ndarray) -> np.ndarray:
    """Field values on the collocation grid, batched over leading axes.

    ``coeffs`` has shape (..., M); the result has shape (..., 2M+1).  Uses
    the type-I discrete sine transform, which is exact for this basis.
    """
    coeffs = np.asarray(coeffs, dtype=float)
    m = coeffs.shape[-1]
    n_x = 2 * m + 1
    padded = np.zeros(coeffs.shape[:-1] + (n_x,))
    padded[..., :m] = coeffs / _SQRT2
    return scipy.fft.dst(padded, type=1, axis=-1)


def field_from_collocation(values: np.ndarray, n_modes: int) -> np.ndarray:
    """First ``n_modes`` sine coefficients of grid values (exact DST-I inverse).

    Together with :func:`collocation_values` this realizes the Galerkin
    projection of pointwise (Nemytskii) operations: products of fields with
    combined frequency content up to 2M+1 lose nothing in the kept band.
    """
    values = np.asarray(values, dtype=float)
    n_x = values.shape[-1]
    spectrum = scipy.fft.dst(values, type=1, axis=-1)
    return spectrum[..., :n_modes] / ((n_x + 1) * _SQRT2)
