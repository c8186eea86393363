"""Deterministic reduction helpers shared by the solvers.

Every cross-particle reduction in the package goes through these functions.
``math.fsum`` returns the correctly rounded value of the exact sum, so the
results do not depend on summation order; relabeling particles (or splitting
the work across threads) leaves ensemble statistics bit-identical.
"""

import math

import numpy as np


def exact_sum(values) -> float:
    """Order-independent sum of a 1-D collection of floats."""
    return math.fsum(np.asarray(values, dtype=float).ravel())


def exact_mean(values) -> float:
    a = np.asarray(values, dtype=float).ravel()
    if a.size == 0:
        raise ValueError("mean of an empty collection")
    return math.fsum(a) / a.size


def column_sum(a: np.ndarray) -> np.ndarray:
    """Order-independent column sums of a 2-D array (rows = particles)."""
    a = np.asarray(a, dtype=float)
    return np.array([math.fsum(col) for col in a.T])


def column_mean(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    if a.shape[0] == 0:
        raise ValueError("mean of an empty ensemble")
    return column_sum(a) / a.shape[0]


def require_finite(a: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{what} contains non-finite entries")
