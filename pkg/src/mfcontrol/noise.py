"""Reproducible truncated cylindrical Wiener increments.

Increments are produced by a counter-based (Philox) generator keyed by
(seed, particle, step): the key selects an independent stream per particle
and step, and mode k is the k-th draw of that stream.  Consequences:

* identical inputs give bit-identical output under any execution schedule,
* enlarging the ensemble or the mode count never changes existing draws,
* the same unit normals underlie every dt, so halving dt scales each entry
  by exactly 1/sqrt(2).

Unit normals come from the inverse normal CDF applied to uniforms placed at
(n + 0.5) / 2^53, which keeps the map branch-free and away from 0 and 1.
"""

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox
from scipy.special import ndtri

__all__ = ["NoisePlan", "wiener_increments", "unit_normals", "all_increments"]

# fixed high word so plan streams cannot collide with other Philox uses
_STREAM_TAG = np.uint64(0x9E3779B97F4A7C15)


@dataclass(frozen=True)
class NoisePlan:
    """Keying data for one simulation's noise: nothing else is state."""

    seed: int
    n_particles: int
    n_modes: int
    n_steps: int
    dt: float

    def __post_init__(self):
        if self.seed < 0 or self.seed > 2**64 - 1:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        if min(self.n_particles, self.n_modes, self.n_steps) < 1:
            raise ValueError("particles, modes and steps must be positive")
        if not self.dt > 0.0:
            raise ValueError("dt must be positive")

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt


def unit_normals(seed: int, particle: int, step: int, n_modes: int) -> np.ndarray:
    """The standard normal draws for one (seed, particle, step) key."""
    key = np.array([seed, particle], dtype=np.uint64)
    counter = np.array([0, 0, step, _STREAM_TAG], dtype=np.uint64)
    gen = Generator(Philox(counter=counter, key=key))
    raw = gen.integers(0, 1 << 53, size=n_modes, dtype=np.uint64)
    u = (raw.astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


def wiener_increments(plan: NoisePlan, step: int) -> np.ndarray:
    """(N, M) matrix of Wiener increments for one time step.

    Entry (i, k) is a standard normal scaled by sqrt(dt), fully determined
    by the key (seed, i, step, k).
    """
    if not 0 <= step < plan.n_steps:
        raise ValueError(f"step {step} outside 0..{plan.n_steps - 1}")
    out = np.empty((plan.n_particles, plan.n_modes))
    for i in range(plan.n_particles):
        out[i] = unit_normals(plan.seed, i, step, plan.n_modes)
    return out * np.sqrt(plan.dt)


def all_increments(plan: NoisePlan) -> np.ndarray:
    """All increments of a plan, shaped (n_steps, N, M)."""
    return np.stack([wiener_increments(plan, k) for k in range(plan.n_steps)])
