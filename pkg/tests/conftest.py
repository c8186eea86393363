import numpy as np
import pytest

from mfcontrol import ControlPath, Ensemble, NoisePlan, SpectralField
from mfcontrol.verification import reference_cubic, reference_lq


@pytest.fixture
def cubic_spec():
    return reference_cubic()


@pytest.fixture
def lq_spec():
    return reference_lq()


@pytest.fixture
def make_plan():
    def _make(seed=2024, n_particles=16, n_modes=8, n_steps=50, horizon=0.5):
        return NoisePlan(seed=seed, n_particles=n_particles, n_modes=n_modes,
                         n_steps=n_steps, dt=horizon / n_steps)
    return _make


@pytest.fixture
def make_control():
    def _make(plan, q=7.0, bound=50.0, scale=0.4, seed=0):
        rng = np.random.default_rng(seed)
        weights = 1.0 / np.arange(1, plan.n_modes + 1, dtype=float)
        vals = scale * rng.standard_normal((plan.n_steps, plan.n_modes)) * weights
        return ControlPath(vals, q, bound)
    return _make


@pytest.fixture
def unit_ensemble():
    def _make(n_particles=16, n_modes=8, amplitude=1.0):
        return Ensemble.constant(
            SpectralField.unit_mode(n_modes, 1, amplitude), n_particles)
    return _make


@pytest.fixture
def random_ensemble():
    def _make(n_particles=16, n_modes=8, scale=0.8, seed=11):
        rng = np.random.default_rng(seed)
        weights = 1.0 / np.arange(1, n_modes + 1, dtype=float)
        return Ensemble(scale * rng.standard_normal((n_particles, n_modes))
                        * weights)
    return _make
