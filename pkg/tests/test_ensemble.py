import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mfcontrol.ensemble import Ensemble, empirical_mean, moment_q, wasserstein2
from mfcontrol.spectral import SpectralField


def brute_force_w2(a: Ensemble, b: Ensemble) -> float:
    """Exhaustive assignment oracle, independent of the solver route."""
    n = a.n_particles
    best = math.inf
    for perm in itertools.permutations(range(n)):
        total = math.fsum(
            float(np.sum((a.coeffs[i] - b.coeffs[j]) ** 2))
            for i, j in enumerate(perm))
        best = min(best, total)
    return math.sqrt(best / n)


def test_mean_of_opposite_pair_is_zero():
    v = SpectralField(np.array([1.0, -2.0, 0.5]))
    e = Ensemble.from_fields([v, -v])
    assert np.all(empirical_mean(e).coeffs == 0.0)


def test_mean_of_singleton_is_the_particle():
    v = SpectralField(np.array([0.3, 0.7]))
    assert np.array_equal(empirical_mean(Ensemble.from_fields([v])).coeffs,
                          v.coeffs)


def test_mean_matches_fixed_order_sum():
    rng = np.random.default_rng(5)
    coeffs = rng.standard_normal((7, 4))
    expected = np.array([math.fsum(coeffs[:, m]) / 7 for m in range(4)])
    assert np.array_equal(empirical_mean(Ensemble(coeffs)).coeffs, expected)


def test_mean_is_permutation_invariant():
    rng = np.random.default_rng(6)
    coeffs = rng.standard_normal((9, 3))
    perm = rng.permutation(9)
    assert np.array_equal(empirical_mean(Ensemble(coeffs)).coeffs,
                          empirical_mean(Ensemble(coeffs[perm])).coeffs)


def test_moment_single_particle():
    e = Ensemble(np.array([[2.0, 0.0]]))  # H norm 2
    assert moment_q(e, 6.0) == pytest.approx(64.0, rel=1e-14)


def test_moment_zero_ensemble():
    assert moment_q(Ensemble(np.zeros((4, 3))), 2.0) == 0.0


def test_moment_two_particles():
    e = Ensemble(np.array([[1.0, 0.0], [3.0, 0.0]]))
    assert moment_q(e, 2.0) == pytest.approx(5.0, rel=1e-14)


def test_moment_rejects_small_exponent():
    with pytest.raises(ValueError):
        moment_q(Ensemble(np.ones((2, 2))), 0.5)


@settings(deadline=None, max_examples=40)
@given(st.floats(0.1, 10.0), st.floats(1.0, 7.0))
def test_moment_homogeneity(scale, q):
    rng = np.random.default_rng(12)
    coeffs = rng.standard_normal((6, 4))
    base = moment_q(Ensemble(coeffs), q)
    scaled = moment_q(Ensemble(scale * coeffs), q)
    assert scaled == pytest.approx(scale**q * base, rel=1e-12)


def test_w2_identical_ensembles():
    rng = np.random.default_rng(1)
    e = Ensemble(rng.standard_normal((5, 3)))
    assert wasserstein2(e, e) == pytest.approx(0.0, abs=1e-12)


def test_w2_singletons():
    x = np.array([[1.0, 2.0]])
    y = np.array([[4.0, 6.0]])
    assert wasserstein2(Ensemble(x), Ensemble(y)) == pytest.approx(5.0, rel=1e-14)


def test_w2_three_particles_vs_enumeration():
    rng = np.random.default_rng(2)
    a = Ensemble(rng.standard_normal((3, 4)))
    b = Ensemble(rng.standard_normal((3, 4)))
    assert wasserstein2(a, b) == pytest.approx(brute_force_w2(a, b), abs=1e-12)


def test_w2_exact_for_small_ensembles():
    rng = np.random.default_rng(14)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        a = Ensemble(rng.standard_normal((n, 4)))
        b = Ensemble(rng.standard_normal((n, 4)))
        assert abs(wasserstein2(a, b) - brute_force_w2(a, b)) <= 1e-12


def test_w2_metric_axioms():
    rng = np.random.default_rng(21)
    for _ in range(10):
        a = Ensemble(rng.standard_normal((5, 3)))
        b = Ensemble(rng.standard_normal((5, 3)))
        c = Ensemble(rng.standard_normal((5, 3)))
        dab, dba = wasserstein2(a, b), wasserstein2(b, a)
        assert dab == dba  # cost matrix transpose has the same optimum
        assert dab <= wasserstein2(a, c) + wasserstein2(c, b) + 1e-12


def test_w2_identity_coupling_upper_bound():
    rng = np.random.default_rng(22)
    a = Ensemble(rng.standard_normal((6, 3)))
    b = Ensemble(rng.standard_normal((6, 3)))
    identity_cost = np.mean(np.sum((a.coeffs - b.coeffs) ** 2, axis=1))
    assert wasserstein2(a, b) ** 2 <= identity_cost + 1e-12


def test_w2_size_mismatch():
    with pytest.raises(ValueError):
        wasserstein2(Ensemble(np.ones((2, 3))), Ensemble(np.ones((3, 3))))


def test_ensemble_requires_particles():
    with pytest.raises(ValueError):
        Ensemble(np.zeros((0, 3)))
