import numpy as np
import pytest

from mfcontrol.assumptions import (
    assumption_probe,
    nemytskii_field_monotonicity,
    pointwise_monotonicity_samples,
)
from mfcontrol.ensemble import Ensemble
from mfcontrol.problems import (
    CubicReactionDiffusion,
    LinearQuadratic,
    eval_coefficients,
    eval_derivatives,
    lions_apply,
)
from mfcontrol.spectral import SpectralField
from mfcontrol.util import column_mean
from mfcontrol.verification import reference_cubic, reference_lq


def fine_grid_sine_coeffs(values_fn, n_modes, n_points=20_000):
    """Trapezoid projection of a function on (0,1) onto the sine basis."""
    xi = np.linspace(0.0, 1.0, n_points + 1)
    k = np.arange(1, n_modes + 1)
    basis = np.sqrt(2.0) * np.sin(np.pi * np.outer(xi, k))
    values = values_fn(xi)
    return np.array([np.trapezoid(values * basis[:, m], xi)
                     for m in range(n_modes)])


# ---------------------------------------------------------------- cubic drift

def test_cubic_drift_trig_identity():
    # x = a e_1  =>  -x^3 has e_1 coefficient -(3/2) a^3 and e_3 +(1/2) a^3
    m, a = 8, 0.7
    spec = CubicReactionDiffusion(m, kappa=0.0, sigma=0.0, multiplier=None)
    x = np.zeros((1, m))
    x[0, 0] = a
    drift = spec.drift(0.0, x, np.zeros(m), np.zeros(m))[0]
    assert drift[0] == pytest.approx(-1.5 * a**3, rel=1e-12)
    assert drift[2] == pytest.approx(0.5 * a**3, rel=1e-12)
    assert np.max(np.abs(drift[[1, 3, 4, 5, 6, 7]])) <= 1e-14


def test_cubic_drift_matches_quadrature_oracle():
    m = 8
    spec = CubicReactionDiffusion(m, kappa=0.0, sigma=0.0, multiplier=None)
    rng = np.random.default_rng(4)
    c = rng.standard_normal(m) / np.arange(1, m + 1)
    drift = spec.drift(0.0, c[None, :], np.zeros(m), np.zeros(m))[0]

    def cubed(xi):
        k = np.arange(1, m + 1)
        u = (np.sqrt(2.0) * np.sin(np.pi * np.outer(xi, k))) @ c
        return -(u**3)

    oracle = fine_grid_sine_coeffs(cubed, m)
    assert np.max(np.abs(drift - oracle)) <= 1e-7


def test_cubic_tracking_residual_zero():
    m = 6
    u_bar = np.array([0.4, 0.1, 0.0, 0.0, 0.0, 0.0])
    a_bar = np.array([0.2, 0.0, 0.0, 0.0, 0.0, 0.0])
    spec = CubicReactionDiffusion(m, u_ref=u_bar, alpha_ref=a_bar)
    ens = Ensemble(u_bar[None, :])
    _, cost = eval_coefficients(spec, 0.3, SpectralField(u_bar), ens,
                                SpectralField(a_bar))
    assert cost == 0.0


def test_lq_identity_drift():
    m = 5
    spec = LinearQuadratic(m, F1=1.0, F2=0.0, F3=0.0)
    rng = np.random.default_rng(0)
    x = rng.standard_normal((3, m))
    out = spec.drift(0.0, x, np.zeros(m), np.ones(m))
    assert np.array_equal(out, x)


def test_constant_multiplier_is_identity():
    # b = 1 applied through collocation must reproduce the field exactly
    m = 8
    spec = CubicReactionDiffusion(m, multiplier=1.0)
    rng = np.random.default_rng(1)
    beta = rng.standard_normal(m)
    out = spec.drift_dcontrol(0.0, np.zeros((1, m)), np.zeros(m), np.zeros(m),
                              beta)
    assert np.max(np.abs(out - beta)) <= 1e-12


# ------------------------------------------------------------- derivatives

def test_cubic_state_derivative_vanishes_at_zero():
    m = 6
    spec = CubicReactionDiffusion(m)
    z = np.random.default_rng(2).standard_normal((4, m))
    out = spec.drift_dx(0.0, np.zeros((4, m)), np.zeros(m), np.zeros(m), z)
    assert np.max(np.abs(out)) <= 1e-14


def test_cost_gradient_zero_at_reference(cubic_spec):
    m = cubic_spec.n_modes
    u_bar = cubic_spec.u_ref(0.2)
    grad = cubic_spec.running_cost_dx(0.2, u_bar[None, :], np.zeros(m),
                                      np.zeros(m))
    assert np.max(np.abs(grad)) == 0.0


@pytest.mark.parametrize("instance", ["cubic", "lq"])
def test_drift_directional_consistency(instance):
    # || F(x + eps z) - F(x) - eps F_x(z) || / eps -> 0 linearly in eps
    m = 8
    spec = reference_cubic(m) if instance == "cubic" else reference_lq(m)
    rng = np.random.default_rng(5)
    x = rng.standard_normal((1, m)) / np.arange(1, m + 1)
    z = rng.standard_normal((1, m)) / np.arange(1, m + 1)
    mean = rng.standard_normal(m) * 0.2
    alpha = rng.standard_normal(m) * 0.2
    t = 0.1
    defects = []
    for eps in (1e-3, 5e-4, 2.5e-4):
        lhs = spec.drift(t, x + eps * z, mean, alpha) - spec.drift(t, x, mean, alpha)
        lin = eps * spec.drift_dx(t, x, mean, alpha, z)
        defects.append(np.linalg.norm(lhs - lin) / eps)
    for a, b in zip(defects, defects[1:]):
        assert b <= 0.75 * a or a <= 1e-12  # first order (exact zero for lq)


def test_directional_derivatives_linear(cubic_spec, lq_spec):
    m = 8
    rng = np.random.default_rng(6)
    x = rng.standard_normal((3, m))
    mean = rng.standard_normal(m)
    alpha = rng.standard_normal(m)
    z1 = rng.standard_normal((3, m))
    z2 = rng.standard_normal((3, m))
    s = 1.7
    for spec in (cubic_spec, lq_spec):
        combined = spec.drift_dx(0.2, x, mean, alpha, z1 + s * z2)
        split = spec.drift_dx(0.2, x, mean, alpha, z1) \
            + s * spec.drift_dx(0.2, x, mean, alpha, z2)
        assert np.max(np.abs(combined - split)) <= 1e-12 * max(
            1.0, np.max(np.abs(split)))


# ----------------------------------------------------------- transposedness

def _pairings(spec, seed):
    """<D z, w> vs <z, D^T w> for every derivative/adjoint pair."""
    m = spec.n_modes
    rng = np.random.default_rng(seed)
    n = 6
    t = 0.3
    x = rng.standard_normal((n, m))
    mean = column_mean(x)
    alpha = rng.standard_normal(m)
    z = rng.standard_normal((n, m))
    w = rng.standard_normal((n, m))
    beta = rng.standard_normal(m)
    dw = rng.standard_normal((n, m)) * 0.1
    checks = []

    # state direction of the drift
    lhs = np.sum(spec.drift_dx(t, x, mean, alpha, z) * w)
    rhs = np.sum(z * spec.drift_dx_adjoint(t, x, mean, alpha, w))
    checks.append(("drift_dx", lhs, rhs))

    # law direction of the drift: tangent uses mean_z, adjoint averages w
    lhs = np.sum(np.broadcast_to(
        np.asarray(spec.drift_dlaw(t, x, mean, alpha, column_mean(z))),
        (n, m)) * w) / n
    rhs = np.mean(z @ np.broadcast_to(
        np.asarray(spec.drift_dlaw_adjoint(t, x, mean, alpha, w)), (m,)))
    checks.append(("drift_dlaw", lhs / 1.0, rhs * 1.0))

    # control direction of the drift (adjoint is ensemble-averaged)
    lhs = np.sum(np.broadcast_to(
        np.asarray(spec.drift_dcontrol(t, x, mean, alpha, beta)), (n, m)) * w) / n
    rhs = float(np.dot(beta, np.broadcast_to(
        np.asarray(spec.drift_dcontrol_adjoint(t, x, mean, alpha, w)), (m,))))
    checks.append(("drift_dcontrol", lhs, rhs))

    # diffusion directions against the increments
    lhs = np.sum(np.broadcast_to(
        np.asarray(spec.diffusion_dx_diag(t, x, mean, alpha, z)), (n, m))
        * dw * w)
    rhs = np.sum(z * np.broadcast_to(
        np.asarray(spec.diffusion_dx_adjoint(t, x, mean, alpha, w, dw)), (n, m)))
    checks.append(("diffusion_dx", lhs, rhs))

    lhs = np.sum(np.broadcast_to(
        np.asarray(spec.diffusion_dlaw_diag(t, x, mean, alpha, column_mean(z))),
        (n, m)) * dw * w) / n
    rhs = np.mean(z @ np.broadcast_to(
        np.asarray(spec.diffusion_dlaw_adjoint(t, x, mean, alpha, w, dw)), (m,)))
    checks.append(("diffusion_dlaw", lhs, rhs))

    lhs = np.sum(np.broadcast_to(
        np.asarray(spec.diffusion_dcontrol_diag(t, x, mean, alpha, beta)),
        (n, m)) * dw * w) / n
    rhs = float(np.dot(beta, np.broadcast_to(
        np.asarray(spec.diffusion_dcontrol_adjoint(t, x, mean, alpha, w, dw)),
        (m,))))
    checks.append(("diffusion_dcontrol", lhs, rhs))
    return checks


@pytest.mark.parametrize("instance", ["cubic", "lq"])
def test_adjoint_methods_are_exact_transposes(instance):
    spec = reference_cubic() if instance == "cubic" else reference_lq()
    for seed in (0, 1, 2):
        for name, lhs, rhs in _pairings(spec, seed):
            scale = 1.0 + max(abs(lhs), abs(rhs))
            assert abs(lhs - rhs) / scale <= 1e-13, (name, lhs, rhs)


# ------------------------------------------------------------- law kernels

def test_lions_apply_zero_coupling():
    spec = CubicReactionDiffusion(8, kappa=0.0)
    rng = np.random.default_rng(7)
    ens = Ensemble(rng.standard_normal((5, 8)))
    dirs = Ensemble(rng.standard_normal((5, 8)))
    out = lions_apply(spec, 0.1, ens, dirs, SpectralField.zero(8), "F")
    assert np.all(out.coeffs == 0.0)


def test_lions_apply_single_particle(cubic_spec):
    z = np.random.default_rng(8).standard_normal(8)
    ens = Ensemble(np.zeros((1, 8)))
    out = lions_apply(cubic_spec, 0.1, ens, Ensemble(z[None, :]),
                      SpectralField.zero(8), "F")
    assert np.allclose(out.coeffs, cubic_spec.kappa * z, rtol=1e-14)


@pytest.mark.parametrize("instance", ["cubic", "lq"])
def test_lions_apply_matches_lifted_difference(instance):
    # (F(x, perturbed law) - F(x, law)) / eps against the kernel average
    spec = reference_cubic() if instance == "cubic" else reference_lq()
    m = spec.n_modes
    rng = np.random.default_rng(9)
    ens = Ensemble(rng.standard_normal((6, m)))
    dirs = Ensemble(rng.standard_normal((6, m)))
    x = rng.standard_normal(m)
    t = 0.2
    alpha = np.zeros(m)
    kernel = lions_apply(spec, t, ens, dirs, SpectralField(x), "F").coeffs
    eps_errors = []
    for eps in (1e-4, 5e-5):
        shifted = column_mean(ens.coeffs + eps * dirs.coeffs)
        base = column_mean(ens.coeffs)
        fd = (spec.drift(t, x[None, :], shifted, alpha)[0]
              - spec.drift(t, x[None, :], base, alpha)[0]) / eps
        eps_errors.append(np.max(np.abs(fd - kernel)))
    assert eps_errors[0] <= 1e-9  # mean coupling is linear: exact up to round-off
    assert eps_errors[1] <= 1e-9


def test_lions_apply_linear_in_directions(lq_spec):
    m = lq_spec.n_modes
    rng = np.random.default_rng(10)
    ens = Ensemble(rng.standard_normal((4, m)))
    d1 = rng.standard_normal((4, m))
    d2 = rng.standard_normal((4, m))
    x = SpectralField.zero(m)
    f1 = lions_apply(lq_spec, 0.1, ens, Ensemble(d1), x, "F").coeffs
    f2 = lions_apply(lq_spec, 0.1, ens, Ensemble(d2), x, "F").coeffs
    both = lions_apply(lq_spec, 0.1, ens, Ensemble(d1 + d2), x, "F").coeffs
    assert np.allclose(both, f1 + f2, rtol=1e-12, atol=1e-14)


def test_lions_apply_scalar_costs(lq_spec):
    m = lq_spec.n_modes
    rng = np.random.default_rng(11)
    ens = Ensemble(rng.standard_normal((5, m)))
    dirs = Ensemble(rng.standard_normal((5, m)))
    x = SpectralField(rng.standard_normal(m))
    for which in ("f", "g"):
        value = lions_apply(lq_spec, 0.2, ens, dirs, x, which)
        assert isinstance(value, float) and np.isfinite(value)
    diag = lions_apply(lq_spec, 0.2, ens, dirs, x, "B")
    assert diag.shape == (m,)


def test_lions_apply_size_mismatch(cubic_spec):
    with pytest.raises(ValueError):
        lions_apply(cubic_spec, 0.0, Ensemble(np.ones((2, 8))),
                    Ensemble(np.ones((3, 8))), SpectralField.zero(8), "F")


# ---------------------------------------------------------------- convexity

@pytest.mark.parametrize("instance", ["cubic", "lq"])
def test_running_cost_midpoint_convex_in_control(instance):
    spec = reference_cubic() if instance == "cubic" else reference_lq()
    m = spec.n_modes
    rng = np.random.default_rng(12)
    x = rng.standard_normal((4, m))
    mean = column_mean(x)
    for _ in range(25):
        a = rng.standard_normal(m)
        b = rng.standard_normal(m)
        mid = spec.running_cost(0.1, x, mean, 0.5 * (a + b))
        avg = 0.5 * (spec.running_cost(0.1, x, mean, a)
                     + spec.running_cost(0.1, x, mean, b))
        assert np.all(mid <= avg + 1e-12)


# -------------------------------------------------------------- probes

def test_pointwise_monotonicity():
    margins = pointwise_monotonicity_samples(sample_count=10_000, seed=3)
    assert np.all(margins <= 1e-9)


def test_nemytskii_field_monotonicity(cubic_spec):
    inner = nemytskii_field_monotonicity(cubic_spec, n_pairs=100, seed=1)
    assert np.all(inner <= 1e-12)


@pytest.mark.parametrize("instance", ["cubic", "lq"])
def test_assumption_probe_passes(instance):
    spec = reference_cubic() if instance == "cubic" else reference_lq()
    report = assumption_probe(spec, sample_count=2000, seed=5, horizon=0.5)
    assert report.passed
    for cond in report.conditions:
        assert cond.violations == 0


def test_constant_diffusion_lipschitz_defect_zero(cubic_spec):
    report = assumption_probe(cubic_spec, sample_count=500, seed=6)
    assert report.condition("diffusion_lipschitz").worst_margin >= 0.0


# ------------------------------------------------------------ validation

def test_cubic_rejects_small_exponent():
    with pytest.raises(ValueError, match="q > 6"):
        CubicReactionDiffusion(4, q=6.0)


def test_lq_rejects_negative_weights():
    with pytest.raises(ValueError, match="nonnegative"):
        LinearQuadratic(4, f1=-1.0)


def test_lq_rejects_small_exponent():
    with pytest.raises(ValueError, match="q > 2"):
        LinearQuadratic(4, q=2.0)


def test_eval_derivatives_shapes(cubic_spec):
    m = cubic_spec.n_modes
    rng = np.random.default_rng(13)
    ens = Ensemble(rng.standard_normal((3, m)))
    out = eval_derivatives(cubic_spec, 0.1, SpectralField(rng.standard_normal(m)),
                           ens, SpectralField.zero(m),
                           SpectralField(rng.standard_normal(m)),
                           SpectralField(rng.standard_normal(m)))
    assert out.drift_dx.n_modes == m
    assert out.diffusion_dx_diag.shape == (m,)
    assert out.terminal_dx.n_modes == m
