"""Acceptance suite: one test per criterion, each printing a PASS line.

Reference scale unless a criterion says otherwise: 8 modes, 16 particles,
50 steps on [0, 0.5], cubic instance with coupling 0.5 and noise 0.3.
Every tolerance is pinned here, none deferred.
"""

import numpy as np
import pytest

from mfcontrol.adjoint import solve_adjoint
from mfcontrol.cli import main
from mfcontrol.ensemble import Ensemble
from mfcontrol.forward import ControlPath, lipschitz_probe, moment_report, solve
from mfcontrol.noise import NoisePlan
from mfcontrol.objective import gradcheck
from mfcontrol.optimizer import (
    DescentParams,
    descend,
    pontryagin_residual,
    variational_inequality,
)
from mfcontrol.spectral import SpectralField
from mfcontrol.verification import (
    assumptions_suite,
    duality_suite,
    heat_order_suite,
    reference_cubic,
    reference_lq,
    riccati_suite,
    wasserstein_suite,
)

M, N, N_T, HORIZON = 8, 16, 50, 0.5


def report(number, label, passed, detail=""):
    status = "PASS" if passed else "FAIL"
    print(f"ACCEPTANCE {number:2d} [{label}]: {status} {detail}")
    assert passed, f"criterion {number} ({label}): {detail}"


def reference_x0(n_particles=N, n_modes=M):
    return Ensemble.constant(SpectralField.unit_mode(n_modes, 1, 1.0),
                             n_particles)


def test_criterion_01_discrete_duality():
    suite = duality_suite(n_trials=20, n_modes=M, n_particles=N,
                          n_steps=N_T, horizon=HORIZON, seed=10, tol=1e-10)
    report(1, "discrete duality", suite.passed,
           f"worst relative gap {suite.summary['worst']:.3e} <= 1e-10")


def test_criterion_02_gradient_vs_finite_differences():
    spec = reference_cubic(M)
    plan = NoisePlan(seed=2024, n_particles=N, n_modes=M, n_steps=N_T,
                     dt=HORIZON / N_T)
    rng = np.random.default_rng(8)
    weights = 1.0 / np.arange(1, M + 1)
    control = ControlPath(0.4 * rng.standard_normal((N_T, M)) * weights,
                          7.0, 50.0)
    x0 = reference_x0()
    check = gradcheck(spec, plan, x0, control, n_dirs=5, eps=1e-5,
                      direction_seed=0)
    ok = check.worst_adjoint_fd <= 1e-4

    # second-order decay of the central difference until the round-off floor
    errors = []
    for eps in (2e-2, 1e-2, 5e-3):
        row = gradcheck(spec, plan, x0, control, n_dirs=1, eps=eps,
                        direction_seed=99).rows[0]
        errors.append(abs(row.central_difference - row.adjoint_route))
    ratios = [a / b for a, b in zip(errors, errors[1:])]
    ok &= all(3.0 <= r <= 5.5 for r in ratios)
    report(2, "gradient vs central differences", ok,
           f"worst rel err {check.worst_adjoint_fd:.3e} <= 1e-4, "
           f"halving ratios {[f'{r:.2f}' for r in ratios]}")


def test_criterion_03_scheme_order():
    suite = heat_order_suite(horizon=HORIZON, base_steps=50, levels=4,
                             ratio_band=(0.4, 0.6))
    report(3, "scheme order", suite.passed,
           f"error ratios {[f'{r:.3f}' for r in suite.summary['ratios']]} "
           "in [0.4, 0.6]")


def test_criterion_04_lq_vs_riccati():
    suite = riccati_suite(horizon=HORIZON, n_steps=400, tol=1e-3)
    report(4, "scalar optimizer vs Riccati", suite.passed,
           f"L2 control gap {suite.summary['l2_gap']:.3e} <= 1e-3 in "
           f"{suite.summary['iterations']} iterations")


@pytest.mark.parametrize("instance", ["cubic_rd", "lq"])
def test_criterion_05_pontryagin_stationarity(instance):
    if instance == "cubic_rd":
        alpha_bar = np.zeros(M)
        alpha_bar[0] = 0.2
        spec = reference_cubic(M, alpha_ref=alpha_bar)
    else:
        spec = reference_lq(M)
    plan = NoisePlan(seed=31, n_particles=N, n_modes=M, n_steps=N_T,
                     dt=HORIZON / N_T)
    x0 = reference_x0()
    params = DescentParams(max_iters=400, step0=0.35, tol=1e-6)
    result = descend(spec, plan, x0,
                     ControlPath.zero(N_T, M, spec.q, spec.bound), params)
    residual = pontryagin_residual(spec, plan, x0, result.control)
    vi = variational_inequality(spec, plan, x0, result.control,
                                n_samples=20, seed=5)
    ok = result.converged and residual <= 1e-5 and min(vi) >= -1e-5
    report(5, f"stationarity at optimum ({instance})", ok,
           f"residual {residual:.3e} <= 1e-5, "
           f"min directional value {min(vi):.3e} >= -1e-5")


def test_criterion_06_monotone_descent():
    all_monotone = True
    worst = 0.0
    for instance in ("cubic_rd", "lq"):
        spec = reference_cubic(M) if instance == "cubic_rd" else reference_lq(M)
        for seed in range(10):
            plan = NoisePlan(seed=seed, n_particles=N, n_modes=M,
                             n_steps=N_T, dt=HORIZON / N_T)
            rng = np.random.default_rng(seed)
            weights = 1.0 / np.arange(1, M + 1)
            alpha0 = ControlPath(
                0.5 * rng.standard_normal((N_T, M)) * weights, spec.q,
                spec.bound)
            params = DescentParams(max_iters=8, step0=0.3, tol=1e-12)
            result = descend(spec, plan, reference_x0(), alpha0, params)
            increments = np.diff(np.asarray(result.history))
            all_monotone &= bool(np.all(increments <= 0.0))
            if increments.size:
                worst = max(worst, float(np.max(increments)))
    report(6, "monotone descent", all_monotone,
           f"largest cost increment {worst:.3e} <= 0 over 10 seeds x 2 instances")


def test_criterion_07_lipschitz_probe():
    spec = reference_cubic(M)
    x0 = reference_x0()
    rng = np.random.default_rng(123)
    weights = 1.0 / np.arange(1, M + 1)
    pairs = [(0.4 * rng.standard_normal((N_T, M)) * weights,
              0.4 * rng.standard_normal((N_T, M)) * weights)
             for _ in range(20)]
    max_ratio = {}
    for factor in (1, 2):
        n_t = N_T * factor
        plan = NoisePlan(seed=42, n_particles=N, n_modes=M, n_steps=n_t,
                         dt=HORIZON / n_t)
        ratios = []
        for a_coarse, b_coarse in pairs:
            a = ControlPath(np.repeat(a_coarse, factor, axis=0), 7.0, 50.0)
            b = ControlPath(np.repeat(b_coarse, factor, axis=0), 7.0, 50.0)
            ratios.append(lipschitz_probe(spec, plan, x0, a, b).ratio)
        max_ratio[n_t] = max(ratios)
    bound_ok = max_ratio[N_T] <= 1.0  # fixed constant for this configuration
    drift = abs(max_ratio[2 * N_T] / max_ratio[N_T] - 1.0)
    ok = bound_ok and drift <= 0.2
    report(7, "control-to-state Lipschitz probe", ok,
           f"max ratio {max_ratio[N_T]:.3e} <= 1, refinement drift "
           f"{drift:.1%} <= 20%")


def test_criterion_08_moment_monitor():
    spec = reference_cubic(M)
    x0 = reference_x0()
    sups = []
    for n_t in (50, 100, 200):
        plan = NoisePlan(seed=42, n_particles=N, n_modes=M, n_steps=n_t,
                         dt=HORIZON / n_t)
        run = solve(spec, ControlPath.zero(n_t, M, 7.0, 50.0), plan, x0)
        sup_moment, v_energy = moment_report(run, 7.0)
        assert np.isfinite(sup_moment) and np.isfinite(v_energy)
        sups.append(sup_moment)
    spread = max(sups) / min(sups)
    report(8, "seventh-moment monitor", spread < 2.0,
           f"sup moments {[f'{s:.4f}' for s in sups]}, spread {spread:.3f} < 2")


def test_criterion_09_wasserstein_exactness():
    suite = wasserstein_suite(n_trials=50, max_particles=8, seed=2, tol=1e-12)
    report(9, "transport distance exactness", suite.passed,
           f"worst gap to enumeration {suite.summary['worst']:.3e} <= 1e-12")


def test_criterion_10_reproducibility(tmp_path):
    config = """
[run]
problem = "cubic_rd"
T = 0.5
n_t = 20
M = 4
N = 8
seed = 77

[admissible]
q = 7.0
K = 50.0

[initial]
coeffs = [1.0]
jitter = 0.05

[cubic_rd]
kappa = 0.5
sigma = 0.3
multiplier = 1.0
alpha_bar = [0.2]

[optimizer]
max_iters = 15
step0 = 0.35
tol = 1e-5
"""
    path = tmp_path / "repro.toml"
    path.write_text(config)
    digests = []
    for workers in (1, 2, 8):
        out = tmp_path / f"w{workers}"
        assert main(["simulate", "--config", str(path), "--output", str(out),
                     "--workers", str(workers)]) == 0
        assert main(["optimize", "--config", str(path), "--output", str(out),
                     "--workers", str(workers)]) == 0
        digests.append(tuple(
            (out / name).read_bytes()
            for name in ("trajectory.csv", "optimization_log.csv",
                         "optimal_control.csv", "costate.csv")))
    ok = digests[0] == digests[1] == digests[2]
    report(10, "bit-identical outputs across workers", ok,
           "trajectory, log, control and costate CSVs agree at 1/2/8 workers")


def test_criterion_11_assumption_probes():
    suite = assumptions_suite(sample_count=10_000, seed=4, horizon=HORIZON)
    worst = min(row["worst_margin"] for row in suite.rows)
    violations = sum(row["violations"] for row in suite.rows)
    report(11, "structural inequality probes", suite.passed,
           f"{violations} violations beyond 1e-9 over 10^4 samples per "
           f"condition (worst margin {worst:.3e})")
