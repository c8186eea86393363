"""Self-contained verification suites behind the ``verify`` command.

Each suite pits one of the package's computational routes against an
independent reference: the exact heat factor against the scheme's refinement
behavior, the costate gradient against the tangent solver, the optimizer
against a fine Riccati integration, the assignment-based transport distance
against brute-force enumeration, and the drift/diffusion structure against
its certified inequality constants.  Suites return row-oriented reports so
the command line can emit them as CSV tables.
"""

import itertools
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .adjoint import duality_residual, solve_adjoint
from .assumptions import assumption_probe, pointwise_monotonicity_samples
from .ensemble import Ensemble
from .forward import ControlPath, solve
from .noise import NoisePlan
from .objective import cost, gradient, random_direction
from .optimizer import DescentParams, descend
from .problems import CubicReactionDiffusion, LinearQuadratic
from .spectral import SpectralField
from .tangent import gateaux_cost, solve_tangent
from .util import exact_sum

__all__ = [
    "SuiteResult",
    "heat_order_suite",
    "duality_suite",
    "riccati_suite",
    "wasserstein_suite",
    "assumptions_suite",
    "reference_cubic",
    "reference_lq",
    "riccati_closed_loop",
    "wasserstein2_bruteforce",
]


@dataclass
class SuiteResult:
    name: str
    passed: bool
    summary: dict
    rows: list = field(default_factory=list)
    columns: tuple = ()


def reference_cubic(n_modes=8, q=7.0, bound=50.0, kappa=0.5, sigma=0.3,
                    multiplier=1.0, **kwargs) -> CubicReactionDiffusion:
    """Cubic instance at the documented desk scale."""
    return CubicReactionDiffusion(n_modes, kappa=kappa, sigma=sigma,
                                  multiplier=multiplier, q=q, bound=bound,
                                  **kwargs)


def reference_lq(n_modes=8, q=3.0, bound=50.0) -> LinearQuadratic:
    """Linear-quadratic instance with state- and law-dependent noise."""
    k = np.arange(1, n_modes + 1, dtype=float)
    return LinearQuadratic(
        n_modes,
        F1=lambda t, _k=k: -0.3 - 0.05 * _k * (1.0 + 0.5 * t),
        F2=0.2 / k, F3=1.0,
        B1=0.2 / k, B2=0.1 / k, B3=0.1 / k,
        f1=0.5, f2=0.3, f3=1.0, h1=0.5, h2=0.25, g1=0.4, g2=0.2,
        q=q, bound=bound,
    )


def _heat_problem(n_modes):
    return LinearQuadratic(n_modes, F1=0.0, F2=0.0, F3=0.0,
                           B1=0.0, B2=0.0, B3=0.0, f3=1.0)


def heat_order_suite(horizon=0.5, base_steps=50, levels=4, seed=0,
                     ratio_band=(0.4, 0.6)) -> SuiteResult:
    """First-order convergence of the implicit factor on pure decay.

    With drift and noise off, mode one evolves by the exact product
    (1 + dt pi^2)^{-n_t}; its gap to exp(-pi^2 T) must halve (within the
    band) each time dt is halved.
    """
    exact = float(np.exp(-np.pi**2 * horizon))
    errors = []
    rows = []
    spec = _heat_problem(1)
    x0 = Ensemble.constant(SpectralField.unit_mode(1, 1, 1.0), 1)
    for level in range(levels):
        n_t = base_steps * 2**level
        plan = NoisePlan(seed=seed, n_particles=1, n_modes=1, n_steps=n_t,
                         dt=horizon / n_t)
        control = ControlPath.zero(n_t, 1, q=3.0, bound=1.0)
        run = solve(spec, control, plan, x0)
        err = abs(float(run.states[-1, 0, 0]) - exact)
        errors.append(err)
        rows.append({"level": level, "n_t": n_t, "dt": horizon / n_t,
                     "terminal_mode1": float(run.states[-1, 0, 0]),
                     "abs_error": err})
    ratios = [errors[i + 1] / errors[i] for i in range(levels - 1)]
    for i, r in enumerate(ratios):
        rows[i + 1]["ratio"] = r
    rows[0]["ratio"] = float("nan")
    passed = all(ratio_band[0] <= r <= ratio_band[1] for r in ratios)
    return SuiteResult(
        name="heat", passed=passed,
        summary={"errors": errors, "ratios": ratios, "band": ratio_band},
        rows=rows,
        columns=("level", "n_t", "dt", "terminal_mode1", "abs_error", "ratio"),
    )


def _random_control(rng, n_steps, n_modes, q, bound, scale):
    weights = 1.0 / np.arange(1, n_modes + 1, dtype=float)
    vals = scale * rng.standard_normal((n_steps, n_modes)) * weights
    return ControlPath(vals, q, bound)


def duality_suite(n_trials=20, n_modes=8, n_particles=16, n_steps=50,
                  horizon=0.5, seed=10, tol=1e-10) -> SuiteResult:
    """Costate/tangent pairing identity and gradient pairing, both instances."""
    rows = []
    worst = 0.0
    for instance, spec in (("cubic_rd", reference_cubic(n_modes)),
                           ("lq", reference_lq(n_modes))):
        rng = np.random.default_rng(seed)
        for trial in range(n_trials):
            plan = NoisePlan(seed=seed + 1000 * trial, n_particles=n_particles,
                             n_modes=n_modes, n_steps=n_steps,
                             dt=horizon / n_steps)
            alpha = _random_control(rng, n_steps, n_modes, spec.q, spec.bound, 0.4)
            beta = _random_control(rng, n_steps, n_modes, spec.q, spec.bound, 1.0)
            x0 = Ensemble(0.8 * rng.standard_normal((n_particles, n_modes))
                          / np.arange(1, n_modes + 1))
            run = solve(spec, alpha, plan, x0)
            tang = solve_tangent(run, beta)
            adj = solve_adjoint(run)
            pairing = gradient(run, adj).pairing(beta, plan.dt)
            gateaux = gateaux_cost(run, tang, beta)
            rel_gap = abs(pairing - gateaux) / (1.0 + abs(gateaux))
            residual = duality_residual(run, tang, adj, beta)
            worst = max(worst, rel_gap, residual)
            rows.append({"instance": instance, "trial": trial,
                         "pairing": pairing, "gateaux": gateaux,
                         "rel_gap": rel_gap, "duality_residual": residual})
    return SuiteResult(
        name="duality", passed=worst <= tol,
        summary={"worst": worst, "tol": tol},
        rows=rows,
        columns=("instance", "trial", "pairing", "gateaux", "rel_gap",
                 "duality_residual"),
    )


def riccati_closed_loop(a, b, q, r, s, x0, times, rtol=1e-12, atol=1e-14):
    """Reference optimal control of the scalar problem by Riccati integration.

    dx = (a x + b u) dt, J = int q x^2 + r u^2 dt + s x(T)^2.  The value
    P solves the backward Riccati equation P' = (b^2/r) P^2 - 2 a P - q with
    P(T) = s; the optimal feedback is u = -(b/r) P x.  Integrated with a
    fine adaptive method, entirely independent of the package's solvers.
    """
    horizon = times[-1]

    def riccati_rhs(tau, p):  # tau = T - t
        return 2.0 * a * p + q - (b * b / r) * p * p

    p_sol = solve_ivp(riccati_rhs, (0.0, horizon), [s], rtol=rtol, atol=atol,
                      dense_output=True)

    def p_at(t):
        return float(p_sol.sol(horizon - t)[0])

    def closed_loop_rhs(t, x):
        return (a - (b * b / r) * p_at(t)) * x

    x_sol = solve_ivp(closed_loop_rhs, (0.0, horizon), [x0], rtol=rtol,
                      atol=atol, dense_output=True)
    controls = np.array([-(b / r) * p_at(t) * float(x_sol.sol(t)[0])
                         for t in times])
    states = np.array([float(x_sol.sol(t)[0]) for t in times])
    return controls, states


def riccati_suite(horizon=0.5, n_steps=400, f1=1.0, f3=1.0, g1=1.0,
                  drift_shift=0.0, x0_value=1.0, tol=1e-3,
                  params=None) -> SuiteResult:
    """Optimized scalar control against the Riccati reference.

    Single mode, single particle, no noise, no mean-field: the package's
    discrete optimum must land within L^2(0, T) distance ``tol`` of the
    continuous closed-loop control.
    """
    spec = LinearQuadratic(1, F1=drift_shift, F3=1.0, f1=f1, f3=f3, g1=g1,
                           q=3.0, bound=1e6)
    dt = horizon / n_steps
    plan = NoisePlan(seed=0, n_particles=1, n_modes=1, n_steps=n_steps, dt=dt)
    x0 = Ensemble.constant(SpectralField(np.array([x0_value])), 1)
    alpha0 = ControlPath.zero(n_steps, 1, q=3.0, bound=1e6)
    if params is None:
        # the residual floor of the line-searched method sits near
        # sqrt(ulp(J) / step); 1e-7 stays safely above it at this scale
        params = DescentParams(max_iters=200, step0=0.45, armijo_c=1e-4,
                               shrink=0.5, tol=1e-7)
    result = descend(spec, plan, x0, alpha0, params)
    times = np.arange(n_steps) * dt
    a = -np.pi**2 + drift_shift
    ref_controls, _ = riccati_closed_loop(a, 1.0, f1, f3, g1, x0_value, times)
    diff = result.control.values[:, 0] - ref_controls
    l2_gap = float(np.sqrt(exact_sum(dt * diff * diff)))
    rows = [{"t": float(t), "optimized": float(u), "riccati": float(v)}
            for t, u, v in zip(times, result.control.values[:, 0], ref_controls)]
    return SuiteResult(
        name="lq", passed=(l2_gap <= tol and result.converged),
        summary={"l2_gap": l2_gap, "tol": tol, "converged": result.converged,
                 "iterations": len(result.iterations)},
        rows=rows, columns=("t", "optimized", "riccati"),
    )


def wasserstein2_bruteforce(a: Ensemble, b: Ensemble) -> float:
    """Exhaustive minimum over particle permutations (small N only)."""
    if a.n_particles != b.n_particles:
        raise ValueError("ensemble sizes differ")
    n = a.n_particles
    diffs = a.coeffs[:, None, :] - b.coeffs[None, :, :]
    sq = np.einsum("ijk,ijk->ij", diffs, diffs)
    best = min(exact_sum(sq[np.arange(n), perm])
               for perm in itertools.permutations(range(n)))
    return float(np.sqrt(best / n))


def wasserstein_suite(n_trials=50, max_particles=8, n_modes=4, seed=2,
                      tol=1e-12) -> SuiteResult:
    """Assignment-based distance against brute-force enumeration."""
    from .ensemble import wasserstein2

    rng = np.random.default_rng(seed)
    rows = []
    worst = 0.0
    for trial in range(n_trials):
        n = int(rng.integers(2, max_particles + 1))
        a = Ensemble(rng.standard_normal((n, n_modes)))
        b = Ensemble(rng.standard_normal((n, n_modes)))
        fast = wasserstein2(a, b)
        brute = wasserstein2_bruteforce(a, b)
        gap = abs(fast - brute)
        worst = max(worst, gap)
        rows.append({"trial": trial, "n_particles": n, "assignment": fast,
                     "bruteforce": brute, "abs_gap": gap})
    return SuiteResult(
        name="wasserstein", passed=worst <= tol,
        summary={"worst": worst, "tol": tol},
        rows=rows,
        columns=("trial", "n_particles", "assignment", "bruteforce", "abs_gap"),
    )


def assumptions_suite(sample_count=10_000, seed=4, horizon=0.5) -> SuiteResult:
    """Structural inequality probes for both instances plus the scalar check."""
    rows = []
    passed = True
    for instance, spec in (("cubic_rd", reference_cubic()),
                           ("lq", reference_lq())):
        report = assumption_probe(spec, sample_count=sample_count, seed=seed,
                                  horizon=horizon)
        passed &= report.passed
        for cond in report.conditions:
            rows.append({"instance": instance, "condition": cond.name,
                         "samples": cond.samples,
                         "worst_margin": cond.worst_margin,
                         "violations": cond.violations})
    margins = pointwise_monotonicity_samples(sample_count=sample_count,
                                             seed=seed)
    scalar_ok = bool(np.all(margins <= 1e-9))
    passed &= scalar_ok
    rows.append({"instance": "cubic_rd", "condition": "pointwise_monotonicity",
                 "samples": int(margins.size),
                 "worst_margin": float(-np.max(margins)),
                 "violations": int(np.sum(margins > 1e-9))})
    return SuiteResult(
        name="assumptions", passed=bool(passed),
        summary={"samples": sample_count},
        rows=rows,
        columns=("instance", "condition", "samples", "worst_margin",
                 "violations"),
    )
