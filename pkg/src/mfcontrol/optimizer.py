"""Projected gradient descent over the admissible control set.

The admissible set is the L^q(0, T; U) ball of radius K^{1/q} in the
constraint integral sense.  Feasibility is restored radially: an infeasible
control is scaled back onto the constraint surface, which is exact for this
q-homogeneous constraint, idempotent, and cheap; it is not the metric
projection (no closed form for q > 2).  Shipped configurations keep the
bound slack at the optimum, where the distinction is immaterial.

The noise keys are frozen for the whole descent (sample-average
approximation), so the cost is a smooth deterministic function of the
control, Armijo backtracking is well defined, and the first-order
stationarity residual

    max_k ||alpha_k - restore(alpha - grad)_k|| / (1 + ||alpha_k||)

vanishes exactly at projected-stationary points of the discrete problem.
By convexity of the coefficients in the control, that residual doubles as
the pointwise Hamiltonian-minimality condition of the maximum principle;
:func:`hamiltonian_scan` checks the pointwise minimum directly on sampled
alternatives when asked.
"""

from dataclasses import dataclass, field

import numpy as np

from .adjoint import solve_adjoint
from .ensemble import Ensemble
from .forward import ControlPath, implicit_factor, solve
from .noise import NoisePlan, all_increments
from .objective import GradientPath, cost, gradient
from .util import column_mean, exact_mean, exact_sum

__all__ = [
    "DescentParams",
    "DescentResult",
    "project_admissible",
    "descend",
    "pontryagin_residual",
    "stationarity_residual",
    "variational_inequality",
    "hamiltonian_scan",
]

_MIN_STEP = 1e-14


@dataclass(frozen=True)
class DescentParams:
    max_iters: int = 200
    step0: float = 0.25
    armijo_c: float = 1e-4
    shrink: float = 0.5
    tol: float = 1e-6
    fixed_noise: bool = True  # sample-average approximation

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.step0 <= 0.0:
            raise ValueError("step0 must be positive")
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError("armijo_c must lie in (0, 1)")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink must lie in (0, 1)")
        if self.tol <= 0.0:
            raise ValueError("tol must be positive")


def project_admissible(control: ControlPath, dt) -> ControlPath:
    """Radial feasibility restoration onto the q-constraint set.

    Controls within round-off of the bound count as feasible, which makes
    the restoration exactly idempotent in floating point.
    """
    if control.bound <= 0.0:
        raise ValueError("constraint bound must be positive")
    integral = control.constraint_integral(dt)
    if integral <= control.bound * (1.0 + 1e-12):
        return control
    scale = (control.bound / integral) ** (1.0 / control.q)
    return control.with_values(scale * control.values)


def stationarity_residual(control: ControlPath, grad: GradientPath,
                          dt) -> float:
    """Relative fixed-point gap of the projected-gradient map at unit step."""
    candidate = project_admissible(
        control.with_values(control.values - grad.values), dt)
    diff = control.values - candidate.values
    gaps = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    scales = 1.0 + np.sqrt(np.einsum("ij,ij->i", control.values,
                                     control.values))
    return float(np.max(gaps / scales))


@dataclass
class DescentIteration:
    iteration: int
    cost: float
    step: float
    residual: float
    feasibility_margin: float


@dataclass
class DescentResult:
    control: ControlPath
    history: list          # accepted costs, including the initial one
    iterations: list = field(default_factory=list)  # DescentIteration rows
    converged: bool = False
    line_search_failed: bool = False

    @property
    def final_cost(self) -> float:
        return self.history[-1]


def descend(spec, plan: NoisePlan, x0: Ensemble, alpha0: ControlPath,
            params: DescentParams, workers=None) -> DescentResult:
    """Projected gradient descent with Armijo backtracking.

    Accepts a trial control alpha+ = restore(alpha - eta grad) when
    J(alpha+) <= J(alpha) - c eta ||grad||^2; the recorded history of
    accepted costs is therefore non-increasing by construction.  Noise keys
    stay fixed throughout, so J is deterministic in the control.
    """
    dt = plan.dt
    if not alpha0.is_feasible(dt, slack=1e-12):
        raise ValueError("initial control violates the q-constraint")
    noise = all_increments(plan) if params.fixed_noise else None

    def evaluate(control):
        run = solve(spec, control, plan, x0, workers=workers, noise=noise)
        return run, cost(run)

    current = alpha0
    run, j_current = evaluate(current)
    result = DescentResult(control=current, history=[j_current])
    eta_start = params.step0
    for it in range(params.max_iters):
        adj = solve_adjoint(run)
        grad = gradient(run, adj)
        residual = stationarity_residual(current, grad, dt)
        result.iterations.append(DescentIteration(
            iteration=it, cost=j_current, step=0.0, residual=residual,
            feasibility_margin=current.feasibility_margin(dt)))
        if residual <= params.tol:
            result.converged = True
            break
        g_norm_sq = grad.norm_sq(dt)
        eta = eta_start
        accepted = False
        while eta >= _MIN_STEP:
            trial = project_admissible(
                current.with_values(current.values - eta * grad.values), dt)
            trial_run, j_trial = evaluate(trial)
            # strict decrease guards against accepting bit-identical costs
            # once the objective sits at its round-off floor
            if (j_trial <= j_current - params.armijo_c * eta * g_norm_sq
                    and j_trial < j_current):
                current, run, j_current = trial, trial_run, j_trial
                result.history.append(j_current)
                result.iterations[-1].step = eta
                accepted = True
                break
            eta *= params.shrink
        if not accepted:
            result.line_search_failed = True
            break
        eta_start = min(params.step0, eta / params.shrink)
    result.control = current
    return result


def pontryagin_residual(spec, plan: NoisePlan, x0: Ensemble,
                        control: ControlPath, workers=None) -> float:
    """First-order stationarity residual at a control, fresh SAA gradient."""
    if not control.is_feasible(plan.dt, slack=1e-12):
        raise ValueError("control violates the q-constraint")
    run = solve(spec, control, plan, x0, workers=workers)
    grad = gradient(run, solve_adjoint(run))
    return stationarity_residual(control, grad, plan.dt)


def variational_inequality(spec, plan: NoisePlan, x0: Ensemble,
                           control: ControlPath, n_samples=20, seed=0,
                           workers=None):
    """Sampled check of dJ(alpha) . (beta - alpha) >= -eps ||beta - alpha||.

    Returns the list of normalized directional derivatives
    dJ(alpha).(beta - alpha) / ||beta - alpha|| over random feasible beta;
    at a minimizer these are bounded below by a small negative tolerance.
    """
    run = solve(spec, control, plan, x0, workers=workers)
    grad = gradient(run, solve_adjoint(run))
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(n_samples):
        raw = rng.standard_normal(control.values.shape)
        beta = project_admissible(control.with_values(raw), plan.dt)
        diff = beta.values - control.values
        gap = np.sqrt(exact_sum(plan.dt * np.einsum("ij,ij->i", diff, diff)))
        if gap == 0.0:
            continue
        pairing = exact_sum(plan.dt * np.einsum("ij,ij->i", grad.values, diff))
        out.append(pairing / gap)
    return out


def hamiltonian_scan(bundle, adjoint, node, candidates):
    """Discrete Hamiltonian gap at one time node over alternative controls.

    The discrete per-node Hamiltonian whose control gradient equals the
    descent gradient is

        H_k(a) = (1/N) sum_i [ <F(t, x_i, m, a), w_i> +
                               <B(t, x_i, m, a) dW_i, w_i> / dt +
                               f(t, x_i, m, a) ],

    with w = S p_{k+1}.  Returns H_k(candidate) - H_k(alpha_k) for each
    candidate; nonnegative values witness pointwise minimality.
    """
    spec = bundle.spec
    dt = bundle.plan.dt
    t = node * dt
    x = bundle.states[node]
    dw = bundle.noise[node]
    mean = column_mean(x)
    w = implicit_factor(bundle.n_modes, dt) * adjoint.states[node + 1]

    def value(alpha):
        drift = spec.drift(t, x, mean, alpha)
        diag = np.broadcast_to(
            np.asarray(spec.diffusion_diagonal(t, x, mean, alpha)), x.shape)
        inner = np.einsum("ij,ij->i", drift, w) \
            + np.einsum("ij,ij->i", diag * dw, w) / dt
        return exact_mean(inner + spec.running_cost(t, x, mean, alpha))

    base = value(bundle.control.values[node])
    return [value(np.asarray(c, dtype=float)) - base for c in candidates]
