"""Interacting-particle solver for the controlled state dynamics.

Time stepping is semi-implicit Euler-Maruyama on the sine basis: the stiff
Laplacian is treated implicitly (exactly, since it is diagonal here) and the
reaction, mean-field and noise terms explicitly,

    c_{k+1} = (c_k + dt F(t_k, x_k, law_k, alpha_k) + B dW_k) / (1 + dt (m pi)^2).

All particles in one step see the same empirical law (synchronous
coupling); the law statistics are computed once per step with
order-independent reductions, after which particles advance on disjoint
slices, optionally on several threads.  Output is bit-identical for any
worker count.

Controls are piecewise constant on [t_k, t_{k+1}) (left endpoint), matching
the quadrature used by the cost and the discrete adjoint.
"""

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .ensemble import Ensemble, moment_q
from .noise import NoisePlan, all_increments
from .spectral import SpectralField, eigenvalues
from .util import column_mean, exact_mean, exact_sum

__all__ = [
    "ControlPath",
    "TrajectoryBundle",
    "BlowUpError",
    "step",
    "solve",
    "moment_report",
    "lipschitz_probe",
    "LipschitzReport",
    "implicit_factor",
    "worker_count",
]

BLOWUP_THRESHOLD = 1e12

_WORKER_ENV = "MFCONTROL_WORKERS"


def worker_count(workers=None) -> int:
    """Resolve the worker count (argument beats MFCONTROL_WORKERS beats 1)."""
    if workers is None:
        workers = os.environ.get(_WORKER_ENV, "1")
    workers = int(workers)
    if workers < 1:
        raise ValueError("worker count must be positive")
    return workers


class BlowUpError(RuntimeError):
    """The state norm crossed the blow-up threshold."""

    def __init__(self, step_index, worst_norm):
        self.step_index = step_index
        self.worst_norm = worst_norm
        super().__init__(
            f"state blow-up at step {step_index}: max H norm {worst_norm:.3e} "
            f"exceeds {BLOWUP_THRESHOLD:.0e}"
        )


@dataclass(frozen=True)
class ControlPath:
    """Deterministic control: one field per time node, plus constraint data.

    The admissibility constraint is sum_k dt ||alpha_k||^q <= bound; it is
    measured by :meth:`constraint_integral` against the step size of the
    plan the control is used with.
    """

    values: np.ndarray  # (n_t, M)
    q: float
    bound: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2:
            raise ValueError("control values must be (n_steps, n_modes)")
        if not np.all(np.isfinite(v)):
            raise ValueError("control contains non-finite entries")
        v = v.copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.q < 1.0:
            raise ValueError("control exponent must satisfy q >= 1")
        if self.bound <= 0.0:
            raise ValueError("constraint bound must be positive")

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    @property
    def n_modes(self) -> int:
        return self.values.shape[1]

    @classmethod
    def zero(cls, n_steps, n_modes, q, bound) -> "ControlPath":
        return cls(np.zeros((n_steps, n_modes)), q, bound)

    @classmethod
    def from_profile(cls, profile, times, n_modes, q, bound) -> "ControlPath":
        """Sample a callable t -> coefficients at the left time nodes."""
        vals = np.stack([np.asarray(profile(t), dtype=float) for t in times])
        if vals.shape[1] != n_modes:
            raise ValueError("profile returns the wrong number of modes")
        return cls(vals, q, bound)

    def constraint_integral(self, dt) -> float:
        norms = np.sqrt(np.einsum("ij,ij->i", self.values, self.values))
        return exact_sum(dt * norms**self.q)

    def feasibility_margin(self, dt) -> float:
        return self.bound - self.constraint_integral(dt)

    def is_feasible(self, dt, slack=0.0) -> bool:
        return self.constraint_integral(dt) <= self.bound + slack

    def with_values(self, values) -> "ControlPath":
        return ControlPath(values, self.q, self.bound)

    def l2_norm(self, dt) -> float:
        return float(np.sqrt(exact_sum(dt * np.einsum("ij,ij->i", self.values,
                                                      self.values))))


@dataclass(frozen=True)
class TrajectoryBundle:
    """Full forward record needed by the tangent and adjoint solvers."""

    states: np.ndarray        # (n_t + 1, N, M)
    noise: np.ndarray         # (n_t, N, M)
    control: ControlPath
    plan: NoisePlan
    spec: object = field(repr=False)

    @property
    def n_steps(self) -> int:
        return self.noise.shape[0]

    @property
    def n_particles(self) -> int:
        return self.states.shape[1]

    @property
    def n_modes(self) -> int:
        return self.states.shape[2]

    @property
    def horizon(self) -> float:
        return self.plan.horizon

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.plan.dt

    def ensemble(self, k) -> Ensemble:
        return Ensemble(self.states[k])


def implicit_factor(n_modes, dt) -> np.ndarray:
    """Diagonal of (I - dt L)^{-1}; shared by forward, tangent and adjoint."""
    return 1.0 / (1.0 - dt * eigenvalues(n_modes))


def _slices(n, workers):
    workers = min(workers, n)
    bounds = np.linspace(0, n, workers + 1).astype(int)
    return [(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]


def _advance(spec, t, states, alpha, dw, dt, factor, workers):
    """One semi-implicit step of the full ensemble (array-level core)."""
    mean = column_mean(states)

    def advance_slice(sl):
        a, b = sl
        x = states[a:b]
        rhs = x + dt * spec.drift(t, x, mean, alpha) \
            + spec.diffusion_increment(t, x, mean, alpha, dw[a:b])
        return factor * rhs

    slices = _slices(states.shape[0], workers)
    if len(slices) == 1:
        return advance_slice(slices[0])
    out = np.empty_like(states)
    with ThreadPoolExecutor(max_workers=len(slices)) as pool:
        for sl, block in zip(slices, pool.map(advance_slice, slices)):
            out[sl[0]:sl[1]] = block
    return out


def step(spec, t, ens: Ensemble, alpha: SpectralField, dw, dt,
         workers=None) -> Ensemble:
    """Advance one ensemble by a single step (synchronous coupling)."""
    dw = np.asarray(dw, dtype=float)
    if dw.shape != ens.coeffs.shape:
        raise ValueError("noise increment shape does not match the ensemble")
    if alpha.n_modes != ens.n_modes:
        raise ValueError("control mode count does not match the ensemble")
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    factor = implicit_factor(ens.n_modes, dt)
    out = _advance(spec, t, ens.coeffs, alpha.coeffs, dw, dt, factor,
                   worker_count(workers))
    if not np.all(np.isfinite(out)):
        raise BlowUpError(0, float("inf"))
    return Ensemble(out)


def solve(spec, control: ControlPath, plan: NoisePlan, x0: Ensemble,
          workers=None, noise=None) -> TrajectoryBundle:
    """Run the particle system over the whole horizon and record everything.

    ``noise`` may carry precomputed increments (n_t, N, M) so that repeated
    solves under the same plan (line searches, gradient checks) skip the
    generator; when omitted the increments come from the plan's keys.
    """
    if control.n_steps != plan.n_steps:
        raise ValueError("control length does not match the plan")
    if x0.n_particles != plan.n_particles or x0.n_modes != plan.n_modes:
        raise ValueError("initial ensemble does not match the plan")
    workers = worker_count(workers)
    if noise is None:
        noise = all_increments(plan)
    else:
        noise = np.asarray(noise, dtype=float)
        if noise.shape != (plan.n_steps, plan.n_particles, plan.n_modes):
            raise ValueError("precomputed noise has the wrong shape")
    dt = plan.dt
    factor = implicit_factor(plan.n_modes, dt)
    states = np.empty((plan.n_steps + 1, plan.n_particles, plan.n_modes))
    states[0] = x0.coeffs
    for k in range(plan.n_steps):
        states[k + 1] = _advance(spec, k * dt, states[k], control.values[k],
                                 noise[k], dt, factor, workers)
        worst = float(np.sqrt(np.max(np.einsum("ij,ij->i", states[k + 1],
                                               states[k + 1]))))
        if not np.isfinite(worst) or worst > BLOWUP_THRESHOLD:
            raise BlowUpError(k, worst)
    return TrajectoryBundle(states=states, noise=noise, control=control,
                            plan=plan, spec=spec)


def moment_report(bundle: TrajectoryBundle, q: float):
    """(sup-in-time q-moment, V-energy^{q/2}) of a completed run."""
    sup_moment = max(moment_q(bundle.ensemble(k), q)
                     for k in range(bundle.n_steps + 1))
    k_idx = np.arange(1, bundle.n_modes + 1, dtype=float)
    v_weights = 1.0 + (k_idx * np.pi) ** 2
    per_step = [
        bundle.plan.dt * exact_mean(
            np.einsum("ij,j,ij->i", bundle.states[k], v_weights, bundle.states[k]))
        for k in range(bundle.n_steps)
    ]
    v_energy = exact_sum(per_step) ** (q / 2.0)
    return sup_moment, v_energy


@dataclass(frozen=True)
class LipschitzReport:
    ratio: float
    state_gap: float
    control_gap: float
    controls_identical: bool


def lipschitz_probe(spec, plan: NoisePlan, x0: Ensemble, alpha: ControlPath,
                    beta: ControlPath, workers=None) -> LipschitzReport:
    """Empirical control-to-state Lipschitz quotient under common noise.

    ratio = max_k (1/N) sum_i ||x_i^alpha - x_i^beta||_H^2
            / sum_k dt ||alpha_k - beta_k||_U^2
    """
    noise = all_increments(plan)
    run_a = solve(spec, alpha, plan, x0, workers=workers, noise=noise)
    run_b = solve(spec, beta, plan, x0, workers=workers, noise=noise)
    diff = run_a.states - run_b.states
    state_gap = max(
        exact_mean(np.einsum("ij,ij->i", diff[k], diff[k]))
        for k in range(plan.n_steps + 1)
    )
    dv = alpha.values - beta.values
    control_gap = exact_sum(plan.dt * np.einsum("ij,ij->i", dv, dv))
    if control_gap == 0.0:
        return LipschitzReport(0.0, state_gap, 0.0, True)
    return LipschitzReport(state_gap / control_gap, state_gap, control_gap, False)
