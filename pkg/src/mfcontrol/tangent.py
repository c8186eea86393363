"""Linearized (tangent) dynamics along a frozen forward trajectory.

The tangent recursion is the exact directional derivative of the discrete
forward recursion: same implicit factor, same recorded noise increments,
with the drift, diffusion and mean-field terms replaced by their
linearizations.  This choice (differentiate the scheme, not the equation)
is what lets the discrete adjoint reproduce the Gateaux derivative of the
cost to round-off.
"""

from dataclasses import dataclass

import numpy as np

from .forward import ControlPath, TrajectoryBundle, implicit_factor
from .util import column_mean, exact_mean, exact_sum

__all__ = ["TangentBundle", "solve_tangent", "gateaux_cost"]


@dataclass(frozen=True)
class TangentBundle:
    """Directional state sensitivities Z along one trajectory, Z_0 = 0."""

    states: np.ndarray  # (n_t + 1, N, M)

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]


def solve_tangent(bundle: TrajectoryBundle, direction: ControlPath) -> TangentBundle:
    """Solve the tangent recursion for a control direction (linear, exact)."""
    if direction.n_steps != bundle.n_steps:
        raise ValueError("direction length does not match the trajectory")
    if direction.n_modes != bundle.n_modes:
        raise ValueError("direction mode count does not match the trajectory")
    spec = bundle.spec
    dt = bundle.plan.dt
    factor = implicit_factor(bundle.n_modes, dt)
    z = np.zeros((bundle.n_steps + 1, bundle.n_particles, bundle.n_modes))
    for k in range(bundle.n_steps):
        t = k * dt
        x = bundle.states[k]
        dw = bundle.noise[k]
        alpha = bundle.control.values[k]
        beta = direction.values[k]
        mean = column_mean(x)
        mean_z = column_mean(z[k])
        drift = spec.drift_dx(t, x, mean, alpha, z[k]) \
            + spec.drift_dcontrol(t, x, mean, alpha, beta) \
            + spec.drift_dlaw(t, x, mean, alpha, mean_z)
        diag = spec.diffusion_dx_diag(t, x, mean, alpha, z[k]) \
            + spec.diffusion_dcontrol_diag(t, x, mean, alpha, beta) \
            + spec.diffusion_dlaw_diag(t, x, mean, alpha, mean_z)
        z[k + 1] = factor * (z[k] + dt * drift + diag * dw)
    return TangentBundle(states=z)


def gateaux_cost(bundle: TrajectoryBundle, tangent: TangentBundle,
                 direction: ControlPath) -> float:
    """Chain-rule directional derivative of the cost along the tangent flow.

    Left-endpoint quadrature in time and ensemble averages over particles,
    matching the cost functional's own discretization exactly.
    """
    spec = bundle.spec
    dt = bundle.plan.dt
    pieces = []
    for k in range(bundle.n_steps):
        t = k * dt
        x = bundle.states[k]
        alpha = bundle.control.values[k]
        beta = direction.values[k]
        mean = column_mean(x)
        state_grad = spec.running_cost_dx(t, x, mean, alpha) \
            + spec.running_cost_dlaw(t, x, mean, alpha)
        state_term = exact_mean(np.einsum("ij,ij->i", state_grad,
                                          tangent.states[k]))
        control_grad = np.asarray(spec.running_cost_dcontrol(t, x, mean, alpha))
        pieces.append(dt * (state_term + float(np.dot(control_grad, beta))))
    x_T = bundle.states[-1]
    mean_T = column_mean(x_T)
    terminal_grad = spec.terminal_cost_dx(x_T, mean_T, bundle.horizon) \
        + spec.terminal_cost_dlaw(x_T, mean_T, bundle.horizon)
    pieces.append(exact_mean(np.einsum("ij,ij->i", terminal_grad,
                                       tangent.terminal)))
    return exact_sum(pieces)
