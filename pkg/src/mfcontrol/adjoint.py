"""Exact discrete adjoint (costate) of the forward recursion.

The backward recursion is the literal transpose of the tangent propagator.
Writing one forward step as  x_{k+1} = S (x_k + dt F + B dW)  with S the
implicit diagonal factor, its linearization is  z_{k+1} = S (I + dt A_k +
N_k) z_k + S b_k(beta), and the costate satisfies

    p_T = terminal cost gradient (per particle, with the law kernel term),
    p_k = (I + dt A_k^T + N_k^T)(S p_{k+1}) + dt (running cost gradient).

The intermediate value  w = S p_{k+1}  is the costate after the transposed
implicit solve; every source and every transposed coefficient acts on w.
This makes the duality identity

    <P_T, Z_T>_ens = sum_k [ <dt F_a(beta_k) + B_a(beta_k) dW_k, S p_{k+1}>_ens
                             - dt <f-state-gradient_k, Z_k>_ens ]

hold to round-off for every direction, which is the discrete form of the
costate/tangent pairing identity and the basis of the gradient formula.

The martingale integrand of the continuous backward equation is never
materialized: its role is played by the noise-sensitivity transposes
(diffusion_dx/dlaw adjoints against the recorded increments), which vanish
for state-free diffusions and are exercised by the linear-quadratic
instance with state- and law-dependent noise.
"""

from dataclasses import dataclass

import numpy as np

from .forward import ControlPath, TrajectoryBundle, implicit_factor
from .tangent import TangentBundle
from .util import column_mean, exact_mean, exact_sum

__all__ = ["AdjointBundle", "solve_adjoint", "duality_residual"]


@dataclass(frozen=True)
class AdjointBundle:
    """Costates per particle and time node; index n_t is the terminal one."""

    states: np.ndarray  # (n_t + 1, N, M)

    @property
    def terminal(self) -> np.ndarray:
        return self.states[-1]


def terminal_costate(bundle: TrajectoryBundle) -> np.ndarray:
    x_T = bundle.states[-1]
    mean_T = column_mean(x_T)
    spec = bundle.spec
    return spec.terminal_cost_dx(x_T, mean_T, bundle.horizon) \
        + spec.terminal_cost_dlaw(x_T, mean_T, bundle.horizon)


def solve_adjoint(bundle: TrajectoryBundle) -> AdjointBundle:
    """Backward sweep producing the exact gradient costate."""
    spec = bundle.spec
    dt = bundle.plan.dt
    factor = implicit_factor(bundle.n_modes, dt)
    p = np.empty_like(bundle.states)
    p[-1] = terminal_costate(bundle)
    for k in range(bundle.n_steps - 1, -1, -1):
        t = k * dt
        x = bundle.states[k]
        dw = bundle.noise[k]
        alpha = bundle.control.values[k]
        mean = column_mean(x)
        w = factor * p[k + 1]
        drift_t = spec.drift_dx_adjoint(t, x, mean, alpha, w) \
            + spec.drift_dlaw_adjoint(t, x, mean, alpha, w)
        noise_t = spec.diffusion_dx_adjoint(t, x, mean, alpha, w, dw) \
            + spec.diffusion_dlaw_adjoint(t, x, mean, alpha, w, dw)
        source = spec.running_cost_dx(t, x, mean, alpha) \
            + spec.running_cost_dlaw(t, x, mean, alpha)
        p[k] = w + dt * drift_t + noise_t + dt * source
        worst = float(np.max(np.abs(p[k])))
        if not np.isfinite(worst) or worst > 1e12:
            raise RuntimeError(
                f"adjoint blow-up at step {k}: max |p| = {worst:.3e}")
    return AdjointBundle(states=p)


def duality_residual(bundle: TrajectoryBundle, tangent: TangentBundle,
                     adjoint: AdjointBundle, direction: ControlPath) -> float:
    """Dimensionless gap in the costate/tangent pairing identity.

    Both sides are assembled independently (terminal pairing on the left;
    control sources and cost-gradient quadrature on the right), so this is
    a genuine machine-precision consistency check of the two solvers.
    """
    spec = bundle.spec
    dt = bundle.plan.dt
    factor = implicit_factor(bundle.n_modes, dt)
    lhs = exact_mean(np.einsum("ij,ij->i", adjoint.terminal, tangent.terminal))
    pieces = []
    for k in range(bundle.n_steps):
        t = k * dt
        x = bundle.states[k]
        dw = bundle.noise[k]
        alpha = bundle.control.values[k]
        beta = direction.values[k]
        mean = column_mean(x)
        w = factor * adjoint.states[k + 1]
        drift_dir = np.broadcast_to(
            np.asarray(spec.drift_dcontrol(t, x, mean, alpha, beta)), x.shape)
        diff_dir = np.broadcast_to(
            np.asarray(spec.diffusion_dcontrol_diag(t, x, mean, alpha, beta)),
            x.shape) * dw
        control_term = exact_mean(
            np.einsum("ij,ij->i", dt * drift_dir + diff_dir, w))
        state_grad = spec.running_cost_dx(t, x, mean, alpha) \
            + spec.running_cost_dlaw(t, x, mean, alpha)
        cost_term = exact_mean(np.einsum("ij,ij->i", state_grad,
                                         tangent.states[k]))
        pieces.append(control_term - dt * cost_term)
    rhs = exact_sum(pieces)
    return abs(lhs - rhs) / (1.0 + max(abs(lhs), abs(rhs)))
