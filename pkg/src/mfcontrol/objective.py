"""Cost evaluation, gradient assembly, Hamiltonian, and gradient checking.

The control gradient comes from the costate through the discrete analogue
of the Hamiltonian representation: at each node the gradient collects the
transposed control sensitivities of drift and diffusion against the
implicitly weighted costate, plus the direct control derivative of the
running cost,

    grad_k = F_a^T(S p_{k+1}) + [B_a(.) dW_k]^T (S p_{k+1}) / dt + f_a,

ensemble-averaged over particles.  Its pairing sum_k dt <grad_k, beta_k>
reproduces the tangent-route Gateaux derivative exactly (round-off), for
every direction; this is the property gradcheck certifies together with a
common-random-number finite-difference route.
"""

from dataclasses import dataclass

import numpy as np

from .adjoint import AdjointBundle, solve_adjoint
from .ensemble import Ensemble
from .forward import ControlPath, TrajectoryBundle, implicit_factor, solve
from .noise import NoisePlan, all_increments
from .spectral import SpectralField, eigenvalues
from .tangent import gateaux_cost, solve_tangent
from .util import column_mean, exact_mean, exact_sum

__all__ = [
    "GradientPath",
    "cost",
    "gradient",
    "hamiltonian",
    "gradcheck",
    "GradcheckReport",
    "random_direction",
]


@dataclass(frozen=True)
class GradientPath:
    """Cost gradient per time node; same shape as the control it varies."""

    values: np.ndarray  # (n_t, M)

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    def pairing(self, direction: ControlPath, dt) -> float:
        """L^2(0, T; U) pairing sum_k dt <grad_k, beta_k>."""
        prods = np.einsum("ij,ij->i", self.values, direction.values)
        return exact_sum(dt * prods)

    def norm_sq(self, dt) -> float:
        return exact_sum(dt * np.einsum("ij,ij->i", self.values, self.values))


def cost(bundle: TrajectoryBundle) -> float:
    """Monte Carlo cost: left-endpoint time quadrature, ensemble average."""
    spec = bundle.spec
    dt = bundle.plan.dt
    pieces = []
    for k in range(bundle.n_steps):
        x = bundle.states[k]
        mean = column_mean(x)
        values = spec.running_cost(k * dt, x, mean, bundle.control.values[k])
        pieces.append(dt * exact_mean(values))
    x_T = bundle.states[-1]
    pieces.append(exact_mean(spec.terminal_cost(x_T, column_mean(x_T),
                                                bundle.horizon)))
    total = exact_sum(pieces)
    if not np.isfinite(total):
        raise ValueError("cost evaluated to a non-finite value")
    return total


def gradient(bundle: TrajectoryBundle, adjoint: AdjointBundle) -> GradientPath:
    """Assemble the control gradient from a solved costate."""
    if adjoint.states.shape != bundle.states.shape:
        raise ValueError("costate record does not match the trajectory")
    spec = bundle.spec
    dt = bundle.plan.dt
    factor = implicit_factor(bundle.n_modes, dt)
    out = np.empty_like(bundle.control.values)
    for k in range(bundle.n_steps):
        t = k * dt
        x = bundle.states[k]
        mean = column_mean(x)
        alpha = bundle.control.values[k]
        w = factor * adjoint.states[k + 1]
        g = np.asarray(spec.drift_dcontrol_adjoint(t, x, mean, alpha, w),
                       dtype=float)
        g = g + np.asarray(
            spec.diffusion_dcontrol_adjoint(t, x, mean, alpha, w,
                                            bundle.noise[k])) / dt
        g = g + np.asarray(spec.running_cost_dcontrol(t, x, mean, alpha))
        out[k] = g
    return GradientPath(values=out)


def hamiltonian(spec, t, x: SpectralField, ens: Ensemble,
                alpha: SpectralField, p: SpectralField, q_diag=None) -> float:
    """H(t, x, law, alpha, p, q) = <Lx + F, p> + <B, q>_HS + f.

    ``q_diag`` is the diagonal of the Hilbert-Schmidt direction (both
    shipped instances have diagonal diffusions); omitted means zero.  The
    result is affine in (p, q_diag).
    """
    mean = column_mean(ens.coeffs)
    xr = x.coeffs[None, :]
    lx = eigenvalues(x.n_modes) * x.coeffs
    drift = spec.drift(t, xr, mean, alpha.coeffs)[0]
    value = float(np.dot(lx + drift, p.coeffs))
    if q_diag is not None:
        diag = np.broadcast_to(
            np.asarray(spec.diffusion_diagonal(t, xr, mean, alpha.coeffs)),
            (1, x.n_modes))[0]
        value += float(np.dot(diag, np.asarray(q_diag, dtype=float)))
    value += float(spec.running_cost(t, xr, mean, alpha.coeffs)[0])
    return value


def random_direction(n_steps, n_modes, q, bound, seed,
                     scale=1.0) -> ControlPath:
    """Reproducible Gaussian control direction with decaying mode weights."""
    rng = np.random.default_rng(seed)
    weights = 1.0 / np.arange(1, n_modes + 1, dtype=float)
    vals = scale * rng.standard_normal((n_steps, n_modes)) * weights
    return ControlPath(vals, q, bound)


@dataclass(frozen=True)
class GradcheckRow:
    direction: int
    adjoint_route: float
    tangent_route: float
    central_difference: float

    @property
    def rel_err_adjoint_tangent(self) -> float:
        return abs(self.adjoint_route - self.tangent_route) / (
            1.0 + abs(self.tangent_route))

    @property
    def rel_err_adjoint_fd(self) -> float:
        return abs(self.adjoint_route - self.central_difference) / (
            1.0 + abs(self.central_difference))


@dataclass(frozen=True)
class GradcheckReport:
    rows: list
    eps: float
    tol_adjoint_tangent: float
    tol_adjoint_fd: float

    @property
    def worst_adjoint_tangent(self) -> float:
        return max(r.rel_err_adjoint_tangent for r in self.rows)

    @property
    def worst_adjoint_fd(self) -> float:
        return max(r.rel_err_adjoint_fd for r in self.rows)

    @property
    def passed(self) -> bool:
        return (self.worst_adjoint_tangent <= self.tol_adjoint_tangent
                and self.worst_adjoint_fd <= self.tol_adjoint_fd)


def gradcheck(spec, plan: NoisePlan, x0: Ensemble, control: ControlPath,
              n_dirs=5, eps=1e-5, direction_seed=0,
              tol_adjoint_tangent=1e-10, tol_adjoint_fd=1e-4,
              workers=None) -> GradcheckReport:
    """Three-route directional derivative comparison with common noise.

    Routes per direction: the adjoint gradient pairing, the tangent-solver
    Gateaux value, and the central difference (J(a+eps b) - J(a-eps b)) /
    (2 eps) with identical noise keys on all evaluations.
    """
    if eps <= 0.0:
        raise ValueError("finite-difference step must be positive")
    noise = all_increments(plan)
    base = solve(spec, control, plan, x0, workers=workers, noise=noise)
    adj = solve_adjoint(base)
    grad = gradient(base, adj)
    rows = []
    for d in range(n_dirs):
        beta = random_direction(plan.n_steps, plan.n_modes, control.q,
                                control.bound, seed=direction_seed + d)
        adjoint_route = grad.pairing(beta, plan.dt)
        tangent_route = gateaux_cost(base, solve_tangent(base, beta), beta)
        up = control.with_values(control.values + eps * beta.values)
        down = control.with_values(control.values - eps * beta.values)
        j_up = cost(solve(spec, up, plan, x0, workers=workers, noise=noise))
        j_down = cost(solve(spec, down, plan, x0, workers=workers, noise=noise))
        fd = (j_up - j_down) / (2.0 * eps)
        rows.append(GradcheckRow(d, adjoint_route, tangent_route, fd))
    return GradcheckReport(rows=rows, eps=eps,
                           tol_adjoint_tangent=tol_adjoint_tangent,
                           tol_adjoint_fd=tol_adjoint_fd)
