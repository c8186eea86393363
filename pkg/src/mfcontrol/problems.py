"""Coefficient bundles for the controlled mean-field dynamics.

A problem instance packages the drift F(t, x, law, control), the diffusion
B (diagonal on the sine basis for both shipped instances), the running cost
f and the terminal cost g, together with every directional derivative and
every transpose the tangent and adjoint solvers need.  Two instances ship:

* :class:`LinearQuadratic` -- all coefficients diagonal time tables, law
  dependence through the ensemble mean, quadratic costs with mean-deviation
  terms.
* :class:`CubicReactionDiffusion` -- Nemytskii drift ``-x^3`` evaluated by
  sine collocation, mean-field coupling ``kappa * mean``, a bounded spatial
  multiplier in front of the control, constant diagonal noise, and quadratic
  tracking costs.

Law (measure) derivatives are realized as empirical kernels averaged over
the particle ensemble.  For both instances the kernels are constant linear
maps (the law enters only through the ensemble mean), so the averaged
tangent and adjoint contributions are shared by all particles; the solver
contracts rely on this and compute them once per step.

Transposedness is the load-bearing property: for every directional
derivative ``D`` exposed here, the matching ``*_adjoint`` method is the
exact transpose of ``D`` under the coefficient dot product.  The discrete
duality of the tangent/adjoint solver pair reduces to this.
"""

from dataclasses import dataclass

import numpy as np

from .ensemble import Ensemble
from .spectral import (
    SpectralField,
    collocation_grid,
    collocation_values,
    field_from_collocation,
)
from .util import column_mean, exact_mean

__all__ = [
    "ProblemSpec",
    "LinearQuadratic",
    "CubicReactionDiffusion",
    "CoefficientDerivatives",
    "eval_coefficients",
    "eval_derivatives",
    "lions_apply",
]


def _as_table(value, n_modes, name):
    """Normalize scalar / vector / callable coefficient tables to callables.

    Returns (table, is_zero) where is_zero is only ever True for constants.
    """
    if value is None:
        value = 0.0
    if callable(value):
        return value, False
    arr = np.asarray(value, dtype=float)
    if arr.ndim == 0:
        arr = np.full(n_modes, float(arr))
    if arr.shape != (n_modes,):
        raise ValueError(f"{name}: expected a scalar or {n_modes} diagonal entries")
    frozen = arr.copy()
    return (lambda t, _a=frozen: _a), bool(np.all(frozen == 0.0))


def _as_field_path(value, n_modes, name):
    """Reference profiles: None, constant coefficients, or a callable of t."""
    if value is None:
        value = np.zeros(n_modes)
    if callable(value):
        return value
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.shape != (n_modes,):
        padded = np.zeros(n_modes)
        padded[: min(arr.size, n_modes)] = arr[:n_modes]
        arr = padded
    frozen = arr.copy()
    return lambda t, _a=frozen: _a


class ProblemSpec:
    """Common surface of a coefficient bundle.

    Vectorization convention: ``x``, ``z``, ``w`` may be (M,) or (N, M) with
    rows as particles; ``mean``, ``alpha``, ``beta`` are single (M,) arrays.
    Law-derivative methods return a single (M,) field shared by every
    particle (the shipped kernels are constant), or scalar 0.0 where the
    term vanishes identically.  ``horizon`` is the final time T, needed by
    terminal costs whose reference is read off a running profile.
    """

    q: float
    growth_exponent: float
    bound: float

    # -- values ---------------------------------------------------------
    def drift(self, t, x, mean, alpha):
        raise NotImplementedError

    def diffusion_diagonal(self, t, x, mean, alpha):
        raise NotImplementedError

    def diffusion_increment(self, t, x, mean, alpha, dw):
        return self.diffusion_diagonal(t, x, mean, alpha) * dw

    def running_cost(self, t, x, mean, alpha):
        raise NotImplementedError

    def terminal_cost(self, x, mean, horizon):
        raise NotImplementedError

    # -- tangent directions ----------------------------------------------
    def drift_dx(self, t, x, mean, alpha, z):
        raise NotImplementedError

    def drift_dcontrol(self, t, x, mean, alpha, beta):
        raise NotImplementedError

    def drift_dlaw(self, t, x, mean, alpha, mean_z):
        raise NotImplementedError

    def diffusion_dx_diag(self, t, x, mean, alpha, z):
        raise NotImplementedError

    def diffusion_dcontrol_diag(self, t, x, mean, alpha, beta):
        raise NotImplementedError

    def diffusion_dlaw_diag(self, t, x, mean, alpha, mean_z):
        raise NotImplementedError

    # -- transposes -------------------------------------------------------
    def drift_dx_adjoint(self, t, x, mean, alpha, w):
        raise NotImplementedError

    def drift_dlaw_adjoint(self, t, x, mean, alpha, w):
        """(1/N) sum_j of the law-kernel transpose applied to w_j."""
        raise NotImplementedError

    def drift_dcontrol_adjoint(self, t, x, mean, alpha, w):
        """Ensemble average of F_alpha(theta_i)^T w_i, a single (M,) field."""
        raise NotImplementedError

    def diffusion_dx_adjoint(self, t, x, mean, alpha, w, dw):
        raise NotImplementedError

    def diffusion_dlaw_adjoint(self, t, x, mean, alpha, w, dw):
        raise NotImplementedError

    def diffusion_dcontrol_adjoint(self, t, x, mean, alpha, w, dw):
        raise NotImplementedError

    # -- cost derivatives ---------------------------------------------------
    def running_cost_dx(self, t, x, mean, alpha):
        raise NotImplementedError

    def running_cost_dlaw_kernel(self, t, x, mean, alpha):
        """Law kernel of f at base state x (y-independent field)."""
        raise NotImplementedError

    def running_cost_dlaw(self, t, x, mean, alpha):
        """Ensemble average of the law kernel over base particles."""
        raise NotImplementedError

    def running_cost_dcontrol(self, t, x, mean, alpha):
        raise NotImplementedError

    def terminal_cost_dx(self, x, mean, horizon):
        raise NotImplementedError

    def terminal_cost_dlaw_kernel(self, x, mean, horizon):
        raise NotImplementedError

    def terminal_cost_dlaw(self, x, mean, horizon):
        raise NotImplementedError

    # -- structure flags / probe constants ---------------------------------
    @property
    def diffusion_state_free(self) -> bool:
        """True when the diffusion ignores the state and the law."""
        raise NotImplementedError

    def coercivity_constants(self, horizon=1.0):
        """(A1, delta) valid for the coercivity and monotonicity probes."""
        raise NotImplementedError

    def diffusion_lipschitz_constant(self, horizon=1.0) -> float:
        raise NotImplementedError


class LinearQuadratic(ProblemSpec):
    """Linear dynamics and quadratic costs, all operators diagonal.

    Drift ``F1 x + F2 mean + F3 alpha``; the diffusion maps an increment w
    to ``diag(B1 x + B2 mean + B3 alpha) w``.  Running cost
    ``<x, f1 x> + <x - h1 mean, f2 (x - h1 mean)> + <alpha, f3 alpha>`` and
    a terminal cost of the same shape with (g1, g2, h2).  Tables may be
    scalars, per-mode vectors, or callables of time; f1, f2, f3, g1, g2
    must be nonnegative.
    """

    growth_exponent = 0.0

    def __init__(self, n_modes, *, F1=0.0, F2=0.0, F3=1.0, B1=0.0, B2=0.0,
                 B3=0.0, f1=0.0, f2=0.0, f3=1.0, h1=0.0, h2=0.0, g1=0.0,
                 g2=0.0, q=3.0, bound=50.0):
        if q <= 2.0:
            raise ValueError("linear-quadratic case needs control exponent q > 2")
        self.n_modes = n_modes
        self.q = float(q)
        self.bound = float(bound)
        self._f1, _ = _as_table(F1, n_modes, "F1")
        self._f2, _ = _as_table(F2, n_modes, "F2")
        self._f3, _ = _as_table(F3, n_modes, "F3")
        self._b1, b1_zero = _as_table(B1, n_modes, "B1")
        self._b2, b2_zero = _as_table(B2, n_modes, "B2")
        self._b3, _ = _as_table(B3, n_modes, "B3")
        for name, value in (("f1", f1), ("f2", f2), ("f3", f3),
                            ("g1", g1), ("g2", g2)):
            if not callable(value) and np.any(np.asarray(value, dtype=float) < 0.0):
                raise ValueError(f"{name} must be nonnegative")
        self._q1, _ = _as_table(f1, n_modes, "f1")
        self._q2, _ = _as_table(f2, n_modes, "f2")
        self._q3, _ = _as_table(f3, n_modes, "f3")
        self._h1, _ = _as_table(h1, n_modes, "h1")
        self._h2, _ = _as_table(h2, n_modes, "h2")
        self._g1, _ = _as_table(g1, n_modes, "g1")
        self._g2, _ = _as_table(g2, n_modes, "g2")
        self._diffusion_state_free = b1_zero and b2_zero

    # values
    def drift(self, t, x, mean, alpha):
        return self._f1(t) * x + self._f2(t) * mean + self._f3(t) * alpha

    def diffusion_diagonal(self, t, x, mean, alpha):
        return self._b1(t) * x + self._b2(t) * mean + self._b3(t) * alpha

    def running_cost(self, t, x, mean, alpha):
        x = np.atleast_2d(x)
        dev = x - self._h1(t) * mean
        quad = x * (self._q1(t) * x) + dev * (self._q2(t) * dev)
        return quad.sum(axis=-1) + float(np.dot(alpha, self._q3(t) * alpha))

    def terminal_cost(self, x, mean, horizon):
        x = np.atleast_2d(x)
        dev = x - self._h2(horizon) * mean
        return (x * (self._g1(horizon) * x) + dev * (self._g2(horizon) * dev)).sum(axis=-1)

    # tangent
    def drift_dx(self, t, x, mean, alpha, z):
        return self._f1(t) * z

    def drift_dcontrol(self, t, x, mean, alpha, beta):
        return self._f3(t) * beta

    def drift_dlaw(self, t, x, mean, alpha, mean_z):
        return self._f2(t) * mean_z

    def diffusion_dx_diag(self, t, x, mean, alpha, z):
        return self._b1(t) * z

    def diffusion_dcontrol_diag(self, t, x, mean, alpha, beta):
        return self._b3(t) * beta

    def diffusion_dlaw_diag(self, t, x, mean, alpha, mean_z):
        return self._b2(t) * mean_z

    # transposes (diagonal tables are symmetric, so dx transposes reuse dx)
    def drift_dx_adjoint(self, t, x, mean, alpha, w):
        return self._f1(t) * w

    def drift_dlaw_adjoint(self, t, x, mean, alpha, w):
        return self._f2(t) * column_mean(np.atleast_2d(w))

    def drift_dcontrol_adjoint(self, t, x, mean, alpha, w):
        return self._f3(t) * column_mean(np.atleast_2d(w))

    def diffusion_dx_adjoint(self, t, x, mean, alpha, w, dw):
        if self._diffusion_state_free:
            return 0.0
        return self._b1(t) * dw * w

    def diffusion_dlaw_adjoint(self, t, x, mean, alpha, w, dw):
        if self._diffusion_state_free:
            return 0.0
        return self._b2(t) * column_mean(np.atleast_2d(dw * w))

    def diffusion_dcontrol_adjoint(self, t, x, mean, alpha, w, dw):
        return self._b3(t) * column_mean(np.atleast_2d(dw * w))

    # cost derivatives
    def running_cost_dx(self, t, x, mean, alpha):
        x = np.atleast_2d(x)
        return 2.0 * self._q1(t) * x + 2.0 * self._q2(t) * (x - self._h1(t) * mean)

    def running_cost_dlaw_kernel(self, t, x, mean, alpha):
        h1 = self._h1(t)
        return -2.0 * h1 * self._q2(t) * (np.atleast_2d(x) - h1 * mean)

    def running_cost_dlaw(self, t, x, mean, alpha):
        h1 = self._h1(t)
        return -2.0 * h1 * self._q2(t) * (mean - h1 * mean)

    def running_cost_dcontrol(self, t, x, mean, alpha):
        return 2.0 * self._q3(t) * alpha

    def terminal_cost_dx(self, x, mean, horizon):
        x = np.atleast_2d(x)
        return 2.0 * self._g1(horizon) * x \
            + 2.0 * self._g2(horizon) * (x - self._h2(horizon) * mean)

    def terminal_cost_dlaw_kernel(self, x, mean, horizon):
        h2 = self._h2(horizon)
        return -2.0 * h2 * self._g2(horizon) * (np.atleast_2d(x) - h2 * mean)

    def terminal_cost_dlaw(self, x, mean, horizon):
        h2 = self._h2(horizon)
        return -2.0 * h2 * self._g2(horizon) * (mean - h2 * mean)

    @property
    def diffusion_state_free(self):
        return self._diffusion_state_free

    def _table_sup(self, table, horizon, samples=33):
        ts = np.linspace(0.0, horizon, samples)
        return max(float(np.max(np.abs(table(t)))) for t in ts)

    def coercivity_constants(self, horizon=1.0):
        a1 = 2.0 + 2.0 * self._table_sup(self._f1, horizon) \
            + self._table_sup(self._f2, horizon) + self._table_sup(self._f3, horizon)
        return a1, 2.0

    def diffusion_lipschitz_constant(self, horizon=1.0):
        sups = [self._table_sup(tab, horizon) for tab in (self._b1, self._b2, self._b3)]
        return 3.0 * max(s * s for s in sups) if any(sups) else 0.0


class CubicReactionDiffusion(ProblemSpec):
    """Cubic reaction drift with mean-field coupling and tracking costs.

    Drift: Galerkin coefficients of ``-x^3`` (sine collocation on 2M+1
    nodes, cube pointwise, transform back; products of up to three M-mode
    factors alias only outside the kept band, so the projection is exact)
    plus ``kappa * mean`` plus the control multiplied pointwise by a bounded
    spatial profile b(t, xi).  Diffusion: constant diagonal ``sigma_k``
    (default ``sigma / k``, square-summable).  Costs track running and
    terminal reference profiles in the H norm.

    The reaction exponent is 3; in one space dimension admissible control
    exponents must satisfy q > 6 (growth exponent p = 4, q > p + 2).
    """

    growth_exponent = 4.0
    reaction_exponent = 3

    def __init__(self, n_modes, *, kappa=0.5, sigma=0.3, multiplier=1.0,
                 u_ref=None, alpha_ref=None, u_ref_terminal=None, q=7.0,
                 bound=50.0, sigma_coeffs=None):
        if q <= 6.0:
            raise ValueError(
                "cubic reaction in one dimension requires q > 6 "
                "(growth exponent p = 4 and the constraint q > p + 2)"
            )
        self.n_modes = n_modes
        self.q = float(q)
        self.bound = float(bound)
        self.kappa = float(kappa)
        self.grid = collocation_grid(n_modes)
        if sigma_coeffs is not None:
            self.sigma_coeffs = np.asarray(sigma_coeffs, dtype=float).copy()
            if self.sigma_coeffs.shape != (n_modes,):
                raise ValueError("sigma_coeffs must have one entry per mode")
        else:
            self.sigma_coeffs = sigma / np.arange(1, n_modes + 1, dtype=float)
        self._multiplier = self._normalize_multiplier(multiplier)
        self._u_ref = _as_field_path(u_ref, n_modes, "u_ref")
        self._alpha_ref = _as_field_path(alpha_ref, n_modes, "alpha_ref")
        if u_ref_terminal is None:
            self._u_ref_terminal = None  # falls back to u_ref at the horizon
        else:
            self._u_ref_terminal = _as_field_path(
                u_ref_terminal, n_modes, "u_ref_terminal")(0.0)

    def _normalize_multiplier(self, multiplier):
        if multiplier is None:
            return None
        if callable(multiplier):
            return lambda t, _m=multiplier: np.asarray(_m(t, self.grid), dtype=float)
        value = float(multiplier)
        if value == 0.0:
            return None
        const = np.full(self.grid.shape, value)
        return lambda t, _c=const: _c

    def u_ref(self, t):
        return self._u_ref(t)

    def alpha_ref(self, t):
        return self._alpha_ref(t)

    def u_ref_terminal(self, horizon):
        if self._u_ref_terminal is not None:
            return self._u_ref_terminal
        return self._u_ref(horizon)

    # pointwise machinery; multiplication operators realized through the
    # collocation pair (evaluate, project) are exactly self-adjoint, so the
    # dx transposes below reuse the tangent routines
    def _cube(self, x):
        vals = collocation_values(x)
        return field_from_collocation(-(vals**3), self.n_modes)

    def _cube_dx(self, x, z):
        vals = collocation_values(x)
        return field_from_collocation(
            -3.0 * vals * vals * collocation_values(z), self.n_modes)

    def _apply_multiplier(self, t, z):
        if self._multiplier is None:
            return np.zeros(self.n_modes) if np.ndim(z) == 1 else np.zeros_like(z)
        return field_from_collocation(
            self._multiplier(t) * collocation_values(z), self.n_modes)

    # values
    def drift(self, t, x, mean, alpha):
        return self._cube(x) + self.kappa * mean + self._apply_multiplier(t, alpha)

    def diffusion_diagonal(self, t, x, mean, alpha):
        return self.sigma_coeffs

    def running_cost(self, t, x, mean, alpha):
        dx = np.atleast_2d(x) - self._u_ref(t)
        da = alpha - self._alpha_ref(t)
        return (dx * dx).sum(axis=-1) + float(np.dot(da, da))

    def terminal_cost(self, x, mean, horizon):
        dx = np.atleast_2d(x) - self.u_ref_terminal(horizon)
        return (dx * dx).sum(axis=-1)

    # tangent
    def drift_dx(self, t, x, mean, alpha, z):
        return self._cube_dx(x, z)

    def drift_dcontrol(self, t, x, mean, alpha, beta):
        return self._apply_multiplier(t, beta)

    def drift_dlaw(self, t, x, mean, alpha, mean_z):
        return self.kappa * mean_z

    def diffusion_dx_diag(self, t, x, mean, alpha, z):
        return 0.0

    def diffusion_dcontrol_diag(self, t, x, mean, alpha, beta):
        return 0.0

    def diffusion_dlaw_diag(self, t, x, mean, alpha, mean_z):
        return 0.0

    # transposes
    def drift_dx_adjoint(self, t, x, mean, alpha, w):
        return self._cube_dx(x, w)

    def drift_dlaw_adjoint(self, t, x, mean, alpha, w):
        return self.kappa * column_mean(np.atleast_2d(w))

    def drift_dcontrol_adjoint(self, t, x, mean, alpha, w):
        return self._apply_multiplier(t, column_mean(np.atleast_2d(w)))

    def diffusion_dx_adjoint(self, t, x, mean, alpha, w, dw):
        return 0.0

    def diffusion_dlaw_adjoint(self, t, x, mean, alpha, w, dw):
        return 0.0

    def diffusion_dcontrol_adjoint(self, t, x, mean, alpha, w, dw):
        return 0.0

    # cost derivatives
    def running_cost_dx(self, t, x, mean, alpha):
        return 2.0 * (np.atleast_2d(x) - self._u_ref(t))

    def running_cost_dlaw_kernel(self, t, x, mean, alpha):
        return 0.0

    def running_cost_dlaw(self, t, x, mean, alpha):
        return 0.0

    def running_cost_dcontrol(self, t, x, mean, alpha):
        return 2.0 * (alpha - self._alpha_ref(t))

    def terminal_cost_dx(self, x, mean, horizon):
        return 2.0 * (np.atleast_2d(x) - self.u_ref_terminal(horizon))

    def terminal_cost_dlaw_kernel(self, x, mean, horizon):
        return 0.0

    def terminal_cost_dlaw(self, x, mean, horizon):
        return 0.0

    @property
    def diffusion_state_free(self):
        return True

    def multiplier_sup(self, horizon=1.0, samples=33):
        if self._multiplier is None:
            return 0.0
        ts = np.linspace(0.0, horizon, samples)
        return max(float(np.max(np.abs(self._multiplier(t)))) for t in ts)

    def coercivity_constants(self, horizon=1.0):
        return 2.0 + abs(self.kappa) + self.multiplier_sup(horizon), 2.0

    def diffusion_lipschitz_constant(self, horizon=1.0):
        return 0.0


@dataclass(frozen=True)
class CoefficientDerivatives:
    """One-shot directional derivative evaluation at a single state."""

    drift_dx: SpectralField
    drift_dcontrol: SpectralField
    diffusion_dx_diag: np.ndarray
    diffusion_dcontrol_diag: np.ndarray
    running_dx: SpectralField
    running_dcontrol: SpectralField
    terminal_dx: SpectralField


def eval_coefficients(spec, t, x: SpectralField, ens: Ensemble,
                      alpha: SpectralField):
    """Drift field and running-cost value at one particle state."""
    mean = column_mean(ens.coeffs)
    drift = spec.drift(t, x.coeffs[None, :], mean, alpha.coeffs)[0]
    cost = float(spec.running_cost(t, x.coeffs[None, :], mean, alpha.coeffs)[0])
    return SpectralField(drift), cost


def _broadcast(value, shape):
    return np.array(np.broadcast_to(np.asarray(value, dtype=float), shape))


def eval_derivatives(spec, t, x: SpectralField, ens: Ensemble,
                     alpha: SpectralField, z: SpectralField,
                     beta: SpectralField, horizon=None) -> CoefficientDerivatives:
    """All pointwise directional derivatives at one state.

    ``horizon`` fixes the terminal-cost reference time; it defaults to t.
    """
    if horizon is None:
        horizon = t
    mean = column_mean(ens.coeffs)
    xr, zr = x.coeffs[None, :], z.coeffs[None, :]
    m = x.n_modes
    a, b = alpha.coeffs, beta.coeffs
    return CoefficientDerivatives(
        drift_dx=SpectralField(spec.drift_dx(t, xr, mean, a, zr)[0]),
        drift_dcontrol=SpectralField(
            _broadcast(spec.drift_dcontrol(t, xr, mean, a, b), (m,))),
        diffusion_dx_diag=_broadcast(
            spec.diffusion_dx_diag(t, xr, mean, a, zr), (1, m))[0],
        diffusion_dcontrol_diag=_broadcast(
            spec.diffusion_dcontrol_diag(t, xr, mean, a, b), (m,)),
        running_dx=SpectralField(spec.running_cost_dx(t, xr, mean, a)[0]),
        running_dcontrol=SpectralField(
            _broadcast(spec.running_cost_dcontrol(t, xr, mean, a), (m,))),
        terminal_dx=SpectralField(spec.terminal_cost_dx(xr, mean, horizon)[0]),
    )


def lions_apply(spec, t, ens_x: Ensemble, ens_z: Ensemble, x: SpectralField,
                which: str):
    """Empirical law-derivative: (1/N) sum_j kernel(t, x, law)(x_j)(z_j).

    ``which`` selects the coefficient: "F" returns a :class:`SpectralField`,
    "B" the diagonal of the averaged diffusion direction, "f" and "g" the
    averaged scalar pairings.  For the shipped instances the kernels are
    constant in the integrated copy, so the average only sees the mean of
    the direction ensemble; linearity in ``ens_z`` is exact.
    """
    if ens_x.n_particles != ens_z.n_particles:
        raise ValueError("measure ensemble and direction ensemble sizes differ")
    mean = column_mean(ens_x.coeffs)
    mean_z = column_mean(ens_z.coeffs)
    alpha0 = np.zeros(ens_x.n_modes)
    xr = x.coeffs[None, :]
    m = ens_x.n_modes
    if which == "F":
        return SpectralField(_broadcast(
            spec.drift_dlaw(t, xr, mean, alpha0, mean_z), (m,)))
    if which == "B":
        return _broadcast(spec.diffusion_dlaw_diag(t, xr, mean, alpha0, mean_z), (m,))
    if which == "f":
        kernel = _broadcast(
            spec.running_cost_dlaw_kernel(t, xr, mean, alpha0), (1, m))[0]
        return exact_mean(ens_z.coeffs @ kernel)
    if which == "g":
        kernel = _broadcast(
            spec.terminal_cost_dlaw_kernel(xr, mean, t), (1, m))[0]
        return exact_mean(ens_z.coeffs @ kernel)
    raise ValueError(f"unknown coefficient selector {which!r}")
