"""Numeric probes of the structural inequalities behind well-posedness.

The theory needs coercivity of the drift, joint monotonicity in state, law
and control, and Lipschitz continuity of the diffusion.  Each shipped
instance can certify these with explicit constants (derived from its table
sups, mean-field strength and multiplier bound); the probe draws random
states, ensembles and controls at a configured scale, evaluates both sides
of each inequality with those constants, and reports the worst margin
(right side minus left side; negative means violated).  This samples
margins rather than proving global constants; the probe fails only when a
margin dips below a small negative slack.
"""

from dataclasses import dataclass, field

import numpy as np

from .ensemble import Ensemble, wasserstein2
from .spectral import collocation_grid, collocation_values, eigenvalues
from .util import column_mean

__all__ = ["AssumptionReport", "ConditionReport", "assumption_probe",
           "pointwise_monotonicity_samples"]

SLACK = 1e-9


@dataclass(frozen=True)
class ConditionReport:
    name: str
    samples: int
    worst_margin: float
    violations: int

    @property
    def passed(self) -> bool:
        return self.violations == 0


@dataclass(frozen=True)
class AssumptionReport:
    conditions: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def condition(self, name) -> ConditionReport:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)


def _h_norm_sq(v):
    return float(np.dot(v, v))


def _v_norm_sq(v):
    k = np.arange(1, v.size + 1, dtype=float)
    return float(np.dot(1.0 + (k * np.pi) ** 2, v * v))


def _random_field(rng, n_modes, scale):
    weights = 1.0 / np.arange(1, n_modes + 1, dtype=float)
    return scale * rng.standard_normal(n_modes) * weights


def _random_ensemble(rng, n_particles, n_modes, scale):
    weights = 1.0 / np.arange(1, n_modes + 1, dtype=float)
    return Ensemble(scale * rng.standard_normal((n_particles, n_modes)) * weights)


def _pair_l(u):
    return float(np.dot(eigenvalues(u.size) * u, u))


def assumption_probe(spec, sample_count=10_000, seed=0, scale=1.0,
                     horizon=1.0, ensemble_size=8) -> AssumptionReport:
    """Sampled margins for coercivity, monotonicity and diffusion Lipschitz.

    Every draw uses the instance's own certified constants; see the module
    docstring for the margin convention.
    """
    rng = np.random.default_rng(seed)
    m = spec.n_modes
    a1, delta = spec.coercivity_constants(horizon)
    a1_diff = spec.diffusion_lipschitz_constant(horizon)

    worst = {"coercivity": np.inf, "monotonicity": np.inf,
             "diffusion_lipschitz": np.inf}
    bad = {k: 0 for k in worst}

    for _ in range(sample_count):
        t = rng.uniform(0.0, horizon)
        u = _random_field(rng, m, scale)
        v = _random_field(rng, m, scale)
        alpha = _random_field(rng, m, scale)
        beta = _random_field(rng, m, scale)
        ens_mu = _random_ensemble(rng, ensemble_size, m, scale)
        ens_nu = _random_ensemble(rng, ensemble_size, m, scale)
        mean_mu = column_mean(ens_mu.coeffs)
        mean_nu = column_mean(ens_nu.coeffs)
        mu_m2 = float(np.mean(np.einsum("ij,ij->i", ens_mu.coeffs,
                                        ens_mu.coeffs)))
        w2_sq = wasserstein2(ens_mu, ens_nu) ** 2

        # coercivity: 2 <L u + F(t, u, mu, alpha), u>
        fu = spec.drift(t, u[None, :], mean_mu, alpha)[0]
        lhs = 2.0 * (_pair_l(u) + float(np.dot(fu, u)))
        rhs = a1 * (_h_norm_sq(u) + mu_m2 + _h_norm_sq(alpha)) \
            - delta * _v_norm_sq(u)
        margin = rhs - lhs
        worst["coercivity"] = min(worst["coercivity"], margin)
        bad["coercivity"] += margin < -SLACK

        # monotonicity: differences in state, law and control together
        fv = spec.drift(t, v[None, :], mean_nu, beta)[0]
        d = u - v
        lhs = 2.0 * (_pair_l(d) + float(np.dot(fu - fv, d)))
        rhs = a1 * (_h_norm_sq(d) + w2_sq + _h_norm_sq(alpha - beta)) \
            - delta * _v_norm_sq(d)
        margin = rhs - lhs
        worst["monotonicity"] = min(worst["monotonicity"], margin)
        bad["monotonicity"] += margin < -SLACK

        # diffusion Lipschitz in the Hilbert-Schmidt norm (diagonal case)
        bu = np.broadcast_to(np.asarray(
            spec.diffusion_diagonal(t, u[None, :], mean_mu, alpha)), (1, m))[0]
        bv = np.broadcast_to(np.asarray(
            spec.diffusion_diagonal(t, v[None, :], mean_nu, beta)), (1, m))[0]
        lhs = _h_norm_sq(bu - bv)
        rhs = a1_diff * (_h_norm_sq(d) + w2_sq + _h_norm_sq(alpha - beta))
        margin = rhs - lhs
        worst["diffusion_lipschitz"] = min(worst["diffusion_lipschitz"], margin)
        bad["diffusion_lipschitz"] += margin < -SLACK

    conditions = [ConditionReport(name, sample_count, float(worst[name]),
                                  int(bad[name]))
                  for name in ("coercivity", "monotonicity",
                               "diffusion_lipschitz")]
    return AssumptionReport(conditions=conditions)


def pointwise_monotonicity_samples(sample_count=10_000, seed=0, scale=3.0):
    """Margins of the scalar reaction monotonicity (-x^3 is nonincreasing).

    Returns the sampled values of -(x^3 - y^3)(x - y), all of which must be
    <= 0 up to slack.
    """
    rng = np.random.default_rng(seed)
    x = scale * rng.standard_normal(sample_count)
    y = scale * rng.standard_normal(sample_count)
    return -(x**3 - y**3) * (x - y)


def nemytskii_field_monotonicity(spec, n_pairs=200, seed=0, scale=1.5):
    """<F1(x) - F1(y), x - y> on collocation values for random field pairs."""
    rng = np.random.default_rng(seed)
    grid = collocation_grid(spec.n_modes)
    out = []
    for _ in range(n_pairs):
        x = _random_field(rng, spec.n_modes, scale)
        y = _random_field(rng, spec.n_modes, scale)
        vx = collocation_values(x)
        vy = collocation_values(y)
        inner = np.sum((-(vx**3) + vy**3) * (vx - vy)) / (grid.size + 1)
        out.append(inner)
    return np.asarray(out)
