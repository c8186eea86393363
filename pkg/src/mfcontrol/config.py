"""Run configuration: strict TOML parsing, validation, and object builders.

The schema is closed: unknown sections or keys are errors, not warnings,
because a silently ignored typo in a numerics configuration is worse than a
crash.  Validation collects every violation and reports them together, each
naming the rule it breaks (e.g. the admissibility exponent bound of the
chosen instance).
"""

import hashlib
import json
import sys
from dataclasses import dataclass, field

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .ensemble import Ensemble
from .forward import ControlPath
from .noise import NoisePlan, unit_normals
from .optimizer import DescentParams
from .problems import CubicReactionDiffusion, LinearQuadratic

__all__ = ["RunConfig", "ConfigError", "load_config", "config_from_dict",
           "config_hash"]

_NUMBER = (int, float)

# section -> key -> allowed types (None value means "number or list of numbers")
_SCHEMA = {
    "run": {"problem": str, "T": _NUMBER, "n_t": int, "M": int, "N": int,
            "n_particles": int, "seed": int},
    "admissible": {"q": _NUMBER, "K": _NUMBER},
    "initial": {"coeffs": list, "jitter": _NUMBER},
    "cubic_rd": {"kappa": _NUMBER, "sigma": _NUMBER, "multiplier": _NUMBER,
                 "u_bar": list, "alpha_bar": list, "u_bar_T": list},
    "lq": {name: None for name in
           ("F1", "F2", "F3", "B1", "B2", "B3", "f1", "f2", "f3",
            "h1", "h2", "g1", "g2")},
    "optimizer": {"max_iters": int, "step0": _NUMBER, "armijo_c": _NUMBER,
                  "shrink": _NUMBER, "tol": _NUMBER},
    "control": {"coeffs": list},
    "output": {"directory": str},
}

_REQUIRED_RUN_KEYS = ("problem", "T", "n_t", "M", "seed")


class ConfigError(ValueError):
    """Invalid configuration; carries the full list of violations."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid configuration:\n  - " +
                         "\n  - ".join(self.violations))


@dataclass(frozen=True)
class RunConfig:
    problem: str
    horizon: float
    n_steps: int
    n_modes: int
    n_particles: int
    seed: int
    q: float
    bound: float
    initial_coeffs: tuple
    initial_jitter: float
    instance: dict
    optimizer: DescentParams
    control_coeffs: tuple
    output_directory: str
    raw: dict = field(repr=False, default_factory=dict)

    @property
    def dt(self) -> float:
        return self.horizon / self.n_steps


def _is_number_or_list(value):
    if isinstance(value, bool):
        return False
    if isinstance(value, _NUMBER):
        return True
    return isinstance(value, list) and all(
        isinstance(v, _NUMBER) and not isinstance(v, bool) for v in value)


def _check_schema(data, violations):
    for section, content in data.items():
        if section not in _SCHEMA:
            violations.append(f"unknown section [{section}]")
            continue
        if not isinstance(content, dict):
            violations.append(f"[{section}] must be a table of keys")
            continue
        for key, value in content.items():
            if key not in _SCHEMA[section]:
                violations.append(f"unknown key {key!r} in [{section}]")
                continue
            expected = _SCHEMA[section][key]
            if expected is None:
                if not _is_number_or_list(value):
                    violations.append(
                        f"[{section}].{key} must be a number or a list of numbers")
            elif expected is int:
                if not isinstance(value, int) or isinstance(value, bool):
                    violations.append(f"[{section}].{key} must be an integer")
            elif not isinstance(value, expected) or isinstance(value, bool):
                kind = "a number" if expected is _NUMBER else expected.__name__
                violations.append(f"[{section}].{key} must be {kind}")


def config_from_dict(data: dict) -> RunConfig:
    """Validate a parsed configuration and build the run description."""
    violations = []
    _check_schema(data, violations)
    if violations:
        raise ConfigError(violations)

    run = data.get("run", {})
    for key in _REQUIRED_RUN_KEYS:
        if key not in run:
            violations.append(f"[run].{key} is required")
    if "N" in run and "n_particles" in run:
        violations.append("[run] sets both N and its alias n_particles")
    n_particles = run.get("N", run.get("n_particles", 1))
    if violations:
        raise ConfigError(violations)

    problem = run["problem"]
    horizon, n_steps, n_modes, seed = run["T"], run["n_t"], run["M"], run["seed"]
    if problem not in ("lq", "cubic_rd"):
        violations.append(f"[run].problem must be 'lq' or 'cubic_rd', got {problem!r}")
    if not horizon > 0:
        violations.append("[run].T must be positive")
    if n_steps < 1:
        violations.append("[run].n_t must be at least 1")
    if n_modes < 1:
        violations.append("[run].M must be at least 1")
    if n_particles < 1:
        violations.append("[run].N must be at least 1")
    if not 0 <= seed < 2**64:
        violations.append("[run].seed must be an unsigned 64-bit integer")

    admissible = data.get("admissible", {})
    q = float(admissible.get("q", 7.0 if problem == "cubic_rd" else 3.0))
    bound = float(admissible.get("K", 50.0))
    if bound <= 0:
        violations.append("[admissible].K must be positive")
    if problem == "cubic_rd" and q <= 6.0:
        violations.append(
            "[admissible].q must exceed 6 for cubic_rd: the cubic reaction in "
            "one dimension has growth exponent p = 4 and admissibility "
            "requires q > p + 2")
    if problem == "lq" and q <= 2.0:
        violations.append(
            "[admissible].q must exceed 2 for lq: the linear-quadratic "
            "instance has growth exponent p = 0 and admissibility requires "
            "q > p + 2")

    if problem == "cubic_rd" and "lq" in data:
        violations.append("[lq] section present but [run].problem is cubic_rd")
    if problem == "lq" and "cubic_rd" in data:
        violations.append("[cubic_rd] section present but [run].problem is lq")
    instance = dict(data.get(problem, {}))
    if problem == "lq":
        for name in ("f1", "f2", "f3", "g1", "g2"):
            value = instance.get(name, 0.0)
            if np.any(np.asarray(value, dtype=float) < 0.0):
                violations.append(
                    f"[lq].{name} must be nonnegative (cost weights are "
                    "symmetric nonnegative operators)")
    if problem == "cubic_rd" and instance.get("sigma", 0.0) < 0.0:
        violations.append("[cubic_rd].sigma must be nonnegative")

    initial = data.get("initial", {})
    jitter = float(initial.get("jitter", 0.0))
    if jitter < 0.0:
        violations.append("[initial].jitter must be nonnegative")

    opt = data.get("optimizer", {})
    try:
        params = DescentParams(
            max_iters=opt.get("max_iters", 200),
            step0=float(opt.get("step0", 0.25)),
            armijo_c=float(opt.get("armijo_c", 1e-4)),
            shrink=float(opt.get("shrink", 0.5)),
            tol=float(opt.get("tol", 1e-6)),
        )
    except ValueError as exc:
        violations.append(f"[optimizer]: {exc}")
        params = DescentParams()

    if violations:
        raise ConfigError(violations)

    return RunConfig(
        problem=problem,
        horizon=float(horizon),
        n_steps=int(n_steps),
        n_modes=int(n_modes),
        n_particles=int(n_particles),
        seed=int(seed),
        q=q,
        bound=bound,
        initial_coeffs=tuple(float(c) for c in initial.get("coeffs", [1.0])),
        initial_jitter=jitter,
        instance=instance,
        optimizer=params,
        control_coeffs=tuple(
            float(c) for c in data.get("control", {}).get("coeffs", [0.0])),
        output_directory=data.get("output", {}).get("directory", "out"),
        raw=data,
    )


def load_config(path) -> RunConfig:
    """Parse and validate a TOML configuration file."""
    with open(path, "rb") as handle:
        data = tomllib.load(handle)
    return config_from_dict(data)


def config_hash(cfg: RunConfig) -> str:
    """Stable digest of the parsed configuration (order-normalized)."""
    canonical = json.dumps(cfg.raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def _pad(coeffs, n_modes):
    out = np.zeros(n_modes)
    arr = np.asarray(coeffs, dtype=float)
    out[: min(arr.size, n_modes)] = arr[:n_modes]
    return out


def build_problem(cfg: RunConfig):
    inst = cfg.instance
    m = cfg.n_modes
    if cfg.problem == "cubic_rd":
        return CubicReactionDiffusion(
            m,
            kappa=inst.get("kappa", 0.5),
            sigma=inst.get("sigma", 0.3),
            multiplier=inst.get("multiplier", 1.0),
            u_ref=_pad(inst.get("u_bar", [0.0]), m),
            alpha_ref=_pad(inst.get("alpha_bar", [0.0]), m),
            u_ref_terminal=_pad(inst["u_bar_T"], m) if "u_bar_T" in inst else None,
            q=cfg.q,
            bound=cfg.bound,
        )
    tables = {name: inst.get(name, default) for name, default in (
        ("F1", 0.0), ("F2", 0.0), ("F3", 1.0), ("B1", 0.0), ("B2", 0.0),
        ("B3", 0.0), ("f1", 0.0), ("f2", 0.0), ("f3", 1.0), ("h1", 0.0),
        ("h2", 0.0), ("g1", 0.0), ("g2", 0.0))}
    return LinearQuadratic(m, q=cfg.q, bound=cfg.bound, **tables)


def build_plan(cfg: RunConfig) -> NoisePlan:
    return NoisePlan(seed=cfg.seed, n_particles=cfg.n_particles,
                     n_modes=cfg.n_modes, n_steps=cfg.n_steps, dt=cfg.dt)


def build_initial(cfg: RunConfig) -> Ensemble:
    base = _pad(cfg.initial_coeffs, cfg.n_modes)
    coeffs = np.tile(base, (cfg.n_particles, 1))
    if cfg.initial_jitter > 0.0:
        # jitter stream keyed one step past any reachable index
        for i in range(cfg.n_particles):
            coeffs[i] += cfg.initial_jitter * unit_normals(
                cfg.seed, i, 2**63, cfg.n_modes)
    return Ensemble(coeffs)


def build_control(cfg: RunConfig) -> ControlPath:
    base = _pad(cfg.control_coeffs, cfg.n_modes)
    return ControlPath(np.tile(base, (cfg.n_steps, 1)), cfg.q, cfg.bound)
