"""CSV and manifest emission.

Every CSV starts with one comment line carrying the configuration hash and
seed (provenance travels with the data), then a header row, then rows with
floats printed to 17 significant digits so that values round-trip exactly.
Nothing time- or host-dependent is written; identical runs produce
byte-identical files.
"""

import json

import numpy as np
import scipy

from . import __version__

__all__ = ["write_csv", "trajectory_rows", "costate_rows", "write_manifest",
           "format_float"]


def format_float(x) -> str:
    return f"{float(x):.17g}"


def _format_cell(value):
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    return str(value)


def write_csv(path, columns, rows, meta=None):
    """Write dict-rows under a provenance comment line.

    ``meta`` is a flat mapping rendered as ``# key=value ...``.
    """
    lines = []
    if meta:
        lines.append("# " + " ".join(f"{k}={v}" for k, v in meta.items()))
    lines.append(",".join(columns))
    for row in rows:
        lines.append(",".join(_format_cell(row[c]) for c in columns))
    with open(path, "w") as handle:
        handle.write("\n".join(lines) + "\n")


def trajectory_rows(bundle):
    """Long-format state record: one row per (time, particle, mode)."""
    dt = bundle.plan.dt
    rows = []
    for k in range(bundle.n_steps + 1):
        t = k * dt
        for i in range(bundle.n_particles):
            for m in range(bundle.n_modes):
                rows.append({"t": t, "particle": i, "mode": m + 1,
                             "coeff": bundle.states[k, i, m]})
    return ("t", "particle", "mode", "coeff"), rows


def costate_rows(bundle, adjoint):
    """Costate record mirroring the trajectory format."""
    dt = bundle.plan.dt
    rows = []
    for k in range(bundle.n_steps + 1):
        t = k * dt
        for i in range(bundle.n_particles):
            for m in range(bundle.n_modes):
                rows.append({"t": t, "particle": i, "mode": m + 1,
                             "coeff": adjoint.states[k, i, m]})
    return ("t", "particle", "mode", "coeff"), rows


def control_rows(control, dt):
    rows = []
    for k in range(control.n_steps):
        for m in range(control.n_modes):
            rows.append({"t": k * dt, "mode": m + 1,
                         "coeff": control.values[k, m]})
    return ("t", "mode", "coeff"), rows


def write_manifest(path, config_digest, seed, command):
    manifest = {
        "config_hash": config_digest,
        "seed": seed,
        "command": command,
        "versions": {
            "mfcontrol": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
        },
    }
    with open(path, "w") as handle:
        json.dump(manifest, handle, indent=2, sort_keys=True)
        handle.write("\n")
    return manifest
