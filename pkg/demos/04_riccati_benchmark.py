"""Benchmark the optimizer against the closed-form scalar theory.

On a single mode with no noise and no mean-field coupling, the control
problem is a textbook scalar linear-quadratic regulator whose optimum is
the Riccati feedback law.  The package's discretize-then-optimize route
knows nothing about Riccati equations, so landing on the same control is
a meaningful end-to-end check of the forward solver, the costate, the
gradient, and the line search at once.
"""

import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from mfcontrol.verification import riccati_suite

OUT = os.path.join(os.path.dirname(__file__), "output")
os.makedirs(OUT, exist_ok=True)

suite = riccati_suite(horizon=0.5, n_steps=400)
print(f"optimizer iterations: {suite.summary['iterations']}")
print(f"L2 distance between optimized and Riccati control: "
      f"{suite.summary['l2_gap']:.3e} (tolerance {suite.summary['tol']})")
print(f"suite verdict: {'PASS' if suite.passed else 'FAIL'}")

times = [row["t"] for row in suite.rows]
optimized = [row["optimized"] for row in suite.rows]
reference = [row["riccati"] for row in suite.rows]

fig, axes = plt.subplots(1, 2, figsize=(11, 4))
axes[0].plot(times, optimized, label="projected gradient descent")
axes[0].plot(times, reference, "k--", label="Riccati feedback")
axes[0].set_xlabel("t")
axes[0].set_ylabel("control (mode 1)")
axes[0].legend()
axes[0].set_title("optimized vs closed-form control")
axes[1].semilogy(times, np.abs(np.array(optimized) - np.array(reference)))
axes[1].set_xlabel("t")
axes[1].set_title("pointwise gap (discretization error)")
fig.tight_layout()
fig.savefig(os.path.join(OUT, "riccati_benchmark.png"), dpi=120)
print(f"wrote {os.path.join(OUT, 'riccati_benchmark.png')}")
