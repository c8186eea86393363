"""Adjoint-based optimal control of mean-field stochastic reaction-diffusion
systems on the sine spectral basis of the unit interval.

The package provides the interacting-particle forward solver, the exact
discrete tangent and adjoint (costate) solvers, Monte Carlo cost and
gradient evaluation, a projected gradient optimizer with a first-order
stationarity certificate, and two ready-made problem instances (linear-
quadratic and cubic reaction-diffusion with mean-field coupling).
"""

from .adjoint import AdjointBundle, duality_residual, solve_adjoint
from .assumptions import AssumptionReport, assumption_probe
from .ensemble import Ensemble, empirical_mean, moment_q, wasserstein2
from .forward import (
    BlowUpError,
    ControlPath,
    LipschitzReport,
    TrajectoryBundle,
    lipschitz_probe,
    moment_report,
    solve,
    step,
)
from .noise import NoisePlan, all_increments, wiener_increments
from .objective import (
    GradcheckReport,
    GradientPath,
    cost,
    gradcheck,
    gradient,
    hamiltonian,
)
from .optimizer import (
    DescentParams,
    DescentResult,
    descend,
    hamiltonian_scan,
    pontryagin_residual,
    project_admissible,
    stationarity_residual,
    variational_inequality,
)
from .problems import (
    CubicReactionDiffusion,
    LinearQuadratic,
    ProblemSpec,
    eval_coefficients,
    eval_derivatives,
    lions_apply,
)
from .spectral import (
    DirichletLaplacian,
    SpectralField,
    apply_laplacian,
    norms,
    project,
    to_physical,
)
from .tangent import TangentBundle, gateaux_cost, solve_tangent

__version__ = "0.1.0"
