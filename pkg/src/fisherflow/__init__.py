"""Numerical laboratory for entropy and Fisher information along the
Neumann heat flow on flat 2D domains."""

from .errors import ConvergenceError, MeshError, NumericsError, ValidationError
from .functionals import (
    Density,
    VectorField,
    energy_m,
    entropy,
    fisher,
    fisher_log_form,
    fisher_m,
    kinetic_action,
    log_derivative,
)
from .mesh import (
    CurvatureBound,
    DomainSpec,
    TriMesh,
    boundary_curvature,
    build_mesh,
    geodesic_distances,
    load_domain_spec,
)
from .heat import HeatOperator
from .curves import Curve, continuity_residual, heat_regularize, mollify_time
from .transport import (
    CostTable,
    SinkhornConfig,
    build_cost_table,
    metric_speed,
    ot_epsilon,
    wasserstein,
)
from .jko import JkoConfig, jko_curve, jko_step
from .verify import (
    EXPERIMENTS,
    ExperimentConfig,
    FitResult,
    Report,
    Verdict,
    run_experiment,
)

__version__ = "0.1.0"
