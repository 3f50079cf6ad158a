"""Evolving-surface finite elements for coupled mean-curvature-flow/diffusion.

The library discretises a closed two-dimensional surface whose motion obeys
a velocity law v = -F(u, H) nu coupled to a diffusion equation for a surface
concentration u.  The normal and the scalar geometric unknown (velocity or
curvature) evolve as independent finite element fields; time stepping uses
linearly implicit BDF formulas so every step reduces to a few SPD solves.
"""

from .config import ExperimentConfig
from .diagnostics import (
    MonitorRow,
    RadialSolution,
    eoc,
    error_norms,
    mean_radius,
    monitor,
    radial_eval,
)
from .errors import (
    ConvergenceError,
    GeometryError,
    GesfemError,
    ModelAssumptionError,
    ModelDomainError,
    ParseError,
    PreconditionerError,
    ResourceError,
    UnsupportedConfigError,
    ValidationError,
)
from .geometry import analytic_normal_and_H, build_initial_data, make_u0
from .linalg import BlockVector, SparseMatrix, cg_solve, dot_norm, from_triplets, spmv
from .mesh import (
    SurfaceMesh,
    compute_frames,
    element_frame,
    icosphere,
    project_to_surface,
    promote_to_quadratic,
    surface_area,
)
from .model import FlowModel, gradient_flow_model, make_model, validate_assumptions
from .reference import QuadratureRule, ReferenceElement, quadrature
from .runner import converge, run
from .stepper import BdfScheme, FlowState, History, bdf_coefficients, bootstrap, step
from .surfaces import ImplicitSurface, make_surface

__version__ = "0.1.0"
