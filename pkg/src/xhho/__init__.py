"""Extended hybrid high-order (XHHO) solver for the Poisson problem on
polygonal meshes, with singular and oscillatory enrichment."""
from .analysis import ErrorReport, compute_errors, convergence_rates
from .assembly import Discretization, assemble, discretize, energy_norm, solve
from .enrichment import (
    EnrichmentFunction,
    build_enrichment_space,
    corner_singular_function,
    oscillatory_function,
)
from .errors import ConditioningError, MeshError, MeshParseError, SolverError
from .fields import Field
from .kernels import BACKEND
from .mesh import Mesh, generate_cartesian, generate_triangular, read_mesh, write_mesh
from .problems import get_problem

__version__ = "0.1.0"
