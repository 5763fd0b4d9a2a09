"""Positivity-preserving third-order DDG solver for Poisson-Nernst-Planck systems."""

from .benchmarks import BENCHMARKS, build_benchmark
from .config import RunConfig, parse_config, resolve, serialize_config
from .driver import (DiagnosticsRecord, ProblemSpec, RunResult, SimConfig, SpeciesSpec,
                     fit_steady_amplitudes, free_energy, init, minima, pnp_step, run,
                     steady_state_init, total_mass)
from .exceptions import (ConfigError, InadmissibleCellError, NumericalFatalError,
                         OverflowGuardError, PnpdgError)
from .field import (Field, FluxParams, cell_average, ddg_flux, eval_at_points,
                    eval_field, eval_grad, eval_second, face_trace, l1_error,
                    project_l2, weighted_cell_average, zero_field)
from .mesh import Mesh1D, Mesh2D, build_mesh_1d, build_mesh_2d
from .poisson import (BoundaryCondition, LoadSpec, PoissonBC, PoissonOperator,
                      assemble_load, assemble_operator, dirichlet, gamma_d, neumann,
                      solve_poisson)
from .positivity import (CflReport, LimiterReport, TestSet1D, TestSet2D, WeightField,
                         build_test_set, build_weight, cfl_mu0, choose_gamma,
                         decomposition_weights, scaling_limiter, test_interval,
                         test_set_values, weight_from_values, weighted_projection)
from .quadrature import QuadRule, gauss_rule
from .transport import apply_mass_inverse, decomposition_cell_averages, np_rhs

__version__ = "0.1.0"
