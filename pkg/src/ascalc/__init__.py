"""Contour-quadrature semigroups of almost sectorial matrices.

Evaluates ``T_alpha(t) = exp(-t A^alpha)`` through a discretized resolvent
integral, solves Cauchy problems with a scalar time coefficient by time
rescaling, and recovers that coefficient from two scalar observations.
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .operators import (EigDecomposition, OperatorHandle, SectorProfile, dense_function,
                        dump_operator, eig_oracle, estimate_sector, load_operator,
                        oracle_function_apply, oracle_matrix_function, resolvent_apply,
                        resolvent_norms)
from .gallery import (GALLERY, OperatorFamily, affine_family, diagonal, dirichlet_laplacian_1d,
                      jordan_block, laplacian_eigenvalues, nonnormal_bidiagonal, parse_operator,
                      random_normal, scalar)
from .contour import (ContourSpec, GrowthFit, QuadratureRule, admissible_theta, build_contour,
                      continuity_probe, growth_fit, phi_calculus_apply, power_semigroup_apply,
                      semigroup_apply, semigroup_derivative, semigroup_matrix, tau_semigroup_apply)
from .evolution import (CoefficientFn, ProblemSpec, RescaledClock, Trajectory, affine, constant,
                        make_clock, parse_phi, read_trajectory_csv, reference_ode_solve, sampled,
                        sine, solve_direct, solve_direct_nonautonomous, write_trajectory_csv)
from .inverse import (ObservationFunctional, ObservationSeries, RecoveryResult, differentiate,
                      read_observations_csv, recover_phi, recovery_error_report,
                      synthesize_observations, write_observations_csv, write_recovery_csv)
