"""Numerical laboratory for the inverse-curvature flow of entire graphs."""

from .errors import (BlowUp, ConfigError, CurvatureFloor, DomainError,
                     FlowError, MeanConvexityViolation, NewtonDiverged,
                     NotConverged, NotFlattened, SandwichViolation,
                     SeriesStartInvalid, SlopeBlowDown, VertexSingularity)
from .exact import (ConeFamily, ExpandingSphere, ball_tangency_radius,
                    cone_ball_tangent, cone_gamma_beta, cone_lifetime,
                    cone_mean_curvature, cone_slope, integrate_gamma_beta_ode,
                    integrate_slope_ode, slope_crossing_time, sphere_radius)
from .geometry import (GeometryFields, GraphState2D, RadialGrid, RadialProfile,
                       compute_fields_2d, compute_fields_radial, flow_speed,
                       make_radial_grid)
from .radial import (RadialSim, SolverConfig, cone_smooth_datum,
                     epsilon_regularization_study, estimate_extinction,
                     hyperboloid_datum, init_radial, random_sandwiched_pair,
                     run_until, step)
from .cartesian import (Sim2D, elliptical_datum_2d, init_2d, radial_datum_2d,
                        ring_oscillation, run_2d, step_2d)
from .selfsimilar import (SelfSimilarProfile, elliptic_residual, flux_exponent,
                          flux_ratio, flux_target, selfsimilar_roundtrip,
                          shoot_profile)
from .diagnostics import (CheckResult, DiagnosticsReport, check_asymptotic_v,
                          check_descent, check_global_H_bound,
                          check_local_H_bound, check_lower_bound_v,
                          check_plane_convergence, check_sandwich,
                          check_starshaped, comparison_test, LAWS)
from .config import (RunConfig, config_hash, format_config, load_snapshot,
                     parse_config, save_snapshot)

__version__ = "0.1.0"
