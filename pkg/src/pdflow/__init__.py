"""Projected primal-dual dynamics for linearly constrained convex QPs.

Euclidean flow, constant-metric (preconditioned) flow with a measured
strong-monotonicity certificate, an exact active-set oracle, trajectory
tracing and a command-line front end.
"""
from ._backend import BACKEND, HAVE_COMPILED
from .dynamics import (DynamicsParams, FlowResult, Mode, alpha_admissible, default_alpha,
                       euler_solve, flow_field, lyapunov_value, project_domain,
                       project_domain_metric, rate_bound)
from .lagrangian import (KktResidual, euclidean_monotonicity, gradient_map,
                         jacobian_of_gradient_map, kkt_residual, lagrangian_value,
                         monotonicity_gap)
from .metric import (MetricNotPositiveDefinite, MetricSpec, MonotonicityCertificate, build_metric,
                     certify_strong_monotonicity, choose_k, estimate_lipschitz, metric_gradient,
                     metric_gradient_matvec, spectral_bounds)
from .oracle import OracleSolution, active_set_solve, dual_nnls_solve, verify_saddle
from .problem import (ConvexQuadraticProgram, PrimalDualPoint, make_l2_least_squares,
                      make_random_qp, validate)
from .trace import RateFit, Trajectory, envelope_check, export, fit_geometric_rate

__version__ = "0.1.0"
