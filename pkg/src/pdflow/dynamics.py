"""Projected primal-dual flow and its explicit Euler discretization.

The flow is ``dz/dt = beta * (P(z - alpha * Gt(z)) - z)`` where ``Gt`` is
the Euclidean gradient map ``G`` or the metric gradient ``G_r = R^{-1} G``.
The working domain is ``R^n x R^m_{>=0}``: ``x`` is free and only the
multipliers are projected.

In metric mode the projection is taken in the r-norm. Because the
``lambda``-block of ``R^{-1}`` is ``kI``, the r-projection onto the domain
has the closed form ``lam = max(w_lam, 0)``, ``x = w_x + A^T (lam - w_lam) / k``.
Skipping the ``x`` correction (plain clamp) moves the fixed point away from
the saddle point whenever a constraint is inactive; it is kept as an option
(``metric_projection=False``) for comparison only.
"""
from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .lagrangian import gradient_map, kkt_residual, lagrangian_value, split
from .metric import metric_gradient
from .problem import PrimalDualPoint, as_vector

BLOWUP = 1e12
DENSE_UNTIL = 10_000
STRIDE = 10


class Mode(str, enum.Enum):
    EUCLIDEAN = "euclidean"
    METRIC = "metric"


@dataclass(frozen=True)
class DynamicsParams:
    alpha: float
    beta: float = 1.0
    step: float = 1.0
    max_iters: int = 1_000_000
    stop_tol: float = 1e-9
    mode: Mode = Mode.EUCLIDEAN
    metric_projection: bool = True

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode(self.mode))
        for name in ("alpha", "beta", "step", "stop_tol"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and math.isfinite(val) and val > 0):
                raise ValueError(f"{name} must be a positive finite number, got {val!r}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 0:
            raise ValueError("max_iters must be a nonnegative integer")


@dataclass
class FlowResult:
    final_point: PrimalDualPoint
    iterations: int
    status: str
    residual: float
    final_kkt: object
    params: DynamicsParams
    backend: str
    history: dict = field(default_factory=dict, repr=False)
    trajectory: object = field(default=None, repr=False)
    message: str = ""

    @property
    def converged(self):
        return self.status == "converged"

    @property
    def diverged(self):
        return self.status == "diverged"


def project_domain(z, n=None):
    """Clamp the multipliers at zero; ``x`` passes through.

    Accepts a :class:`PrimalDualPoint` or a flat vector (then ``n`` is required).
    """
    if isinstance(z, PrimalDualPoint):
        return PrimalDualPoint(z.x, np.maximum(z.lam, 0.0))
    if n is None:
        raise ValueError("n is required for a flat vector")
    v = np.array(z, dtype=float)
    v[n:] = np.maximum(v[n:], 0.0)
    return v


def project_domain_metric(program, spec, w):
    """Exact r-norm projection of the flat vector ``w`` onto ``R^n x R^m_{>=0}``."""
    w = as_vector(program, w)
    n = program.n
    lam = np.maximum(w[n:], 0.0)
    x = w[:n] + program.A.T @ (lam - w[n:]) / spec.k
    return np.concatenate([x, lam])


def _direction(program, params, z, spec):
    if params.mode is Mode.METRIC:
        if spec is None:
            raise ValueError("metric mode needs a MetricSpec")
        return metric_gradient(program, spec, z)
    return gradient_map(program, z)


def _project(program, params, w, spec):
    if params.mode is Mode.METRIC and params.metric_projection:
        return project_domain_metric(program, spec, w)
    return project_domain(w, program.n)


def flow_field(program, params, z, spec=None):
    """``beta * (P(z - alpha * Gt(z)) - z)`` as a flat vector."""
    v = as_vector(program, z)
    w = v - params.alpha * _direction(program, params, v, spec)
    return params.beta * (_project(program, params, w, spec) - v)


def projected_residual(program, params, z, spec=None):
    """Stopping residual ``||P(z - alpha Gt(z)) - z|| / alpha``."""
    return float(np.linalg.norm(flow_field(program, params, z, spec))) / (params.beta * params.alpha)


def record_capacity(max_iters, dense_until=DENSE_UNTIL, stride=STRIDE):
    dense = min(max_iters + 1, dense_until)
    sparse = max(0, (max_iters - dense_until) // stride + 1) if max_iters >= dense_until else 0
    return dense + sparse + 1


def euler_solve(program, params, z0=None, spec=None, z_star=None, record=True,
                dense_until=DENSE_UNTIL, stride=STRIDE, backend=None):
    """Run ``z <- z + s * flow_field(z)`` until the residual drops below ``stop_tol``.

    Parameters
    ----------
    program : ConvexQuadraticProgram
    params : DynamicsParams
    z0 : PrimalDualPoint or array, optional
        Start point; zeros by default. Negative multipliers are clamped first.
    spec : MetricSpec, optional
        Required in metric mode.
    z_star : array, optional
        Reference saddle point; when given the result carries a
        :class:`~pdflow.trace.Trajectory` with error norms and Lyapunov values.
    record : bool
        Keep sampled states (every iteration below ``dense_until``, then
        every ``stride``-th, plus the final one).
    backend : {"compiled", "python"}, optional
        Kernel override; defaults to the import-time selection.

    Returns
    -------
    FlowResult
        ``iterations`` counts applied updates; a start point that already
        meets the tolerance returns with zero iterations. On divergence
        (non-finite state or ``||z|| > 1e12``) the last finite iterate is kept.
    """
    n, m = program.n, program.m
    if params.mode is Mode.METRIC and spec is None:
        raise ValueError("metric mode needs a MetricSpec")
    if z0 is None:
        z = np.zeros(n + m)
    else:
        z = as_vector(program, z0).copy()
    if not np.all(np.isfinite(z)):
        raise ValueError("start point must be finite")
    z[n:] = np.maximum(z[n:], 0.0)

    kern = _backend.get_kernels(backend)
    cap = record_capacity(int(params.max_iters), dense_until, stride) if record else 0
    rec_states = np.empty((cap, n + m))
    rec_resid = np.empty(cap)
    rec_iters = np.empty(cap, dtype=np.int64)
    metric = params.mode is Mode.METRIC
    zf, iters, status, n_rec, res = kern.euler_loop(
        np.ascontiguousarray(program.H), np.ascontiguousarray(program.c),
        np.ascontiguousarray(program.A), np.ascontiguousarray(program.b),
        np.ascontiguousarray(z), int(metric), float(spec.k) if metric else 0.0,
        int(params.metric_projection), float(params.alpha), float(params.beta),
        float(params.step), int(params.max_iters), float(params.stop_tol),
        int(dense_until), int(stride), BLOWUP, rec_states, rec_resid, rec_iters)

    status_name = {0: "converged", 1: "max_iters", 2: "diverged"}[int(status)]
    message = ""
    if status_name == "diverged":
        message = f"state became non-finite or exceeded {BLOWUP:g} after {iters} iterations"
    elif status_name == "max_iters":
        message = f"residual {res:.3e} above tolerance {params.stop_tol:.1e} after {iters} iterations"
    point = PrimalDualPoint.from_vector(np.asarray(zf), n)
    result = FlowResult(
        final_point=point, iterations=int(iters), status=status_name, residual=float(res),
        final_kkt=kkt_residual(program, point), params=params,
        backend="python" if kern is _backend._fallback else "compiled",
        history={"iters": rec_iters[:n_rec].copy(), "states": rec_states[:n_rec].copy(),
                 "residuals": rec_resid[:n_rec].copy()},
        message=message,
    )
    if z_star is not None and record:
        from .trace import build_trajectory
        result.trajectory = build_trajectory(program, result, z_star, spec)
    return result


def default_alpha(certificate):
    """``2 nu / ell^2``, the maximizer of the exponential-rate coefficient in alpha."""
    if not certificate.passed:
        raise ValueError("certificate did not pass; no admissible alpha")
    if certificate.ell <= 0:
        raise ValueError("Lipschitz constant must be positive")
    return 2.0 * certificate.nu / certificate.ell ** 2


def alpha_admissible(alpha, certificate):
    return alpha < 4.0 * certificate.nu / certificate.ell ** 2


def rate_bound(params, certificate):
    """Exponent ``alpha beta (4 nu - alpha ell^2) / 8`` of the r-norm envelope.

    A non-positive value means ``alpha >= 4 nu / ell^2`` and the bound says
    nothing; a :class:`RuntimeWarning` is issued in that case.
    """
    a, nu, ell = params.alpha, certificate.nu, certificate.ell
    rate = a * params.beta * (4.0 * nu - a * ell ** 2) / 8.0
    if not rate > 0:
        warnings.warn(f"alpha = {a:.3g} is not below 4 nu / ell^2 = {4 * nu / ell ** 2:.3g}; "
                      "rate bound is not valid", RuntimeWarning, stacklevel=2)
    return rate


def lyapunov_value(program, z, z_star, spec=None):
    """``V(z)``; the quadratic term uses the r-norm when ``spec`` is given."""
    v = as_vector(program, z)
    vs = as_vector(program, z_star)
    n = program.n
    xs, ls = vs[:n], vs[n:]
    x, lam = v[:n], v[n:]
    l_star = lagrangian_value(program, vs)
    d = v - vs
    quad = 0.5 * (spec.norm(d) ** 2 if spec is not None else float(d @ d))
    return ((l_star - lagrangian_value(program, np.concatenate([xs, lam])))
            + (lagrangian_value(program, np.concatenate([x, ls])) - l_star) + quad)


def lyapunov_values(program, states, z_star, spec=None):
    """Vectorized :func:`lyapunov_value` over the rows of ``states``."""
    states = np.atleast_2d(np.asarray(states, dtype=float))
    n = program.n
    xs, ls = split(program, z_star)
    X, Lam = states[:, :n], states[:, n:]
    slack_star = program.A @ xs - program.b
    dual_term = -(Lam - ls) @ slack_star
    DX = X - xs
    f_diff = 0.5 * np.einsum("ij,jk,ik->i", DX, program.H, DX) + DX @ program.objective_gradient(xs)
    primal_term = f_diff + (DX @ program.A.T) @ ls
    D = states - np.concatenate([xs, ls])
    if spec is None:
        quad = 0.5 * np.einsum("ij,ij->i", D, D)
    else:
        W = spec.whiten(D.T)
        quad = 0.5 * np.einsum("ij,ij->j", W, W)
    return dual_term + primal_term + quad
