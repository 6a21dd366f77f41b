"""Constant block metric, the metric gradient and its monotonicity certificate.

The metric is given through its inverse ``R^{-1} = [[kI, A^T], [A, kI]]``,
which is positive definite iff ``k > sqrt(q2)``. ``R`` itself is applied via
the Cholesky factor ``L`` of ``R^{-1}``: ``<u, v>_r = u^T R v = (L^{-1}u)^T
(L^{-1}v)``.
"""
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_solve, solve_triangular

from .lagrangian import gradient_map, jacobian_of_gradient_map, split
from .linalg import jacobi_eigh, power_iteration, symmetric_part
from .problem import as_vector

K_MARGIN = 1e-6


class MetricNotPositiveDefinite(ValueError):
    pass


def spectral_bounds(A, rank_tol=1e-12):
    """``(q1, q2)``: extreme eigenvalues of ``A A^T`` (Jacobi)."""
    A = np.asarray(A, dtype=float)
    w = jacobi_eigh(A @ A.T)
    q1, q2 = float(w[0]), float(w[-1])
    if q1 <= rank_tol * max(q2, 1.0):
        raise ValueError(f"A A^T is singular (q1 = {q1:.3g}); A must have full row rank")
    return q1, q2


def threshold_terms(program, q1=None):
    """Pieces of the k threshold for ``T = A^T A H^{-1} + q1/2 H^{-1} + H/2``.

    ``T`` is not symmetric unless ``H`` commutes with ``A^T A``, so both the
    top eigenvalue of its symmetric part and its spectral radius are returned.
    """
    A, H = program.A, program.H
    if q1 is None:
        q1, _ = spectral_bounds(A)
    Hinv = np.linalg.solve(H, np.eye(program.n))
    Hinv = 0.5 * (Hinv + Hinv.T)
    T = A.T @ A @ Hinv + 0.5 * q1 * Hinv + 0.5 * H
    return {
        "lambda_max_sym": float(jacobi_eigh(symmetric_part(T))[-1]),
        "spectral_radius": power_iteration(T),
    }


@dataclass(frozen=True, eq=False)
class MetricSpec:
    k: float
    q1: float
    q2: float
    rho: float
    n: int
    m: int
    metric_inverse: np.ndarray = field(repr=False)
    chol: np.ndarray = field(repr=False)

    @property
    def metric(self):
        """Dense ``R``; formed only on request."""
        N = self.metric_inverse.shape[0]
        return cho_solve((self.chol, True), np.eye(N))

    def whiten(self, v):
        """``L^{-1} v``, so that ``||v||_r = ||L^{-1} v||``."""
        return solve_triangular(self.chol, np.asarray(v, dtype=float), lower=True)

    def apply_metric(self, v):
        return cho_solve((self.chol, True), np.asarray(v, dtype=float))

    def inner(self, u, v):
        return float(self.whiten(u) @ self.whiten(v))

    def norm(self, v):
        return float(np.linalg.norm(self.whiten(v)))


def build_metric(program, k, q1=None, q2=None, rho=None):
    """Assemble ``R^{-1}`` for a given ``k``; raises if it is not positive definite."""
    if q1 is None or q2 is None:
        q1, q2 = spectral_bounds(program.A)
    k = float(k)
    if not k > np.sqrt(q2):
        raise MetricNotPositiveDefinite(
            f"metric not positive definite: k = {k:.6g} <= sqrt(q2) = {np.sqrt(q2):.6g}")
    n, m, A = program.n, program.m, program.A
    Minv = np.block([[k * np.eye(n), A.T], [A, k * np.eye(m)]])
    try:
        L = np.linalg.cholesky(Minv)
    except np.linalg.LinAlgError as exc:
        raise MetricNotPositiveDefinite(f"metric not positive definite: {exc}") from None
    if rho is None:
        rho = threshold_rho(program, q1, q2)
    return MetricSpec(k=k, q1=q1, q2=q2, rho=float(rho), n=n, m=m, metric_inverse=Minv, chol=L)


def threshold_rho(program, q1=None, q2=None):
    if q1 is None or q2 is None:
        q1, q2 = spectral_bounds(program.A)
    terms = threshold_terms(program, q1)
    return max(np.sqrt(q2), terms["lambda_max_sym"], terms["spectral_radius"])


def choose_k(program, multiplier=1.0, margin=K_MARGIN):
    """Metric with ``k = multiplier * rho * (1 + margin)``."""
    if not multiplier >= 1:
        raise ValueError("multiplier must be >= 1")
    q1, q2 = spectral_bounds(program.A)
    rho = threshold_rho(program, q1, q2)
    return build_metric(program, multiplier * rho * (1.0 + margin), q1, q2, rho)


def metric_gradient(program, spec, z):
    """Metric gradient from its block expansion.

    ``[k grad f - A^T A x + k A^T lam + A^T b ; A grad f - k A x + A A^T lam + k b]``
    """
    x, lam = split(program, z)
    A, b, k = program.A, program.b, spec.k
    gf = program.objective_gradient(x)
    Ax = A @ x
    return np.concatenate([
        k * gf - A.T @ Ax + k * (A.T @ lam) + A.T @ b,
        A @ gf - k * Ax + A @ (A.T @ lam) + k * b,
    ])


def metric_gradient_matvec(program, spec, z):
    """Same quantity as :func:`metric_gradient`, computed as ``R^{-1} G(z)``."""
    return spec.metric_inverse @ gradient_map(program, z)


def metric_jacobian(program, spec):
    return spec.metric_inverse @ jacobian_of_gradient_map(program)


def metric_monotonicity_gap(program, spec, z1, z2, inner="r"):
    """``<G_r(z1) - G_r(z2), z1 - z2>`` in the r inner product or the Euclidean one."""
    dz = as_vector(program, z1) - as_vector(program, z2)
    dg = metric_gradient(program, spec, z1) - metric_gradient(program, spec, z2)
    if inner == "r":
        return spec.inner(dg, dz)
    if inner == "euclidean":
        return float(dg @ dz)
    raise ValueError(f"unknown inner product {inner!r}")


def estimate_lipschitz(program, spec, jacobian=None):
    """r-norm operator norm of a constant Jacobian (default: that of ``G_r``).

    With ``v = L y`` the ratio ``||Jv||_r / ||v||_r`` becomes ``||L^{-1} J L y|| / ||y||``,
    so the generalized problem reduces to a symmetric one.
    """
    J = metric_jacobian(program, spec) if jacobian is None else np.asarray(jacobian, dtype=float)
    B = spec.whiten(J @ spec.chol)
    top = float(jacobi_eigh(symmetric_part(B.T @ B))[-1])
    return float(np.sqrt(max(top, 0.0)))


@dataclass(frozen=True)
class MonotonicityCertificate:
    k: float
    q1: float
    q2: float
    rho: float
    nu: float
    ell: float
    lambda_min_shifted: float
    nu_ge_q1_half: bool
    passed: bool

    def to_dict(self):
        return {
            "k": self.k, "q1": self.q1, "q2": self.q2, "rho": self.rho,
            "nu": self.nu, "ell": self.ell,
            "nu_ge_q1_half": self.nu_ge_q1_half, "passed": self.passed,
        }


def certify_strong_monotonicity(program, spec, shift_tol=1e-9):
    """Measure the strong-monotonicity modulus of ``G_r`` from the spectrum.

    ``nu = lambda_min(sym(grad G_r))`` is always measured, never assumed.
    ``nu_ge_q1_half`` records whether ``grad G_r + grad G_r^T - q1 I`` is
    positive semidefinite (up to ``shift_tol``); ``passed`` only needs ``nu > 0``.
    """
    J = metric_jacobian(program, spec)
    S = J + J.T
    nu = float(jacobi_eigh(0.5 * S)[0])
    shifted = float(jacobi_eigh(S - spec.q1 * np.eye(S.shape[0]))[0])
    return MonotonicityCertificate(
        k=spec.k, q1=spec.q1, q2=spec.q2, rho=spec.rho,
        nu=nu, ell=estimate_lipschitz(program, spec, J),
        lambda_min_shifted=shifted,
        nu_ge_q1_half=bool(shifted > -shift_tol),
        passed=bool(nu > 0),
    )
