"""Lagrangian, its gradient map and KKT residuals for ``Ax <= b`` programs."""
from dataclasses import asdict, dataclass

import numpy as np

from .linalg import jacobi_eigh, symmetric_part
from .problem import as_vector

ZERO_EIG_TOL = 1e-9


def split(program, z):
    v = as_vector(program, z)
    return v[: program.n], v[program.n:]


def lagrangian_value(program, z):
    """``L(x, lam) = f(x) + lam^T (Ax - b)``."""
    x, lam = split(program, z)
    return program.objective(x) + float(lam @ (program.A @ x - program.b))


def gradient_map(program, z):
    """``G(z) = [grad f(x) + A^T lam ; -(Ax - b)]``."""
    x, lam = split(program, z)
    return np.concatenate([
        program.objective_gradient(x) + program.A.T @ lam,
        program.b - program.A @ x,
    ])


def jacobian_of_gradient_map(program):
    """Constant Jacobian ``[[H, A^T], [-A, 0]]`` of the gradient map."""
    m = program.m
    return np.block([[program.H, program.A.T], [-program.A, np.zeros((m, m))]])


@dataclass(frozen=True)
class KktResidual:
    stationarity: float
    primal_infeasibility: float
    dual_infeasibility: float
    complementarity: float

    @property
    def total(self):
        return max(self.stationarity, self.primal_infeasibility,
                   self.dual_infeasibility, self.complementarity)

    def to_dict(self):
        d = asdict(self)
        d["total"] = self.total
        return d


def kkt_residual(program, z):
    x, lam = split(program, z)
    slack = program.A @ x - program.b
    return KktResidual(
        stationarity=float(np.linalg.norm(program.objective_gradient(x) + program.A.T @ lam)),
        primal_infeasibility=float(np.linalg.norm(np.maximum(slack, 0.0))),
        dual_infeasibility=float(np.linalg.norm(np.maximum(-lam, 0.0))),
        complementarity=abs(float(lam @ slack)),
    )


def monotonicity_gap(program, z1, z2):
    """``(G(z1) - G(z2))^T (z1 - z2)``; nonnegative for convex programs."""
    dz = as_vector(program, z1) - as_vector(program, z2)
    return float((gradient_map(program, z1) - gradient_map(program, z2)) @ dz)


@dataclass(frozen=True)
class EuclideanMonotonicity:
    """Spectrum of ``sym(grad G)``: monotone, and strongly so only if no zero eigenvalues."""

    eigenvalues: np.ndarray
    zero_count: int
    nu: float
    monotone: bool

    def to_dict(self):
        return {
            "mode": "euclidean",
            "nu": self.nu,
            "zero_eigenvalues": self.zero_count,
            "monotone": self.monotone,
            "strongly_monotone": self.monotone and self.zero_count == 0 and self.nu > 0,
            "passed": self.monotone,
        }


def euclidean_monotonicity(program, zero_tol=ZERO_EIG_TOL):
    w = jacobi_eigh(symmetric_part(jacobian_of_gradient_map(program)))
    zero_count = int(np.sum(np.abs(w) <= zero_tol))
    nu = float(w[0])
    if abs(nu) <= zero_tol:
        nu = 0.0
    return EuclideanMonotonicity(eigenvalues=w, zero_count=zero_count, nu=nu,
                                 monotone=bool(w[0] >= -zero_tol))
