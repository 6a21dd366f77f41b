"""Linearly constrained convex quadratic programs and their generators.

A program is ``min 1/2 x^T H x + c^T x  s.t.  A x <= b``. Random instances
are drawn with numpy's PCG64 generator (``numpy.random.default_rng``) and
standard-normal entries, so a seed fully determines the instance on every
platform numpy supports.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .linalg import jacobi_eigh

MAX_RANK_REDRAWS = 16
SYMMETRY_TOL = 1e-12


class GeneratorError(RuntimeError):
    """Raised when a generator cannot produce a full-row-rank constraint matrix."""


def _frozen(a, ndim):
    arr = np.array(a, dtype=np.float64, copy=True)
    if arr.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class ConvexQuadraticProgram:
    H: np.ndarray
    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        H = _frozen(self.H, 2)
        c = _frozen(self.c, 1)
        A = _frozen(self.A, 2)
        b = _frozen(self.b, 1)
        n = H.shape[0]
        if H.shape != (n, n) or c.shape != (n,):
            raise ValueError(f"H must be n x n and c length n, got {H.shape} and {c.shape}")
        if A.shape[1] != n or b.shape != (A.shape[0],):
            raise ValueError(f"A must be m x {n} and b length m, got {A.shape} and {b.shape}")
        if A.shape[0] < 1:
            raise ValueError("at least one constraint is required")
        if float(np.max(np.abs(H - H.T))) > SYMMETRY_TOL:
            raise ValueError("H must be symmetric")
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "provenance", dict(self.provenance))

    @property
    def n(self) -> int:
        return self.H.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def objective(self, x):
        x = np.asarray(x, dtype=float)
        return float(0.5 * x @ self.H @ x + self.c @ x)

    def objective_gradient(self, x):
        return self.H @ np.asarray(x, dtype=float) + self.c

    def to_dict(self) -> dict[str, Any]:
        d = {
            "n": self.n,
            "m": self.m,
            "H": self.H.tolist(),
            "c": self.c.tolist(),
            "A": self.A.tolist(),
            "b": self.b.tolist(),
        }
        if self.provenance:
            d["provenance"] = dict(self.provenance)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ConvexQuadraticProgram":
        prog = cls(H=d["H"], c=d["c"], A=d["A"], b=d["b"], provenance=d.get("provenance", {}))
        if ("n" in d and d["n"] != prog.n) or ("m" in d and d["m"] != prog.m):
            raise ValueError("declared n/m do not match the matrix shapes")
        return prog

    def save(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=1))

    @classmethod
    def load(cls, path) -> "ConvexQuadraticProgram":
        return cls.from_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True, eq=False)
class PrimalDualPoint:
    """State ``z = (x, lambda)`` of the primal-dual dynamics."""

    x: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(np.atleast_1d(self.x), 1))
        object.__setattr__(self, "lam", _frozen(np.atleast_1d(self.lam), 1))

    @property
    def z(self) -> np.ndarray:
        return np.concatenate([self.x, self.lam])

    @classmethod
    def from_vector(cls, z, n: int) -> "PrimalDualPoint":
        z = np.asarray(z, dtype=float)
        return cls(z[:n], z[n:])

    def __iter__(self):
        yield self.x
        yield self.lam


def as_vector(program: ConvexQuadraticProgram, z) -> np.ndarray:
    """Flatten a point (or pass through an array), checking its length."""
    if isinstance(z, PrimalDualPoint):
        v = z.z
    else:
        v = np.asarray(z, dtype=float).ravel()
    if v.shape != (program.n + program.m,):
        raise ValueError(f"point has length {v.shape[0]}, expected n + m = {program.n + program.m}")
    return v


def _full_rank_gaussian(rng, m, n):
    for _ in range(MAX_RANK_REDRAWS):
        A = rng.standard_normal((m, n))
        if np.linalg.matrix_rank(A) == m:
            return A
    raise GeneratorError(f"could not draw a rank-{m} {m}x{n} matrix in {MAX_RANK_REDRAWS} tries")


def make_random_qp(seed: int, n: int, m: int, hessian_scale: float = 20.0, c=None) -> ConvexQuadraticProgram:
    """Example-1 style instance: ``H = hessian_scale * I``, Gaussian ``A`` and ``b``.

    Draw order is ``A`` (redrawn until rank ``m``), then ``b``.
    """
    if not (n >= m >= 1):
        raise ValueError(f"need n >= m >= 1, got n={n}, m={m}")
    if not hessian_scale > 0:
        raise ValueError("hessian_scale must be positive")
    rng = np.random.default_rng(seed)
    A = _full_rank_gaussian(rng, m, n)
    b = rng.standard_normal(m)
    c = np.zeros(n) if c is None else np.asarray(c, dtype=float)
    return ConvexQuadraticProgram(
        H=hessian_scale * np.eye(n), c=c, A=A, b=b,
        provenance={"generator": "random_qp", "seed": int(seed), "n": n, "m": m,
                    "hessian_scale": float(hessian_scale)},
    )


def make_l2_least_squares(seed: int, m: int, n: int, theta: float = 1.0) -> ConvexQuadraticProgram:
    """Regularized least squares ``||Cx - d||^2 + theta/2 ||x||^2`` subject to ``Ax <= b``.

    Stored as ``H = 2 C^T C + theta I`` and ``c = -2 C^T d``; the constant
    ``||d||^2`` is dropped. Draw order: ``C``, ``d``, ``A`` (with redraws), ``b``.
    """
    if not theta > 0:
        raise ValueError("theta must be positive")
    if not (n >= m >= 1):
        raise ValueError(f"need n >= m >= 1, got n={n}, m={m}")
    rng = np.random.default_rng(seed)
    C = rng.standard_normal((m, n))
    d = rng.standard_normal(m)
    A = _full_rank_gaussian(rng, m, n)
    b = rng.standard_normal(m)
    return least_squares_program(C, d, A, b, theta, provenance={
        "generator": "l2ls", "seed": int(seed), "n": n, "m": m, "theta": float(theta)})


def least_squares_program(C, d, A, b, theta, provenance=None):
    C = np.asarray(C, dtype=float)
    d = np.asarray(d, dtype=float)
    H = 2.0 * C.T @ C + theta * np.eye(C.shape[1])
    H = 0.5 * (H + H.T)
    return ConvexQuadraticProgram(H=H, c=-2.0 * C.T @ d, A=A, b=b, provenance=provenance or {})


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    value: Any
    detail: str = ""


def validate(program: ConvexQuadraticProgram) -> list[AssumptionCheck]:
    """Check strong convexity and the constraint-matrix assumptions.

    Returns every check (failed ones included) rather than raising. The
    program satisfies the standing assumptions iff all checks pass.
    """
    mu = float(jacobi_eigh(program.H)[0])
    rank = int(np.linalg.matrix_rank(program.A))
    q = jacobi_eigh(program.A @ program.A.T)
    q1, q2 = float(q[0]), float(q[-1])
    return [
        AssumptionCheck("strong_convexity", mu > 0, mu, f"lambda_min(H) = {mu:.6g}"),
        AssumptionCheck("full_row_rank", rank == program.m, rank, f"rank(A) = {rank}, m = {program.m}"),
        AssumptionCheck("constraint_spectrum", q1 > 0, (q1, q2),
                        f"q1 = lambda_min(AA^T) = {q1:.6g}, q2 = lambda_max(AA^T) = {q2:.6g}"),
    ]


def all_passed(checks) -> bool:
    return all(ch.passed for ch in checks)
