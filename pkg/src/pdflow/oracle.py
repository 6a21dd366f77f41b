"""Reference saddle points for verification.

``active_set_solve`` enumerates active sets and solves the equality KKT
system for each (exact, ``m <= 20``). ``dual_nnls_solve`` is an
independent exact route for larger ``m``: the dual of a strictly convex QP
is a nonnegative least-squares problem, solved by Lawson-Hanson and then
polished on its active set.
"""
import itertools
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve, solve_triangular
from scipy.optimize import nnls

from .lagrangian import kkt_residual, lagrangian_value
from .problem import as_vector

MAX_ENUM_M = 20
ACCEPT_TOL = 1e-10
KKT_TOL = 1e-9


class OracleError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class OracleSolution:
    x_star: np.ndarray
    lambda_star: np.ndarray
    active_set: tuple
    kkt_total: float
    system_residual: float = 0.0

    @property
    def z_star(self):
        return np.concatenate([self.x_star, self.lambda_star])


def solve_equality_kkt(program, active):
    """Solve ``[[H, A_S^T], [A_S, 0]] [x; lam_S] = [-c; b_S]`` by LU with partial pivoting.

    Returns ``(x, lam, residual)`` with ``lam`` zero off ``active`` and the
    back-substituted residual of the linear system. A singular system
    (``A_S`` without full row rank) raises :class:`numpy.linalg.LinAlgError`.
    """
    n, m = program.n, program.m
    S = list(active)
    A_S = program.A[S]
    K = np.block([[program.H, A_S.T], [A_S, np.zeros((len(S), len(S)))]])
    rhs = np.concatenate([-program.c, program.b[S]])
    with warnings.catch_warnings():
        warnings.simplefilter("error", LinAlgWarning)
        try:
            sol = lu_solve(lu_factor(K), rhs)
        except LinAlgWarning:
            raise np.linalg.LinAlgError(f"singular KKT system for active set {tuple(S)}") from None
    resid = float(np.linalg.norm(K @ sol - rhs, np.inf)) / max(1.0, float(np.linalg.norm(rhs, np.inf)))
    lam = np.zeros(m)
    lam[S] = sol[n:]
    return sol[:n], lam, resid


def active_set_solve(program, max_m=MAX_ENUM_M, tol=ACCEPT_TOL):
    """Saddle point by enumerating active sets, smallest first, then lexicographic."""
    m = program.m
    if m > max_m:
        raise OracleError(f"enumeration guard: m = {m} > {max_m}")
    for size in range(min(m, program.n) + 1):
        for S in itertools.combinations(range(m), size):
            try:
                x, lam, resid = solve_equality_kkt(program, S)
            except np.linalg.LinAlgError:
                continue
            if np.all(lam >= -tol) and np.all(program.A @ x <= program.b + tol):
                lam = np.maximum(lam, 0.0)
                total = kkt_residual(program, np.concatenate([x, lam])).total
                return OracleSolution(x, lam, tuple(S), total, resid)
    raise OracleError("no active set satisfies the KKT conditions (infeasible or degenerate program)")


def dual_nnls_solve(program, active_tol=1e-12):
    """Saddle point through the dual ``min_{lam>=0} 1/2 lam^T Q lam + p^T lam``.

    ``Q = A H^{-1} A^T = L L^T`` turns the dual into ``min ||L^T lam + L^{-1} p||``
    over ``lam >= 0``. The multipliers found are refined by an exact equality
    KKT solve on their support.
    """
    H, A, b, c = program.H, program.A, program.b, program.c
    Hinv_At = np.linalg.solve(H, A.T)
    Hinv_c = np.linalg.solve(H, c)
    Q = A @ Hinv_At
    Q = 0.5 * (Q + Q.T)
    p = b + A @ Hinv_c
    L = np.linalg.cholesky(Q)
    lam, _ = nnls(L.T, -solve_triangular(L, p, lower=True), maxiter=50 * program.m)
    S = tuple(int(i) for i in np.flatnonzero(lam > active_tol * max(1.0, float(np.max(lam, initial=0.0)))))
    x, lam_p, resid = solve_equality_kkt(program, S)
    if np.all(lam_p >= -ACCEPT_TOL) and np.all(A @ x <= b + ACCEPT_TOL):
        lam = np.maximum(lam_p, 0.0)
    else:
        x = -(Hinv_c + Hinv_At @ lam)
        resid = float("nan")
    total = kkt_residual(program, np.concatenate([x, lam])).total
    return OracleSolution(x, lam, S, total, resid)


def reference_solution(program):
    """Enumeration when affordable, otherwise the NNLS dual route."""
    if program.m <= 12:
        return active_set_solve(program)
    return dual_nnls_solve(program)


def verify_saddle(program, z_star, samples=1000, seed=0, slack=1e-9):
    """Sample ``L(x*, lam) <= L(x*, lam*) <= L(x, lam*)`` at random points.

    Points are drawn around ``z*`` at several scales; ``lam`` is clamped to
    be nonnegative. A candidate with a negative multiplier is rejected
    without sampling.
    """
    v = as_vector(program, z_star)
    n, m = program.n, program.m
    xs, ls = v[:n], v[n:]
    if np.any(ls < 0):
        return False
    rng = np.random.default_rng(seed)
    l_star = lagrangian_value(program, v)
    scales = np.array([1e-3, 1e-1, 1.0, 10.0])
    for i in range(samples):
        s = scales[i % len(scales)]
        x = xs + s * rng.standard_normal(n)
        lam = np.maximum(ls + s * rng.standard_normal(m), 0.0)
        if lagrangian_value(program, np.concatenate([xs, lam])) > l_star + slack:
            return False
        if l_star > lagrangian_value(program, np.concatenate([x, ls])) + slack:
            return False
    return True
