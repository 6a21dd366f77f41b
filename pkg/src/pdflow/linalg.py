"""Dense symmetric eigensolver and small helpers used by the certificates.

Eigenvalues come from cyclic Jacobi rotations (compiled sweep when
available). Stopping is on the off-diagonal Frobenius norm relative to the
Frobenius norm of the input, so matrices with large entries (k ~ 1e5 in the
regularized least-squares experiment) converge to the same relative
accuracy as unit-scale ones.
"""
import numpy as np

from ._backend import get_kernels

JACOBI_TOL = 1e-12
JACOBI_MAX_SWEEPS = 100


class EigenSolverError(RuntimeError):
    pass


def symmetric_part(M):
    M = np.asarray(M, dtype=float)
    return 0.5 * (M + M.T)


def jacobi_eigh(S, vectors=False, tol=JACOBI_TOL, max_sweeps=JACOBI_MAX_SWEEPS, backend=None):
    """Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    S : (N, N) array_like
        Symmetric matrix. Asymmetry above ``1e-10`` relative is rejected.
    vectors : bool
        Also accumulate the eigenvectors.
    tol : float
        Relative off-diagonal Frobenius tolerance.
    max_sweeps : int
        Sweep cap; exceeding it raises :class:`EigenSolverError`.

    Returns
    -------
    w : ndarray
        Eigenvalues in ascending order.
    V : ndarray, optional
        Orthonormal eigenvectors as columns, ordered like ``w``.
    """
    a = np.array(S, dtype=np.float64, order="C", copy=True)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    scale = max(float(np.max(np.abs(a))), 1.0) if a.size else 1.0
    if a.size and float(np.max(np.abs(a - a.T))) > 1e-10 * scale:
        raise ValueError("matrix is not symmetric")
    a = symmetric_part(a).copy(order="C")
    n = a.shape[0]
    v = np.eye(n) if vectors else np.zeros((0, 0))
    sweeps = get_kernels(backend).jacobi_inplace(a, v, int(vectors), float(tol), int(max_sweeps))
    if sweeps < 0:
        raise EigenSolverError(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.diag(a).copy()
    order = np.argsort(w, kind="stable")
    if vectors:
        return w[order], v[:, order]
    return w[order]


def eigvalsh(S, backend=None):
    return jacobi_eigh(S, backend=backend)


def lambda_min(S):
    return float(jacobi_eigh(S)[0])


def lambda_max(S):
    return float(jacobi_eigh(S)[-1])


def power_iteration(M, tol=1e-13, max_iter=100_000):
    """Spectral radius of ``M`` by power iteration from the all-ones vector.

    Deterministic start so repeated calls agree bit for bit. Intended for
    matrices with a real dominant eigenvalue (products of positive definite
    factors); returns the last estimate if ``max_iter`` is reached.
    """
    M = np.asarray(M, dtype=float)
    v = np.ones(M.shape[0]) / np.sqrt(M.shape[0])
    est = 0.0
    for _ in range(max_iter):
        w = M @ v
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        if abs(nrm - est) <= tol * nrm:
            return nrm
        est = nrm
    return est
