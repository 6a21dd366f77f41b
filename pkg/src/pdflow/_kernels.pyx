# cython: language_level=3
"""Compiled inner loops: the projected Euler iteration and cyclic Jacobi.

Both functions mirror ``pdflow._fallback`` operation for operation so the
two backends are interchangeable; see ``pdflow._backend``.
"""
import numpy as np

cimport numpy as cnp
from libc.math cimport isfinite, sqrt

cnp.import_array()


def euler_loop(
    const double[:, ::1] H,
    const double[::1] c,
    const double[:, ::1] A,
    const double[::1] b,
    const double[::1] z0,
    int metric,
    double k,
    int metric_projection,
    double alpha,
    double beta,
    double step,
    long max_iters,
    double stop_tol,
    long dense_until,
    long stride,
    double blowup,
    double[:, ::1] rec_states,
    double[::1] rec_resid,
    cnp.int64_t[::1] rec_iters,
):
    cdef Py_ssize_t n = H.shape[0]
    cdef Py_ssize_t m = A.shape[0]
    cdef Py_ssize_t N = n + m
    cdef Py_ssize_t cap = rec_states.shape[0]
    cdef Py_ssize_t i, j
    cdef long it = 0
    cdef long n_rec = 0
    cdef int status = 1
    cdef int recorded
    cdef double acc, res, sb = step * beta, nrm, inv_k = 0.0
    cdef bint bad

    z_arr = np.array(z0, dtype=np.float64, copy=True)
    cdef double[::1] z = z_arr
    cdef double[::1] zn = np.empty(N)
    cdef double[::1] p = np.empty(N)
    cdef double[::1] gx = np.empty(n)
    cdef double[::1] gl = np.empty(m)
    cdef double[::1] dx = np.empty(n)
    cdef double[::1] dl = np.empty(m)
    cdef double[::1] wl = np.empty(m)

    if metric:
        inv_k = 1.0 / k

    while True:
        # G(z) = [Hx + c + A^T lam ; b - Ax]
        for i in range(n):
            acc = c[i]
            for j in range(n):
                acc += H[i, j] * z[j]
            gx[i] = acc
        for j in range(m):
            acc = b[j]
            for i in range(n):
                acc -= A[j, i] * z[i]
                gx[i] += A[j, i] * z[n + j]
            gl[j] = acc

        if metric:
            # R^{-1} G with R^{-1} = [[kI, A^T], [A, kI]]
            for i in range(n):
                dx[i] = k * gx[i]
            for j in range(m):
                acc = k * gl[j]
                for i in range(n):
                    acc += A[j, i] * gx[i]
                    dx[i] += A[j, i] * gl[j]
                dl[j] = acc
        else:
            for i in range(n):
                dx[i] = gx[i]
            for j in range(m):
                dl[j] = gl[j]

        for i in range(n):
            p[i] = z[i] - alpha * dx[i]
        for j in range(m):
            wl[j] = z[n + j] - alpha * dl[j]
            p[n + j] = wl[j] if wl[j] > 0.0 else 0.0
        if metric and metric_projection:
            for j in range(m):
                acc = (p[n + j] - wl[j]) * inv_k
                if acc != 0.0:
                    for i in range(n):
                        p[i] += A[j, i] * acc

        acc = 0.0
        for i in range(N):
            acc += (p[i] - z[i]) * (p[i] - z[i])
        res = sqrt(acc) / alpha

        recorded = 0
        if cap > 0 and (it < dense_until or it % stride == 0):
            if n_rec < cap:
                for i in range(N):
                    rec_states[n_rec, i] = z[i]
                rec_resid[n_rec] = res
                rec_iters[n_rec] = it
                n_rec += 1
            recorded = 1

        if res <= stop_tol:
            status = 0
            break
        if it >= max_iters:
            status = 1
            break

        bad = False
        nrm = 0.0
        for i in range(N):
            zn[i] = z[i] + sb * (p[i] - z[i])
            if not isfinite(zn[i]):
                bad = True
            nrm += zn[i] * zn[i]
        if bad or not (sqrt(nrm) <= blowup):
            status = 2
            break
        for i in range(N):
            z[i] = zn[i]
        it += 1

    if cap > 0 and not recorded and n_rec < cap:
        for i in range(N):
            rec_states[n_rec, i] = z[i]
        rec_resid[n_rec] = res
        rec_iters[n_rec] = it
        n_rec += 1

    return z_arr, it, status, n_rec, res


def jacobi_inplace(double[:, ::1] a, double[:, ::1] v, int want_vectors,
                   double tol, int max_sweeps):
    """Cyclic Jacobi on the symmetric matrix ``a`` (overwritten).

    Returns the number of sweeps used, or -1 when the cap was hit.
    """
    cdef Py_ssize_t n = a.shape[0]
    cdef Py_ssize_t p, q, r
    cdef int sweep
    cdef double off, total, theta, t, cs, sn, apq, x, y

    total = 0.0
    for p in range(n):
        for q in range(n):
            total += a[p, q] * a[p, q]
    total = sqrt(total)

    for sweep in range(max_sweeps + 1):
        off = 0.0
        for p in range(n):
            for q in range(n):
                if p != q:
                    off += a[p, q] * a[p, q]
        if sqrt(off) <= tol * total:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + sqrt(theta * theta + 1.0))
                cs = 1.0 / sqrt(t * t + 1.0)
                sn = t * cs
                for r in range(n):
                    x = a[r, p]
                    y = a[r, q]
                    a[r, p] = cs * x - sn * y
                    a[r, q] = sn * x + cs * y
                for r in range(n):
                    x = a[p, r]
                    y = a[q, r]
                    a[p, r] = cs * x - sn * y
                    a[q, r] = sn * x + cs * y
                a[p, q] = 0.0
                a[q, p] = 0.0
                if want_vectors:
                    for r in range(n):
                        x = v[r, p]
                        y = v[r, q]
                        v[r, p] = cs * x - sn * y
                        v[r, q] = sn * x + cs * y
    return -1
