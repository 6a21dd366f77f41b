"""Pure-numpy versions of the compiled kernels in ``_kernels.pyx``.

Signatures and return values match the Cython module exactly.
"""
import math

import numpy as np


def euler_loop(H, c, A, b, z0, metric, k, metric_projection, alpha, beta, step,
               max_iters, stop_tol, dense_until, stride, blowup,
               rec_states, rec_resid, rec_iters):
    n = H.shape[0]
    cap = rec_states.shape[0]
    sb = step * beta
    inv_k = 1.0 / k if metric else 0.0
    z = np.array(z0, dtype=np.float64, copy=True)
    it = 0
    n_rec = 0
    status = 1
    recorded = False
    res = math.nan

    while True:
        x, lam = z[:n], z[n:]
        gx = H @ x + c + A.T @ lam
        gl = b - A @ x
        if metric:
            dx = k * gx + A.T @ gl
            dl = A @ gx + k * gl
        else:
            dx, dl = gx, gl
        px = x - alpha * dx
        wl = lam - alpha * dl
        pl = np.maximum(wl, 0.0)
        if metric and metric_projection:
            px = px + A.T @ ((pl - wl) * inv_k)
        p = np.concatenate([px, pl])
        res = math.sqrt(float(np.dot(p - z, p - z))) / alpha

        recorded = False
        if cap > 0 and (it < dense_until or it % stride == 0):
            if n_rec < cap:
                rec_states[n_rec] = z
                rec_resid[n_rec] = res
                rec_iters[n_rec] = it
                n_rec += 1
            recorded = True

        if res <= stop_tol:
            status = 0
            break
        if it >= max_iters:
            status = 1
            break

        zn = z + sb * (p - z)
        nrm = math.sqrt(float(np.dot(zn, zn)))
        if not np.all(np.isfinite(zn)) or not nrm <= blowup:
            status = 2
            break
        z = zn
        it += 1

    if cap > 0 and not recorded and n_rec < cap:
        rec_states[n_rec] = z
        rec_resid[n_rec] = res
        rec_iters[n_rec] = it
        n_rec += 1

    return z, it, status, n_rec, res


def jacobi_inplace(a, v, want_vectors, tol, max_sweeps):
    n = a.shape[0]
    total = math.sqrt(float(np.sum(a * a)))
    for sweep in range(max_sweeps + 1):
        off = a - np.diag(np.diag(a))
        if math.sqrt(float(np.sum(off * off))) <= tol * total:
            return sweep
        if sweep == max_sweeps:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = float(a[p, q])
                if apq == 0.0:
                    continue
                theta = (float(a[q, q]) - float(a[p, p])) / (2.0 * apq)
                if theta >= 0.0:
                    t = 1.0 / (theta + math.sqrt(theta * theta + 1.0))
                else:
                    t = -1.0 / (-theta + math.sqrt(theta * theta + 1.0))
                cs = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * cs
                colp = a[:, p].copy()
                colq = a[:, q].copy()
                a[:, p] = cs * colp - sn * colq
                a[:, q] = sn * colp + cs * colq
                rowp = a[p, :].copy()
                rowq = a[q, :].copy()
                a[p, :] = cs * rowp - sn * rowq
                a[q, :] = sn * rowp + cs * rowq
                a[p, q] = 0.0
                a[q, p] = 0.0
                if want_vectors:
                    vp = v[:, p].copy()
                    vq = v[:, q].copy()
                    v[:, p] = cs * vp - sn * vq
                    v[:, q] = sn * vp + cs * vq
    return -1
