# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled counterparts of the kernels in ``_pykernels``; identical contracts."""
import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, INFINITY, isfinite

cnp.import_array()


def lasso_cd(X, y, double alpha, coef, double tol, long max_sweeps):
    cdef cnp.ndarray[double, ndim=2, mode="fortran"] Xf = np.asfortranarray(X, dtype=np.float64)
    cdef double[::1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef double[::1] b = coef
    cdef Py_ssize_t n = Xf.shape[0], p = Xf.shape[1], i, j
    cdef double[::1, :] Xv = Xf
    cdef double[::1] resid = np.empty(n)
    cdef double[::1] col_sq = np.zeros(p)
    cdef double acc, old, new, rho, max_delta, obj, l1
    cdef long sweep

    for j in range(p):
        acc = 0.0
        for i in range(n):
            acc += Xv[i, j] * Xv[i, j]
        col_sq[j] = acc / n
    for i in range(n):
        resid[i] = yv[i]
    for j in range(p):
        if b[j] != 0.0:
            for i in range(n):
                resid[i] -= Xv[i, j] * b[j]

    trace = [_objective(resid, b, alpha, n, p)]
    for sweep in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(p):
            if col_sq[j] == 0.0:
                continue
            old = b[j]
            acc = 0.0
            for i in range(n):
                acc += Xv[i, j] * resid[i]
            rho = acc / n + col_sq[j] * old
            if rho > alpha:
                new = (rho - alpha) / col_sq[j]
            elif rho < -alpha:
                new = (rho + alpha) / col_sq[j]
            else:
                new = 0.0
            if new != old:
                for i in range(n):
                    resid[i] -= Xv[i, j] * (new - old)
                b[j] = new
                if fabs(new - old) > max_delta:
                    max_delta = fabs(new - old)
        trace.append(_objective(resid, b, alpha, n, p))
        if max_delta < tol:
            return coef, sweep, trace, True
    return coef, max_sweeps, trace, False


cdef double _objective(double[::1] resid, double[::1] b, double alpha,
                       Py_ssize_t n, Py_ssize_t p):
    cdef double sse = 0.0, l1 = 0.0
    cdef Py_ssize_t i
    for i in range(n):
        sse += resid[i] * resid[i]
    for i in range(p):
        l1 += fabs(b[i])
    return 0.5 * sse / n + alpha * l1


def brandes(lengths, double rtol):
    cdef double[:, ::1] L = np.ascontiguousarray(lengths, dtype=np.float64)
    cdef Py_ssize_t n = L.shape[0]
    bc_arr = np.zeros(n)
    dist_arr = np.full((n, n), INFINITY)
    cdef double[::1] bc = bc_arr
    cdef double[:, ::1] dist_all = dist_arr
    cdef double[::1] dist = np.empty(n)
    cdef double[::1] sigma = np.empty(n)
    cdef double[::1] delta = np.empty(n)
    cdef char[::1] done = np.empty(n, dtype=np.int8)
    cdef char[:, ::1] pred = np.empty((n, n), dtype=np.int8)
    cdef Py_ssize_t[::1] order = np.empty(n, dtype=np.intp)
    cdef Py_ssize_t s, k, u, v, w, count
    cdef double best, alt, dw, lw, big

    for s in range(n):
        for u in range(n):
            dist[u] = INFINITY
            sigma[u] = 0.0
            delta[u] = 0.0
            done[u] = 0
            for v in range(n):
                pred[u, v] = 0
        dist[s] = 0.0
        sigma[s] = 1.0
        count = 0
        for k in range(n):
            v = -1
            best = INFINITY
            for u in range(n):
                if not done[u] and dist[u] < best:
                    v = u
                    best = dist[u]
            if v < 0:
                break
            done[v] = 1
            order[count] = v
            count += 1
            for w in range(n):
                lw = L[v, w]
                if w == v or done[w] or not isfinite(lw):
                    continue
                alt = best + lw
                dw = dist[w]
                big = alt if alt > dw else dw
                if isfinite(dw) and fabs(alt - dw) <= rtol * big:
                    sigma[w] += sigma[v]
                    pred[w, v] = 1
                elif alt < dw:
                    dist[w] = alt
                    sigma[w] = sigma[v]
                    for u in range(n):
                        pred[w, u] = 0
                    pred[w, v] = 1
        for k in range(count - 1, -1, -1):
            w = order[k]
            for v in range(n):
                if pred[w, v]:
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
        for u in range(n):
            dist_all[s, u] = dist[u]
    return bc_arr, dist_arr
