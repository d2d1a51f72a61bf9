"""Pure-Python/numpy reference kernels (fallback when the extension is not built)."""
from __future__ import annotations

import math

import numpy as np


def lasso_cd(X, y, alpha, coef, tol, max_sweeps):
    """Cyclic coordinate descent for ``(1/2N)||y - Xb||^2 + alpha*||b||_1``.

    ``X`` is column-standardized and ``y`` centered (no intercept). ``coef``
    is the warm start and is updated in place. Returns
    ``(coef, sweeps, objective_trace, converged)``; the trace holds the
    objective before the first sweep and after every sweep.
    """
    X = np.ascontiguousarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    col_sq = (X * X).sum(axis=0) / n
    resid = y - X @ coef
    trace = [0.5 * resid @ resid / n + alpha * np.abs(coef).sum()]
    for sweep in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(p):
            if col_sq[j] == 0.0:
                continue
            old = coef[j]
            rho = X[:, j] @ resid / n + col_sq[j] * old
            if rho > alpha:
                new = (rho - alpha) / col_sq[j]
            elif rho < -alpha:
                new = (rho + alpha) / col_sq[j]
            else:
                new = 0.0
            if new != old:
                resid -= X[:, j] * (new - old)
                coef[j] = new
                max_delta = max(max_delta, abs(new - old))
        trace.append(0.5 * resid @ resid / n + alpha * np.abs(coef).sum())
        if max_delta < tol:
            return coef, sweep, trace, True
    return coef, max_sweeps, trace, False


def brandes(lengths, rtol):
    """All-sources Brandes accumulation on a dense length matrix.

    ``lengths[u, v]`` is the edge length u->v, ``inf`` where there is no
    edge. Path lengths within ``rtol`` (relative) are treated as ties.
    Returns ``(betweenness, dist)`` where betweenness sums over ordered
    (source, target) pairs.
    """
    L = np.asarray(lengths, dtype=float)
    n = L.shape[0]
    bc = np.zeros(n)
    dist_all = np.full((n, n), math.inf)
    for s in range(n):
        dist = [math.inf] * n
        sigma = [0.0] * n
        preds = [[] for _ in range(n)]
        done = [False] * n
        dist[s] = 0.0
        sigma[s] = 1.0
        order = []
        for _ in range(n):
            v, best = -1, math.inf
            for u in range(n):
                if not done[u] and dist[u] < best:
                    v, best = u, dist[u]
            if v < 0:
                break
            done[v] = True
            order.append(v)
            for w in range(n):
                lw = L[v, w]
                if w == v or done[w] or not math.isfinite(lw):
                    continue
                alt = best + lw
                dw = dist[w]
                if math.isfinite(dw) and abs(alt - dw) <= rtol * max(alt, dw):
                    sigma[w] += sigma[v]
                    preds[w].append(v)
                elif alt < dw:
                    dist[w] = alt
                    sigma[w] = sigma[v]
                    preds[w] = [v]
        delta = [0.0] * n
        for w in reversed(order):
            for v in preds[w]:
                delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w])
            if w != s:
                bc[w] += delta[w]
        dist_all[s] = dist
    return bc, dist_all
