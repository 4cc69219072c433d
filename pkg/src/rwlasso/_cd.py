"""Compiled coordinate-descent kernels (covariance form).

The objective is ``sum_i w_i (y_i - x_i'b)^2 + sum_j pen_j |b_j|`` with
``pen_j = lambda * W0_j``. Kernels work on ``G = X'DX`` and ``c = X'Dy``.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def kkt_violation(G, c, pen, beta):
    """Max KKT violation (unscaled) for the weighted LASSO in covariance form."""
    p = c.shape[0]
    worst = 0.0
    for j in range(p):
        g = c[j]
        for k in range(p):
            g -= G[j, k] * beta[k]
        g2 = 2.0 * g
        if beta[j] > 0.0:
            v = abs(g2 - pen[j])
        elif beta[j] < 0.0:
            v = abs(g2 + pen[j])
        else:
            v = abs(g2) - pen[j]
        if v > worst:
            worst = v
    return worst


@njit(cache=True, nogil=True)
def objective(G, c, yDy, pen, beta):
    quad = yDy - 2.0 * np.dot(beta, c) + np.dot(beta, G @ beta)
    return quad + np.sum(pen * np.abs(beta))


@njit(cache=True, nogil=True)
def polish(G, c, pen, beta):
    """Solve the stationarity equations exactly on the current active set.

    With signs ``s`` held fixed, ``G_AA b_A = c_A - pen_A s_A / 2``. The
    result replaces ``beta`` only if the signs of penalized coordinates survive and the KKT
    violation does not grow. Returns True when accepted.
    """
    p = c.shape[0]
    idx = np.empty(p, dtype=np.int64)
    m = 0
    for j in range(p):
        if beta[j] != 0.0:
            idx[m] = j
            m += 1
    if m == 0:
        return False
    L = np.zeros((m, m))
    r = np.empty(m)
    for a in range(m):
        j = idx[a]
        sgn = 1.0 if beta[j] > 0.0 else -1.0
        r[a] = c[j] - 0.5 * pen[j] * sgn
    for k in range(m):
        d = G[idx[k], idx[k]]
        for t in range(k):
            d -= L[k, t] * L[k, t]
        if not d > 1e-12 * G[idx[k], idx[k]]:
            return False
        L[k, k] = np.sqrt(d)
        for i in range(k + 1, m):
            v = G[idx[i], idx[k]]
            for t in range(k):
                v -= L[i, t] * L[k, t]
            L[i, k] = v / L[k, k]
    z = np.empty(m)
    for i in range(m):
        v = r[i]
        for t in range(i):
            v -= L[i, t] * z[t]
        z[i] = v / L[i, i]
    x = np.empty(m)
    for i in range(m - 1, -1, -1):
        v = z[i]
        for t in range(i + 1, m):
            v -= L[t, i] * x[t]
        x[i] = v / L[i, i]
    cand = beta.copy()
    for a in range(m):
        j = idx[a]
        if pen[j] > 0.0 and x[a] * beta[j] <= 0.0:
            return False
        cand[j] = x[a]
    if kkt_violation(G, c, pen, cand) <= kkt_violation(G, c, pen, beta):
        beta[:] = cand
        return True
    return False


@njit(cache=True, nogil=True)
def coordinate_descent(G, c, pen, beta, tol, max_sweeps, order_seed, history, yDy):
    """Cyclic (or seeded random-order) coordinate descent, in place on ``beta``.

    ``tol`` is an unscaled KKT tolerance. ``order_seed < 0`` selects cyclic
    order. On convergence the active-set solution is polished by an exact
    solve (see :func:`polish`). When ``history`` is non-empty, the objective after sweep ``s`` is
    written to ``history[s]``. Returns ``(sweeps, converged)``.
    """
    p = c.shape[0]
    grad = c - G @ beta
    order = np.arange(p)
    if order_seed >= 0:
        np.random.seed(order_seed)
    for sweep in range(max_sweeps):
        if order_seed >= 0:
            order = np.random.permutation(p)
        for jj in range(p):
            j = order[jj]
            gjj = G[j, j]
            if gjj <= 0.0:
                continue
            old = beta[j]
            z = grad[j] + gjj * old
            thr = 0.5 * pen[j]
            if z > thr:
                new = (z - thr) / gjj
            elif z < -thr:
                new = (z + thr) / gjj
            else:
                new = 0.0
            if new != old:
                delta = new - old
                beta[j] = new
                for k in range(p):
                    grad[k] -= G[k, j] * delta
        if sweep < history.shape[0]:
            history[sweep] = objective(G, c, yDy, pen, beta)
        if kkt_violation(G, c, pen, beta) <= tol:
            polish(G, c, pen, beta)
            return sweep + 1, True
        # refresh to stop drift from incremental updates
        grad = c - G @ beta
    return max_sweeps, False
