"""Numba backend: njit-compiled mirrors of the numpy_impl kernels.

Same signatures and semantics as numpy_impl, written as explicit loops so
numba can fuse them. Compiled lazily on first call, cached on disk.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def project_simplex_1d(v):
    n = v.shape[0]
    u = np.sort(v)
    css = 0.0
    rho = 0
    theta = 0.0
    run = 0.0
    # walk the sorted values in descending order
    for k in range(1, n + 1):
        run += u[n - k]
        if u[n - k] - (run - 1.0) / k > 0.0:
            rho = k
            css = run
    theta = (css - 1.0) / rho
    w = np.empty(n)
    s = 0.0
    for i in range(n):
        wi = v[i] - theta
        if wi < 0.0:
            wi = 0.0
        w[i] = wi
        s += wi
    for i in range(n):
        w[i] /= s
    return w


@njit(cache=True)
def project_rows(V):
    m, n = V.shape
    W = np.empty((m, n))
    for i in range(m):
        W[i, :] = project_simplex_1d(V[i, :].copy())
    return W


@njit(cache=True)
def marginal_min(R, P, y):
    S, A, B = R.shape
    r = np.zeros((S, A))
    Pm = np.zeros((S, A, S))
    for s in range(S):
        for a in range(A):
            acc = 0.0
            for b in range(B):
                w = y[s, b]
                if w != 0.0:
                    acc += R[s, a, b] * w
                    for t in range(S):
                        Pm[s, a, t] += P[s, a, b, t] * w
            r[s, a] = acc
    return r, Pm


@njit(cache=True)
def marginal_max(R, P, x):
    S, A, B = R.shape
    r = np.zeros((S, B))
    Pm = np.zeros((S, B, S))
    for s in range(S):
        for a in range(A):
            w = x[s, a]
            if w != 0.0:
                for b in range(B):
                    r[s, b] += R[s, a, b] * w
                    for t in range(S):
                        Pm[s, b, t] += P[s, a, b, t] * w
    return r, Pm


@njit(cache=True)
def chain_value(r, Pj, gamma):
    S = r.shape[0]
    A = np.eye(S) - gamma * Pj
    return np.linalg.solve(A, r)


@njit(cache=True)
def policy_value(r, Pm, gamma, pi):
    S, n = r.shape
    rpi = np.zeros(S)
    Ppi = np.zeros((S, S))
    for s in range(S):
        for a in range(n):
            w = pi[s, a]
            if w != 0.0:
                rpi[s] += w * r[s, a]
                for t in range(S):
                    Ppi[s, t] += w * Pm[s, a, t]
    return chain_value(rpi, Ppi, gamma)


@njit(cache=True)
def bellman_q(r, Pm, gamma, V):
    S, n = r.shape
    q = np.empty((S, n))
    for s in range(S):
        for a in range(n):
            acc = 0.0
            for t in range(S):
                acc += Pm[s, a, t] * V[t]
            q[s, a] = r[s, a] + gamma * acc
    return q


@njit(cache=True)
def _argopt_rows(q, maximize):
    S, n = q.shape
    pi = np.empty(S, dtype=np.int64)
    for s in range(S):
        best = 0
        bv = q[s, 0]
        for a in range(1, n):
            if (maximize and q[s, a] > bv) or (not maximize and q[s, a] < bv):
                bv = q[s, a]
                best = a
        pi[s] = best
    return pi


@njit(cache=True)
def optimal_value(r, Pm, gamma, maximize):
    S, n = r.shape
    pi = _argopt_rows(r, maximize)
    V = np.zeros(S)
    V_prev = np.zeros(S)
    q = r.copy()
    have_prev = False
    for _ in range(500):
        rpi = np.empty(S)
        Ppi = np.empty((S, S))
        for s in range(S):
            rpi[s] = r[s, pi[s]]
            for t in range(S):
                Ppi[s, t] = Pm[s, pi[s], t]
        V = chain_value(rpi, Ppi, gamma)
        q = bellman_q(r, Pm, gamma, V)
        pi_new = _argopt_rows(q, maximize)
        same = True
        for s in range(S):
            if pi_new[s] != pi[s]:
                same = False
                break
        if same:
            break
        if have_prev:
            dv = 0.0
            vm = 0.0
            for s in range(S):
                d = abs(V[s] - V_prev[s])
                if d > dv:
                    dv = d
                av = abs(V[s])
                if av > vm:
                    vm = av
            if dv <= 1e-13 * (1.0 + vm):
                break
        for s in range(S):
            V_prev[s] = V[s]
        have_prev = True
        pi = pi_new
    residual = 0.0
    for s in range(S):
        opt = q[s, 0]
        for a in range(1, n):
            if (maximize and q[s, a] > opt) or (not maximize and q[s, a] < opt):
                opt = q[s, a]
        d = abs(V[s] - opt)
        if d > residual:
            residual = d
    return V, pi, residual


@njit(cache=True)
def joint_chain(R, P, x, y):
    S, A, B = R.shape
    r = np.zeros(S)
    Pj = np.zeros((S, S))
    for s in range(S):
        for a in range(A):
            wa = x[s, a]
            if wa != 0.0:
                for b in range(B):
                    w = wa * y[s, b]
                    if w != 0.0:
                        r[s] += w * R[s, a, b]
                        for t in range(S):
                            Pj[s, t] += w * P[s, a, b, t]
    return r, Pj


@njit(cache=True)
def visitation_solve(Pj, gamma, rho):
    S = Pj.shape[0]
    A = np.empty((S, S))
    for i in range(S):
        for j in range(S):
            A[i, j] = (1.0 if i == j else 0.0) - gamma * Pj[j, i]
    d = np.linalg.solve(A, (1.0 - gamma) * rho)
    for i in range(S):
        if d[i] < 0.0 and d[i] > -1e-12:
            d[i] = 0.0
    return d


@njit(cache=True)
def ogda_step(r, Pm, gamma, eta, sign, x, tilde, first):
    q = bellman_q(r, Pm, gamma, policy_value(r, Pm, gamma, x))
    step = sign * eta
    if first:
        tilde_new = tilde.copy()
    else:
        tilde_new = project_rows(tilde + step * q)
    x_new = project_rows(tilde_new + step * q)
    return x_new, tilde_new, q


@njit(cache=True)
def avg_ogda_step(r, Pm, gamma, eta, sign, alpha, x, tilde, V, qbar, xhat, first):
    S, n = r.shape
    q = bellman_q(r, Pm, gamma, V)
    step = sign * eta
    if first:
        tilde_new = tilde.copy()
    else:
        tilde_new = project_rows(tilde + step * q)
    x_new = project_rows(tilde_new + step * q)
    qbar_new = (1.0 - alpha) * qbar + alpha * q
    V_new = np.empty(S)
    for s in range(S):
        opt = qbar_new[s, 0]
        for a in range(1, n):
            if (sign > 0.0 and qbar_new[s, a] > opt) or (sign < 0.0 and qbar_new[s, a] < opt):
                opt = qbar_new[s, a]
        V_new[s] = opt
    xhat_new = (1.0 - alpha) * xhat + alpha * x
    return x_new, tilde_new, qbar_new, V_new, xhat_new, q


@njit(cache=True)
def actor_critic_step(r, Pm, gamma, eta, sign, beta, x, tilde, V):
    S, n = r.shape
    q = bellman_q(r, Pm, gamma, V)
    step = sign * eta
    tilde_new = project_rows(tilde + step * q)
    x_new = project_rows(tilde_new + step * q)
    V_new = np.empty(S)
    for s in range(S):
        ret = 0.0
        for a in range(n):
            ret += x[s, a] * q[s, a]
        V_new[s] = (1.0 - beta) * V[s] + beta * ret
    return x_new, tilde_new, V_new, q


@njit(cache=True)
def duality_gap(M, x, y):
    A, B = M.shape
    hi = -np.inf
    for b in range(B):
        acc = 0.0
        for a in range(A):
            acc += M[a, b] * x[a]
        if acc > hi:
            hi = acc
    lo = np.inf
    for a in range(A):
        acc = 0.0
        for b in range(B):
            acc += M[a, b] * y[b]
        if acc < lo:
            lo = acc
    return hi - lo


@njit(cache=True)
def matrix_game_solve(M, eta, tol, max_iter, check_every, x0, y0):
    A, B = M.shape
    MT = M.T.copy()
    x = x0.copy()
    y = y0.copy()
    xt = x.copy()
    yt = y.copy()
    xavg = x.copy()
    yavg = y.copy()
    bx = x.copy()
    by = y.copy()
    best = duality_gap(M, x, y)
    it = 0
    while best > tol and it < max_iter:
        it += 1
        gx = M @ y
        gy = MT @ x
        if it > 1:
            xt = project_simplex_1d(xt - eta * gx)
            yt = project_simplex_1d(yt + eta * gy)
        x = project_simplex_1d(xt - eta * gx)
        y = project_simplex_1d(yt + eta * gy)
        for a in range(A):
            xavg[a] += (x[a] - xavg[a]) / (it + 1.0)
        for b in range(B):
            yavg[b] += (y[b] - yavg[b]) / (it + 1.0)
        if it % check_every == 0:
            g = duality_gap(M, x, y)
            if g < best:
                best = g
                bx = x.copy()
                by = y.copy()
            g = duality_gap(M, xavg, yavg)
            if g < best:
                best = g
                bx = xavg.copy()
                by = yavg.copy()
    value = 0.0
    for a in range(A):
        acc = 0.0
        for b in range(B):
            acc += M[a, b] * by[b]
        value += bx[a] * acc
    return value, bx, by, best, it
