"""Pure-numpy backend for the numeric inner loops.

Vectorized implementations of the kernels that dominate solver runtime:
simplex projections, marginalization of the joint game into per-player MDPs,
exact policy evaluation / policy iteration, the fused per-iteration player
updates, and the optimistic-gradient matrix game loop.

The numba backend (`numba_impl`) mirrors every signature with explicit loops;
the test suite cross-checks the two. Functions here assume validated float64
inputs and do no argument checking of their own.

Conventions: `r` is an (S, n) reward table, `Pm` an (S, n, S) transition
tensor, policies are (S, n) rows on the probability simplex, `sign` is -1.0
for the minimizing player and +1.0 for the maximizing player.
"""

import numpy as np


# ---------------------------------------------------------------------------
# simplex projection


def project_simplex_1d(v):
    """Euclidean projection of a vector onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u)
    ks = np.arange(1, v.shape[0] + 1)
    rho = int(np.count_nonzero(u - (css - 1.0) / ks > 0.0))
    theta = (css[rho - 1] - 1.0) / rho
    w = np.maximum(v - theta, 0.0)
    return w / w.sum()


def project_rows(V):
    """Project each row of an (m, n) array onto the probability simplex."""
    m, n = V.shape
    u = np.sort(V, axis=1)[:, ::-1]
    css = np.cumsum(u, axis=1)
    ks = np.arange(1, n + 1)
    rho = np.count_nonzero(u - (css - 1.0) / ks > 0.0, axis=1)
    theta = (css[np.arange(m), rho - 1] - 1.0) / rho
    W = np.maximum(V - theta[:, None], 0.0)
    return W / W.sum(axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# marginalization and evaluation


def marginal_min(R, P, y):
    """Min player's induced MDP when the max player mixes with y.

    R: (S, A, B) rewards, P: (S, A, B, S) kernel, y: (S, B).
    Returns (r, Pm) with r (S, A) and Pm (S, A, S). Rows of Pm inherit
    stochasticity from P up to rounding; no renormalization is applied.
    """
    r = np.einsum("sab,sb->sa", R, y)
    Pm = np.einsum("sabt,sb->sat", P, y)
    return r, Pm


def marginal_max(R, P, x):
    """Max player's induced MDP when the min player mixes with x."""
    r = np.einsum("sab,sa->sb", R, x)
    Pm = np.einsum("sabt,sa->sbt", P, x)
    return r, Pm


def chain_value(r, Pj, gamma):
    """Value of a Markov reward process: solve (I - gamma*Pj) V = r."""
    S = r.shape[0]
    return np.linalg.solve(np.eye(S) - gamma * Pj, r)


def policy_value(r, Pm, gamma, pi):
    """Exact value of a (possibly mixed) policy pi in the MDP (r, Pm, gamma)."""
    rpi = np.einsum("sa,sa->s", pi, r)
    Ppi = np.einsum("sa,sat->st", pi, Pm)
    return chain_value(rpi, Ppi, gamma)


def bellman_q(r, Pm, gamma, V):
    """One-step lookahead table q(s,a) = r(s,a) + gamma * sum_s' Pm V."""
    return r + gamma * (Pm @ V)


def optimal_value(r, Pm, gamma, maximize):
    """Optimal value of the MDP by Howard policy iteration.

    Greedy improvement with exact linear-solve evaluation; argmin/argmax
    break ties at the lowest action index. Returns (V, pi, residual) where
    pi is the deterministic optimal policy as an (S,) index array and
    residual is the sup-norm Bellman optimality residual of V.
    """
    S, n = r.shape
    pi = np.argmax(r, axis=1) if maximize else np.argmin(r, axis=1)
    rows = np.arange(S)
    V_prev = None
    q = r
    for _ in range(500):
        rpi = r[rows, pi]
        Ppi = Pm[rows, pi, :]
        V = np.linalg.solve(np.eye(S) - gamma * Ppi, rpi)
        q = r + gamma * (Pm @ V)
        pi_new = np.argmax(q, axis=1) if maximize else np.argmin(q, axis=1)
        if np.array_equal(pi_new, pi):
            break
        if V_prev is not None and np.abs(V - V_prev).max() <= 1e-13 * (1.0 + np.abs(V).max()):
            break
        V_prev = V
        pi = pi_new
    opt = q.max(axis=1) if maximize else q.min(axis=1)
    residual = float(np.abs(V - opt).max())
    return V, pi, residual


def joint_chain(R, P, x, y):
    """Collapse the joint game under (x, y) to a Markov reward process."""
    r = np.einsum("sa,sab,sb->s", x, R, y)
    Pj = np.einsum("sa,sabt,sb->st", x, P, y)
    return r, Pj


def visitation_solve(Pj, gamma, rho):
    """Normalized discounted visitation: d = (1-gamma) rho + gamma Pj^T d."""
    S = Pj.shape[0]
    d = np.linalg.solve(np.eye(S) - gamma * Pj.T, (1.0 - gamma) * rho)
    d[(d < 0.0) & (d > -1e-12)] = 0.0
    return d


# ---------------------------------------------------------------------------
# fused per-iteration player updates


def ogda_step(r, Pm, gamma, eta, sign, x, tilde, first):
    """One optimistic gradient step against the observed MDP (r, Pm).

    The gradient table is the exact q of the player's own current policy in
    the observed MDP. On the first step of a segment the anchor `tilde`
    stays at the segment's initial policy.

    Returns (x_next, tilde_next, q).
    """
    q = bellman_q(r, Pm, gamma, policy_value(r, Pm, gamma, x))
    step = (sign * eta) * q
    tilde_new = tilde.copy() if first else project_rows(tilde + step)
    x_new = project_rows(tilde_new + step)
    return x_new, tilde_new, q


def avg_ogda_step(r, Pm, gamma, eta, sign, alpha, x, tilde, V, qbar, xhat, first):
    """One averaging optimistic step with the running value bound V.

    q is the one-step lookahead of V in the observed MDP; the optimistic
    update matches ogda_step; qbar and xhat fold in the new q and the policy
    played this iteration with weight alpha; the refreshed V is the per-state
    best action value of qbar (min for sign<0, max for sign>0).

    Returns (x_next, tilde_next, qbar_next, V_next, xhat_next, q).
    """
    q = bellman_q(r, Pm, gamma, V)
    step = (sign * eta) * q
    tilde_new = tilde.copy() if first else project_rows(tilde + step)
    x_new = project_rows(tilde_new + step)
    qbar_new = (1.0 - alpha) * qbar + alpha * q
    V_new = qbar_new.max(axis=1) if sign > 0.0 else qbar_new.min(axis=1)
    xhat_new = (1.0 - alpha) * xhat + alpha * x
    return x_new, tilde_new, qbar_new, V_new, xhat_new, q


def actor_critic_step(r, Pm, gamma, eta, sign, beta, x, tilde, V):
    """One optimistic actor step plus critic averaging.

    Unlike ogda_step the anchor moves on every step, including the first.
    The critic folds the played policy's one-step return under the current
    q into V with weight beta.

    Returns (x_next, tilde_next, V_next, q).
    """
    q = bellman_q(r, Pm, gamma, V)
    step = (sign * eta) * q
    tilde_new = project_rows(tilde + step)
    x_new = project_rows(tilde_new + step)
    V_new = (1.0 - beta) * V + beta * np.einsum("sa,sa->s", x, q)
    return x_new, tilde_new, V_new, q


# ---------------------------------------------------------------------------
# matrix games


def duality_gap(M, x, y):
    """max_b (M^T x)_b - min_a (M y)_a for the min-max game on M."""
    return float((M.T @ x).max() - (M @ y).min())


def matrix_game_solve(M, eta, tol, max_iter, check_every, x0, y0):
    """Optimistic gradient loop for the value of the matrix game M.

    Simultaneous optimistic updates for both players; tracks the last
    iterate and the uniform average of iterates, keeps whichever pair has
    achieved the smallest duality gap so far, and stops once that gap is
    at most tol. Returns (value, x, y, gap, iterations); callers decide
    what to do when gap > tol at the iteration cap.
    """
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
        gy = M.T @ x
        if it > 1:
            xt = project_simplex_1d(xt - eta * gx)
            yt = project_simplex_1d(yt + eta * gy)
        x = project_simplex_1d(xt - eta * gx)
        y = project_simplex_1d(yt + eta * gy)
        xavg += (x - xavg) / (it + 1.0)
        yavg += (y - yavg) / (it + 1.0)
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
    value = float(bx @ M @ by)
    return value, bx, by, best, it
