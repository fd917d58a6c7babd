"""Exact tabular analytics for zero-sum Markov games.

Everything here is dense float64 linear algebra at desk scale: evaluation of
joint and marginal policies by direct linear solves, best responses by
policy iteration, minimax state values by value iteration over per-state
matrix games, and the Nash gap that the experiment logs report.

Policies may be passed as Policy objects or raw (S, n) arrays; joint
policies as JointPolicy or an (x, y) tuple.
"""

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import MatrixGameError, NumericalError
from .game import MAX, MIN, JointPolicy, Policy

RESIDUAL_TOL = 1e-10


@dataclass(frozen=True)
class MarginalMDP:
    """The single-agent MDP one player faces once the opponent's mix is fixed.

    rewards: (S, n), kernel: (S, n, S) with stochastic rows, gamma shared
    with the parent game. This is the only object the learning players see.
    """

    rewards: np.ndarray
    kernel: np.ndarray
    gamma: float

    @property
    def num_states(self):
        return self.rewards.shape[0]

    @property
    def num_actions(self):
        return self.rewards.shape[1]


def _probs(policy):
    if isinstance(policy, Policy):
        return policy.probs
    return np.asarray(policy, dtype=np.float64)


def _xy(z):
    if isinstance(z, JointPolicy):
        return z.min_policy.probs, z.max_policy.probs
    x, y = z
    return _probs(x), _probs(y)


def bellman_target(game, values):
    """Backed-up q tensor: rewards + gamma * expected continuation values.

    values: (S,) -> returns (S, A, B).
    """
    v = np.asarray(values, dtype=np.float64)
    return game.rewards + game.gamma * np.tensordot(game.kernel, v, axes=([3], [0]))


def joint_value(game, z):
    """V(s) under a joint policy, by collapsing to a chain and solving.

    Checks the linear-solve residual against RESIDUAL_TOL.
    """
    x, y = _xy(z)
    r, Pj = _kernels.joint_chain(game.rewards, game.kernel, x, y)
    V = _kernels.chain_value(r, Pj, game.gamma)
    resid = float(np.abs(V - (r + game.gamma * (Pj @ V))).max())
    if resid > RESIDUAL_TOL:
        raise NumericalError(f"joint value solve residual {resid:.3e} exceeds {RESIDUAL_TOL:.0e}")
    return V

def joint_q(game, z):
    """q tensor (S, A, B) of a joint policy: bellman_target of its value."""
    return bellman_target(game, joint_value(game, z))


def marginalize(game, opponent_policy, side):
    """The MarginalMDP that `side` faces when the opponent mixes as given.

    side="min" expects the max player's policy and vice versa. Kernel rows
    inherit stochasticity from the game (weighted averages of stochastic
    rows); they are not renormalized.
    """
    if isinstance(opponent_policy, Policy) and opponent_policy.side == side:
        raise ValueError(
            f"marginalizing for side {side!r} needs the opponent's policy, "
            f"got one tagged {opponent_policy.side!r}"
        )
    p = _probs(opponent_policy)
    if side == MIN:
        r, Pm = _kernels.marginal_min(game.rewards, game.kernel, p)
    elif side == MAX:
        r, Pm = _kernels.marginal_max(game.rewards, game.kernel, p)
    else:
        raise ValueError(f"side must be 'min' or 'max', got {side!r}")
    return MarginalMDP(r, Pm, game.gamma)


def mdp_policy_value(mdp, policy):
    """Exact value of a mixed policy in a MarginalMDP (linear solve)."""
    pi = _probs(policy)
    V = _kernels.policy_value(mdp.rewards, mdp.kernel, mdp.gamma, pi)
    rpi = np.einsum("sa,sa->s", pi, mdp.rewards)
    Ppi = np.einsum("sa,sat->st", pi, mdp.kernel)
    resid = float(np.abs(V - (rpi + mdp.gamma * (Ppi @ V))).max())
    if resid > RESIDUAL_TOL:
        raise NumericalError(f"policy value solve residual {resid:.3e} exceeds {RESIDUAL_TOL:.0e}")
    return V


def mdp_q(mdp, policy):
    """q(s, a) of a mixed policy in a MarginalMDP."""
    V = mdp_policy_value(mdp, policy)
    return _kernels.bellman_q(mdp.rewards, mdp.kernel, mdp.gamma, V)


def mdp_best_response(mdp, sense):
    """Optimal deterministic policy of a MarginalMDP and its value.

    sense is "min" or "max". Policy iteration with exact evaluation;
    ties go to the lowest action index. Returns (values, actions) where
    actions is an (S,) int array. The Bellman optimality residual is
    checked against RESIDUAL_TOL.
    """
    if sense not in (MIN, MAX):
        raise ValueError(f"sense must be 'min' or 'max', got {sense!r}")
    V, pi, resid = _kernels.optimal_value(mdp.rewards, mdp.kernel, mdp.gamma, sense == MAX)
    if resid > RESIDUAL_TOL:
        raise NumericalError(
            f"best response residual {resid:.3e} exceeds {RESIDUAL_TOL:.0e}"
        )
    return V, pi


def visitation(game, z, initial_distribution=None):
    """Normalized discounted state visitation of a joint policy.

    Solves d = (1 - gamma) rho + gamma P_z^T d; entries sum to 1 and
    d(s) >= (1 - gamma) rho(s).
    """
    x, y = _xy(z)
    S = game.num_states
    if initial_distribution is None:
        rho = np.full(S, 1.0 / S)
    else:
        rho = np.asarray(initial_distribution, dtype=np.float64)
        if rho.shape != (S,) or np.any(rho < 0) or abs(rho.sum() - 1.0) > 1e-9:
            raise ValueError("initial distribution must be a length-S probability vector")
    _, Pj = _kernels.joint_chain(game.rewards, game.kernel, x, y)
    d = _kernels.visitation_solve(Pj, game.gamma, np.ascontiguousarray(rho))
    if abs(d.sum() - 1.0) > RESIDUAL_TOL:
        raise NumericalError(f"visitation mass {d.sum()!r} is not 1")
    return d


# ---------------------------------------------------------------------------
# matrix games and minimax values


@dataclass(frozen=True)
class MatrixGameSolution:
    """Approximate equilibrium of a matrix game with its certificate."""

    value: float
    x: np.ndarray
    y: np.ndarray
    gap: float
    iterations: int


def matrix_game_value(M, tol=1e-10, max_iter=10_000_000, check_every=10, x0=None, y0=None):
    """Value of the zero-sum matrix game min_x max_y x^T M y.

    Optimistic gradient iterations with simultaneous updates on the
    shift-and-scale normalized matrix, keeping the best of the last iterate
    and the uniform average until the duality gap certificate reaches tol.
    Raises MatrixGameError with the residual gap if the iteration cap is hit
    first. The returned value is within gap of the exact game value.
    """
    M = np.ascontiguousarray(np.asarray(M, dtype=np.float64))
    if M.ndim != 2 or min(M.shape) < 1:
        raise ValueError(f"need a nonempty 2-d payoff matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError("payoff matrix must be finite")
    A, B = M.shape
    x0 = np.full(A, 1.0 / A) if x0 is None else np.ascontiguousarray(x0, dtype=np.float64)
    y0 = np.full(B, 1.0 / B) if y0 is None else np.ascontiguousarray(y0, dtype=np.float64)
    lo, hi = float(M.min()), float(M.max())
    mid, half = 0.5 * (hi + lo), 0.5 * (hi - lo)
    if half == 0.0:
        return MatrixGameSolution(mid, x0, y0, 0.0, 0)
    Mn = (M - mid) / half
    value_n, x, y, gap_n, it = _kernels.matrix_game_solve(
        Mn, 0.125, tol / half, int(max_iter), int(check_every), x0, y0
    )
    gap = half * gap_n
    if gap > tol:
        raise MatrixGameError(
            f"matrix game solver stopped after {it} iterations with duality gap "
            f"{gap:.3e} > {tol:.0e}",
            gap=gap,
        )
    return MatrixGameSolution(half * value_n + mid, x, y, gap, it)


def minimax_values(game, tol=1e-10, max_sweeps=100_000):
    """Minimax state values v* and their backed-up tensor.

    Value iteration on v(s) <- value of the matrix game bellman_target(v)[s],
    stopped when the sweep-to-sweep change is at most tol*(1-gamma)/(2*gamma)
    so that ||v - v*||_inf <= tol. Inner matrix games are solved to duality
    gap tol*(1-gamma)/4 (warm-started between sweeps) so their error cannot
    eat the guarantee. Returns (v, bellman_target(game, v)).
    """
    S, A, B = game.rewards.shape
    gamma = game.gamma
    v = np.zeros(S)
    inner_tol = max(tol * (1.0 - gamma) / 4.0, 1e-13)
    sweep_tol = tol if gamma == 0.0 else tol * (1.0 - gamma) / (2.0 * gamma)
    wx = [None] * S
    wy = [None] * S
    for sweep in range(max_sweeps):
        Q = bellman_target(game, v)
        v_new = np.empty(S)
        for s in range(S):
            try:
                sol = matrix_game_value(Q[s], tol=inner_tol, x0=wx[s], y0=wy[s])
            except MatrixGameError as e:
                raise MatrixGameError(
                    f"inner matrix game at state {s} failed during sweep {sweep}: {e}",
                    gap=e.gap,
                ) from e
            v_new[s] = sol.value
            wx[s], wy[s] = sol.x, sol.y
        delta = float(np.abs(v_new - v).max())
        v = v_new
        if gamma == 0.0 or delta <= sweep_tol:
            return v, bellman_target(game, v)
    raise NumericalError(
        f"minimax value iteration did not converge in {max_sweeps} sweeps "
        f"(last sweep moved {delta:.3e})"
    )


def nash_gap(game, z):
    """max_s [best response value against x minus best response value against y].

    Zero exactly at Nash equilibria, positive elsewhere; tiny negatives
    (within -1e-8) can appear from solver tolerance and are the caller's
    business to clamp for display.
    """
    x, y = _xy(z)
    return _nash_gap_arrays(game.rewards, game.kernel, game.gamma, x, y)


def _nash_gap_arrays(R, P, gamma, x, y):
    r_max, P_max = _kernels.marginal_max(R, P, x)
    V_best_max, _, res1 = _kernels.optimal_value(r_max, P_max, gamma, True)
    r_min, P_min = _kernels.marginal_min(R, P, y)
    V_best_min, _, res2 = _kernels.optimal_value(r_min, P_min, gamma, False)
    if max(res1, res2) > RESIDUAL_TOL:
        raise NumericalError(
            f"best response residual {max(res1, res2):.3e} exceeds {RESIDUAL_TOL:.0e}"
        )
    return float((V_best_max - V_best_min).max())
