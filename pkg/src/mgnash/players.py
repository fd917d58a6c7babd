"""Decentralized learning players.

Each player sees only the MarginalMDP induced by the opponent's current
mix, never the opponent's policy itself, and advances one policy per
observation. Three algorithms share the optimistic update shape
x -> project(anchor +/- eta * q):

* OgdaPlayer: q is the exact q-table of the player's own current policy in
  the observed MDP. Fast close to equilibrium.
* AveragingOgdaPlayer: q backs up a running optimistic/pessimistic value
  bound V (initialized from a best response against the first observation,
  or from the trivial [0, 1/(1-gamma)] bounds in standalone mode) and the
  segment's product is the weighted average policy. Slow but global.
* ActorCriticPlayer: q backs up an averaged critic V initialized from the
  player's own value in the first observation; the anchor moves on every
  step including the first. Baseline.

Weighted averages use alpha(tau, H) = (H+1)/(H+tau), whose running
application reproduces the anytime weighted average exactly.
"""

import math

import numpy as np

from . import _kernels
from .analytics import RESIDUAL_TOL, marginalize, mdp_best_response
from .errors import NumericalError
from .game import MAX, MIN, SIDES, Policy


def averaging_horizon(gamma):
    """Averaging horizon H = (1+gamma)/(1-gamma) for the slow player."""
    return (1.0 + gamma) / (1.0 - gamma)


def critic_horizon(gamma):
    """Critic horizon ceil(2/(1-gamma)) for the actor-critic baseline.

    The quotient is nudged down by 1e-9 before the ceiling so that e.g.
    gamma=0.9, whose float quotient lands a few ulp above 20, still maps
    to the intended 20.
    """
    return float(math.ceil(2.0 / (1.0 - gamma) - 1e-9))


def alpha(tau, H):
    """Averaging stepsize alpha_tau = (H+1)/(H+tau).

    alpha_1 = 1 exactly, so the first sample replaces the accumulator and
    the running average needs no separate initialization.
    """
    if tau < 1:
        raise ValueError(f"tau must be >= 1, got {tau}")
    return (H + 1.0) / (H + tau)


def theory_stepsize_local(game):
    """Largest stepsize covered by the fast player's local guarantee."""
    S, A, B = game.rewards.shape
    return (1.0 - game.gamma) ** 2.5 / (32.0 * math.sqrt(S) * (A + B))


def theory_stepsize_global(game):
    """Largest stepsize covered by the slow player's global guarantee."""
    _, A, B = game.rewards.shape
    return (1.0 - game.gamma) / (16.0 * max(A, B))


def _policy_array(policy, num_states, num_actions):
    p = policy.probs if isinstance(policy, Policy) else np.asarray(policy, dtype=np.float64)
    if p.shape != (num_states, num_actions):
        raise ValueError(f"policy shape {p.shape} does not match ({num_states}, {num_actions})")
    return np.ascontiguousarray(p, dtype=np.float64)


class PlayerAlgorithm:
    """Common scaffolding: segment lifecycle, played-policy tracking, hooks.

    Subclasses implement _reset_segment() and _update(mdp) -> next policy.
    observe_and_update feeds the observed MDP to the update rule, advances
    the local iteration counter and fires the optional trace hook with
    (local_t, ||x_next - x||_inf, value_extrema).
    """

    def __init__(self, side, num_states, num_actions, gamma, stepsize_cap=None):
        if side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}, got {side!r}")
        self.side = side
        self.sign = 1.0 if side == MAX else -1.0
        self.num_states = int(num_states)
        self.num_actions = int(num_actions)
        self.gamma = float(gamma)
        self.stepsize_cap = stepsize_cap
        self.trace_hook = None
        self._x = None
        self._last_played = None
        self._t = 0
        self.stepsize = None

    def begin_segment(self, initial_policy, stepsize):
        """Reset all per-segment state and adopt the given start policy."""
        self._x = _policy_array(initial_policy, self.num_states, self.num_actions).copy()
        eta = float(stepsize)
        if eta <= 0.0:
            raise ValueError(f"stepsize must be positive, got {eta}")
        if self.stepsize_cap is not None:
            eta = min(eta, self.stepsize_cap)
        self.stepsize = eta
        self._t = 0
        self._last_played = None
        self._reset_segment()

    def observe_and_update(self, mdp):
        """Consume one observed MarginalMDP, return the next policy to play."""
        if self._x is None:
            raise RuntimeError("begin_segment must be called before observe_and_update")
        played = self._x
        self._last_played = played
        x_next = self._update(mdp)
        self._t += 1
        if self.trace_hook is not None:
            delta = float(np.abs(x_next - played).max())
            self.trace_hook(self._t - 1, delta, self.value_extrema())
        self._x = x_next
        return x_next

    @property
    def policy(self):
        """Current policy as a raw (S, n) array (the policy played next)."""
        return self._x

    def current_policy(self):
        return Policy(self.side, self._x)

    def last_played(self):
        """The policy in force at the most recent observation."""
        return self._x if self._last_played is None else self._last_played

    def segment_output(self):
        """Policy handed to the next segment: by default the last one played."""
        return self.last_played()

    def value_extrema(self):
        """(min, max) of the player's value table, None if it keeps none."""
        return None

    def _reset_segment(self):
        raise NotImplementedError

    def _update(self, mdp):
        raise NotImplementedError


class OgdaPlayer(PlayerAlgorithm):
    """Optimistic gradient on the exact own-policy q of each observation.

    The anchor stays put on the first step of a segment; afterwards anchor
    and played policy both move against the current q. last_q and the
    anchor are exposed for diagnostics.
    """

    def _reset_segment(self):
        self.anchor = self._x.copy()
        self.last_q = None

    def _update(self, mdp):
        x_new, anchor, q = _kernels.ogda_step(
            mdp.rewards, mdp.kernel, mdp.gamma,
            self.stepsize, self.sign, self._x, self.anchor, self._t == 0,
        )
        self.anchor = anchor
        self.last_q = q
        return x_new


class AveragingOgdaPlayer(PlayerAlgorithm):
    """Optimistic gradient against a conservatively averaged value bound.

    The min side maintains a lower bound V on the minimax values, the max
    side an upper bound; q backs V up through the observed MDP. With the
    best-response initialization the bound stays on its side of v* for the
    whole segment. segment_output is the alpha-weighted average of played
    policies, not the last iterate.

    standalone_init=True replaces the first-observation best response with
    the trivial bounds (0 for the min side, 1/(1-gamma) for the max side),
    which is the right choice when the player runs outside the switching
    schedule.
    """

    def __init__(self, side, num_states, num_actions, gamma,
                 stepsize_cap=None, standalone_init=False):
        super().__init__(side, num_states, num_actions, gamma, stepsize_cap)
        self.standalone_init = bool(standalone_init)
        self.H = averaging_horizon(gamma)

    def _reset_segment(self):
        self.anchor = self._x.copy()
        self.V = None
        self.qbar = np.zeros((self.num_states, self.num_actions))
        self.average = np.zeros((self.num_states, self.num_actions))
        self.last_q = None

    def _init_value(self, mdp):
        if self.standalone_init:
            bound = 0.0 if self.side == MIN else 1.0 / (1.0 - self.gamma)
            return np.full(self.num_states, bound)
        V, _, resid = _kernels.optimal_value(
            mdp.rewards, mdp.kernel, mdp.gamma, self.side == MAX
        )
        if resid > RESIDUAL_TOL:
            raise NumericalError(
                f"value bound initialization residual {resid:.3e} exceeds {RESIDUAL_TOL:.0e}"
            )
        return V

    def _update(self, mdp):
        first = self._t == 0
        if first:
            self.V = self._init_value(mdp)
        a = alpha(self._t + 1, self.H)
        x_new, anchor, qbar, V, average, q = _kernels.avg_ogda_step(
            mdp.rewards, mdp.kernel, mdp.gamma,
            self.stepsize, self.sign, a,
            self._x, self.anchor, self.V, self.qbar, self.average, first,
        )
        self.anchor = anchor
        self.qbar = qbar
        self.V = V
        self.average = average
        self.last_q = q
        return x_new

    def segment_output(self):
        return self._x if self._last_played is None else self.average

    def value_extrema(self):
        if self.V is None:
            return None
        return float(self.V.min()), float(self.V.max())


class ActorCriticPlayer(PlayerAlgorithm):
    """Optimistic actor with an incrementally averaged critic.

    The critic starts at the player's own value in the first observed MDP
    and afterwards folds in the played policy's one-step backup with weight
    beta_tau = (H0+1)/(H0+tau). The anchor moves on every step, including
    the first; the segment's product is the last played policy.
    """

    def __init__(self, side, num_states, num_actions, gamma, stepsize_cap=None):
        super().__init__(side, num_states, num_actions, gamma, stepsize_cap)
        self.H0 = critic_horizon(gamma)

    def _reset_segment(self):
        self.anchor = self._x.copy()
        self.V = None
        self.last_q = None

    def _update(self, mdp):
        first = self._t == 0
        if first:
            self.V = _kernels.policy_value(mdp.rewards, mdp.kernel, mdp.gamma, self._x)
        beta = alpha(self._t + 1, self.H0)
        x_new, anchor, V, q = _kernels.actor_critic_step(
            mdp.rewards, mdp.kernel, mdp.gamma,
            self.stepsize, self.sign, beta, self._x, self.anchor, self.V,
        )
        self.anchor = anchor
        self.V = V
        self.last_q = q
        return x_new

    def value_extrema(self):
        if self.V is None:
            return None
        return float(self.V.min()), float(self.V.max())


class FrozenPlayer(PlayerAlgorithm):
    """A non-learning opponent that plays the same policy forever."""

    def __init__(self, side, policy_probs):
        p = np.ascontiguousarray(np.asarray(policy_probs, dtype=np.float64))
        super().__init__(side, p.shape[0], p.shape[1], 0.0)
        self._fixed = p

    def begin_segment(self, initial_policy, stepsize):
        self._x = self._fixed.copy()
        self.stepsize = float(stepsize)
        self._t = 0
        self._last_played = None

    def _reset_segment(self):
        pass

    def _update(self, mdp):
        return self._fixed.copy()


ALGORITHMS = ("ogda", "avg-ogda", "actor-critic")


def make_factory(kind, strict_theory=False, standalone_init=False, trace_hook=None):
    """Build a factory(game, side) -> player for one of the named algorithms.

    strict_theory caps begin_segment stepsizes at the relevant guarantee
    bound. standalone_init only affects avg-ogda.
    """
    kind = kind.replace("_", "-")
    if kind not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {kind!r}; choose from {ALGORITHMS}")

    def factory(game, side):
        n = game.num_actions(side)
        if kind == "ogda":
            cap = theory_stepsize_local(game) if strict_theory else None
            player = OgdaPlayer(side, game.num_states, n, game.gamma, stepsize_cap=cap)
        elif kind == "avg-ogda":
            cap = theory_stepsize_global(game) if strict_theory else None
            player = AveragingOgdaPlayer(
                side, game.num_states, n, game.gamma,
                stepsize_cap=cap, standalone_init=standalone_init,
            )
        else:
            cap = theory_stepsize_global(game) if strict_theory else None
            player = ActorCriticPlayer(side, game.num_states, n, game.gamma, stepsize_cap=cap)
        player.trace_hook = trace_hook
        return player

    return factory


def frozen_factory(policy):
    """Factory producing FrozenPlayer(policy) regardless of segment kind."""
    probs = policy.probs if isinstance(policy, Policy) else np.asarray(policy, dtype=np.float64)
    side = policy.side if isinstance(policy, Policy) else None

    def factory(game, want_side):
        if side is not None and want_side != side:
            raise ValueError(f"frozen policy is for side {side!r}, runner asked for {want_side!r}")
        return FrozenPlayer(want_side, probs)

    return factory


def rationality_run(game, frozen_policy, algorithm="homotopy", T=10_000,
                    eta=0.1, eta_prime=0.1, bases=(2, 4), start=None):
    """Suboptimality trace of a learner against a frozen opponent.

    The frozen side never moves, so the learner faces one fixed MarginalMDP
    throughout; the trace records max_s |V(learner policy) - V(best
    response)| in that MDP at every iteration. algorithm is "homotopy" or
    one of the single-algorithm names. The learner starts uniform unless a
    start Policy for its side is given.

    Returns an (T,) array.
    """
    from .homotopy import build_schedule, run_homotopy, run_single_algorithm

    if not isinstance(frozen_policy, Policy):
        raise ValueError("frozen_policy must be a Policy (its side tag selects the learner)")
    learner_side = MIN if frozen_policy.side == MAX else MAX
    mdp = marginalize(game, frozen_policy, learner_side)
    V_opt, _ = mdp_best_response(mdp, learner_side)

    trace = np.empty(T)

    def callback(t, x, y):
        mine = x if learner_side == MIN else y
        V = _kernels.policy_value(mdp.rewards, mdp.kernel, mdp.gamma, mine)
        trace[t] = float(np.abs(V - V_opt).max())

    frozen = frozen_factory(frozen_policy)

    def mixed(base_factory):
        def factory(g, side):
            if side == learner_side:
                return base_factory(g, side)
            return frozen(g, side)
        return factory

    n_learn = game.num_actions(learner_side)
    if start is None:
        z0_learn = np.full((game.num_states, n_learn), 1.0 / n_learn)
    else:
        if isinstance(start, Policy) and start.side != learner_side:
            raise ValueError(f"start policy is tagged {start.side!r}, learner is {learner_side!r}")
        z0_learn = _policy_array(start, game.num_states, n_learn)
    z0 = (z0_learn, frozen_policy.probs) if learner_side == MIN else (frozen_policy.probs, z0_learn)

    if algorithm == "homotopy":
        run_homotopy(
            game, z0, eta, eta_prime, build_schedule(T, *bases),
            gs_factory=mixed(make_factory("avg-ogda")),
            lf_factory=mixed(make_factory("ogda")),
            gap_every=0, callback=callback,
        )
    else:
        stepsize = eta_prime if algorithm.replace("_", "-") == "avg-ogda" else eta
        run_single_algorithm(
            game, z0, algorithm, stepsize, T,
            gap_every=0, callback=callback,
            factory=mixed(make_factory(algorithm, standalone_init=True)),
        )
    return trace
