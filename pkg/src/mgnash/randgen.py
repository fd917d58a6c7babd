"""Seeded random game and policy generation.

One PCG64 stream (numpy default_rng) per seed drives everything, in a fixed
documented order so instances are reproducible across platforms:

1. rewards: S*A*B uniforms on [0, 1), filled in C order;
2. kernel rows, for each (s, a, b) in C order:
   a. support size i, uniform on {1, ..., S};
   b. support set: partial Fisher-Yates over [0, S) keeping the first i;
   c. i uniform weights on [0, 1), normalized over the support
      (off-support entries are exactly 0);
3. min player initial policy: S*A uniforms, rows L1-normalized;
4. max player initial policy: S*B uniforms, rows L1-normalized.

random_policy_pair replays steps 1-2 into the void so that its draws come
from the same position of the stream whether or not the caller also built
the game.
"""

from dataclasses import dataclass

import numpy as np

from .game import MAX, MIN, JointPolicy, MarkovGame, Policy


@dataclass(frozen=True)
class GenSpec:
    """Shape, discount and seed of a randomly generated instance."""

    num_states: int
    num_actions_min: int
    num_actions_max: int
    gamma: float
    seed: int

    def __post_init__(self):
        if min(self.num_states, self.num_actions_min, self.num_actions_max) < 1:
            raise ValueError("dimensions must be >= 1")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {self.gamma}")


def _draw_game(rng, spec):
    S, A, B = spec.num_states, spec.num_actions_min, spec.num_actions_max
    R = rng.random((S, A, B))
    P = np.zeros((S, A, B, S))
    for s in range(S):
        for a in range(A):
            for b in range(B):
                i = int(rng.integers(1, S + 1))
                idx = np.arange(S)
                for j in range(i):
                    k = j + int(rng.integers(0, S - j))
                    idx[j], idx[k] = idx[k], idx[j]
                support = idx[:i]
                w = rng.random(i)
                total = w.sum()
                if total == 0.0:
                    w[0] = 1.0
                    total = 1.0
                P[s, a, b, support] = w / total
    return MarkovGame(R, P, spec.gamma)


def _draw_policies(rng, spec):
    S, A, B = spec.num_states, spec.num_actions_min, spec.num_actions_max
    ux = rng.random((S, A))
    uy = rng.random((S, B))
    x = Policy(MIN, ux / ux.sum(axis=1, keepdims=True))
    y = Policy(MAX, uy / uy.sum(axis=1, keepdims=True))
    return JointPolicy(x, y)


def random_game(spec):
    """The game portion of the instance for this spec's seed."""
    rng = np.random.default_rng(spec.seed)
    return _draw_game(rng, spec)


def random_policy_pair(spec):
    """The initial joint policy for this spec's seed.

    Consumes the game draws first so the policy draws sit at the same
    stream position as in random_instance.
    """
    rng = np.random.default_rng(spec.seed)
    _draw_game(rng, spec)
    return _draw_policies(rng, spec)


def random_instance(spec):
    """Game and initial joint policy in one pass over the stream."""
    rng = np.random.default_rng(spec.seed)
    game = _draw_game(rng, spec)
    return game, _draw_policies(rng, spec)
