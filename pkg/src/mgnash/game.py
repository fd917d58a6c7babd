"""Core types for two-player zero-sum discounted Markov games.

A game is a dense tabular object: rewards R[s, a, b] in [0, 1] paid by the
min player to the max player, a transition kernel P[s, a, b, s'] whose rows
are probability vectors, and a discount gamma in [0, 1). Policies are
per-state rows on the probability simplex, tagged with the side that plays
them ("min" chooses a, "max" chooses b).

All arrays are float64, copied in at construction and frozen (writeable
flag cleared), so instances can be shared freely.

Serialization is JSON with explicit dimensions; floats go through repr so
a dump/load round trip is bit exact on 64-bit floats.
"""

import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import GameFormatError

MIN = "min"
MAX = "max"
SIDES = (MIN, MAX)


def _frozen_f64(arr, name, ndim):
    a = np.array(arr, dtype=np.float64, order="C")
    if a.ndim != ndim:
        raise ValueError(f"{name} must have {ndim} dimensions, got {a.ndim}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class MarkovGame:
    """Dense tabular zero-sum Markov game.

    rewards: (S, A, B), kernel: (S, A, B, S), gamma: discount in [0, 1).
    Construction checks shapes only; numeric invariants (reward range, row
    stochasticity, gamma range) are the job of validate_game, which reports
    rather than raises.
    """

    rewards: np.ndarray
    kernel: np.ndarray
    gamma: float

    def __post_init__(self):
        object.__setattr__(self, "rewards", _frozen_f64(self.rewards, "rewards", 3))
        object.__setattr__(self, "kernel", _frozen_f64(self.kernel, "kernel", 4))
        object.__setattr__(self, "gamma", float(self.gamma))
        S, A, B = self.rewards.shape
        if min(S, A, B) < 1:
            raise ValueError(f"rewards shape {self.rewards.shape} has an empty axis")
        if self.kernel.shape != (S, A, B, S):
            raise ValueError(
                f"kernel shape {self.kernel.shape} does not match rewards "
                f"shape {self.rewards.shape} (want {(S, A, B, S)})"
            )

    @property
    def num_states(self):
        return self.rewards.shape[0]

    @property
    def num_actions_min(self):
        return self.rewards.shape[1]

    @property
    def num_actions_max(self):
        return self.rewards.shape[2]

    def num_actions(self, side):
        return self.num_actions_min if side == MIN else self.num_actions_max


@dataclass(frozen=True)
class Policy:
    """Per-state mixed strategy for one side.

    probs: (S, n) rows on the simplex, side: "min" or "max".
    """

    side: str
    probs: np.ndarray

    def __post_init__(self):
        if self.side not in SIDES:
            raise ValueError(f"side must be one of {SIDES}, got {self.side!r}")
        object.__setattr__(self, "probs", _frozen_f64(self.probs, "probs", 2))

    @property
    def num_states(self):
        return self.probs.shape[0]

    @property
    def num_actions(self):
        return self.probs.shape[1]


@dataclass(frozen=True)
class JointPolicy:
    """A (min, max) policy pair over the same state space."""

    min_policy: Policy
    max_policy: Policy

    def __post_init__(self):
        if self.min_policy.side != MIN or self.max_policy.side != MAX:
            raise ValueError("JointPolicy wants (min-side, max-side) in that order")
        if self.min_policy.num_states != self.max_policy.num_states:
            raise ValueError("policies disagree on the number of states")

    @property
    def num_states(self):
        return self.min_policy.num_states


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of validate_game: empty violations means the game is valid."""

    violations: tuple = field(default_factory=tuple)

    @property
    def ok(self):
        return len(self.violations) == 0


def validate_game(game, atol=1e-12):
    """Check numeric invariants, returning a report instead of raising.

    Verified: gamma in [0, 1); rewards finite and within [0, 1] (up to
    atol); kernel entries finite and nonnegative (up to atol); every kernel
    row sums to 1 within atol. Violations carry their indices.
    """
    v = []
    g = game.gamma
    if not np.isfinite(g) or g < 0.0 or g >= 1.0:
        v.append(f"gamma {g!r} outside [0, 1)")
    R, P = game.rewards, game.kernel
    if not np.all(np.isfinite(R)):
        for idx in zip(*np.nonzero(~np.isfinite(R))):
            v.append(f"reward {tuple(int(i) for i in idx)} is not finite")
    else:
        bad = (R < -atol) | (R > 1.0 + atol)
        for idx in zip(*np.nonzero(bad)):
            s, a, b = (int(i) for i in idx)
            v.append(f"reward (s={s},a={a},b={b}) = {R[s, a, b]!r} outside [0, 1]")
    if not np.all(np.isfinite(P)):
        for idx in zip(*np.nonzero(~np.isfinite(P))):
            v.append(f"kernel entry {tuple(int(i) for i in idx)} is not finite")
    else:
        for idx in zip(*np.nonzero(P < -atol)):
            s, a, b, t = (int(i) for i in idx)
            v.append(f"kernel entry (s={s},a={a},b={b},s'={t}) = {P[s, a, b, t]!r} negative")
        sums = P.sum(axis=3)
        bad = np.abs(sums - 1.0) > atol
        for idx in zip(*np.nonzero(bad)):
            s, a, b = (int(i) for i in idx)
            v.append(f"kernel row (s={s},a={a},b={b}) sums to {sums[s, a, b]!r}")
    return ValidationReport(tuple(v))


def uniform_policy(game, side):
    """The uniform mixed policy for one side of a game."""
    n = game.num_actions(side)
    probs = np.full((game.num_states, n), 1.0 / n)
    return Policy(side, probs)


def uniform_joint(game):
    return JointPolicy(uniform_policy(game, MIN), uniform_policy(game, MAX))


def transpose_game(game):
    """Swap the two sides: the new min player is the old max player.

    Rewards flip through r -> 1 - r so they stay in [0, 1] while reversing
    who pays whom; action axes swap accordingly. Applying it twice gives
    back the original game. Useful for exercising min/max symmetry.
    """
    R = np.ascontiguousarray(1.0 - game.rewards.transpose(0, 2, 1))
    P = np.ascontiguousarray(game.kernel.transpose(0, 2, 1, 3))
    return MarkovGame(R, P, game.gamma)


# ---------------------------------------------------------------------------
# serialization

_GAME_FIELDS = ("num_states", "num_actions_min", "num_actions_max", "gamma", "rewards", "kernel")


def serialize_game(game):
    """Serialize to a JSON string; floats round-trip bit exactly."""
    doc = {
        "num_states": game.num_states,
        "num_actions_min": game.num_actions_min,
        "num_actions_max": game.num_actions_max,
        "gamma": game.gamma,
        "rewards": game.rewards.tolist(),
        "kernel": game.kernel.tolist(),
    }
    return json.dumps(doc)


def deserialize_game(text):
    """Parse a serialized game, naming the offending field on error.

    Shape mismatches, missing fields and invariant violations (including
    degenerate dimensions like num_states = 0) raise GameFormatError.
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise GameFormatError(f"not valid JSON: {e}") from e
    if not isinstance(doc, dict):
        raise GameFormatError("top-level JSON value must be an object")
    for k in _GAME_FIELDS:
        if k not in doc:
            raise GameFormatError(f"missing field '{k}'")
    dims = {}
    for k in ("num_states", "num_actions_min", "num_actions_max"):
        if not isinstance(doc[k], int) or isinstance(doc[k], bool):
            raise GameFormatError(f"field '{k}' must be an integer")
        if doc[k] < 1:
            raise GameFormatError(f"field '{k}' must be >= 1, got {doc[k]}")
        dims[k] = doc[k]
    if not isinstance(doc["gamma"], (int, float)) or isinstance(doc["gamma"], bool):
        raise GameFormatError("field 'gamma' must be a number")
    S, A, B = dims["num_states"], dims["num_actions_min"], dims["num_actions_max"]
    try:
        R = np.array(doc["rewards"], dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise GameFormatError(f"field 'rewards' is not a numeric array: {e}") from e
    try:
        P = np.array(doc["kernel"], dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise GameFormatError(f"field 'kernel' is not a numeric array: {e}") from e
    if R.shape != (S, A, B):
        raise GameFormatError(
            f"field 'rewards' has shape {R.shape}, declared dimensions want {(S, A, B)}"
        )
    if P.shape != (S, A, B, S):
        raise GameFormatError(
            f"field 'kernel' has shape {P.shape}, declared dimensions want {(S, A, B, S)}"
        )
    game = MarkovGame(R, P, float(doc["gamma"]))
    report = validate_game(game)
    if not report.ok:
        raise GameFormatError("invalid game: " + "; ".join(report.violations[:10]))
    return game


def save_game(game, path):
    with open(path, "w") as f:
        f.write(serialize_game(game))


def load_game(path):
    with open(path) as f:
        return deserialize_game(f.read())


def game_hash(game):
    """Stable content hash of a game (sha256 of its serialized form)."""
    return hashlib.sha256(serialize_game(game).encode()).hexdigest()


def serialize_policy(policy):
    """Policies serialize as the bare nested array [state][action]."""
    return json.dumps(policy.probs.tolist())


def deserialize_policy(text, side):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise GameFormatError(f"not valid JSON: {e}") from e
    try:
        probs = np.array(doc, dtype=np.float64)
    except (TypeError, ValueError) as e:
        raise GameFormatError(f"policy is not a numeric array: {e}") from e
    if probs.ndim != 2:
        raise GameFormatError(f"policy must be a [state][action] array, got shape {probs.shape}")
    rows = probs.sum(axis=1)
    if np.any(probs < -1e-9) or np.any(np.abs(rows - 1.0) > 1e-9):
        raise GameFormatError("policy rows must be probability vectors")
    return Policy(side, probs)


def save_policy(policy, path):
    with open(path, "w") as f:
        f.write(serialize_policy(policy))


def load_policy(path, side):
    with open(path) as f:
        return deserialize_policy(f.read(), side)
