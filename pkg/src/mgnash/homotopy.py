"""The switching schedule and the solver runners.

The meta-algorithm alternates two self-play phases over a horizon of T
iterations: round k runs the globally convergent slow players for about u^k
iterations, then the locally fast players for about v^k iterations, with
v > u > 1, both truncated at T. The slow phase k starts from the policy
played at the last iteration of fast phase k-1 (round 1 starts from z0);
the fast phase starts from the slow phase's weighted-average output. Since
the fast phases dominate the tail, once the slow phases have dragged the
pair close enough to equilibrium the fast players' local convergence takes
over for good.

Iterations are indexed 0 .. T-1 and segments carry inclusive [start, end]
index ranges that tile the horizon exactly. Segment lengths are ceil(u^k)
and ceil(v^k) computed in exact rational arithmetic, so decimal bases like
2.1 mean the decimal number, not its float64 neighbor.
"""

import hashlib
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from math import ceil

import numpy as np

from . import _kernels
from .analytics import MarginalMDP, _nash_gap_arrays
from .errors import NumericalError, ScheduleError
from .game import MAX, MIN, JointPolicy, Policy, game_hash
from .players import make_factory
from .runlog import RunLog

GLOBAL_SLOW = "global_slow"
LOCAL_FAST = "local_fast"


@dataclass(frozen=True)
class Segment:
    kind: str
    k: int
    start: int
    end: int

    @property
    def length(self):
        return self.end - self.start + 1


@dataclass(frozen=True)
class Schedule:
    """A tuple of segments tiling [0, total-1], plus the bases that made it."""

    segments: tuple
    u: float
    v: float
    total: int

    def lf_cumulative_ends(self):
        """Iteration counts reached at the end of each fast segment."""
        return [s.end + 1 for s in self.segments if s.kind == LOCAL_FAST]

    def gs_total_iterations(self):
        return sum(s.length for s in self.segments if s.kind == GLOBAL_SLOW)

    def switch_times(self):
        """Sorted iteration indices where a segment begins, plus the last one."""
        ts = {s.start for s in self.segments}
        ts.add(self.total - 1)
        return sorted(ts)


def _exact_base(b):
    try:
        frac = Fraction(str(b))
    except (ValueError, ZeroDivisionError) as e:
        raise ScheduleError(f"cannot interpret base {b!r} as a rational number") from e
    return frac


def build_schedule(T, u=2, v=4):
    """Tile [0, T-1] with alternating slow/fast segments of lengths ceil(u^k), ceil(v^k).

    Requires v > u > 1 (the fast phases must outgrow the slow ones) and
    T >= 1. The final segment is truncated at T; a round's fast segment is
    dropped entirely if the slow one already reached T.
    """
    if not isinstance(T, (int, np.integer)) or T < 1:
        raise ScheduleError(f"T must be a positive integer, got {T!r}")
    uq, vq = _exact_base(u), _exact_base(v)
    if not uq > 1:
        raise ScheduleError(f"need u > 1, got u={u!r}")
    if not vq > uq:
        raise ScheduleError(f"need v > u, got u={u!r}, v={v!r}")
    segments = []
    t = 0
    k = 1
    while t < T:
        length = min(ceil(uq**k), T - t)
        segments.append(Segment(GLOBAL_SLOW, k, t, t + length - 1))
        t += length
        if t < T:
            length = min(ceil(vq**k), T - t)
            segments.append(Segment(LOCAL_FAST, k, t, t + length - 1))
            t += length
        k += 1
    return Schedule(tuple(segments), float(uq), float(vq), int(T))


def _single_segment_schedule(T, kind):
    if not isinstance(T, (int, np.integer)) or T < 1:
        raise ScheduleError(f"T must be a positive integer, got {T!r}")
    return Schedule((Segment(kind, 1, 0, int(T) - 1),), float("nan"), float("nan"), int(T))


def _policy_hash(p):
    return hashlib.sha256(np.ascontiguousarray(p).tobytes()).hexdigest()


def _as_xy(game, z0):
    if isinstance(z0, JointPolicy):
        x, y = z0.min_policy.probs, z0.max_policy.probs
    else:
        x, y = z0
        x = x.probs if isinstance(x, Policy) else np.asarray(x, dtype=np.float64)
        y = y.probs if isinstance(y, Policy) else np.asarray(y, dtype=np.float64)
    S, A, B = game.rewards.shape
    if x.shape != (S, A):
        raise ValueError(f"min policy shape {x.shape} does not match game ({S}, {A})")
    if y.shape != (S, B):
        raise ValueError(f"max policy shape {y.shape} does not match game ({S}, {B})")
    return np.ascontiguousarray(x), np.ascontiguousarray(y)


def _execute(game, z0, segments, factory_for, stepsize_for, gap_every, log_at,
             timing, exec_mode, callback, metadata, final_policy="played"):
    """Shared segment loop for all runners.

    Each segment gets fresh players from its factories, started from the
    previous segment's output (the initial z0 for the first segment). Both
    marginal MDPs are built from the currently played pair before either
    player moves, so the two updates commute; exec_mode="threads" actually
    runs them on two threads with a join per iteration and must produce the
    same trace as "sequential".

    final_policy picks what the run returns: "played" is the last pair that
    actually entered the log, "output" is the last segment's hand-off value
    (for an averaging segment that is the running average, not an iterate).
    """
    if exec_mode not in ("sequential", "threads"):
        raise ValueError(f"exec_mode must be 'sequential' or 'threads', got {exec_mode!r}")
    R, P, gamma = game.rewards, game.kernel, game.gamma
    x, y = _as_xy(game, z0)
    log = RunLog(metadata=dict(metadata or {}))
    log.metadata.setdefault("game_hash", game_hash(game))
    log.metadata.setdefault("backend", _kernels.BACKEND)
    log.metadata["segments"] = []
    log_at = frozenset(int(t) for t in log_at) if log_at else frozenset()
    t0 = time.perf_counter()
    pool = ThreadPoolExecutor(max_workers=2) if exec_mode == "threads" else None
    next_init = (x, y)
    try:
        for seg in segments:
            fx, fy = factory_for(seg)
            eta = stepsize_for(seg)
            px, py = fx(game, MIN), fy(game, MAX)
            try:
                px.begin_segment(next_init[0], eta)
                py.begin_segment(next_init[1], eta)
            except ValueError as e:
                raise ValueError(
                    f"hand-off into {seg.kind} k={seg.k} at t={seg.start}: {e}"
                ) from e
            seg_meta = {
                "kind": seg.kind, "k": seg.k, "start": seg.start, "end": seg.end,
                "init_hash_min": _policy_hash(next_init[0]),
                "init_hash_max": _policy_hash(next_init[1]),
            }
            x_cur, y_cur = px.policy, py.policy
            for t in range(seg.start, seg.end + 1):
                rx, Px = _kernels.marginal_min(R, P, y_cur)
                ry, Py = _kernels.marginal_max(R, P, x_cur)
                due = t in log_at or (
                    gap_every > 0
                    and (t % gap_every == 0 or t == seg.start or t == seg.end)
                )
                if due:
                    gap = _nash_gap_arrays(R, P, gamma, x_cur, y_cur)
                    wall = (time.perf_counter() - t0) * 1e3 if timing else None
                    log.append(t, seg.kind, seg.k, gap, wall)
                if callback is not None:
                    callback(t, x_cur, y_cur)
                mx = MarginalMDP(rx, Px, gamma)
                my = MarginalMDP(ry, Py, gamma)
                try:
                    if pool is None:
                        x_next = px.observe_and_update(mx)
                        y_next = py.observe_and_update(my)
                    else:
                        hx = pool.submit(px.observe_and_update, mx)
                        hy = pool.submit(py.observe_and_update, my)
                        x_next, y_next = hx.result(), hy.result()
                except NumericalError as e:
                    raise NumericalError(
                        f"player update failed at t={t}, segment {seg.kind} k={seg.k}: {e}"
                    ) from e
                x_cur, y_cur = x_next, y_next
            next_init = (px.segment_output(), py.segment_output())
            seg_meta["output_hash_min"] = _policy_hash(next_init[0])
            seg_meta["output_hash_max"] = _policy_hash(next_init[1])
            log.metadata["segments"].append(seg_meta)
            last_played = (px.last_played(), py.last_played())
    finally:
        if pool is not None:
            pool.shutdown()
    fx, fy = last_played if final_policy == "played" else next_init
    final = JointPolicy(Policy(MIN, fx), Policy(MAX, fy))
    return final, log


def run_homotopy(game, z0, eta, eta_prime, schedule, gs_factory=None, lf_factory=None,
                 *, gap_every=100, log_at=None, timing=False, exec_mode="sequential",
                 callback=None, metadata=None):
    """Run the switching schedule on a game from the joint policy z0.

    gs_factory/lf_factory build the slow and fast players per segment
    (defaults: averaging optimistic players and plain optimistic players);
    eta_prime and eta are their respective stepsizes. Gaps of the played
    pair are evaluated every gap_every iterations plus each segment's first
    and last iteration; log_at adds explicit iteration indices.

    Returns (final JointPolicy, RunLog); the final policy is the last pair
    actually played.
    """
    gs_factory = gs_factory or make_factory("avg-ogda")
    lf_factory = lf_factory or make_factory("ogda")
    meta = {
        "algorithm": "homotopy",
        "eta": eta, "eta_prime": eta_prime,
        "schedule_u": schedule.u, "schedule_v": schedule.v, "T": schedule.total,
        "gap_every": gap_every, "exec_mode": exec_mode,
    }
    meta.update(metadata or {})
    return _execute(
        game, z0, schedule.segments,
        lambda seg: (gs_factory, gs_factory) if seg.kind == GLOBAL_SLOW else (lf_factory, lf_factory),
        lambda seg: eta_prime if seg.kind == GLOBAL_SLOW else eta,
        gap_every, log_at, timing, exec_mode, callback, meta,
    )


def run_single_algorithm(game, z0, algorithm, stepsize, T, *, factory=None,
                         gap_every=100, log_at=None, timing=False,
                         exec_mode="sequential", callback=None, metadata=None):
    """Run one algorithm for T iterations with no switching.

    algorithm is "ogda", "avg-ogda" or "actor-critic" (also accepted with
    underscores); it names the segment in the log and picks the default
    factory. Standalone averaging players use their trivial value-bound
    initialization. Returns (final JointPolicy, RunLog) where the policy is
    the algorithm's own output: the running average for avg-ogda, the last
    played pair otherwise. The log always tracks played pairs.
    """
    name = algorithm.replace("_", "-")
    factory = factory or make_factory(name, standalone_init=True)
    sched = _single_segment_schedule(T, name)
    meta = {"algorithm": name, "stepsize": stepsize, "T": int(T), "gap_every": gap_every}
    meta.update(metadata or {})
    return _execute(
        game, z0, sched.segments,
        lambda seg: (factory, factory),
        lambda seg: stepsize,
        gap_every, log_at, timing, exec_mode, callback, meta,
        final_policy="output",
    )
