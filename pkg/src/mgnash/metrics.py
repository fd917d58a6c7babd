"""Convergence summaries and equilibrium-distance sanity bounds."""

import math
from dataclasses import dataclass

import numpy as np

from .analytics import matrix_game_value, nash_gap
from .game import JointPolicy, Policy

MIN_FIT_SAMPLES = 10


@dataclass(frozen=True)
class ConvergenceSummary:
    """Tail behavior of a gap trace.

    slope and r_squared describe the OLS fit of ln(gap) against t over the
    samples at t >= cutoff with positive gap; they are None (fit undefined)
    when fewer than MIN_FIT_SAMPLES such samples exist. boundary_gaps are
    (t, gap) pairs at requested iteration indices.
    """

    final_gap: float
    cutoff: int
    gap_at_cutoff: float
    slope: float
    r_squared: float
    n_fit_samples: int
    boundary_gaps: tuple

    @property
    def fit_defined(self):
        return self.slope is not None


def fit_linear_rate(ts, gaps, cutoff=0):
    """OLS fit of ln(gap) vs t over samples with t >= cutoff and gap > 0.

    Returns (slope, r_squared, n_samples); slope and r_squared are None
    when fewer than MIN_FIT_SAMPLES samples qualify. A constant positive
    trace fits slope 0 with r_squared 1 by convention (zero residuals).
    """
    ts = np.asarray(ts, dtype=np.float64)
    gaps = np.asarray(gaps, dtype=np.float64)
    keep = (ts >= cutoff) & (gaps > 0.0)
    n = int(keep.sum())
    if n < MIN_FIT_SAMPLES:
        return None, None, n
    t = ts[keep]
    g = np.log(gaps[keep])
    tbar, gbar = t.mean(), g.mean()
    dt = t - tbar
    var = float(dt @ dt)
    if var == 0.0:
        return None, None, n
    slope = float(dt @ (g - gbar)) / var
    resid = g - gbar - slope * dt
    ss_res = float(resid @ resid)
    ss_tot = float((g - gbar) @ (g - gbar))
    r2 = 1.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return slope, r2, n


def summarize_convergence(log, cutoff, boundary_ts=()):
    """ConvergenceSummary of a RunLog's gap trace."""
    ts, gaps = log.gap_series()
    if not ts:
        raise ValueError("run log carries no evaluated gaps")
    slope, r2, n = fit_linear_rate(ts, gaps, cutoff)
    gap_at_cutoff = None
    for t, g in zip(ts, gaps):
        if t >= cutoff:
            gap_at_cutoff = g
            break
    wanted = set(int(b) for b in boundary_ts)
    boundary = tuple((t, g) for t, g in zip(ts, gaps) if t in wanted)
    return ConvergenceSummary(
        final_gap=gaps[-1], cutoff=int(cutoff), gap_at_cutoff=gap_at_cutoff,
        slope=slope, r_squared=r2, n_fit_samples=n, boundary_gaps=boundary,
    )


@dataclass(frozen=True)
class DualityBounds:
    """Nash gap against the distance-to-equilibrium upper bound.

    gap <= constant * distance must hold (up to tolerance) whenever
    distance is measured to an actual equilibrium; `holds` reports that
    check with a 1e-8 allowance for the witness's own accuracy.
    """

    gap: float
    distance: float
    constant: float
    upper_bound: float
    holds: bool


def duality_bounds_check(game, z, witness=None, witness_tol=1e-12):
    """Check gap(z) <= sqrt(2*max(A,B))/(1-gamma)^2 * dist(z, equilibria).

    For single-state games the witness is computed on demand from the
    reward matrix (whose equilibria are exactly the game's, for any
    discount); multi-state games must supply one. The distance to the
    witness upper-bounds the distance to the equilibrium set only up to
    the witness's accuracy, hence the tolerance in `holds`.
    """
    gap = nash_gap(game, z)
    S, A, B = game.rewards.shape
    if witness is None:
        if S != 1:
            raise ValueError("no witness supplied and the game has more than one state")
        sol = matrix_game_value(game.rewards[0], tol=witness_tol)
        wx, wy = sol.x[None, :], sol.y[None, :]
    elif isinstance(witness, JointPolicy):
        wx, wy = witness.min_policy.probs, witness.max_policy.probs
    else:
        wx, wy = witness
        wx = wx.probs if isinstance(wx, Policy) else np.asarray(wx, dtype=np.float64)
        wy = wy.probs if isinstance(wy, Policy) else np.asarray(wy, dtype=np.float64)
    if isinstance(z, JointPolicy):
        zx, zy = z.min_policy.probs, z.max_policy.probs
    else:
        zx, zy = z
        zx = zx.probs if isinstance(zx, Policy) else np.asarray(zx, dtype=np.float64)
        zy = zy.probs if isinstance(zy, Policy) else np.asarray(zy, dtype=np.float64)
    distance = math.sqrt(float(((zx - wx) ** 2).sum() + ((zy - wy) ** 2).sum()))
    constant = math.sqrt(2.0 * max(A, B)) / (1.0 - game.gamma) ** 2
    upper = constant * distance
    return DualityBounds(gap, distance, constant, upper, gap <= upper + 1e-8)
