import math

import numpy as np
import pytest

import mgnash as mg
from mgnash.analytics import marginalize, matrix_game_value, mdp_best_response, \
    mdp_policy_value, minimax_values, nash_gap
from mgnash.players import ActorCriticPlayer, AveragingOgdaPlayer, FrozenPlayer, \
    OgdaPlayer, PlayerAlgorithm, alpha, averaging_horizon, critic_horizon, \
    make_factory, rationality_run, theory_stepsize_global, theory_stepsize_local
from mgnash.simplex import project_simplex
from oracles import averaging_weights_reference, matrix_ogda_reference, \
    weighted_average_reference
from smallgames import make_game, matching_pennies_like, rand_policy, \
    single_action_game


def min_marginal(game, y):
    return marginalize(game, mg.Policy(mg.MAX, y), mg.MIN)


def max_marginal(game, x):
    return marginalize(game, mg.Policy(mg.MIN, x), mg.MAX)


# ---------------------------------------------------------------- schedules


def test_alpha_first_step_is_one():
    for H in (1.0, 7.0, 199.0, 1e6):
        assert alpha(1, H) == 1.0


def test_alpha_hand_value():
    H = averaging_horizon(0.99)
    assert H == pytest.approx(199.0, abs=1e-12)
    assert alpha(2, H) == pytest.approx(200.0 / 201.0, rel=1e-15)


def test_alpha_rejects_bad_tau():
    with pytest.raises(ValueError):
        alpha(0, 10.0)


def test_alpha_weights_sum_to_one():
    for tau in (1, 2, 7, 50):
        w = averaging_weights_reference(tau, averaging_horizon(0.9))
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        assert w.min() > 0.0


def test_critic_horizon_is_ceiling():
    assert critic_horizon(0.5) == 4.0
    assert critic_horizon(0.9) == 20.0
    assert critic_horizon(0.99) == 200.0


def test_theory_stepsize_formulas():
    game, _ = mg.random_instance(mg.GenSpec(10, 10, 10, 0.99, 0))
    want_local = (1 - 0.99) ** 2.5 / (32 * math.sqrt(10) * 20)
    want_global = (1 - 0.99) / (16 * 10)
    assert theory_stepsize_local(game) == pytest.approx(want_local, rel=1e-12)
    assert theory_stepsize_global(game) == pytest.approx(want_global, rel=1e-12)


# ---------------------------------------------------------------- ogda core


def test_single_action_policy_never_moves():
    game = single_action_game()
    p = OgdaPlayer(mg.MIN, 1, 1, game.gamma)
    p.begin_segment(np.ones((1, 1)), 0.1)
    m = min_marginal(game, np.ones((1, 1)))
    for _ in range(5):
        out = p.observe_and_update(m)
        assert np.array_equal(out, np.ones((1, 1)))


def test_constant_q_is_fixed_point():
    # equal q across actions shifts every coordinate equally, which the
    # projection removes
    game = make_game(np.full((1, 3, 2), 0.4), np.ones((1, 3, 2, 1)), 0.0)
    x0 = np.array([[0.2, 0.3, 0.5]])
    p = OgdaPlayer(mg.MIN, 1, 3, 0.0)
    p.begin_segment(x0, 0.25)
    m = min_marginal(game, np.full((1, 2), 0.5))
    for _ in range(4):
        out = p.observe_and_update(m)
        assert np.abs(out - x0).max() <= 1e-15
        assert np.abs(p.anchor - x0).max() <= 1e-15


def test_anchor_stays_on_first_step_only():
    game = matching_pennies_like()
    x0 = np.array([[0.9, 0.1]])
    p = OgdaPlayer(mg.MIN, 1, 2, 0.0)
    p.begin_segment(x0, 0.1)
    m = min_marginal(game, np.array([[0.8, 0.2]]))
    p.observe_and_update(m)
    assert np.array_equal(p.anchor, x0)
    p.observe_and_update(m)
    assert not np.array_equal(p.anchor, x0)


def test_matches_classical_matrix_ogda():
    # a single-state undiscounted run is plain optimistic gradient on the
    # payoff matrix; both sides must track the reference to fp accuracy
    rng = np.random.default_rng(17)
    for _ in range(3):
        game, z0 = mg.random_instance(mg.GenSpec(1, 3, 4, 0.0, int(rng.integers(1 << 30))))
        eta = 0.1
        x0, y0 = z0.min_policy.probs, z0.max_policy.probs
        want = matrix_ogda_reference(game.rewards[0], x0[0], y0[0], eta, 300)
        px = OgdaPlayer(mg.MIN, 1, 3, 0.0)
        py = OgdaPlayer(mg.MAX, 1, 4, 0.0)
        px.begin_segment(x0, eta)
        py.begin_segment(y0, eta)
        x, y = x0, y0
        for t in range(300):
            wx, wy = want[t]
            assert np.abs(x[0] - wx).max() <= 1e-12
            assert np.abs(y[0] - wy).max() <= 1e-12
            mx = min_marginal(game, y)
            my = max_marginal(game, x)
            x = px.observe_and_update(mx)
            y = py.observe_and_update(my)


def test_optimistic_update_recomputable_from_parts():
    # next policy must equal project(anchor +/- eta q) with the anchor
    # moved first (except on the initial step), for both optimistic players
    game, z0 = mg.random_instance(mg.GenSpec(3, 4, 3, 0.9, 23))
    for cls in (OgdaPlayer, AveragingOgdaPlayer):
        px = cls(mg.MIN, 3, 4, 0.9)
        px.begin_segment(z0.min_policy.probs, 0.1)
        y = z0.max_policy.probs
        rng = np.random.default_rng(5)
        for t in range(6):
            m = min_marginal(game, y)
            before = px.anchor.copy()
            x_new = px.observe_and_update(m)
            q = px.last_q
            anchor = before if t == 0 else project_simplex(before - 0.1 * q)
            expect = project_simplex(anchor - 0.1 * q)
            assert np.abs(px.anchor - anchor).max() <= 1e-12
            assert np.abs(x_new - expect).max() <= 1e-12
            y = rand_policy(rng, 3, 3)


def test_stationary_at_matrix_equilibrium():
    # from a high-accuracy equilibrium witness one optimistic step barely
    # moves
    for seed in (0, 2, 3):
        game, _ = mg.random_instance(mg.GenSpec(1, 4, 4, 0.0, seed))
        sol = matrix_game_value(game.rewards[0], tol=1e-12)
        x0, y0 = sol.x[None, :], sol.y[None, :]
        px = OgdaPlayer(mg.MIN, 1, 4, 0.0)
        py = OgdaPlayer(mg.MAX, 1, 4, 0.0)
        px.begin_segment(x0, 0.1)
        py.begin_segment(y0, 0.1)
        x1 = px.observe_and_update(min_marginal(game, y0))
        y1 = py.observe_and_update(max_marginal(game, x0))
        assert np.abs(x1 - x0).max() <= 1e-8
        assert np.abs(y1 - y0).max() <= 1e-8


# ---------------------------------------------------------------- averaging


def test_value_bound_init_standalone():
    p = AveragingOgdaPlayer(mg.MIN, 2, 2, 0.5, standalone_init=True)
    q = AveragingOgdaPlayer(mg.MAX, 2, 2, 0.5, standalone_init=True)
    game, z0 = mg.random_instance(mg.GenSpec(2, 2, 2, 0.5, 0))
    p.begin_segment(z0.min_policy.probs, 0.1)
    q.begin_segment(z0.max_policy.probs, 0.1)
    p.observe_and_update(min_marginal(game, z0.max_policy.probs))
    q.observe_and_update(max_marginal(game, z0.min_policy.probs))
    # after one update the bounds have been backed up once from 0 and
    # 1/(1-gamma); they stay within the trivial range
    assert p.value_extrema()[0] >= 0.0
    assert q.value_extrema()[1] <= 1.0 / (1.0 - 0.5) + 1e-12


def test_value_bound_init_from_first_observation():
    game, z0 = mg.random_instance(mg.GenSpec(3, 3, 3, 0.9, 8))
    y0 = z0.max_policy.probs
    p = AveragingOgdaPlayer(mg.MIN, 3, 3, 0.9)
    p.begin_segment(z0.min_policy.probs, 0.1)
    m = min_marginal(game, y0)
    p.observe_and_update(m)
    want, _ = mdp_best_response(m, mg.MIN)
    # the stored V has already folded one backup of itself: q = r + g P V0,
    # V1 = min_a q; with V0 the optimal value of m this is again V0
    assert np.abs(p.V - want).max() <= 1e-9


def test_single_action_value_bound_is_exact_forever():
    game = single_action_game()
    p = AveragingOgdaPlayer(mg.MIN, 1, 1, 0.5)
    p.begin_segment(np.ones((1, 1)), 0.1)
    m = min_marginal(game, np.ones((1, 1)))
    for _ in range(10):
        p.observe_and_update(m)
        assert p.V[0] == pytest.approx(1.0, abs=1e-12)


def test_segment_output_one_iteration_is_initial():
    game, z0 = mg.random_instance(mg.GenSpec(2, 3, 2, 0.7, 4))
    p = AveragingOgdaPlayer(mg.MIN, 2, 3, 0.7)
    x0 = z0.min_policy.probs
    p.begin_segment(x0, 0.1)
    p.observe_and_update(min_marginal(game, z0.max_policy.probs))
    assert np.abs(p.segment_output() - x0).max() <= 1e-15


def test_segment_output_constant_play_is_that_policy():
    game = single_action_game()
    p = AveragingOgdaPlayer(mg.MIN, 1, 1, 0.5)
    p.begin_segment(np.ones((1, 1)), 0.1)
    m = min_marginal(game, np.ones((1, 1)))
    for _ in range(7):
        p.observe_and_update(m)
    assert np.array_equal(p.segment_output(), np.ones((1, 1)))


def test_average_matches_explicit_weights():
    game, z0 = mg.random_instance(mg.GenSpec(3, 3, 3, 0.9, 15))
    p = AveragingOgdaPlayer(mg.MIN, 3, 3, 0.9)
    p.begin_segment(z0.min_policy.probs, 0.05)
    rng = np.random.default_rng(2)
    played = []
    y = z0.max_policy.probs
    for tau in range(1, 101):
        played.append(p.policy.copy())
        p.observe_and_update(min_marginal(game, y))
        want = weighted_average_reference(played, p.H)
        assert np.abs(p.segment_output() - want).max() <= 1e-12
        y = rand_policy(rng, 3, 3)


def test_value_bounds_sandwich_minimax_values():
    game, z0 = mg.random_instance(mg.GenSpec(3, 3, 3, 0.9, 77))
    vstar, _ = minimax_values(game)
    lo = AveragingOgdaPlayer(mg.MIN, 3, 3, 0.9)
    hi = AveragingOgdaPlayer(mg.MAX, 3, 3, 0.9)
    lo.begin_segment(z0.min_policy.probs, 0.05)
    hi.begin_segment(z0.max_policy.probs, 0.05)
    x, y = z0.min_policy.probs, z0.max_policy.probs
    for _ in range(500):
        mx, my = min_marginal(game, y), max_marginal(game, x)
        x = lo.observe_and_update(mx)
        y = hi.observe_and_update(my)
        assert np.all(lo.V <= vstar + 1e-8)
        assert np.all(vstar <= hi.V + 2e-8)


# ---------------------------------------------------------------- actor-critic


def test_actor_critic_anchor_moves_on_first_step():
    game = matching_pennies_like()
    x0 = np.array([[0.9, 0.1]])
    p = ActorCriticPlayer(mg.MIN, 1, 2, 0.0)
    p.begin_segment(x0, 0.1)
    p.observe_and_update(min_marginal(game, np.array([[0.8, 0.2]])))
    assert not np.array_equal(p.anchor, x0)


def test_actor_critic_first_beta_replaces_critic():
    assert alpha(1, critic_horizon(0.5)) == 1.0
    game, z0 = mg.random_instance(mg.GenSpec(2, 2, 2, 0.5, 3))
    p = ActorCriticPlayer(mg.MIN, 2, 2, 0.5)
    x0 = z0.min_policy.probs
    p.begin_segment(x0, 0.1)
    m = min_marginal(game, z0.max_policy.probs)
    V0 = mdp_policy_value(m, x0)
    q = m.rewards + 0.5 * m.kernel @ V0
    p.observe_and_update(m)
    assert np.abs(p.V - (x0 * q).sum(axis=1)).max() <= 1e-12


def test_actor_critic_single_action_critic_constant():
    game = single_action_game()
    p = ActorCriticPlayer(mg.MIN, 1, 1, 0.5)
    p.begin_segment(np.ones((1, 1)), 0.1)
    m = min_marginal(game, np.ones((1, 1)))
    for _ in range(6):
        p.observe_and_update(m)
        assert p.V[0] == pytest.approx(1.0, abs=1e-12)


# ---------------------------------------------------------------- symmetry


def lift(policy_rows):
    """Reindex helper for the transposition test (identity, kept for intent)."""
    return policy_rows


def test_sides_are_mirror_images_under_transposition():
    # stepping the max side in the original game must equal stepping the
    # min side in the transposed game, observation by observation
    game, z0 = mg.random_instance(mg.GenSpec(3, 2, 4, 0.8, 31))
    tgame = mg.transpose_game(game)
    rng = np.random.default_rng(9)
    for cls in (OgdaPlayer, AveragingOgdaPlayer, ActorCriticPlayer):
        p_max = cls(mg.MAX, 3, 4, 0.8)
        p_min = cls(mg.MIN, 3, 4, 0.8)
        y0 = z0.max_policy.probs
        p_max.begin_segment(y0, 0.07)
        p_min.begin_segment(y0, 0.07)
        x = z0.min_policy.probs
        for _ in range(20):
            obs = marginalize(game, mg.Policy(mg.MIN, x), mg.MAX)
            tobs = marginalize(tgame, mg.Policy(mg.MAX, x), mg.MIN)
            a = p_max.observe_and_update(obs)
            b = p_min.observe_and_update(tobs)
            assert np.abs(a - lift(b)).max() <= 1e-12
            x = rand_policy(rng, 3, 2)


def test_update_depends_only_on_marginal():
    # two different opponent mixes that induce bitwise-identical marginals
    # must produce bitwise-identical updates
    R = np.zeros((1, 2, 2))
    R[0, :, 0] = [0.3, 0.7]
    R[0, :, 1] = [0.3, 0.7]  # the two columns are identical
    P = np.ones((1, 2, 2, 1))
    game = make_game(R, P, 0.0)
    ya = np.array([[1.0, 0.0]])
    yb = np.array([[0.5, 0.5]])
    ma = min_marginal(game, ya)
    mb = min_marginal(game, yb)
    assert np.array_equal(ma.rewards, mb.rewards)
    assert np.array_equal(ma.kernel, mb.kernel)
    outs = []
    for m in (ma, mb):
        p = OgdaPlayer(mg.MIN, 1, 2, 0.0)
        p.begin_segment(np.array([[0.6, 0.4]]), 0.1)
        p.observe_and_update(m)
        outs.append(p.observe_and_update(m))
    assert np.array_equal(outs[0], outs[1])


# ---------------------------------------------------------------- plumbing


def test_frozen_player_never_moves():
    y = np.array([[0.3, 0.7]])
    p = FrozenPlayer(mg.MAX, y)
    p.begin_segment(np.array([[0.5, 0.5]]), 0.1)  # initial is ignored
    game = matching_pennies_like()
    out = p.observe_and_update(max_marginal(game, np.array([[1.0, 0.0]])))
    assert np.array_equal(out, y)
    assert np.array_equal(p.segment_output(), y)


def test_factory_rejects_unknown_algorithm():
    with pytest.raises(ValueError):
        make_factory("newton")


def test_factory_strict_theory_caps_stepsize():
    game, _ = mg.random_instance(mg.GenSpec(3, 3, 3, 0.9, 1))
    factory = make_factory("ogda", strict_theory=True)
    p = factory(game, mg.MIN)
    p.begin_segment(mg.uniform_policy(game, mg.MIN).probs, 0.1)
    assert p.stepsize == pytest.approx(theory_stepsize_local(game), rel=1e-12)
    loose = make_factory("ogda")(game, mg.MIN)
    loose.begin_segment(mg.uniform_policy(game, mg.MIN).probs, 0.1)
    assert loose.stepsize == 0.1


def test_begin_segment_validation():
    p = OgdaPlayer(mg.MIN, 2, 3, 0.9)
    with pytest.raises(ValueError):
        p.begin_segment(np.ones((2, 2)), 0.1)
    with pytest.raises(ValueError):
        p.begin_segment(np.full((2, 3), 1 / 3), 0.0)


def test_update_requires_begin():
    p = OgdaPlayer(mg.MIN, 1, 2, 0.0)
    with pytest.raises(RuntimeError):
        p.observe_and_update(min_marginal(matching_pennies_like(), np.array([[0.5, 0.5]])))


def test_trace_hook_fires():
    seen = []
    game, z0 = mg.random_instance(mg.GenSpec(2, 2, 2, 0.5, 6))
    factory = make_factory("avg-ogda", trace_hook=lambda t, d, ex: seen.append((t, d, ex)))
    p = factory(game, mg.MIN)
    p.begin_segment(z0.min_policy.probs, 0.1)
    m = min_marginal(game, z0.max_policy.probs)
    p.observe_and_update(m)
    p.observe_and_update(m)
    assert [s[0] for s in seen] == [0, 1]
    assert all(s[1] >= 0.0 for s in seen)
    assert all(isinstance(s[2], tuple) and len(s[2]) == 2 for s in seen)


# ---------------------------------------------------------------- rationality


def test_rationality_single_agent_degenerate():
    # a one-action opponent makes this a plain MDP; the learner's value
    # reaches the optimum
    game, z0 = mg.random_instance(mg.GenSpec(2, 3, 1, 0.5, 12))
    frozen = mg.uniform_policy(game, mg.MAX)
    trace = rationality_run(game, frozen, algorithm="ogda", T=3000, eta=0.1)
    assert trace.shape == (3000,)
    assert trace[-1] <= 1e-6


def test_rationality_from_optimal_start_stays_optimal():
    game, _ = mg.random_instance(mg.GenSpec(2, 3, 2, 0.5, 19))
    frozen = mg.Policy(mg.MAX, rand_policy(np.random.default_rng(3), 2, 2))
    m = marginalize(game, frozen, mg.MIN)
    _, actions = mdp_best_response(m, mg.MIN)
    x_opt = np.zeros((2, 3))
    x_opt[np.arange(2), actions] = 1.0
    trace = rationality_run(game, frozen, algorithm="ogda", T=200, eta=0.1,
                            start=mg.Policy(mg.MIN, x_opt))
    assert trace.max() <= 1e-8


def test_rationality_ogda_and_actor_critic_agree():
    game, _ = mg.random_instance(mg.GenSpec(2, 3, 3, 0.5, 7))
    frozen = mg.Policy(mg.MAX, rand_policy(np.random.default_rng(11), 2, 3))
    for algo in ("ogda", "actor-critic"):
        trace = rationality_run(game, frozen, algorithm=algo, T=20_000, eta=0.1)
        assert trace[-1] <= 1e-6, algo
