"""Nash equilibrium computation for two-player zero-sum discounted Markov games.

The solver of interest alternates two decentralized self-play phases on a
doubling schedule: a globally convergent averaging optimistic-gradient
player and a locally fast plain optimistic-gradient player. Around it sit
exact tabular analytics (values, best responses, minimax values, Nash
gaps), a seeded instance generator, convergence metrics and an experiment
CLI.

Hot kernels are numba-compiled with a pure-numpy fallback; see
mgnash.backend_name() and the MGNASH_BACKEND environment variable.
"""

from ._kernels import BACKEND as _BACKEND
from .analytics import (
    MarginalMDP,
    MatrixGameSolution,
    bellman_target,
    joint_q,
    joint_value,
    marginalize,
    matrix_game_value,
    mdp_best_response,
    mdp_policy_value,
    mdp_q,
    minimax_values,
    nash_gap,
    visitation,
)
from .errors import GameFormatError, MatrixGameError, NumericalError, ScheduleError
from .game import (
    MAX,
    MIN,
    JointPolicy,
    MarkovGame,
    Policy,
    ValidationReport,
    deserialize_game,
    deserialize_policy,
    game_hash,
    load_game,
    load_policy,
    save_game,
    save_policy,
    serialize_game,
    serialize_policy,
    transpose_game,
    uniform_joint,
    uniform_policy,
    validate_game,
)
from .homotopy import (
    GLOBAL_SLOW,
    LOCAL_FAST,
    Schedule,
    Segment,
    build_schedule,
    run_homotopy,
    run_single_algorithm,
)
from .metrics import (
    ConvergenceSummary,
    DualityBounds,
    duality_bounds_check,
    fit_linear_rate,
    summarize_convergence,
)
from .players import (
    ActorCriticPlayer,
    AveragingOgdaPlayer,
    FrozenPlayer,
    OgdaPlayer,
    PlayerAlgorithm,
    alpha,
    averaging_horizon,
    critic_horizon,
    make_factory,
    rationality_run,
    theory_stepsize_global,
    theory_stepsize_local,
)
from .randgen import GenSpec, random_game, random_instance, random_policy_pair
from .runlog import RunLog, read_run_csv
from .simplex import mix_into, project_simplex

__version__ = "0.1.0"


def backend_name():
    """Which kernel backend this process imported ("numba" or "numpy")."""
    return _BACKEND
