"""Bayesian stopping problems with costly, priced information."""

__version__ = "0.1.0"

from .belief import (
    BlackwellVerdict,
    InfoStructure,
    MarkovTransition,
    Relation,
    bayes_update,
    blackwell_compare,
    garble,
    markov_fixed_point,
    markov_push,
    signal_marginal,
)
from .config import ConfigError, ProblemConfig, config_from_problem, load_config, parse_config
from .errors import (
    CounterexampleFound,
    InvalidDiscount,
    InvalidGarbling,
    InvalidSetup,
    NoCrossing,
    NonConvergence,
    NotContractive,
    StopvalError,
    TreeTooLarge,
    ValidationError,
    ZeroProbabilitySignal,
)
from .fee_design import (
    FeeEvaluation,
    SupremumReport,
    evaluate_fee,
    optimal_delayed_lump,
    supremum_check,
    upfront_scheme,
    value_of_information,
    zero_fee_value,
)
from .fees import (
    DelayedLump,
    ExplicitTree,
    FeeScheme,
    Flat,
    Schedule,
    Timing,
    TreeFeeSampler,
    Upfront,
    Zero,
    timing_transform,
)
from .markov import markov_value_of_information, rejection_value, solve_markov
from .multi_signal import allocation_value, solve_multi_signal
from .problem import StoppingProblem, stopping_payoff
from .pwlc import PwlcValue, sup_distance
from .solver import Decision, FiniteSolution, InfiniteSolution, backup, solve_finite, solve_infinite
from .stopping_time import (
    Dominance,
    GaussianSetup,
    StoppingTimeDist,
    crossing_prior,
    exact_distribution,
    fosd_check,
    hitting_time_distribution,
    random_walk_hitting_pmf,
    simulate_distribution,
    simulate_hitting_time,
    simulate_wald,
    ssd_check,
    wald_expected_stopping,
)
from .tree import HistoryTree, solve_history_tree
