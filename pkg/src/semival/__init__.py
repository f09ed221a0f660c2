"""Semivalue data valuation, utility ambiguity sets and utility-gaming searches."""

__version__ = "0.1.0"

from .data import (
    Dataset,
    Stratum,
    TestSet,
    coalition,
    enumerate_coalitions,
    load_csv,
    members,
    sample_stratum,
)
from .favorability import FavorabilitySpec, favorability, range_over, rank_of
from .gaming import GameResult, game_behaviors, game_cost, game_discrete, game_kmin
from .learners import Learner, Logistic, Ridge, Untrained, apply_small_rule, train_logistic, train_ridge
from .oracle import oracle_argmax
from .scoring import ScoreMetric, clip, net_benefit, score
from .semivalues import (
    SemivalueVector,
    StrataStats,
    WeightScheme,
    exact_semivalues,
    make_weights,
    reweigh,
    stratified_sample,
)
from .utility import (
    CandidateSet,
    ModelCache,
    TableUtility,
    UtilitySpec,
    build_cost,
    build_mono,
    build_small_behaviors,
    build_u0,
    evaluate,
    make_utility,
)
