"""Capacitated greedy matching and epoch-based UCB bandits for agents whose
reward distributions follow hidden Markov states."""
from ._backend import BACKEND
from .environment import (ArmModel, EarlyStop, EnvironmentModel, RewardDistribution, example1,
                          generate_synthetic, play_epoch)
from .matching import (Edge, Matching, MatchingInstance, decompose, exact_match, greedy_match,
                       hungarian_match, initial_cover)
from .policy import BanditState, EpochSchedule, PolicyConfig, run
from .regret import RegretTrace, build_benchmark, corollary1_bound, gaps, prop1_bound, thm2_bound

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "ArmModel", "BanditState", "EarlyStop", "Edge", "EnvironmentModel", "EpochSchedule",
    "Matching", "MatchingInstance", "PolicyConfig", "RegretTrace", "RewardDistribution",
    "build_benchmark", "corollary1_bound", "decompose", "exact_match", "example1", "gaps",
    "generate_synthetic", "greedy_match", "hungarian_match", "initial_cover", "play_epoch",
    "prop1_bound", "run", "thm2_bound", "__version__",
]
