"""Epoch-based UCB policies over capacitated matchings.

MG_EUCB plays one matching per epoch, chosen by greedy matching on
empirical mean plus a confidence term that accounts for the Markov bias of
short epochs. H_EUCB swaps the greedy oracle for the Hungarian method.
The ``_PLUS`` variants halve the ``ln t`` coefficient. C_UCB is the
classical per-iteration UCB baseline.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._backend import kernels
from .environment import EarlyStop, EnvironmentModel, play_epoch
from .matching import (BindingCapacityError, Edge, Matching, MatchingInstance,
                       greedy_match, hungarian_match, initial_cover)

VARIANTS = ("MG_EUCB", "MG_EUCB_PLUS", "H_EUCB", "H_EUCB_PLUS", "C_UCB")
CUCB_COEF = 2.0


@dataclass(frozen=True)
class EpochSchedule:
    """Epoch ``k`` (1-based) lasts ``tau0 + zeta * k`` iterations."""

    tau0: int = 50
    zeta: int = 1
    early_stop: EarlyStop | None = None

    def __post_init__(self):
        if self.tau0 < 1:
            raise ValueError("tau0 must be >= 1")
        if self.zeta < 0:
            raise ValueError("zeta must be >= 0")

    def tau(self, k: int) -> int:
        return self.tau0 + self.zeta * k

    def clock_after(self, k: int) -> int:
        """Iterations consumed by epochs 1..k without early stopping."""
        return self.tau0 * k + self.zeta * k * (k + 1) // 2


@dataclass
class PolicyConfig:
    variant: str = "MG_EUCB"
    log_coefficient: float | None = None
    mixing_constants: np.ndarray | None = None   # override, shape (m_agents, m_incentives)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.log_coefficient is None:
            self.log_coefficient = 3.0 if self.variant.endswith("_PLUS") else 6.0
        if self.log_coefficient <= 0:
            raise ValueError("log_coefficient must be > 0")

    @property
    def hungarian(self) -> bool:
        return self.variant.startswith("H_")

    @property
    def epochal(self) -> bool:
        return self.variant != "C_UCB"


def q_constant(c_mix, k, schedule: EpochSchedule):
    """Accumulated Markov bias of ``k`` epochs: (C/2)(1/(zeta+tau0) + ln(1 + k zeta/tau0)/zeta).

    With zeta = 0 the sum of 1/tau0 over k epochs gives (C/2) k / tau0.
    """
    c_mix = np.asarray(c_mix, dtype=float)
    k = np.asarray(k, dtype=float)
    t0, z = float(schedule.tau0), float(schedule.zeta)
    if z == 0:
        return 0.5 * c_mix * k / t0
    return 0.5 * c_mix * (1.0 / (z + t0) + np.log1p(k * z / t0) / z)


def confidence(k, t, m: int, c_mix, schedule: EpochSchedule, log_coefficient: float = 6.0):
    """Q(k)/k + sqrt((L ln t + 4 ln m) / k), natural logs."""
    k = np.asarray(k, dtype=float)
    return (q_constant(c_mix, k, schedule) / k
            + np.sqrt((log_coefficient * math.log(t) + 4.0 * math.log(m)) / k))


@dataclass
class BanditState:
    """Per-edge sums of epoch averages and pull counts (initialised to 1)."""

    cum_reward: np.ndarray
    pulls: np.ndarray
    epoch: int = 0
    clock: int = 0
    cover_queue: list = field(default_factory=list)

    @classmethod
    def initial(cls, instance: MatchingInstance, cover: bool = True) -> "BanditState":
        shape = instance.shape
        queue = initial_cover(instance) if cover else []
        return cls(np.zeros(shape), np.ones(shape, dtype=np.int64), 0, 0, list(queue))

    def means(self) -> np.ndarray:
        return self.cum_reward / self.pulls


def index_weights(state: BanditState, config: PolicyConfig, schedule: EpochSchedule,
                  c_mix: np.ndarray, m: int) -> np.ndarray:
    t = state.epoch + 1
    return state.means() + confidence(state.pulls, t, m, c_mix, schedule, config.log_coefficient)


def select(state: BanditState, config: PolicyConfig, instance: MatchingInstance,
           schedule: EpochSchedule, c_mix: np.ndarray) -> Matching:
    """Next cover matching if any remain, else the oracle on the index weights."""
    if state.cover_queue:
        return state.cover_queue[0]
    u = index_weights(state, config, schedule, c_mix, max(instance.shape))
    inst = instance.with_weights(u)
    return hungarian_match(inst) if config.hungarian else greedy_match(inst)


def update(state: BanditState, matching: Matching, result, schedule: EpochSchedule | None = None
           ) -> BanditState:
    """Add each played edge's epoch average and bump its pull count (in place)."""
    if set(result.rewards) != set(matching.edges):
        raise ValueError("epoch result does not match the played matching")
    for (a, i), r in result.rewards.items():
        state.cum_reward[a, i] += r
        state.pulls[a, i] += 1
    if state.cover_queue and state.cover_queue[0] == matching:
        state.cover_queue.pop(0)
    state.epoch += 1
    state.clock += result.iterations_used
    return state


@dataclass
class EpochRecord:
    epoch: int
    phase: str            # "cover", "ucb" or "iter"
    clock: int            # iteration clock at epoch start
    tau: int
    edges: tuple
    realized: float       # sum over matched edges of epoch time-averages
    optimal: float        # 1/0 for epoch policies, fraction of iterations for C_UCB


@dataclass
class RunResult:
    variant: str
    records: list
    plays: np.ndarray                      # true plays per edge (epochs or iterations)
    snapshots: dict                        # epoch -> plays copy
    state: object = None

    def realized(self) -> np.ndarray:
        return np.array([r.realized for r in self.records])

    def optimal(self) -> np.ndarray:
        return np.array([r.optimal for r in self.records])

    def __len__(self):
        return len(self.records)


def check_instance(env: EnvironmentModel, instance: MatchingInstance, config: PolicyConfig):
    if instance.shape != (env.m_agents, env.m_incentives):
        raise ValueError(f"instance shape {instance.shape} does not match environment "
                         f"{(env.m_agents, env.m_incentives)}")
    if config.hungarian and not instance.nonbinding():
        raise BindingCapacityError(f"{config.variant} needs non-binding class capacities")


def run(env: EnvironmentModel, instance: MatchingInstance, config: PolicyConfig,
        schedule: EpochSchedule, n_epochs: int, rng: np.random.Generator,
        reference: Matching | None = None, checkpoints=()) -> RunResult:
    """Cover epochs followed by ``n_epochs`` index-driven epochs.

    ``reference`` is the matching counted as optimal in the trace;
    ``checkpoints`` lists epoch counts at which play counts are snapshotted.
    C_UCB runs the same number of epochs worth of iterations.
    """
    check_instance(env, instance, config)
    if n_epochs < 0:
        raise ValueError("n_epochs must be >= 0")
    if not config.epochal:
        return _run_cucb(env, instance, config, schedule, n_epochs, rng, reference, checkpoints)
    c_mix = (env.mixing_constants() if config.mixing_constants is None
             else np.asarray(config.mixing_constants, dtype=float))
    state = BanditState.initial(instance)
    total = len(state.cover_queue) + n_epochs
    ref = None if reference is None else reference.edge_set
    plays = np.zeros(instance.shape, dtype=np.int64)
    checkpoints = set(checkpoints)
    snapshots, records = {}, []
    for _ in range(total):
        phase = "cover" if state.cover_queue else "ucb"
        matching = select(state, config, instance, schedule, c_mix)
        k = state.epoch + 1
        start = state.clock
        res = play_epoch(env, matching, schedule.tau(k), rng, schedule.early_stop)
        update(state, matching, res, schedule)
        for a, i in matching:
            plays[a, i] += 1
        opt = float(ref is not None and matching.edge_set == ref)
        records.append(EpochRecord(k, phase, start, res.iterations_used, matching.sorted(),
                                   res.total, opt))
        if k in checkpoints:
            snapshots[k] = plays.copy()
    return RunResult(config.variant, records, plays, snapshots, state)


@dataclass
class CUCBState:
    sums: np.ndarray
    counts: np.ndarray
    t: int = 0


def _run_cucb(env, instance, config, schedule, n_epochs, rng, reference, checkpoints):
    if env.idle_kernels is not None:
        raise ValueError("C_UCB does not simulate idle kernels")
    n_epochs = len(initial_cover(instance)) + n_epochs
    packed = env.packed
    P = env.m_agents * env.m_incentives
    class_of = np.ascontiguousarray(instance.class_of.ravel(), dtype=np.int64)
    caps = np.ascontiguousarray(instance.capacities, dtype=np.int64)
    ref = np.zeros(P, dtype=np.uint8)
    if reference is not None:
        for a, i in reference:
            ref[a * env.m_incentives + i] = 1
    st = CUCBState(np.zeros(P), np.zeros(P, dtype=np.int64))
    plays = np.zeros(P, dtype=np.int64)
    need_rew = bool(packed.stochastic.any())
    checkpoints = set(checkpoints)
    snapshots, records = {}, []
    for k in range(1, n_epochs + 1):
        tau = schedule.tau(k)
        u_trans = rng.random((tau, env.m_agents))
        u_rew = rng.random((tau, env.m_agents)) if need_rew else np.zeros((tau, env.m_agents))
        start = st.t
        total, n_ref, st.t = kernels.cucb_epoch(
            packed.cum, packed.kind, packed.p0, packed.p1, packed.tid, packed.tables,
            class_of, caps, env.m_agents, env.m_incentives, env.current_states,
            st.sums, st.counts, st.t, u_trans, u_rew, ref, plays, CUCB_COEF)
        env.clock += tau
        opt = n_ref / tau if reference is not None else 0.0
        records.append(EpochRecord(k, "iter", start, tau, (), total / tau, opt))
        if k in checkpoints:
            snapshots[k] = plays.reshape(instance.shape).copy()
    return RunResult(config.variant, records, plays.reshape(instance.shape), snapshots, st)
