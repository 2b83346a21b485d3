"""Agents, incentives and Markov-modulated rewards.

Each agent carries one hidden state. While agent ``a`` is matched to
incentive ``i`` it earns a reward drawn from ``rewards[theta]`` of arm
``(a, i)`` and then moves according to that arm's kernel. Agents left
unmatched in an epoch keep their state unless an idle kernel is supplied.
"""
from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import stats

from . import markov
from ._backend import kernels
from .matching import Edge, Matching, MatchingInstance, violations

KIND_CODES = {"deterministic": 0, "bernoulli": 1, "uniform": 2, "beta": 3}
REWARD_FAMILIES = ("bernoulli", "uniform", "beta", "deterministic", "mixed")
BETA_GRID = 1024
MAX_RESAMPLE = 100
CHUNK = 2048     # iterations per block of uniforms under early stopping


class EnvironmentError_(ValueError):
    pass


class InfeasibleMatchingError(EnvironmentError_):
    pass


class DimensionMismatchError(EnvironmentError_):
    pass


@dataclass(frozen=True)
class RewardDistribution:
    """Reward law on [0, 1].

    ``bernoulli(p, value)`` pays ``value`` with probability ``p``; the other
    kinds are ``uniform(lo, hi)``, ``beta(alpha, beta)``, ``deterministic(v)``.
    """

    kind: str
    a: float
    b: float = 0.0

    def __post_init__(self):
        k, a, b = self.kind, self.a, self.b
        if k not in KIND_CODES:
            raise EnvironmentError_(f"unknown reward kind {k!r}")
        ok = {
            "deterministic": 0.0 <= a <= 1.0,
            "bernoulli": 0.0 <= a <= 1.0 and 0.0 <= b <= 1.0,
            "uniform": 0.0 <= a <= b <= 1.0,
            "beta": a > 0 and b > 0,
        }[k]
        if not ok:
            raise EnvironmentError_(f"invalid parameters for {k}: ({a}, {b})")

    @classmethod
    def bernoulli(cls, p: float, value: float = 1.0):
        return cls("bernoulli", float(p), float(value))

    @classmethod
    def uniform(cls, lo: float, hi: float):
        return cls("uniform", float(lo), float(hi))

    @classmethod
    def beta(cls, alpha: float, beta: float):
        return cls("beta", float(alpha), float(beta))

    @classmethod
    def deterministic(cls, v: float):
        return cls("deterministic", float(v))

    def mean(self) -> float:
        k, a, b = self.kind, self.a, self.b
        if k == "deterministic":
            return a
        if k == "bernoulli":
            return a * b
        if k == "uniform":
            return 0.5 * (a + b)
        return a / (a + b)

    def quantile(self, u):
        """Inverse CDF used by the simulation kernels (tabulated for beta)."""
        u = np.asarray(u, dtype=float)
        k, a, b = self.kind, self.a, self.b
        if k == "deterministic":
            return np.full_like(u, a)
        if k == "bernoulli":
            return np.where(u < a, b, 0.0)
        if k == "uniform":
            return a + (b - a) * u
        tab = beta_table(a, b)
        x = u * BETA_GRID
        j = np.minimum(x.astype(np.int64), BETA_GRID - 1)
        f = x - j
        return tab[j] + f * (tab[j + 1] - tab[j])

    def sample(self, rng: np.random.Generator, size=None):
        return self.quantile(rng.random(size))

    def to_dict(self) -> dict:
        return {"kind": self.kind, "a": self.a, "b": self.b}

    @classmethod
    def from_dict(cls, d: dict) -> "RewardDistribution":
        return cls(d["kind"], float(d["a"]), float(d.get("b", 0.0)))


@lru_cache(maxsize=None)
def beta_table(alpha: float, beta: float) -> np.ndarray:
    tab = stats.beta.ppf(np.linspace(0.0, 1.0, BETA_GRID + 1), alpha, beta)
    tab[0], tab[-1] = 0.0, 1.0
    tab.setflags(write=False)
    return tab


@dataclass
class ArmModel:
    """Transition kernel of an (agent, incentive) pair plus one reward law per state."""

    kernel: np.ndarray
    rewards: tuple
    dummy: bool = False
    strict: bool = True

    def __post_init__(self):
        self.kernel = markov.as_kernel(self.kernel)
        self.rewards = tuple(self.rewards)
        if len(self.rewards) != self.kernel.shape[0]:
            raise DimensionMismatchError(
                f"{len(self.rewards)} reward laws for {self.kernel.shape[0]} states")
        if self.strict and not self.dummy:
            cls = markov.validate(self.kernel)
            if not (cls.irreducible and cls.aperiodic):
                raise markov.MarkovError("arm kernel must be aperiodic and irreducible")

    @property
    def n_states(self) -> int:
        return self.kernel.shape[0]

    def state_means(self) -> np.ndarray:
        return np.array([r.mean() for r in self.rewards])

    def constant_mean(self) -> bool:
        m = self.state_means()
        return bool(np.all(m == m[0]))

    def stationary_mean(self) -> float:
        m = self.state_means()
        if np.all(m == m[0]):
            return float(m[0])
        return float(markov.stationary(self.kernel) @ m)

    def mixing_constant(self) -> float:
        if self.constant_mean():
            return 0.0
        return markov.mixing_profile(self.kernel).c_mix

    def to_dict(self) -> dict:
        return {"kernel": self.kernel.tolist(),
                "rewards": [r.to_dict() for r in self.rewards],
                "dummy": self.dummy}

    @classmethod
    def from_dict(cls, d: dict) -> "ArmModel":
        return cls(np.asarray(d["kernel"]),
                   tuple(RewardDistribution.from_dict(r) for r in d["rewards"]),
                   dummy=d.get("dummy", False), strict=False)


@dataclass
class EpochResult:
    rewards: dict            # Edge -> time-averaged reward
    iterations_used: int
    start_time: int
    successes: dict = field(default_factory=dict)   # Edge -> rewarded iterations

    @property
    def total(self) -> float:
        return float(sum(self.rewards.values()))


class PackedArms:
    """Arm parameters flattened into the arrays consumed by the kernels."""

    def __init__(self, arms: list[ArmModel]):
        s_max = max(a.n_states for a in arms)
        n = len(arms)
        self.cum = np.ones((n, s_max, s_max))
        self.kind = np.zeros((n, s_max), dtype=np.int64)
        self.p0 = np.zeros((n, s_max))
        self.p1 = np.zeros((n, s_max))
        self.tid = np.zeros((n, s_max), dtype=np.int64)
        tables, table_index = [], {}
        for k, arm in enumerate(arms):
            s = arm.n_states
            self.cum[k, :s, :s] = markov.cumulative(arm.kernel)
            for th, r in enumerate(arm.rewards):
                self.kind[k, th] = KIND_CODES[r.kind]
                self.p0[k, th] = r.a
                self.p1[k, th] = r.b
                if r.kind == "beta":
                    key = (r.a, r.b)
                    if key not in table_index:
                        table_index[key] = len(tables)
                        tables.append(beta_table(r.a, r.b))
                    self.tid[k, th] = table_index[key]
        self.tables = np.array(tables) if tables else np.zeros((1, 2))
        self.stochastic = self.kind != KIND_CODES["deterministic"]

    def subset(self, rows):
        rows = np.asarray(rows, dtype=np.int64)
        return (np.ascontiguousarray(self.cum[rows]), np.ascontiguousarray(self.kind[rows]),
                np.ascontiguousarray(self.p0[rows]), np.ascontiguousarray(self.p1[rows]),
                np.ascontiguousarray(self.tid[rows]))


class EnvironmentModel:
    """Mutable world: arm models, live agent states and the iteration clock."""

    def __init__(self, arms, initial_states=None, idle_kernels=None, meta=None):
        self.arms = [list(row) for row in arms]
        self.m_agents = len(self.arms)
        self.m_incentives = len(self.arms[0]) if self.arms else 0
        if any(len(row) != self.m_incentives for row in self.arms):
            raise DimensionMismatchError("every agent needs one arm per incentive")
        self.state_sizes = []
        for a, row in enumerate(self.arms):
            sizes = {arm.n_states for arm in row}
            if len(sizes) != 1:
                raise DimensionMismatchError(
                    f"arms of agent {a} disagree on the state space size: {sorted(sizes)}")
            self.state_sizes.append(sizes.pop())
        if initial_states is None:
            initial_states = np.zeros(self.m_agents, dtype=np.int64)
        self.current_states = np.array(initial_states, dtype=np.int64)
        for a, s in enumerate(self.current_states):
            if not 0 <= s < self.state_sizes[a]:
                raise markov.InvalidStateError(f"agent {a} state {s} out of range")
        self.idle_kernels = None
        if idle_kernels is not None:
            self.idle_kernels = [None if k is None else markov.as_kernel(k) for k in idle_kernels]
        self.clock = 0
        self.meta = dict(meta or {})
        self._packed = None
        self._idle_packed = None

    # --- derived quantities -------------------------------------------------
    def arm(self, edge: Edge) -> ArmModel:
        return self.arms[edge[0]][edge[1]]

    @property
    def packed(self) -> PackedArms:
        if self._packed is None:
            self._packed = PackedArms([arm for row in self.arms for arm in row])
        return self._packed

    def stationary_means(self) -> np.ndarray:
        return np.array([[arm.stationary_mean() for arm in row] for row in self.arms])

    def mixing_constants(self) -> np.ndarray:
        return np.array([[arm.mixing_constant() for arm in row] for row in self.arms])

    def clone(self) -> "EnvironmentModel":
        return copy.deepcopy(self)

    # --- serialisation ------------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "agents": self.m_agents,
            "incentives": self.m_incentives,
            "arms": [[arm.to_dict() for arm in row] for row in self.arms],
            "states": self.current_states.tolist(),
            "clock": self.clock,
            "idle_kernels": (None if self.idle_kernels is None
                             else [None if k is None else k.tolist() for k in self.idle_kernels]),
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EnvironmentModel":
        env = cls([[ArmModel.from_dict(x) for x in row] for row in d["arms"]],
                  d["states"], d.get("idle_kernels"), d.get("meta"))
        env.clock = int(d.get("clock", 0))
        return env

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "EnvironmentModel":
        return cls.from_dict(json.loads(text))


def check_matching(env: EnvironmentModel, matching: Matching, instance: MatchingInstance | None = None):
    if instance is not None:
        if instance.shape != (env.m_agents, env.m_incentives):
            raise DimensionMismatchError(
                f"instance {instance.shape} vs environment {(env.m_agents, env.m_incentives)}")
        bad = violations(instance, matching.edges)
        if bad:
            raise InfeasibleMatchingError("; ".join(bad))
        return
    agents = [a for a, _ in matching]
    incs = [i for _, i in matching]
    if len(set(agents)) != len(agents) or len(set(incs)) != len(incs):
        raise InfeasibleMatchingError("matching reuses an agent or an incentive")
    for a, i in matching:
        if not (0 <= a < env.m_agents and 0 <= i < env.m_incentives):
            raise DimensionMismatchError(f"edge ({a}, {i}) outside environment")


@dataclass(frozen=True)
class EarlyStop:
    """End an epoch once every running average moved by at most ``delta``
    for ``patience`` consecutive iterations."""

    delta: float = 5e-4
    patience: int = 200


def play_epoch(env: EnvironmentModel, matching: Matching, tau: int, rng: np.random.Generator,
               early_stop: EarlyStop | None = None,
               instance: MatchingInstance | None = None) -> EpochResult:
    """Offer each matched incentive for ``tau`` iterations and average the rewards.

    Per iteration: draw the reward for the agent's current state, then move
    the agent with the arm's kernel. Advances ``env.current_states`` and
    ``env.clock``.
    """
    if tau < 1:
        raise ValueError("tau must be >= 1")
    check_matching(env, matching, instance)
    start = env.clock
    edges = list(matching.edges)
    idle = []
    if env.idle_kernels is not None:
        matched = {a for a, _ in edges}
        idle = [a for a in range(env.m_agents)
                if a not in matched and env.idle_kernels[a] is not None]
    if not edges and not idle:
        env.clock += tau
        return EpochResult({}, tau, start)

    packed = env.packed
    rows = [a * env.m_incentives + i for a, i in edges]
    cum, kind, p0, p1, tid = packed.subset(rows) if rows else _empty_pack(packed)
    if idle:
        icum, ikind, ip0, ip1, itid = _idle_pack(env, idle, cum.shape[1])
        s = max(cum.shape[1], icum.shape[1])
        cum, kind, p0, p1, tid = (np.concatenate([_pad(x, s), _pad(y, s)])
                                  for x, y in zip((cum, kind, p0, p1, tid),
                                                  (icum, ikind, ip0, ip1, itid)))
    agents = [a for a, _ in edges] + idle
    states = np.ascontiguousarray(env.current_states[agents])
    need_rew = bool(np.any(packed.stochastic[rows])) if rows else False
    sums, hits, used = simulate_arms(cum, states, kind, p0, p1, tid, packed.tables,
                                     tau, rng, early_stop, need_rew)
    env.current_states[agents] = states
    env.clock += used
    means = {e: float(sums[k]) / used for k, e in enumerate(edges)}
    succ = {e: int(hits[k]) for k, e in enumerate(edges)}
    return EpochResult(means, int(used), start, succ)


def simulate_arms(cum, states, kind, p0, p1, tid, tables, tau: int, rng: np.random.Generator,
                  early_stop: EarlyStop | None = None, need_rew: bool = True):
    """Run the epoch kernel on prepared arm arrays; ``states`` is updated in place.

    Uniforms are drawn per block of ``CHUNK`` iterations when early stopping is
    on, otherwise for the whole epoch at once. Returns (sums, hits, used).
    """
    n = cum.shape[0]
    sums = np.zeros(n)
    hits = np.zeros(n, dtype=np.int64)
    delta, patience = (early_stop.delta, early_stop.patience) if early_stop else (0.0, 0)
    block = min(tau, CHUNK) if early_stop else tau
    done, streak = 0, 0
    while done < tau:
        b = min(block, tau - done)
        u_trans = rng.random((b, n))
        u_rew = rng.random((b, n)) if need_rew else np.zeros((b, n))
        used, streak, stopped = kernels.simulate_epoch(
            cum, states, kind, p0, p1, tid, tables, u_trans, u_rew,
            float(delta), int(patience), sums, hits, done, streak)
        done += used
        if stopped:
            break
    return sums, hits, done


def _empty_pack(packed):
    s = packed.cum.shape[1]
    return (np.zeros((0, s, s)), np.zeros((0, s), np.int64), np.zeros((0, s)),
            np.zeros((0, s)), np.zeros((0, s), np.int64))


def _pad(x, s):
    if x.shape[1] == s:
        return x
    if x.ndim == 3:
        out = np.ones((x.shape[0], s, s))
        out[:, :x.shape[1], :x.shape[2]] = x
        return out
    out = np.zeros((x.shape[0], s), dtype=x.dtype)
    out[:, :x.shape[1]] = x
    return out


def _idle_pack(env, idle, s_min):
    s = max([s_min] + [env.idle_kernels[a].shape[0] for a in idle])
    n = len(idle)
    cum = np.ones((n, s, s))
    for k, a in enumerate(idle):
        q = env.idle_kernels[a]
        cum[k, :q.shape[0], :q.shape[0]] = markov.cumulative(q)
    z = np.zeros((n, s))
    return cum, np.zeros((n, s), np.int64), z, z.copy(), np.zeros((n, s), np.int64)


def stationary_mean(env: EnvironmentModel, edge: Edge) -> float:
    """Reward of ``edge`` averaged over its kernel's stationary law."""
    return env.arm(edge).stationary_mean()


def epoch_lengths(tau0: int, zeta: int, n: int, start: int = 1) -> np.ndarray:
    return tau0 + zeta * np.arange(start, start + n)


def example1(epsilon: float) -> tuple[EnvironmentModel, MatchingInstance]:
    """Two agents, two incentives, two states; classical UCB locks onto the
    cross matching here while the diagonal matching is optimal."""
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    e = float(epsilon)
    climb = np.array([[0.0, 1.0], [e, 1.0 - e]])     # pushes the agent into state 2
    reset = np.array([[1.0 - e, e], [1.0, 0.0]])     # pushes the agent into state 1
    step_up = (RewardDistribution.deterministic(0.0), RewardDistribution.deterministic(1.0))
    flat = (RewardDistribution.deterministic(0.5), RewardDistribution.deterministic(0.5))
    arms = [[ArmModel(climb, step_up), ArmModel(reset, flat)],
            [ArmModel(reset, flat), ArmModel(climb, step_up)]]
    env = EnvironmentModel(arms, [0, 0], meta={"kind": "example1", "epsilon": e})
    inst = MatchingInstance.single_class(env.stationary_means(), capacity=2)
    return env, inst


def random_kernel(rng: np.random.Generator, n_states: int) -> np.ndarray:
    """Row-normalised uniform matrix, resampled until aperiodic and irreducible."""
    for _ in range(MAX_RESAMPLE):
        k = rng.random((n_states, n_states))
        k /= k.sum(axis=1, keepdims=True)
        cls = markov.validate(k)
        if cls.irreducible and cls.aperiodic:
            return k
    raise markov.MarkovError(f"no valid kernel after {MAX_RESAMPLE} draws")


def random_reward(rng: np.random.Generator, family: str) -> RewardDistribution:
    if family == "bernoulli":
        return RewardDistribution.bernoulli(rng.random())
    if family == "uniform":
        lo, hi = np.sort(rng.random(2))
        return RewardDistribution.uniform(lo, hi)
    if family == "beta":
        a, b = rng.uniform(0.5, 5.0, size=2)
        return RewardDistribution.beta(a, b)
    if family == "deterministic":
        return RewardDistribution.deterministic(rng.random())
    raise ValueError(f"unknown reward family {family!r}")


def generate_synthetic(m: int, n_states: int, reward_family: str = "bernoulli", seed=None,
                       m_incentives: int | None = None, class_of=None, capacities=None
                       ) -> tuple[EnvironmentModel, MatchingInstance]:
    """Random world with one random kernel per arm and random reward laws.

    ``reward_family="mixed"`` picks bernoulli, uniform or beta per arm.
    Without an explicit class scheme all edges share one class of capacity m.
    """
    if m < 1 or n_states < 1:
        raise ValueError("m and n_states must be >= 1")
    if reward_family not in REWARD_FAMILIES:
        raise ValueError(f"reward_family must be one of {REWARD_FAMILIES}")
    m_inc = m if m_incentives is None else m_incentives
    rng = np.random.default_rng(seed)
    arms = []
    for _a in range(m):
        row = []
        for _i in range(m_inc):
            kern = random_kernel(rng, n_states)
            fam = reward_family
            if fam == "mixed":
                fam = ("bernoulli", "uniform", "beta")[rng.integers(3)]
            rew = tuple(random_reward(rng, fam) for _ in range(n_states))
            row.append(ArmModel(kern, rew))
        arms.append(row)
    init = rng.integers(0, n_states, size=m)
    env = EnvironmentModel(arms, init, meta={"kind": "synthetic", "m": m, "n_states": n_states,
                                             "reward_family": reward_family, "seed": seed})
    mu = env.stationary_means()
    if class_of is None:
        inst = MatchingInstance.single_class(mu, capacity=min(m, m_inc))
    else:
        inst = MatchingInstance(mu, class_of, capacities)
    return env, inst


def pad_with_dummies(env: EnvironmentModel, instance: MatchingInstance
                     ) -> tuple[EnvironmentModel, MatchingInstance]:
    """Add zero-reward incentives until there are at least as many incentives as agents.

    Dummy edges form their own class whose capacity equals the dummy count.
    """
    extra = env.m_agents - env.m_incentives
    if extra <= 0:
        return env, instance
    arms = []
    for a, row in enumerate(env.arms):
        s = env.state_sizes[a]
        dummy = ArmModel(np.eye(s), (RewardDistribution.deterministic(0.0),) * s, dummy=True)
        arms.append(list(row) + [dummy] * extra)
    new = EnvironmentModel(arms, env.current_states.copy(), env.idle_kernels, env.meta)
    new.clock = env.clock
    q = len(instance.capacities)
    class_of = np.hstack([instance.class_of, np.full((env.m_agents, extra), q)])
    caps = np.append(instance.capacities, extra)
    weights = np.hstack([instance.weights, np.zeros((env.m_agents, extra))])
    return new, MatchingInstance(weights, class_of, caps)
