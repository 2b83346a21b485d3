"""Capacitated bipartite matching.

An instance is the complete bipartite edge set between ``m_agents`` agents
and ``m_incentives`` incentives, a partition of the edges into classes with a
capacity per class, and a non-negative weight per edge. A matching uses each
agent and each incentive at most once and at most ``capacities[c]`` edges of
class ``c``.

Edges are addressed either as ``Edge(agent, incentive)`` or by the flat index
``agent * m_incentives + incentive`` (lexicographic order).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.optimize import linear_sum_assignment

from ._backend import kernels

EXACT_EDGE_LIMIT = 20


class MatchingError(ValueError):
    pass


class InstanceTooLargeError(MatchingError):
    pass


class BindingCapacityError(MatchingError):
    pass


class UncoverableEdgeError(MatchingError):
    pass


class StructureMismatchError(MatchingError):
    pass


class InfeasibleMatchingError(MatchingError):
    pass


class Edge(NamedTuple):
    agent: int
    incentive: int


def _frozen(a, dtype):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class MatchingInstance:
    """Weights, class labels (both ``m_agents x m_incentives``) and capacities."""

    weights: np.ndarray
    class_of: np.ndarray
    capacities: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if w.ndim != 2:
            raise MatchingError("weights must be a 2-d array")
        if not np.all(np.isfinite(w)):
            raise MatchingError("weights must be finite")
        if np.any(w < 0):
            raise MatchingError("weights must be non-negative")
        cls = np.asarray(self.class_of)
        if cls.shape != w.shape:
            raise MatchingError(f"class_of shape {cls.shape} != weights shape {w.shape}")
        caps = np.asarray(self.capacities)
        if caps.ndim != 1 or caps.size == 0:
            raise MatchingError("capacities must be a non-empty vector")
        if np.any(caps < 0) or np.any(caps != np.floor(caps)):
            raise MatchingError("capacities must be non-negative integers")
        if cls.size and (cls.min() < 0 or cls.max() >= caps.size):
            raise MatchingError("class index out of range")
        object.__setattr__(self, "weights", _frozen(w, np.float64))
        object.__setattr__(self, "class_of", _frozen(cls, np.int64))
        object.__setattr__(self, "capacities", _frozen(caps, np.int64))

    @classmethod
    def single_class(cls, weights, capacity: int | None = None) -> "MatchingInstance":
        w = np.asarray(weights, dtype=float)
        if capacity is None:
            capacity = min(w.shape)
        return cls(w, np.zeros(w.shape, dtype=np.int64), [capacity])

    @property
    def m_agents(self) -> int:
        return self.weights.shape[0]

    @property
    def m_incentives(self) -> int:
        return self.weights.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.weights.shape

    def edges(self) -> list[Edge]:
        return [Edge(a, i) for a in range(self.m_agents) for i in range(self.m_incentives)]

    def flat(self, edge: Edge) -> int:
        return edge[0] * self.m_incentives + edge[1]

    def edge(self, flat: int) -> Edge:
        a, i = divmod(int(flat), self.m_incentives)
        return Edge(a, i)

    def weight(self, edge: Edge) -> float:
        return float(self.weights[edge[0], edge[1]])

    def with_weights(self, weights) -> "MatchingInstance":
        return MatchingInstance(weights, self.class_of, self.capacities)

    def same_structure(self, other: "MatchingInstance") -> bool:
        return (self.shape == other.shape
                and np.array_equal(self.class_of, other.class_of)
                and np.array_equal(self.capacities, other.capacities))

    def nonbinding(self) -> bool:
        """True when no class capacity can ever be the active constraint."""
        used = np.unique(self.class_of)
        return bool(np.all(self.capacities[used] >= min(self.shape)))

    # JSON: {"agents", "incentives", "classes": [[[a, i], ...], ...], "capacities", "weights"}
    def to_dict(self) -> dict:
        classes = [[] for _ in range(len(self.capacities))]
        for a in range(self.m_agents):
            for i in range(self.m_incentives):
                classes[int(self.class_of[a, i])].append([a, i])
        return {
            "agents": self.m_agents,
            "incentives": self.m_incentives,
            "classes": classes,
            "capacities": [int(b) for b in self.capacities],
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MatchingInstance":
        m_a, m_i = int(d["agents"]), int(d["incentives"])
        weights = np.asarray(d["weights"], dtype=float)
        if weights.shape != (m_a, m_i):
            raise MatchingError(f"weights shape {weights.shape} != ({m_a}, {m_i})")
        class_of = np.full((m_a, m_i), -1, dtype=np.int64)
        for c, members in enumerate(d["classes"]):
            for a, i in members:
                if class_of[a, i] != -1:
                    raise MatchingError(f"edge ({a}, {i}) listed in two classes")
                class_of[a, i] = c
        if np.any(class_of < 0):
            missing = [tuple(x) for x in np.argwhere(class_of < 0)[:5].tolist()]
            raise MatchingError(f"classes do not cover all edges, e.g. {missing}")
        return cls(weights, class_of, d["capacities"])

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "MatchingInstance":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class Matching:
    """A set of edges; ``edges`` keeps the order in which they were chosen."""

    edges: tuple[Edge, ...] = ()
    _set: frozenset = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        edges = tuple(Edge(int(a), int(i)) for a, i in self.edges)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "_set", frozenset(edges))

    def __eq__(self, other):
        if isinstance(other, Matching):
            return self._set == other._set
        return NotImplemented

    def __hash__(self):
        return hash(self._set)

    def __len__(self):
        return len(self.edges)

    def __iter__(self):
        return iter(self.edges)

    def __contains__(self, edge):
        return tuple(edge) in self._set

    @property
    def edge_set(self) -> frozenset:
        return self._set

    def sorted(self) -> list[Edge]:
        return sorted(self.edges)

    def weight(self, instance: MatchingInstance) -> float:
        return float(sum(instance.weights[a, i] for a, i in self.edges))

    def agent_map(self) -> dict[int, int]:
        return {a: i for a, i in self.edges}

    def is_feasible(self, instance: MatchingInstance) -> bool:
        return not violations(instance, self.edges)

    def to_dict(self, instance: MatchingInstance | None = None) -> dict:
        d = {"edges": [list(e) for e in self.sorted()]}
        if instance is not None:
            d["weight"] = self.weight(instance)
        return d


def violations(instance: MatchingInstance, edges: Iterable[Edge]) -> list[str]:
    """Describe every (P1) constraint the edge collection breaks."""
    out = []
    agents, incs = set(), set()
    counts = np.zeros(len(instance.capacities), dtype=np.int64)
    for a, i in edges:
        if not (0 <= a < instance.m_agents and 0 <= i < instance.m_incentives):
            out.append(f"edge ({a}, {i}) outside instance")
            continue
        if a in agents:
            out.append(f"agent {a} matched twice")
        if i in incs:
            out.append(f"incentive {i} matched twice")
        agents.add(a)
        incs.add(i)
        counts[instance.class_of[a, i]] += 1
    for c in np.flatnonzero(counts > instance.capacities):
        out.append(f"class {c} holds {counts[c]} > {instance.capacities[c]} edges")
    return out


def greedy_order(weights: np.ndarray) -> np.ndarray:
    """Flat edge indices by decreasing weight; ties in (agent, incentive) order."""
    return np.argsort(-np.asarray(weights, dtype=float).ravel(), kind="stable")


def greedy_match(instance: MatchingInstance) -> Matching:
    """Capacitated greedy matching (heaviest feasible edge first).

    Edges conflicting with a chosen edge are dropped; an edge whose class is
    already saturated is skipped. The result lists edges in the order chosen,
    so weights are nonincreasing.
    """
    order = greedy_order(instance.weights)
    chosen = kernels.greedy_scan(
        np.ascontiguousarray(order, dtype=np.int64),
        np.ascontiguousarray(instance.class_of.ravel()),
        np.ascontiguousarray(instance.capacities),
        instance.m_agents,
        instance.m_incentives,
    )
    return Matching(tuple(instance.edge(e) for e in chosen))


def exact_match(instance: MatchingInstance, max_edges: int = EXACT_EDGE_LIMIT) -> Matching:
    """Maximum-weight feasible matching by depth-first branch and bound.

    Zero-weight edges are pruned first; the remaining edge count must not
    exceed ``max_edges``. Intended as a test oracle.
    """
    w = instance.weights.ravel()
    cand = [int(e) for e in greedy_order(w) if w[e] > 0]
    if len(cand) > max_edges:
        raise InstanceTooLargeError(
            f"{len(cand)} positive-weight edges exceeds the exact-search limit {max_edges}")
    m_i = instance.m_incentives
    ag = [e // m_i for e in cand]
    inc = [e % m_i for e in cand]
    cl = [int(instance.class_of.flat[e]) for e in cand]
    ws = [float(w[e]) for e in cand]
    caps = [int(b) for b in instance.capacities]
    n = len(cand)

    lower = greedy_match(instance)
    best_val = lower.weight(instance)
    best_set = [instance.flat(e) for e in lower.edges if instance.weight(e) > 0]

    agents_used: set = set()
    incs_used: set = set()
    count = [0] * len(caps)
    current: list[int] = []

    def bound(k, free_slots):
        # top remaining weights per class, at most free_slots overall
        left = [caps[c] - count[c] for c in range(len(caps))]
        total, taken = 0.0, 0
        for j in range(k, n):
            if taken >= free_slots:
                break
            if ag[j] in agents_used or inc[j] in incs_used or left[cl[j]] <= 0:
                continue
            left[cl[j]] -= 1
            total += ws[j]
            taken += 1
        return total

    def dfs(k, value):
        nonlocal best_val, best_set
        if value > best_val:
            best_val = value
            best_set = list(current)
        if k == n:
            return
        free = min(instance.m_agents - len(agents_used), m_i - len(incs_used))
        if free == 0 or value + bound(k, free) <= best_val:
            return
        a, i, c = ag[k], inc[k], cl[k]
        if a not in agents_used and i not in incs_used and count[c] < caps[c]:
            agents_used.add(a)
            incs_used.add(i)
            count[c] += 1
            current.append(cand[k])
            dfs(k + 1, value + ws[k])
            current.pop()
            count[c] -= 1
            incs_used.discard(i)
            agents_used.discard(a)
        dfs(k + 1, value)

    dfs(0, 0.0)
    edges = sorted((instance.edge(e) for e in best_set),
                   key=lambda e: (-instance.weight(e), e))
    return Matching(tuple(edges))


def hungarian_match(instance: MatchingInstance) -> Matching:
    """Maximum-weight assignment ignoring classes (requires non-binding capacities)."""
    if not instance.nonbinding():
        raise BindingCapacityError(
            "Hungarian matching ignores class capacities; every used class needs "
            f"capacity >= {min(instance.shape)}")
    if instance.weights.size == 0:
        return Matching()
    rows, cols = linear_sum_assignment(instance.weights, maximize=True)
    edges = sorted((Edge(int(a), int(i)) for a, i in zip(rows, cols)),
                   key=lambda e: (-instance.weight(e), e))
    return Matching(tuple(edges))


@dataclass(frozen=True)
class InfeasibilityDecomposition:
    """Greedy edges g_1..g_m and the marginal infeasibility sets L_1..L_m."""

    greedy_edges: tuple[Edge, ...]
    marginal_sets: tuple[frozenset, ...]

    def owner(self, edge: Edge) -> int | None:
        """0-based j with ``edge`` in L_j (None for greedy edges)."""
        edge = Edge(*edge)
        for j, ls in enumerate(self.marginal_sets):
            if edge in ls:
                return j
        return None


def _blocked(instance, edge, agents, incs, counts) -> bool:
    a, i = edge
    return (a in agents or i in incs
            or counts[instance.class_of[a, i]] >= instance.capacities[instance.class_of[a, i]])


def decompose(instance: MatchingInstance, greedy: Matching | None = None) -> InfeasibilityDecomposition:
    """Partition the non-greedy edges by the greedy prefix that first blocks them."""
    if greedy is None:
        greedy = greedy_match(instance)
    g = greedy.edges
    in_g = set(g)
    agents, incs = set(), set()
    counts = np.zeros(len(instance.capacities), dtype=np.int64)
    prev: set = set()
    sets = []
    rest = [e for e in instance.edges() if e not in in_g]
    for a, i in g:
        agents.add(a)
        incs.add(i)
        counts[instance.class_of[a, i]] += 1
        h = {e for e in rest if _blocked(instance, e, agents, incs, counts)}
        sets.append(frozenset(h - prev))
        prev = h
    return InfeasibilityDecomposition(tuple(g), tuple(sets))


@dataclass(frozen=True)
class LemmaReport:
    """Outcome of comparing greedy outputs under two weightings.

    ``kind`` is "identical", "E1", "E2", or "none" (differing outputs with no
    witness, which would contradict the ordering lemma).
    """

    kind: str
    witness: tuple = ()


def check_lemma1(instance_w: MatchingInstance, instance_w2: MatchingInstance) -> LemmaReport:
    """Find why greedy outputs differ between two weightings of one structure.

    E1: greedy edges g_j, g_j' (j < j') whose order is inverted under the
    second weighting, with g_j' chosen there. E2: an edge of L_j that
    outranks g_j under the second weighting and is chosen there.
    """
    if not instance_w.same_structure(instance_w2):
        raise StructureMismatchError("instances differ in shape, classes or capacities")
    g = greedy_match(instance_w)
    g2 = greedy_match(instance_w2)
    if g == g2:
        return LemmaReport("identical")
    w2 = instance_w2.weights
    chosen2 = g2.edge_set
    ge = g.edges
    for j in range(len(ge)):
        for jp in range(j + 1, len(ge)):
            if w2[ge[j]] < w2[ge[jp]] and ge[jp] in chosen2:
                return LemmaReport("E1", (ge[j], ge[jp]))
    dec = decompose(instance_w, g)
    for j, ls in enumerate(dec.marginal_sets):
        for e in sorted(ls):
            if w2[ge[j]] < w2[e] and e in chosen2:
                return LemmaReport("E2", (ge[j], e))
    return LemmaReport("none")


def _cover_key(m_incentives):
    return lambda e: ((e[1] - e[0]) % m_incentives, e[0], e[1])


def initial_cover(instance: MatchingInstance) -> list[Matching]:
    """Disjoint maximal matchings that together contain every edge once.

    Uncovered edges are scanned in wrap-around diagonal order
    ((incentive - agent) mod m_incentives, then agent), so a square instance
    with non-binding capacities is covered by exactly m permutation matchings.
    """
    used_classes = np.unique(instance.class_of)
    if np.any(instance.capacities[used_classes] < 1):
        bad = [int(c) for c in used_classes if instance.capacities[c] < 1]
        raise UncoverableEdgeError(f"classes {bad} have capacity 0; their edges can never be played")
    uncovered = sorted(instance.edges(), key=_cover_key(instance.m_incentives))
    cover = []
    while uncovered:
        agents, incs = set(), set()
        counts = np.zeros(len(instance.capacities), dtype=np.int64)
        chosen = []
        for e in uncovered:
            if _blocked(instance, e, agents, incs, counts):
                continue
            agents.add(e[0])
            incs.add(e[1])
            counts[instance.class_of[e]] += 1
            chosen.append(e)
        taken = set(chosen)
        uncovered = [e for e in uncovered if e not in taken]
        cover.append(Matching(tuple(chosen)))
    return cover


def random_instance(rng: np.random.Generator, m_agents: int, m_incentives: int,
                    n_classes: int = 2, max_capacity: int | None = None,
                    weights: np.ndarray | None = None) -> MatchingInstance:
    """Random classes, capacities in [0, max_capacity] and uniform weights."""
    if max_capacity is None:
        max_capacity = min(m_agents, m_incentives)
    class_of = rng.integers(0, n_classes, size=(m_agents, m_incentives))
    caps = rng.integers(0, max_capacity + 1, size=n_classes)
    if weights is None:
        weights = rng.random((m_agents, m_incentives))
    return MatchingInstance(weights, class_of, caps)


def matching_from_pairs(pairs: Sequence[Sequence[int]]) -> Matching:
    return Matching(tuple(Edge(int(a), int(i)) for a, i in pairs))
