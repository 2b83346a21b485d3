"""Greedy benchmark, reward gaps, regret traces and the logarithmic regret bounds."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np

from .environment import EnvironmentModel
from .matching import InfeasibilityDecomposition, Matching, MatchingInstance, decompose, greedy_match
from .policy import EpochSchedule, RunResult


@dataclass(frozen=True)
class Benchmark:
    """Greedy matching on stationary means, with its infeasibility decomposition."""

    g_star: Matching
    mu: np.ndarray
    i_star: dict                  # agent -> incentive in G*, or None when unmatched
    decomposition: InfeasibilityDecomposition
    instance: MatchingInstance

    @property
    def value(self) -> float:
        return float(sum(self.mu[a, i] for a, i in self.g_star))

    def mu_i_star(self, agent: int) -> float:
        i = self.i_star[agent]
        return 0.0 if i is None else float(self.mu[agent, i])


def build_benchmark(env: EnvironmentModel, instance: MatchingInstance) -> Benchmark:
    mu = env.stationary_means()
    inst = instance.with_weights(mu)
    g = greedy_match(inst)
    amap = g.agent_map()
    i_star = {a: amap.get(a) for a in range(inst.m_agents)}
    return Benchmark(g, mu, i_star, decompose(inst, g), inst)


@dataclass(frozen=True)
class GapTable:
    """Reward gaps per edge.

    ``delta`` follows the three-case definition with the G* case taking
    precedence for greedy edges; it is NaN for the first greedy edge.
    ``s_gap`` is mu[a, i*(a)] - mu[a, i] on the sub-optimal set S (0 on G*
    edges) and NaN elsewhere; it is the gap that multiplies E[T] in the
    regret decomposition.
    """

    delta: np.ndarray
    s_mask: np.ndarray
    s_gap: np.ndarray
    g_position: np.ndarray        # index j of the edge in G*, -1 if not greedy

    @property
    def suboptimal_set(self) -> list:
        return [tuple(map(int, e)) for e in np.argwhere(self.s_mask)]


def gaps(bench: Benchmark) -> GapTable:
    mu = bench.mu
    shape = mu.shape
    g = list(bench.g_star.edges)
    pos = np.full(shape, -1)
    for j, e in enumerate(g):
        pos[e] = j
    ref = np.array([bench.mu_i_star(a) for a in range(shape[0])])
    s_mask = ref[:, None] >= mu
    s_gap = np.where(s_mask, ref[:, None] - mu, np.nan)
    delta = np.full(shape, np.nan)
    for a in range(shape[0]):
        for i in range(shape[1]):
            j = pos[a, i]
            if j > 0:
                delta[a, i] = mu[g[j - 1]] - mu[a, i]
            elif j == 0:
                continue
            elif s_mask[a, i]:
                delta[a, i] = ref[a] - mu[a, i]
            else:
                owner = bench.decomposition.owner((a, i))
                delta[a, i] = mu[g[owner]] - mu[a, i]
    return GapTable(delta, s_mask, s_gap, pos)


@dataclass
class RegretTrace:
    """Per-epoch realized reward against the stationary benchmark value."""

    epochs: np.ndarray
    realized: np.ndarray
    benchmark: float
    optimal: np.ndarray

    @property
    def per_epoch(self) -> np.ndarray:
        return self.benchmark - self.realized

    @property
    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.per_epoch)

    def rows(self):
        cum = self.cumulative
        for k in range(len(self.epochs)):
            yield (int(self.epochs[k]), float(self.realized[k]), float(self.benchmark),
                   float(cum[k]), float(self.optimal[k]))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "realized", "benchmark", "cumulative", "optimal_flag"])
        for row in self.rows():
            w.writerow([row[0]] + [repr(x) for x in row[1:]])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "RegretTrace":
        rows = list(csv.DictReader(io.StringIO(text)))
        bench = float(rows[0]["benchmark"]) if rows else 0.0
        return cls(np.array([int(r["epoch"]) for r in rows], dtype=np.int64),
                   np.array([float(r["realized"]) for r in rows]), bench,
                   np.array([float(r["optimal_flag"]) for r in rows]))


def regret_of(run: RunResult, bench: Benchmark) -> RegretTrace:
    return RegretTrace(np.array([r.epoch for r in run.records], dtype=np.int64),
                       run.realized(), bench.value, run.optimal())


def harmonic_bound(schedule: EpochSchedule, n: int) -> float:
    """(1/zeta)(1 + ln(zeta (n-1)/tau0 + 1)), an upper bound on sum_k 1/tau_k."""
    z, t0 = float(schedule.zeta), float(schedule.tau0)
    if z <= 0:
        raise ValueError("the bound needs zeta > 0")
    return (1.0 + math.log(z * (n - 1) / t0 + 1.0)) / z


def prop1_bound(gap_table: GapTable, pull_counts, mixing_constants, schedule: EpochSchedule,
                n: int) -> float:
    """sum_S E[T] (gap + C/tau0) + m (C_*/zeta)(1 + ln(zeta(n-1)/tau0 + 1)),
    with C_* the largest mixing constant outside S."""
    pulls = np.asarray(pull_counts, dtype=float)
    C = np.asarray(mixing_constants, dtype=float)
    s = gap_table.s_mask
    first = float(np.sum(pulls[s] * (gap_table.s_gap[s] + C[s] / schedule.tau0)))
    outside = C[~s]
    c_star = float(outside.max()) if outside.size else 0.0
    m = pulls.shape[0]
    return first + m * c_star * harmonic_bound(schedule, n)


def rho(mixing_constants, schedule: EpochSchedule) -> np.ndarray:
    z, t0 = float(schedule.zeta), float(schedule.tau0)
    if z <= 0:
        raise ValueError("rho needs zeta > 0")
    return (z / (z + t0) + 1.0) * np.asarray(mixing_constants, dtype=float) / (2.0 * math.sqrt(z))


@dataclass(frozen=True)
class Thm2Bound:
    value: float
    edge: tuple                  # (a*, i*)
    rho: np.ndarray


def thm2_bound(gap_table: GapTable, mixing_constants, schedule: EpochSchedule, n: int, m: int,
               log_coefficient: float = 6.0) -> Thm2Bound:
    """Bound on the expected plays of any sub-optimal edge after ``n`` epochs.

    (4 m^2 / D^2)(rho/sqrt(tau0) + sqrt(L ln n + 4 ln m))^2 + 2 (1 + ln n), evaluated
    at the edge outside g*_1 that maximises the ceiling term. Edges with zero gap
    are skipped.
    """
    r = rho(mixing_constants, schedule)
    root = math.sqrt(log_coefficient * math.log(n) + 4.0 * math.log(m))
    best, best_edge = -1.0, None
    d = gap_table.delta
    for a in range(d.shape[0]):
        for i in range(d.shape[1]):
            g = d[a, i]
            if not np.isfinite(g) or g <= 0:
                continue
            v = math.ceil(4.0 / g ** 2 * (r[a, i] / math.sqrt(schedule.tau0) + root) ** 2)
            if v > best:
                best, best_edge = v, (a, i)
    if best_edge is None:
        return Thm2Bound(0.0, None, r)
    a, i = best_edge
    g = d[a, i]
    value = (4.0 * m * m / g ** 2 * (r[a, i] / math.sqrt(schedule.tau0) + root) ** 2
             + 2.0 * (1.0 + math.log(n)))
    return Thm2Bound(value, best_edge, r)


def corollary1_bound(gap_table: GapTable, mixing_constants, schedule: EpochSchedule, n: int, m: int,
                     log_coefficient: float = 6.0) -> float:
    """Regret-decomposition bound with every E[T] on S replaced by the per-edge play bound."""
    t = thm2_bound(gap_table, mixing_constants, schedule, n, m, log_coefficient)
    pulls = np.full(gap_table.delta.shape, t.value)
    return prop1_bound(gap_table, pulls, mixing_constants, schedule, n)


def bounds_report(gap_table: GapTable, mixing_constants, schedule: EpochSchedule, n: int, m: int,
                  pull_counts=None) -> dict:
    t = thm2_bound(gap_table, mixing_constants, schedule, n, m)
    out = {
        "n": n,
        "m": m,
        "edges": [
            {"agent": a, "incentive": i,
             "rho": float(t.rho[a, i]),
             "delta": None if not np.isfinite(gap_table.delta[a, i]) else float(gap_table.delta[a, i]),
             "in_S": bool(gap_table.s_mask[a, i]),
             "thm2": t.value if gap_table.s_mask[a, i] else None}
            for a in range(gap_table.delta.shape[0]) for i in range(gap_table.delta.shape[1])
        ],
        "argmax_edge": None if t.edge is None else list(t.edge),
        "thm2": t.value,
        "corollary1": corollary1_bound(gap_table, mixing_constants, schedule, n, m),
    }
    if pull_counts is not None:
        out["prop1"] = prop1_bound(gap_table, pull_counts, mixing_constants, schedule, n)
    return out


def bounds_json(report: dict) -> str:
    return json.dumps(report, indent=2)
