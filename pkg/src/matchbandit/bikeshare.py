"""Bike-share rebalancing through destination incentives.

Agents are origin-destination flows, persistent across epochs so that
bandit statistics can accumulate per (flow, candidate station) arm. Each
flow carries a hidden Markov state that sets its distance threshold and its
acceptance probability. An epoch samples demand, offers a few incentives
(at most ``budget`` of the requests), plays the offers for ``tau``
iterations, then routes the trips: pickups against the supply at the start
of the epoch, drop-offs at the realized destinations.
"""
from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field
from datetime import date, datetime, time

import numpy as np

from . import markov
from .environment import EarlyStop, random_kernel, simulate_arms
from .matching import Matching, MatchingInstance, greedy_match
from .policy import EpochSchedule, confidence

THRESHOLD_MAX = 4000.0
EARTH_RADIUS_M = 6_371_000.0
MODES = ("mg_eucb_plus", "full_information", "no_incentive")
BERN = 1


class TripsFormatError(ValueError):
    pass


@dataclass
class Station:
    id: str
    coords: tuple            # (x, y) metres, or (lat, lon) when geo
    supply: int = 0


@dataclass(frozen=True)
class FlowDemand:
    origin: int              # station index
    dest: int
    mean_rate: float


@dataclass
class BehavioralParams:
    threshold_m: np.ndarray  # per state, in [0, 4000]
    accept_p: np.ndarray     # per state, in [0, 1]


def haversine(lat1, lon1, lat2, lon2):
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dp, dl = p2 - p1, np.radians(np.asarray(lon2) - np.asarray(lon1))
    h = np.sin(dp / 2) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def distance_matrix(stations: list[Station], geo: bool) -> np.ndarray:
    c = np.array([s.coords for s in stations], dtype=float).reshape(-1, 2)
    if geo:
        return haversine(c[:, None, 0], c[:, None, 1], c[None, :, 0], c[None, :, 1])
    return np.sqrt(((c[:, None, :] - c[None, :, :]) ** 2).sum(-1))


@dataclass
class BikeshareWorld:
    stations: list
    flows: list
    flow_kernels: list
    behavior: list                     # BehavioralParams per flow
    flow_states: np.ndarray
    geo: bool = False
    demand_mode: str = "static"        # static | poisson
    behavior_model: str = "bernoulli"  # bernoulli | utility
    k_candidates: int = 5
    budget: float = 0.01
    agent_pool: int = 12
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.demand_mode not in ("static", "poisson"):
            raise ValueError("demand_mode must be 'static' or 'poisson'")
        if self.behavior_model not in ("bernoulli", "utility"):
            raise ValueError("behavior_model must be 'bernoulli' or 'utility'")
        n = len(self.stations)
        self.supplies = np.array([s.supply for s in self.stations], dtype=np.int64)
        if np.any(self.supplies < 0):
            raise ValueError("station supplies must be non-negative")
        self.dist = distance_matrix(self.stations, self.geo)
        self.origin = np.array([f.origin for f in self.flows], dtype=np.int64)
        self.dest = np.array([f.dest for f in self.flows], dtype=np.int64)
        self.rates = np.array([f.mean_rate for f in self.flows], dtype=float)
        self.outflow = np.bincount(self.origin, self.rates, minlength=n)
        k = min(self.k_candidates, n - 1)
        order = np.argsort(self.dist, axis=1, kind="stable")
        self.neighbors = np.array([[j for j in order[s] if j != s][:k] for s in range(n)],
                                  dtype=np.int64).reshape(n, max(k, 0))
        self.flow_states = np.array(self.flow_states, dtype=np.int64)
        self._cum = [markov.cumulative(markov.as_kernel(q)) for q in self.flow_kernels]
        self._cmix = {}

    @property
    def n_stations(self) -> int:
        return len(self.stations)

    @property
    def total_bikes(self) -> int:
        return int(self.supplies.sum())

    def candidates(self, flow: int) -> np.ndarray:
        return self.neighbors[self.dest[flow]]

    def arm_params(self, flow: int, station: int):
        """Per-state acceptance probability and reward value of offering ``station``."""
        b = self.behavior[flow]
        d = self.dist[self.dest[flow], station]
        p = np.where(d <= b.threshold_m, b.accept_p, 0.0)
        if self.behavior_model == "bernoulli":
            v = np.ones_like(p)
        else:
            v = np.maximum(0.0, b.threshold_m - d) / THRESHOLD_MAX
        return p, v

    def expected_reward(self, flow: int, station: int, state: int | None = None) -> float:
        p, v = self.arm_params(flow, station)
        th = self.flow_states[flow] if state is None else state
        return float(p[th] * v[th])

    def arm_mixing_constant(self, flow: int, station: int) -> float:
        key = (flow, station)
        if key not in self._cmix:
            p, v = self.arm_params(flow, station)
            m = p * v
            self._cmix[key] = (0.0 if np.all(m == m[0])
                               else markov.mixing_profile(self.flow_kernels[flow]).c_mix)
        return self._cmix[key]

    def clone(self) -> "BikeshareWorld":
        w = BikeshareWorld(
            [Station(s.id, s.coords, int(self.supplies[k])) for k, s in enumerate(self.stations)],
            list(self.flows), self.flow_kernels, self.behavior, self.flow_states.copy(),
            self.geo, self.demand_mode, self.behavior_model, self.k_candidates, self.budget,
            self.agent_pool, dict(self.meta))
        w._cmix = self._cmix
        return w

    def to_dict(self) -> dict:
        return {
            "stations": [{"id": s.id, "coords": list(s.coords), "supply": int(self.supplies[k])}
                         for k, s in enumerate(self.stations)],
            "flows": [[f.origin, f.dest, f.mean_rate] for f in self.flows],
            "flow_kernels": [np.asarray(q).tolist() for q in self.flow_kernels],
            "behavior": [{"threshold_m": b.threshold_m.tolist(), "accept_p": b.accept_p.tolist()}
                         for b in self.behavior],
            "flow_states": self.flow_states.tolist(),
            "geo": self.geo, "demand_mode": self.demand_mode,
            "behavior_model": self.behavior_model, "k_candidates": self.k_candidates,
            "budget": self.budget, "agent_pool": self.agent_pool,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BikeshareWorld":
        return cls([Station(s["id"], tuple(s["coords"]), int(s["supply"])) for s in d["stations"]],
                   [FlowDemand(int(o), int(t), float(r)) for o, t, r in d["flows"]],
                   [np.asarray(q) for q in d["flow_kernels"]],
                   [BehavioralParams(np.asarray(b["threshold_m"]), np.asarray(b["accept_p"]))
                    for b in d["behavior"]],
                   d["flow_states"], d["geo"], d["demand_mode"], d["behavior_model"],
                   d["k_candidates"], d["budget"], d["agent_pool"], d.get("meta", {}))

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "BikeshareWorld":
        return cls.from_dict(json.loads(text))


def build_world(stations, flows, seed=None, n_states: int = 5, geo: bool = False, **kw) -> BikeshareWorld:
    """Attach random flow-state kernels and behavioral parameters to a network."""
    rng = np.random.default_rng(seed)
    kernels_, behavior = [], []
    for _ in flows:
        kernels_.append(random_kernel(rng, n_states))
        behavior.append(BehavioralParams(rng.uniform(0.0, THRESHOLD_MAX, n_states),
                                         rng.uniform(0.0, 1.0, n_states)))
    states = rng.integers(0, n_states, size=len(flows))
    meta = dict(kw.pop("meta", {}), n_states=n_states)
    if seed is None or isinstance(seed, (int, np.integer)):
        meta["seed"] = None if seed is None else int(seed)
    return BikeshareWorld(list(stations), list(flows), kernels_, behavior, states, geo,
                          meta=meta, **kw)


# --- data ------------------------------------------------------------------

TRIP_COLUMNS = ("start_station_id", "end_station_id", "start_time")


def _parse_time(text: str) -> datetime:
    text = text.strip()
    if text.endswith("Z"):
        text = text[:-1] + "+00:00"
    return datetime.fromisoformat(text)


def ingest_trips(stream, window=(time(12), time(13)), date_range=None, base_supply=10,
                 scale: float = 2.0, station_table: dict | None = None):
    """Aggregate a trips CSV into mean per-day flows inside a daily time window.

    Returns (flows, stations). ``mean_rate`` is the number of in-window trips
    of an ordered station pair divided by the number of days (the days of
    ``date_range`` when given, else the distinct in-window dates seen).
    ``station_table`` maps station id to (lat, lon) for rows without coordinates.
    """
    reader = csv.DictReader(stream)
    missing = [c for c in TRIP_COLUMNS if c not in (reader.fieldnames or [])]
    if missing:
        raise TripsFormatError(f"line 1: missing columns {missing}")
    lo, hi = window
    d0, d1 = date_range if date_range else (None, None)
    if isinstance(d0, str):
        d0 = date.fromisoformat(d0)
    if isinstance(d1, str):
        d1 = date.fromisoformat(d1)
    counts, coords, days = {}, dict(station_table or {}), set()
    for line, row in enumerate(reader, start=2):
        try:
            s, e = row["start_station_id"].strip(), row["end_station_id"].strip()
            ts = _parse_time(row["start_time"])
            if not s or not e:
                raise ValueError("empty station id")
            for sid, la, lo_ in ((s, "start_lat", "start_lon"), (e, "end_lat", "end_lon")):
                if row.get(la) and row.get(lo_) and sid not in coords:
                    coords[sid] = (float(row[la]), float(row[lo_]))
        except (ValueError, TypeError, AttributeError, KeyError) as exc:
            raise TripsFormatError(f"line {line}: {exc}") from None
        if not (lo <= ts.time() < hi):
            continue
        day = ts.date()
        if (d0 and day < d0) or (d1 and day > d1):
            continue
        days.add(day)
        counts[(s, e)] = counts.get((s, e), 0) + 1
    if not counts:
        warnings.warn("no trips inside the window and date range", stacklevel=2)
        return [], []
    n_days = (d1 - d0).days + 1 if (d0 and d1) else len(days)
    ids = sorted({s for pair in counts for s in pair})
    lost = [s for s in ids if s not in coords]
    if lost:
        raise TripsFormatError(f"no coordinates for stations {lost[:5]}")
    index = {s: k for k, s in enumerate(ids)}
    base = base_supply if isinstance(base_supply, dict) else {s: base_supply for s in ids}
    stations = [Station(s, coords[s], int(round(base.get(s, 0) * scale))) for s in ids]
    flows = [FlowDemand(index[s], index[e], c / n_days) for (s, e), c in sorted(counts.items())]
    return flows, stations


def synthetic_network(n_stations: int = 25, spacing: float = 500.0, rate_scale: float = 0.6,
                      rate_cap: float = 4.0, imbalance: float = 0.2, base_supply: int = 8,
                      scale: float = 2.0, seed=None):
    """Square grid of stations with truncated-exponential pair rates.

    ``imbalance`` in [0, 1] blends each rate with the symmetric average of the
    pair, so 0 gives a balanced network and 1 the raw draws.
    """
    rng = np.random.default_rng(seed)
    side = math.ceil(math.sqrt(n_stations))
    stations = [Station(str(k), (spacing * (k % side), spacing * (k // side)),
                        int(round(base_supply * scale))) for k in range(n_stations)]
    u = rng.random((n_stations, n_stations))
    raw = -rate_scale * np.log1p(-u * (1.0 - math.exp(-rate_cap / rate_scale)))
    rates = imbalance * raw + (1.0 - imbalance) * 0.5 * (raw + raw.T)
    flows = [FlowDemand(o, d, float(rates[o, d]))
             for o in range(n_stations) for d in range(n_stations) if o != d]
    return flows, stations


def synthetic_world(seed=0, n_stations: int = 25, n_states: int = 5, **kw) -> BikeshareWorld:
    net_keys = ("spacing", "rate_scale", "rate_cap", "imbalance", "base_supply", "scale")
    net = {k: kw.pop(k) for k in net_keys if k in kw}
    ss = np.random.SeedSequence(seed)
    s_net, s_world = ss.spawn(2)
    flows, stations = synthetic_network(n_stations, seed=s_net, **net)
    return build_world(stations, flows, s_world, n_states,
                       meta={"kind": "synthetic", "world_seed": seed, **net}, **kw)


# --- one epoch -------------------------------------------------------------

def sample_demand(world: BikeshareWorld, rng: np.random.Generator) -> np.ndarray:
    """Flow index of every trip request of the epoch (grouped by flow)."""
    if world.demand_mode == "static":
        counts = np.round(world.rates).astype(np.int64)     # half to even
    else:
        counts = rng.poisson(world.rates)
    return np.repeat(np.arange(len(world.flows)), counts)


@dataclass
class EpochInstance:
    instance: MatchingInstance | None
    agents: list                 # flow index per agent row
    incentives: list             # station index per incentive column
    n_requests: int

    @property
    def empty(self) -> bool:
        return self.instance is None


def build_epoch_instance(world: BikeshareWorld, requests: np.ndarray, k_candidates: int | None = None,
                         budget: float | None = None, agent_pool: int | None = None) -> EpochInstance:
    """Agents: up to ``agent_pool`` requesting flows bound for over-supplied
    stations, largest destination surplus first. Incentives: the k stations
    nearest to each agent's destination.

    Pairs whose station is short of bikes share one class whose capacity is
    the incentive budget, ``floor(budget * requests)``; every other pair sits
    in a zero-capacity class.
    """
    k = world.k_candidates if k_candidates is None else k_candidates
    budget = world.budget if budget is None else budget
    pool = world.agent_pool if agent_pool is None else agent_pool
    n_req = len(requests)
    cap = int(math.floor(budget * n_req + 1e-9))
    if k <= 0 or cap <= 0 or pool <= 0 or n_req == 0:
        return EpochInstance(None, [], [], n_req)
    sup = world.supplies
    surplus = sup - world.outflow
    active = np.unique(requests)
    ok = (sup[world.origin[active]] > 0) & (surplus[world.dest[active]] > 0)
    active = active[ok]
    if active.size == 0:
        return EpochInstance(None, [], [], n_req)
    order = np.lexsort((active, -surplus[world.dest[active]]))
    agents = [int(f) for f in active[order][:pool]]
    cands = [world.neighbors[world.dest[f]][:k] for f in agents]
    incentives = sorted({int(j) for c in cands for j in c})
    col = {j: c for c, j in enumerate(incentives)}
    class_of = np.ones((len(agents), len(incentives)), dtype=np.int64)
    for a, c in enumerate(cands):
        for j in c:
            if surplus[j] < 0:
                class_of[a, col[int(j)]] = 0
    inst = MatchingInstance(np.zeros(class_of.shape), class_of, [cap, 0])
    return EpochInstance(inst, agents, incentives, n_req)


@dataclass
class BikeshareEpoch:
    rewards: dict                # (flow, station) -> time-averaged reward
    accept_rate: dict            # (flow, station) -> accepted offers / iterations
    iterations: int
    served: int
    rejected: int
    offered: int
    accepted: int

    @property
    def efficiency(self) -> float:
        total = self.served + self.rejected
        return self.served / total if total else 1.0

    @property
    def matching_reward(self) -> float:
        return float(sum(self.rewards.values()))


def play_offers(world: BikeshareWorld, pairs, tau: int, rng: np.random.Generator,
                early_stop: EarlyStop | None = None):
    """Simulate the offers of (flow, station) pairs; advances the flow states."""
    if not pairs:
        return {}, {}, 0
    flows = [f for f, _ in pairs]
    s = max(world.flow_kernels[f].shape[0] for f in flows)
    n = len(pairs)
    cum = np.ones((n, s, s))
    p0 = np.zeros((n, s))
    p1 = np.zeros((n, s))
    for k, (f, j) in enumerate(pairs):
        c = world._cum[f]
        cum[k, :c.shape[0], :c.shape[0]] = c
        p, v = world.arm_params(f, j)
        p0[k, :p.size] = p
        p1[k, :v.size] = v
    kind = np.full((n, s), BERN, dtype=np.int64)
    tid = np.zeros((n, s), dtype=np.int64)
    states = np.ascontiguousarray(world.flow_states[flows])
    sums, hits, used = simulate_arms(cum, states, kind, p0, p1, tid, np.zeros((1, 2)),
                                     tau, rng, early_stop, True)
    world.flow_states[flows] = states
    rewards = {pair: float(sums[k]) / used for k, pair in enumerate(pairs)}
    rates = {pair: float(hits[k]) / used for k, pair in enumerate(pairs)}
    return rewards, rates, used


def route_demand(world: BikeshareWorld, requests: np.ndarray, redirects: dict,
                 rng: np.random.Generator) -> tuple[int, int]:
    """Serve requests in random order against the start-of-epoch supply.

    ``redirects`` maps a flow to its new destination for one of its trips.
    Supplies change only at the end, so bikes are conserved exactly.
    """
    n = len(requests)
    if n == 0:
        return 0, 0
    origin = world.origin[requests]
    dest = world.dest[requests].copy()
    if redirects:
        first = {}
        for k, f in enumerate(requests):
            first.setdefault(int(f), k)
        for f, j in redirects.items():
            dest[first[f]] = j
    perm = rng.permutation(n)
    o = origin[perm]
    idx = np.argsort(o, kind="stable")
    o_sorted = o[idx]
    rank = np.arange(n) - np.searchsorted(o_sorted, o_sorted, side="left")
    served = np.zeros(n, dtype=bool)
    served[perm[idx]] = rank < world.supplies[o_sorted]
    ns = world.n_stations
    world.supplies -= np.bincount(origin[served], minlength=ns)
    world.supplies += np.bincount(dest[served], minlength=ns)
    k = int(served.sum())
    return k, n - k


def play_bikeshare_epoch(world: BikeshareWorld, epoch: EpochInstance, matching: Matching,
                         requests: np.ndarray, tau: int, rng: np.random.Generator,
                         early_stop: EarlyStop | None = None,
                         route_rng: np.random.Generator | None = None) -> BikeshareEpoch:
    """Resolve the trip offers, play the epoch's offers for ``tau`` iterations,
    then route the demand.

    The offer attached to the flow's actual trip resolves in the flow's state
    at the start of the epoch: accepted with that state's acceptance
    probability, in which case one trip of the flow is redirected. The
    ``tau`` iterations produce the time-averaged reward the learner observes.
    ``route_rng`` (default ``rng``) drives the trip offers and the pickup order.
    """
    route_rng = rng if route_rng is None else route_rng
    pairs = [(epoch.agents[a], epoch.incentives[i]) for a, i in matching.sorted()]
    redirects = {}
    for f, j in pairs:
        p, _ = world.arm_params(f, j)
        if route_rng.random() < p[world.flow_states[f]]:
            redirects[f] = j
    rewards, rates, used = play_offers(world, pairs, tau, rng, early_stop)
    served, rejected = route_demand(world, requests, redirects, route_rng)
    return BikeshareEpoch(rewards, rates, used, served, rejected, len(pairs), len(redirects))


# --- policies and the coupled comparison ----------------------------------

class ArmLearner:
    """Epoch UCB statistics keyed by (flow, station); pulls start at 1."""

    def __init__(self, world: BikeshareWorld, schedule: EpochSchedule, log_coefficient: float = 3.0):
        self.world = world
        self.schedule = schedule
        self.log_coefficient = log_coefficient
        self.cum = {}
        self.pulls = {}
        self.epoch = 0

    def weights(self, epoch: EpochInstance) -> np.ndarray:
        m = max(epoch.instance.shape)
        t = self.epoch + 1
        w = np.zeros(epoch.instance.shape)
        for a, f in enumerate(epoch.agents):
            for c, j in enumerate(epoch.incentives):
                key = (f, j)
                k = self.pulls.get(key, 1)
                cmix = self.world.arm_mixing_constant(f, j)
                w[a, c] = (self.cum.get(key, 0.0) / k
                           + float(confidence(k, t, max(m, 2), cmix, self.schedule,
                                              self.log_coefficient)))
        return w

    def update(self, rewards: dict):
        for key, r in rewards.items():
            self.cum[key] = self.cum.get(key, 0.0) + r
            self.pulls[key] = self.pulls.get(key, 1) + 1
        self.epoch += 1


def full_information_weights(world: BikeshareWorld, epoch: EpochInstance) -> np.ndarray:
    w = np.zeros(epoch.instance.shape)
    for a, f in enumerate(epoch.agents):
        for c, j in enumerate(epoch.incentives):
            w[a, c] = world.expected_reward(f, j)
    return w


@dataclass
class BikeshareTrace:
    mode: str
    served: np.ndarray
    rejected: np.ndarray
    offered: np.ndarray
    accepted: np.ndarray
    matching_reward: np.ndarray
    requests: np.ndarray
    total_bikes: np.ndarray

    @property
    def efficiency(self) -> np.ndarray:
        tot = self.served + self.rejected
        return np.where(tot > 0, self.served / np.maximum(tot, 1), 1.0)

    def terminal_efficiency(self, fraction: float = 0.1) -> float:
        n = max(1, int(round(len(self.served) * fraction)))
        return float(self.efficiency[-n:].mean())

    def rows(self):
        eff = self.efficiency
        for k in range(len(self.served)):
            yield (k + 1, self.mode, int(self.served[k]), int(self.rejected[k]), float(eff[k]),
                   int(self.offered[k]), int(self.accepted[k]), float(self.matching_reward[k]))


CSV_HEADER = ("epoch", "mode", "served", "rejected", "efficiency", "incentives_offered",
              "incentives_accepted", "mean_matching_reward")


def traces_to_csv(traces) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for tr in traces:
        for row in tr.rows():
            w.writerow(list(row[:4]) + [repr(row[4])] + list(row[5:7]) + [repr(row[7])])
    return buf.getvalue()


def run_mode(world: BikeshareWorld, mode: str, schedule: EpochSchedule, n_epochs: int, seed,
             log_coefficient: float = 3.0) -> BikeshareTrace:
    """One coupled run. Demand comes from its own stream, identical across modes."""
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    world = world.clone()
    s_demand, s_play, s_route = np.random.SeedSequence(seed).spawn(3)
    demand_rng = np.random.default_rng(s_demand)
    play_rng = np.random.default_rng(s_play)
    route_rng = np.random.default_rng(s_route)
    learner = ArmLearner(world, schedule, log_coefficient) if mode == "mg_eucb_plus" else None
    out = {k: np.zeros(n_epochs, dtype=np.int64)
           for k in ("served", "rejected", "offered", "accepted", "requests", "total_bikes")}
    mreward = np.zeros(n_epochs)
    empty = Matching(())
    for k in range(n_epochs):
        requests = sample_demand(world, demand_rng)
        epoch = build_epoch_instance(world, requests) if mode != "no_incentive" else None
        if epoch is None or epoch.empty:
            matching = empty
            epoch = epoch or EpochInstance(None, [], [], len(requests))
        elif learner is not None:
            matching = greedy_match(epoch.instance.with_weights(learner.weights(epoch)))
        else:
            matching = greedy_match(epoch.instance.with_weights(full_information_weights(world, epoch)))
        if matching.edges:
            res = play_bikeshare_epoch(world, epoch, matching, requests, schedule.tau(k + 1),
                                       play_rng, schedule.early_stop, route_rng)
        else:
            res = _route_only(world, requests, route_rng)
        if learner is not None:
            learner.update(res.rewards)
        out["served"][k] = res.served
        out["rejected"][k] = res.rejected
        out["offered"][k] = res.offered
        out["accepted"][k] = res.accepted
        out["requests"][k] = len(requests)
        out["total_bikes"][k] = world.total_bikes
        mreward[k] = res.matching_reward
    return BikeshareTrace(mode, out["served"], out["rejected"], out["offered"], out["accepted"],
                          mreward, out["requests"], out["total_bikes"])


def _route_only(world, requests, rng) -> BikeshareEpoch:
    served, rejected = route_demand(world, requests, {}, rng)
    return BikeshareEpoch({}, {}, 0, served, rejected, 0, 0)


def run_bikeshare(world: BikeshareWorld, schedule: EpochSchedule, n_epochs: int, seed,
                  modes=MODES, log_coefficient: float = 3.0) -> dict:
    """The learning policy, the full-information greedy bound and the
    no-incentive baseline on cloned worlds with identical seeds."""
    return {m: run_mode(world, m, schedule, n_epochs, seed, log_coefficient) for m in modes}
