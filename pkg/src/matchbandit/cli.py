"""Command-line front end.

Subcommands: ``run`` (experiment from a YAML config, flags override file
keys), ``validate`` (print the normalized config), ``audit-matching``
(greedy against the exact oracle on random instances) and ``ingest-trips``
(trips CSV to a world JSON snapshot).

Every run writes one CSV per (variant, seed) under ``<output>/runs``, a
seed-aggregated ``summary.csv`` (mean and standard error per epoch) and a
``manifest.json``. Timestamps and wall time appear only in the manifest, so
reruns with the same config reproduce the CSV files byte for byte.
"""
from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import platform
import sys
import time as _time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from ._backend import BACKEND
from .bikeshare import (MODES, BikeshareWorld, build_world, ingest_trips, run_bikeshare,
                        synthetic_world, traces_to_csv)
from .environment import REWARD_FAMILIES, EarlyStop, example1, generate_synthetic
from .matching import (EXACT_EDGE_LIMIT, MatchingInstance, exact_match, greedy_match,
                       hungarian_match, random_instance)
from .policy import VARIANTS, EpochSchedule, PolicyConfig, run
from .regret import bounds_report, build_benchmark, gaps, regret_of

OUTPUT_ENV = "MATCHBANDIT_OUTPUT_DIR"
EXPERIMENTS = ("example1", "synthetic", "bikeshare", "matching-audit")

COMMON_KEYS = {"experiment", "variants", "schedule", "n_epochs", "seeds", "output_dir", "workers"}
SCHEDULE_KEYS = {"tau0", "zeta", "early_stop"}
EARLY_STOP_KEYS = {"delta", "patience"}
EXPERIMENT_KEYS = {
    "example1": {"epsilon"},
    "synthetic": {"m", "m_incentives", "n_states", "reward_family", "instance_seed",
                  "class_of", "capacities"},
    "bikeshare": {"n_stations", "n_states", "demand_mode", "behavior", "k_candidates",
                  "budget", "agent_pool", "trips_csv", "world_json", "instance_seed",
                  "log_coefficient"},
    "matching-audit": {"n_instances", "max_edges", "n_classes"},
}
DEFAULTS = {
    "common": {"schedule": {"tau0": 50, "zeta": 1, "early_stop": None}, "n_epochs": 1000,
               "seeds": [0], "workers": 1},
    "example1": {"variants": ["C_UCB", "MG_EUCB"], "epsilon": 0.1},
    "synthetic": {"variants": ["MG_EUCB", "MG_EUCB_PLUS", "H_EUCB", "H_EUCB_PLUS"], "m": 10,
                  "m_incentives": None, "n_states": 10, "reward_family": "bernoulli",
                  "instance_seed": 0, "class_of": None, "capacities": None},
    "bikeshare": {"variants": list(MODES), "n_stations": 25, "n_states": 5,
                  "demand_mode": "static", "behavior": "bernoulli", "k_candidates": 5,
                  "budget": 0.01, "agent_pool": 12, "trips_csv": None, "world_json": None,
                  "instance_seed": 0, "log_coefficient": 3.0},
    "matching-audit": {"variants": [], "n_instances": 1000, "max_edges": EXACT_EDGE_LIMIT,
                       "n_classes": 3},
}


class ConfigError(ValueError):
    """Schema violation; ``problems`` lists every offending key."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


# --- configuration ---------------------------------------------------------

def default_output_dir() -> str:
    return os.environ.get(OUTPUT_ENV, "results")


def _is_int(x) -> bool:
    return isinstance(x, (int, np.integer)) and not isinstance(x, bool)


def _is_num(x) -> bool:
    return isinstance(x, (int, float, np.integer, np.floating)) and not isinstance(x, bool)


def normalize_config(raw: dict, base_dir: str | Path = ".") -> dict:
    """Fill defaults, check ranges and reject unknown keys.

    Raises :class:`ConfigError` listing all problems found.
    """
    if not isinstance(raw, dict):
        raise ConfigError(["config must be a mapping"])
    problems = []
    exp = raw.get("experiment")
    if exp not in EXPERIMENTS:
        raise ConfigError([f"experiment: expected one of {list(EXPERIMENTS)}, got {exp!r}"])
    allowed = COMMON_KEYS | EXPERIMENT_KEYS[exp]
    unknown = sorted(set(raw) - allowed)
    if unknown:
        problems.append(f"unknown keys for {exp}: {unknown}")
    cfg = copy.deepcopy(DEFAULTS["common"])
    cfg.update(copy.deepcopy(DEFAULTS[exp]))
    cfg["output_dir"] = default_output_dir()
    cfg.update({k: copy.deepcopy(v) for k, v in raw.items() if k in allowed and k != "schedule"})

    sched = dict(DEFAULTS["common"]["schedule"])
    raw_s = raw.get("schedule", {}) or {}
    if not isinstance(raw_s, dict):
        problems.append("schedule: must be a mapping")
        raw_s = {}
    bad = sorted(set(raw_s) - SCHEDULE_KEYS)
    if bad:
        problems.append(f"unknown schedule keys: {bad}")
    sched.update({k: v for k, v in raw_s.items() if k in SCHEDULE_KEYS})
    if not _is_int(sched["tau0"]) or sched["tau0"] < 1:
        problems.append(f"schedule.tau0: integer >= 1 required, got {sched['tau0']!r}")
    if not _is_int(sched["zeta"]) or sched["zeta"] < 0:
        problems.append(f"schedule.zeta: integer >= 0 required, got {sched['zeta']!r}")
    es = sched["early_stop"]
    if es is True:
        es = {"delta": EarlyStop.delta, "patience": EarlyStop.patience}
    elif es in (False, None):
        es = None
    elif isinstance(es, dict):
        bad = sorted(set(es) - EARLY_STOP_KEYS)
        if bad:
            problems.append(f"unknown early_stop keys: {bad}")
        es = {"delta": es.get("delta", EarlyStop.delta), "patience": es.get("patience", EarlyStop.patience)}
        if not _is_num(es["delta"]) or es["delta"] <= 0:
            problems.append("schedule.early_stop.delta: positive number required")
        if not _is_int(es["patience"]) or es["patience"] < 1:
            problems.append("schedule.early_stop.patience: integer >= 1 required")
    else:
        problems.append("schedule.early_stop: bool or mapping required")
        es = None
    sched["early_stop"] = es
    cfg["schedule"] = sched

    if not _is_int(cfg["n_epochs"]) or cfg["n_epochs"] < 1:
        problems.append(f"n_epochs: integer >= 1 required, got {cfg['n_epochs']!r}")
    seeds = cfg["seeds"]
    if _is_int(seeds):
        seeds = [seeds]
    if not isinstance(seeds, list) or not seeds or not all(_is_int(s) and s >= 0 for s in seeds):
        problems.append("seeds: non-empty list of non-negative integers required")
    elif len(set(seeds)) != len(seeds):
        problems.append("seeds: duplicates")
    cfg["seeds"] = seeds
    if not _is_int(cfg["workers"]) or cfg["workers"] < 1:
        problems.append("workers: integer >= 1 required")
    if not isinstance(cfg["output_dir"], str) or not cfg["output_dir"]:
        problems.append("output_dir: non-empty string required")

    variants = cfg["variants"]
    if isinstance(variants, str):
        variants = [variants]
    if not isinstance(variants, list):
        problems.append("variants: list required")
        variants = []
    cfg["variants"] = variants
    known = MODES if exp == "bikeshare" else VARIANTS
    bad = [v for v in variants if v not in known]
    if bad:
        problems.append(f"variants: unknown {bad}; expected from {list(known)}")
    if exp != "matching-audit" and not variants:
        problems.append("variants: at least one required")
    if len(set(variants)) != len(variants):
        problems.append("variants: duplicates")

    check = {"example1": _check_example1, "synthetic": _check_synthetic,
             "bikeshare": _check_bikeshare, "matching-audit": _check_audit}[exp]
    problems.extend(check(cfg, Path(base_dir)))
    if problems:
        raise ConfigError(problems)
    return cfg


def _check_example1(cfg, base):
    e = cfg["epsilon"]
    if not _is_num(e) or not 0 < e < 1:
        return [f"epsilon: number in (0, 1) required, got {e!r}"]
    return []


def _check_synthetic(cfg, base):
    out = []
    for k in ("m", "n_states"):
        if not _is_int(cfg[k]) or cfg[k] < 1:
            out.append(f"{k}: integer >= 1 required")
    if cfg["m_incentives"] is not None and (not _is_int(cfg["m_incentives"]) or cfg["m_incentives"] < 1):
        out.append("m_incentives: integer >= 1 required")
    if cfg["reward_family"] not in REWARD_FAMILIES:
        out.append(f"reward_family: expected one of {list(REWARD_FAMILIES)}")
    if not _is_int(cfg["instance_seed"]) or cfg["instance_seed"] < 0:
        out.append("instance_seed: non-negative integer required")
    if (cfg["class_of"] is None) != (cfg["capacities"] is None):
        out.append("class_of and capacities must be given together")
    if out:
        return out
    m_inc = cfg["m_incentives"] or cfg["m"]
    inst = _declared_instance(cfg["m"], m_inc, cfg["class_of"], cfg["capacities"], out)
    if inst is not None:
        out.extend(_binding_problems(cfg["variants"], inst))
    return out


def _declared_instance(m, m_inc, class_of, capacities, out):
    if class_of is None:
        return MatchingInstance.single_class(np.zeros((m, m_inc)), min(m, m_inc))
    try:
        inst = MatchingInstance(np.zeros((m, m_inc)), np.asarray(class_of), np.asarray(capacities))
    except (ValueError, TypeError) as exc:
        out.append(f"class_of/capacities: {exc}")
        return None
    return inst


def _binding_problems(variants, inst):
    if inst.nonbinding():
        return []
    h = [v for v in variants if v.startswith("H_")]
    return [f"variants {h}: Hungarian variants need non-binding capacities"] if h else []


def _check_bikeshare(cfg, base):
    out = []
    if not _is_int(cfg["n_stations"]) or cfg["n_stations"] < 2:
        out.append("n_stations: integer >= 2 required")
    if not _is_int(cfg["n_states"]) or cfg["n_states"] < 1:
        out.append("n_states: integer >= 1 required")
    if cfg["demand_mode"] not in ("static", "poisson"):
        out.append("demand_mode: 'static' or 'poisson' required")
    if cfg["behavior"] not in ("bernoulli", "utility"):
        out.append("behavior: 'bernoulli' or 'utility' required")
    if not _is_int(cfg["k_candidates"]) or cfg["k_candidates"] < 1:
        out.append("k_candidates: integer >= 1 required")
    if not _is_int(cfg["agent_pool"]) or cfg["agent_pool"] < 1:
        out.append("agent_pool: integer >= 1 required")
    if not _is_num(cfg["budget"]) or not 0 <= cfg["budget"] <= 1:
        out.append("budget: number in [0, 1] required")
    if not _is_num(cfg["log_coefficient"]) or cfg["log_coefficient"] <= 0:
        out.append("log_coefficient: positive number required")
    if not _is_int(cfg["instance_seed"]) or cfg["instance_seed"] < 0:
        out.append("instance_seed: non-negative integer required")
    if cfg["trips_csv"] and cfg["world_json"]:
        out.append("trips_csv and world_json are exclusive")
    for k in ("trips_csv", "world_json"):
        if cfg[k] is not None:
            p = Path(cfg[k])
            p = p if p.is_absolute() else base / p
            if not p.is_file():
                out.append(f"{k}: file not found: {cfg[k]}")
            else:
                cfg[k] = str(p.resolve())
    return out


def _check_audit(cfg, base):
    out = []
    if not _is_int(cfg["n_instances"]) or cfg["n_instances"] < 1:
        out.append("n_instances: integer >= 1 required")
    if not _is_int(cfg["max_edges"]) or not 1 <= cfg["max_edges"] <= EXACT_EDGE_LIMIT:
        out.append(f"max_edges: integer in [1, {EXACT_EDGE_LIMIT}] required")
    if not _is_int(cfg["n_classes"]) or cfg["n_classes"] < 1:
        out.append("n_classes: integer >= 1 required")
    if cfg["variants"]:
        out.append("variants: not used by matching-audit")
    return out


def load_config(path: str | Path, overrides: dict | None = None) -> dict:
    """Read a YAML config, apply flag overrides and normalize."""
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except OSError as exc:
        raise ConfigError([f"cannot read {path}: {exc}"]) from None
    except yaml.YAMLError as exc:
        raise ConfigError([f"invalid YAML in {path}: {exc}"]) from None
    raw = {} if raw is None else raw
    if overrides and isinstance(raw, dict):
        raw = {**raw, **overrides}
    return normalize_config(raw, path.parent)


def validate_config(path: str | Path) -> dict:
    return load_config(path)


def schedule_of(cfg: dict) -> EpochSchedule:
    s = cfg["schedule"]
    es = None if s["early_stop"] is None else EarlyStop(float(s["early_stop"]["delta"]),
                                                        int(s["early_stop"]["patience"]))
    return EpochSchedule(int(s["tau0"]), int(s["zeta"]), es)


# --- readers / writers -----------------------------------------------------

def write_text(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        fh.write(text)


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(header)
    for r in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in r])
    return buf.getvalue()


def _crlf(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\n", "\r\n")


def mean_se(stack: np.ndarray):
    """Mean and standard error across rows; SE is 0 for a single row."""
    stack = np.asarray(stack, dtype=float)
    mean = stack.mean(axis=0)
    n = stack.shape[0]
    se = stack.std(axis=0, ddof=1) / math.sqrt(n) if n > 1 else np.zeros_like(mean)
    return mean, se


# --- experiments -----------------------------------------------------------

def build_problem(cfg: dict):
    """(environment, instance) for the epoch-bandit experiments."""
    if cfg["experiment"] == "example1":
        return example1(float(cfg["epsilon"]))
    m = cfg["m"]
    m_inc = cfg["m_incentives"] or m
    cls = None if cfg["class_of"] is None else np.asarray(cfg["class_of"])
    caps = None if cfg["capacities"] is None else np.asarray(cfg["capacities"])
    return generate_synthetic(m, cfg["n_states"], cfg["reward_family"], cfg["instance_seed"],
                              m_inc, cls, caps)


def reference_matching(instance: MatchingInstance, variant: str):
    """Optimal matching a variant is scored against: Hungarian optimum for H
    variants, greedy on stationary means otherwise."""
    return hungarian_match(instance) if variant.startswith("H_") else greedy_match(instance)


def _bandit_task(cfg, variant, seed, out_dir):
    env, inst = build_problem(cfg)
    sched = schedule_of(cfg)
    bench = build_benchmark(env, inst)
    res = run(env, inst, PolicyConfig(variant), sched, cfg["n_epochs"], np.random.default_rng(seed),
              reference=reference_matching(bench.instance, variant))
    trace = regret_of(res, bench)
    write_text(Path(out_dir) / "runs" / f"{variant}_seed{seed}.csv", _crlf(trace.to_csv()))
    return variant, seed, trace.realized, trace.cumulative, trace.optimal


def _bike_world(cfg) -> BikeshareWorld:
    kw = dict(demand_mode=cfg["demand_mode"], behavior_model=cfg["behavior"],
              k_candidates=cfg["k_candidates"], budget=cfg["budget"], agent_pool=cfg["agent_pool"])
    if cfg["world_json"]:
        d = json.loads(Path(cfg["world_json"]).read_text())
        d.update(kw)
        return BikeshareWorld.from_dict(d)
    if cfg["trips_csv"]:
        with open(cfg["trips_csv"], newline="") as fh:
            flows, stations = ingest_trips(fh)
        if not flows:
            raise ConfigError([f"trips_csv: no usable trips in {cfg['trips_csv']}"])
        return build_world(stations, flows, cfg["instance_seed"], cfg["n_states"], geo=True, **kw)
    return synthetic_world(cfg["instance_seed"], cfg["n_stations"], cfg["n_states"], **kw)


def _bike_task(cfg, modes, seed, out_dir):
    world = _bike_world(cfg)
    traces = run_bikeshare(world, schedule_of(cfg), cfg["n_epochs"], seed, modes,
                           cfg["log_coefficient"])
    write_text(Path(out_dir) / "runs" / f"bikeshare_seed{seed}.csv",
               _crlf(traces_to_csv(traces.values())))
    return seed, {m: (tr.efficiency, tr.matching_reward) for m, tr in traces.items()}


def _map(fn, tasks, workers):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(workers, len(tasks))) as ex:
        futures = [ex.submit(fn, *t) for t in tasks]
        return [f.result() for f in futures]


def run_bandit_experiment(cfg: dict, out: Path) -> dict:
    tasks = [(cfg, v, s, str(out)) for v in cfg["variants"] for s in cfg["seeds"]]
    results = _map(_bandit_task, tasks, cfg["workers"])
    rows = []
    for v in cfg["variants"]:
        got = [r for r in results if r[0] == v]
        cols = [mean_se(np.vstack([r[k] for r in got])) for k in (2, 3, 4)]
        for e in range(len(got[0][2])):
            rows.append([v, e + 1, len(got)] + [c[j][e] for c in cols for j in (0, 1)])
    header = ["variant", "epoch", "n_seeds", "realized_mean", "realized_se", "cumulative_regret_mean",
              "cumulative_regret_se", "optimal_mean", "optimal_se"]
    write_text(out / "summary.csv", _csv(header, rows))
    env, inst = build_problem(cfg)
    report = _bounds(env, inst, cfg)
    write_text(out / "bounds.json", json.dumps(report, indent=2, sort_keys=True) + "\n")
    finals = {}
    for v in cfg["variants"]:
        last = [r for r in rows if r[0] == v][-1]
        finals[v] = {"cumulative_regret": last[5], "optimal_fraction_last": last[7]}
    return finals


def _bounds(env, inst, cfg):
    bench = build_benchmark(env, inst)
    table = gaps(bench)
    n = cfg["n_epochs"]
    m = max(inst.shape)
    if n < 2 or m < 2 or cfg["schedule"]["zeta"] == 0:
        return {"note": "bounds need n >= 2, m >= 2 and zeta > 0"}
    return bounds_report(table, env.mixing_constants(), schedule_of(cfg), n, m)


def run_bike_experiment(cfg: dict, out: Path) -> dict:
    modes = tuple(cfg["variants"])
    tasks = [(cfg, modes, s, str(out)) for s in cfg["seeds"]]
    results = sorted(_map(_bike_task, tasks, cfg["workers"]), key=lambda r: cfg["seeds"].index(r[0]))
    rows, finals = [], {}
    for m in modes:
        eff = mean_se(np.vstack([r[1][m][0] for r in results]))
        rew = mean_se(np.vstack([r[1][m][1] for r in results]))
        for e in range(cfg["n_epochs"]):
            rows.append([m, e + 1, len(results), eff[0][e], eff[1][e], rew[0][e], rew[1][e]])
        tail = max(1, int(round(0.1 * cfg["n_epochs"])))
        finals[m] = {"terminal_efficiency": float(eff[0][-tail:].mean())}
    header = ["mode", "epoch", "n_seeds", "efficiency_mean", "efficiency_se",
              "mean_matching_reward_mean", "mean_matching_reward_se"]
    write_text(out / "summary.csv", _csv(header, rows))
    return finals


@dataclass
class AuditResult:
    ratios: np.ndarray
    rows: list = field(default_factory=list)

    @property
    def min_ratio(self) -> float:
        return float(self.ratios.min()) if self.ratios.size else 1.0

    @property
    def violations(self) -> int:
        return int(np.sum(self.ratios < 1.0 / 3.0 - 1e-12))


def audit_matching(n_instances: int = 1000, seed: int = 0, max_edges: int = EXACT_EDGE_LIMIT,
                   n_classes: int = 3) -> AuditResult:
    """Greedy against the exact optimum on random instances with at most
    ``max_edges`` edges. Instances with zero optimum score ratio 1."""
    rng = np.random.default_rng(seed)
    rows, ratios = [], []
    for k in range(n_instances):
        while True:
            ma, mi = int(rng.integers(1, 6)), int(rng.integers(1, 6))
            if ma * mi <= max_edges:
                break
        inst = random_instance(rng, ma, mi, int(rng.integers(1, n_classes + 1)))
        g = greedy_match(inst).weight(inst)
        opt = exact_match(inst, max_edges).weight(inst)
        r = g / opt if opt > 0 else 1.0
        ratios.append(r)
        rows.append([k, ma, mi, len(inst.capacities), g, opt, r])
    return AuditResult(np.array(ratios), rows)


def write_audit(res: AuditResult, out: Path, bins: int = 20):
    header = ["instance", "m_agents", "m_incentives", "n_classes", "greedy_weight", "exact_weight", "ratio"]
    write_text(out / "audit.csv", _csv(header, res.rows))
    edges = np.linspace(1.0 / 3.0, 1.0, bins + 1)
    counts, _ = np.histogram(np.clip(res.ratios, edges[0], edges[-1]), bins=edges)
    write_text(out / "ratio_histogram.csv",
               _csv(["bin_low", "bin_high", "count"],
                    [[float(edges[j]), float(edges[j + 1]), int(c)] for j, c in enumerate(counts)]))


def run_experiment(cfg: dict) -> dict:
    """Execute a normalized config; returns the manifest written alongside."""
    out = Path(cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    started = datetime.now(timezone.utc).isoformat()
    t0 = _time.perf_counter()
    exp = cfg["experiment"]
    if exp == "matching-audit":
        res = audit_matching(cfg["n_instances"], cfg["seeds"][0], cfg["max_edges"], cfg["n_classes"])
        write_audit(res, out)
        finals = {"min_ratio": res.min_ratio, "violations": res.violations}
    elif exp == "bikeshare":
        finals = run_bike_experiment(cfg, out)
    else:
        finals = run_bandit_experiment(cfg, out)
    manifest = {
        "config": cfg,
        "versions": {"matchbandit": __version__, "python": platform.python_version(),
                     "numpy": np.__version__, "scipy": _scipy_version(), "backend": BACKEND},
        "started": started,
        "wall_time_s": _time.perf_counter() - t0,
        "files": sorted(str(p.relative_to(out)) for p in out.rglob("*")
                        if p.is_file() and p.name != "manifest.json"),
        "results": finals,
    }
    write_text(out / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    return manifest


def _scipy_version():
    import scipy
    return scipy.__version__


# --- argument parsing ------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="matchbandit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run an experiment from a YAML config")
    r.add_argument("config", nargs="?", help="YAML config; flags override its keys")
    r.add_argument("--experiment", choices=EXPERIMENTS)
    r.add_argument("--variants", nargs="+")
    r.add_argument("--n-epochs", type=int, dest="n_epochs")
    r.add_argument("--seeds", type=int, nargs="+")
    r.add_argument("--output-dir", dest="output_dir",
                   help=f"output directory (default ${OUTPUT_ENV} or ./results)")
    r.add_argument("--workers", type=int)

    v = sub.add_parser("validate", help="check a config and print it normalized")
    v.add_argument("config")

    a = sub.add_parser("audit-matching", help="greedy versus exact matching on random instances")
    a.add_argument("--instances", type=int, default=1000)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--max-edges", type=int, default=EXACT_EDGE_LIMIT)
    a.add_argument("--classes", type=int, default=3)
    a.add_argument("--output-dir", dest="output_dir")

    t = sub.add_parser("ingest-trips", help="aggregate a trips CSV into a world JSON")
    t.add_argument("trips")
    t.add_argument("--output", "-o", required=True, help="world JSON path")
    t.add_argument("--window", nargs=2, default=["12:00", "13:00"], metavar=("START", "END"))
    t.add_argument("--date-range", nargs=2, metavar=("FIRST", "LAST"))
    t.add_argument("--base-supply", type=int, default=10)
    t.add_argument("--scale", type=float, default=2.0)
    t.add_argument("--n-states", type=int, default=5)
    t.add_argument("--seed", type=int, default=0)
    return p


def _overrides(args) -> dict:
    keys = ("experiment", "variants", "n_epochs", "seeds", "output_dir", "workers")
    return {k: getattr(args, k) for k in keys if getattr(args, k) is not None}


def _fail(msg: str, code: int = 2) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return code


def cmd_run(args) -> int:
    try:
        if args.config:
            cfg = load_config(args.config, _overrides(args))
        else:
            cfg = normalize_config(_overrides(args))
        manifest = run_experiment(cfg)
    except ConfigError as exc:
        for msg in exc.problems:
            print(f"config error: {msg}", file=sys.stderr)
        return 2
    except (ValueError, OSError) as exc:
        return _fail(str(exc), 1)
    print(json.dumps(manifest["results"], indent=2))
    print(f"wrote {cfg['output_dir']}")
    return 0


def cmd_validate(args) -> int:
    try:
        cfg = validate_config(args.config)
    except ConfigError as exc:
        for msg in exc.problems:
            print(f"config error: {msg}", file=sys.stderr)
        return 2
    print(yaml.safe_dump(cfg, sort_keys=True), end="")
    return 0


def cmd_audit(args) -> int:
    if not 1 <= args.max_edges <= EXACT_EDGE_LIMIT:
        return _fail(f"--max-edges must lie in [1, {EXACT_EDGE_LIMIT}]")
    if args.instances < 1 or args.classes < 1:
        return _fail("--instances and --classes must be >= 1")
    res = audit_matching(args.instances, args.seed, args.max_edges, args.classes)
    out = Path(args.output_dir or default_output_dir())
    write_audit(res, out)
    print(f"instances {len(res.ratios)}  min ratio {res.min_ratio:.4f}  "
          f"mean ratio {res.ratios.mean():.4f}  below 1/3: {res.violations}")
    return 0 if res.violations == 0 else 1


def cmd_ingest(args) -> int:
    from datetime import time as dtime
    try:
        window = tuple(dtime.fromisoformat(x) for x in args.window)
        with open(args.trips, newline="") as fh:
            flows, stations = ingest_trips(fh, window, args.date_range, args.base_supply, args.scale)
    except (OSError, ValueError) as exc:
        return _fail(str(exc), 1)
    if not flows:
        return _fail("no trips inside the window", 1)
    world = build_world(stations, flows, args.seed, args.n_states, geo=True)
    write_text(Path(args.output), world.to_json() + "\n")
    print(f"{len(stations)} stations, {len(flows)} flows, "
          f"{sum(f.mean_rate for f in flows):.2f} trips per window -> {args.output}")
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    return {"run": cmd_run, "validate": cmd_validate, "audit-matching": cmd_audit,
            "ingest-trips": cmd_ingest}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
