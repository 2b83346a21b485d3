import json
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest
import yaml

from matchbandit.cli import (OUTPUT_ENV, ConfigError, audit_matching, load_config, main, mean_se,
                             normalize_config, read_csv)

TRIPS = ("start_station_id,end_station_id,start_time,start_lat,start_lon,end_lat,end_lon\n"
         "A,B,2017-06-01T12:05:00,42.350,-71.060,42.360,-71.050\n"
         "B,A,2017-06-02T12:35:00,42.360,-71.050,42.350,-71.060\n"
         "A,C,2017-06-02T12:40:00,42.350,-71.060,42.340,-71.070\n")


def write_cfg(tmp_path, **kw):
    p = tmp_path / "cfg.yaml"
    p.write_text(yaml.safe_dump(kw))
    return p


def csv_bodies(root: Path) -> dict:
    return {str(p.relative_to(root)): p.read_bytes() for p in sorted(root.rglob("*.csv"))}


def test_validate_fills_defaults(tmp_path, capsys):
    p = write_cfg(tmp_path, experiment="example1")
    assert main(["validate", str(p)]) == 0
    cfg = yaml.safe_load(capsys.readouterr().out)
    assert cfg["schedule"] == {"tau0": 50, "zeta": 1, "early_stop": None}
    assert cfg["variants"] == ["C_UCB", "MG_EUCB"]
    assert cfg["epsilon"] == 0.1


def test_validate_early_stop_default_values(tmp_path):
    cfg = load_config(write_cfg(tmp_path, experiment="example1", schedule={"early_stop": True}))
    assert cfg["schedule"]["early_stop"] == {"delta": 5e-4, "patience": 200}


@pytest.mark.parametrize("raw, needle", [
    ({"experiment": "example1", "schedule": {"zeta": -1}}, "zeta"),
    ({"experiment": "example1", "colour": "red"}, "colour"),
    ({"experiment": "synthetic", "m": 3, "variants": ["H_EUCB"], "class_of": [[0] * 3] * 3,
      "capacities": [1]}, "H_EUCB"),
    ({"experiment": "example1", "variants": ["UCB9"]}, "UCB9"),
    ({"experiment": "teleport"}, "teleport"),
    ({"experiment": "example1", "seeds": [0, "x"]}, "seeds"),
])
def test_rejections(raw, needle):
    with pytest.raises(ConfigError) as exc:
        normalize_config(raw)
    assert any(needle in p for p in exc.value.problems)


def test_all_problems_reported(tmp_path, capsys):
    p = write_cfg(tmp_path, experiment="example1", colour=1, schedule={"zeta": -1}, n_epochs=-5)
    assert main(["validate", str(p)]) == 2
    assert len(capsys.readouterr().err.strip().splitlines()) == 3


def test_unreadable_config(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.yaml")


def test_run_writes_outputs(tmp_path, capsys):
    out = tmp_path / "out"
    p = write_cfg(tmp_path, experiment="example1", n_epochs=30, seeds=[0, 1], output_dir=str(out))
    assert main(["run", str(p)]) == 0
    names = {p.name for p in out.rglob("*") if p.is_file()}
    assert names == {"C_UCB_seed0.csv", "C_UCB_seed1.csv", "MG_EUCB_seed0.csv", "MG_EUCB_seed1.csv",
                     "summary.csv", "bounds.json", "manifest.json"}
    rows = read_csv(out / "summary.csv")
    assert len(rows) == 2 * (30 + 2)          # two cover epochs on the two-agent example
    assert {r["n_seeds"] for r in rows} == {"2"}
    man = json.loads((out / "manifest.json").read_text())
    assert man["config"]["n_epochs"] == 30 and "summary.csv" in man["files"]
    assert b"\r\n" in (out / "summary.csv").read_bytes()


def test_summary_matches_runs(tmp_path):
    out = tmp_path / "out"
    p = write_cfg(tmp_path, experiment="example1", variants=["MG_EUCB"], n_epochs=20, seeds=[3, 4],
                  output_dir=str(out))
    main(["run", str(p)])
    runs = [read_csv(out / "runs" / f"MG_EUCB_seed{s}.csv") for s in (3, 4)]
    summ = read_csv(out / "summary.csv")
    for e, row in enumerate(summ):
        vals = [float(r[e]["realized"]) for r in runs]
        assert float(row["realized_mean"]) == pytest.approx(np.mean(vals))
        assert float(row["realized_se"]) == pytest.approx(np.std(vals, ddof=1) / np.sqrt(2))


def test_rerun_byte_identical(tmp_path):
    for name in ("a", "b"):
        p = write_cfg(tmp_path, experiment="synthetic", m=3, n_states=3, n_epochs=40, seeds=[0, 1],
                      schedule={"early_stop": True}, output_dir=str(tmp_path / name))
        assert main(["run", str(p)]) == 0
    assert csv_bodies(tmp_path / "a") == csv_bodies(tmp_path / "b")
    assert (tmp_path / "a" / "bounds.json").read_bytes() == (tmp_path / "b" / "bounds.json").read_bytes()


def test_workers_do_not_change_outputs(tmp_path):
    for name, w in (("one", 1), ("two", 2)):
        p = write_cfg(tmp_path, experiment="example1", n_epochs=25, seeds=[0, 1], workers=w,
                      output_dir=str(tmp_path / name))
        assert main(["run", str(p)]) == 0
    assert csv_bodies(tmp_path / "one") == csv_bodies(tmp_path / "two")


def test_flags_override_and_env_default(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "envdir"))
    assert main(["run", "--experiment", "example1", "--variants", "MG_EUCB", "--n-epochs", "5"]) == 0
    assert (tmp_path / "envdir" / "runs" / "MG_EUCB_seed0.csv").exists()


def test_bikeshare_run(tmp_path):
    out = tmp_path / "bike"
    p = write_cfg(tmp_path, experiment="bikeshare", n_stations=9, n_epochs=15, seeds=[0],
                  output_dir=str(out))
    assert main(["run", str(p)]) == 0
    rows = read_csv(out / "summary.csv")
    assert [r["mode"] for r in rows[::15]] == ["mg_eucb_plus", "full_information", "no_incentive"]
    assert all(0 <= float(r["efficiency_mean"]) <= 1 for r in rows)


def test_audit_command(tmp_path, capsys):
    assert main(["audit-matching", "--instances", "50", "--output-dir", str(tmp_path)]) == 0
    assert "below 1/3: 0" in capsys.readouterr().out
    rows = read_csv(tmp_path / "audit.csv")
    assert len(rows) == 50
    hist = read_csv(tmp_path / "ratio_histogram.csv")
    assert sum(int(r["count"]) for r in hist) == 50
    assert main(["audit-matching", "--max-edges", "99"]) == 2


def test_audit_ratio_against_enumeration():
    from conftest import brute_force_best
    from matchbandit.matching import greedy_match, random_instance
    res = audit_matching(20, seed=4, max_edges=9)
    rng = np.random.default_rng(4)
    for row in res.rows:
        # the audit and this replay draw the same instances in the same order
        while True:
            ma, mi = int(rng.integers(1, 6)), int(rng.integers(1, 6))
            if ma * mi <= 9:
                break
        inst = random_instance(rng, ma, mi, int(rng.integers(1, 4)))
        assert row[5] == pytest.approx(brute_force_best(inst))
        assert row[4] == pytest.approx(greedy_match(inst).weight(inst))


def test_ingest_command(tmp_path, capsys):
    trips = tmp_path / "trips.csv"
    trips.write_text(TRIPS)
    world = tmp_path / "world.json"
    assert main(["ingest-trips", str(trips), "-o", str(world)]) == 0
    d = json.loads(world.read_text())
    assert len(d["stations"]) == 3 and len(d["flows"]) == 3
    rates = sorted(f[2] for f in d["flows"])   # (origin, dest, rate) triples
    assert rates == [0.5, 0.5, 0.5]
    out = tmp_path / "run"
    p = write_cfg(tmp_path, experiment="bikeshare", world_json=str(world), n_epochs=5,
                  output_dir=str(out))
    assert main(["run", str(p)]) == 0


def test_ingest_command_bad_file(tmp_path, capsys):
    trips = tmp_path / "trips.csv"
    trips.write_text(TRIPS + "A,B,bad,1,2,3,4\n")
    assert main(["ingest-trips", str(trips), "-o", str(tmp_path / "w.json")]) == 1
    assert "line 5" in capsys.readouterr().err


def test_mean_se_single_seed():
    m, s = mean_se(np.array([[1.0, 2.0]]))
    assert list(m) == [1.0, 2.0] and list(s) == [0.0, 0.0]


def test_console_entry_point(tmp_path):
    p = write_cfg(tmp_path, experiment="matching-audit", n_instances=5)
    r = subprocess.run([sys.executable, "-m", "matchbandit.cli", "validate", str(p)],
                       capture_output=True, text=True)
    assert r.returncode == 0 and "matching-audit" in r.stdout
