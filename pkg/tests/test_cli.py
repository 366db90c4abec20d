import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from absnft import __version__
from absnft.cli import main, run
from absnft.scenario import RangeTooLarge, half_units, sweep_csv

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def write(tmp_path, cfg, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def report(tmp_path, cfg, **kw):
    out = tmp_path / "out.json"
    code = run(write(tmp_path, cfg), str(out), **kw)
    return code, json.loads(out.read_text()) if out.exists() else None


def test_solve2p_report(tmp_path):
    code, rep = report(tmp_path, {"kind": "solve2p", "v0": 4, "v1": 2, "m1": 1})
    assert code == 0
    eq = rep["results"]["equilibrium"]
    assert (eq["p0"], eq["p1"], eq["u1"]) == (4, 4, [2, 1])
    assert rep["artifact_version"] == __version__
    assert rep["seed"] == 0
    assert rep["scenario"]["v0"] == 4


def test_repeated_report(tmp_path):
    code, rep = report(tmp_path, {"kind": "repeated", "v0": 2, "v1": 5, "M": 3})
    trace = rep["results"]["trace"]
    assert code == 0 and len(trace["rounds"]) == 2 and trace["terminal"] == "z1"


def test_bayes_report(tmp_path):
    cfg = {"kind": "bayes", "v1": 3, "verbose": True, "actual_v0": 4,
           "dist": {"support": [2, 4], "probs": [["1", "2"], ["1", "2"]]}}
    code, rep = report(tmp_path, cfg)
    res = rep["results"]
    assert code == 0
    assert res["leader_bid"] == 3 and res["tied_maximizers"] == [3, 4]
    assert res["expected_utility_half"] == [1, 2]
    assert res["equilibrium"]["p0"] == 3


def test_multi_report(tmp_path):
    cfg = {"kind": "multi", "v0": 5, "holdings": [{"index": 1, "m": 4, "v": 3}, {"index": 2, "m": 2, "v": 7}],
           "deviations": [{"1": 4}, {"1": 5}]}
    code, rep = report(tmp_path, cfg)
    res = rep["results"]
    assert code == 0 and res["stackelberg"]["ok"]
    assert res["coalitions"][0]["resistant"] is True
    assert "error" in res["coalitions"][1]


def test_verify_perturbed_profile_exits_2(tmp_path):
    cfg = {"kind": "verify", "target": "2p", "v0": 4, "v1": 2, "profile": {"p0": 4, "p1": 5}}
    code, rep = report(tmp_path, cfg)
    assert code == 2
    assert rep["results"]["nash"]["witness"] is not None


def test_verify_repeated_and_grid(tmp_path):
    code, rep = report(tmp_path, {"kind": "verify", "target": "repeated", "v0": 2, "v1": 5, "M": 3})
    assert code == 0 and rep["results"]["deviation"] is None
    code, rep = report(tmp_path, {"kind": "verify", "target": "grid", "grid": "leader_bid"})
    assert code == 0 and rep["results"]["checks"][0]["ok"]


@pytest.mark.parametrize("cfg", [
    {"kind": "repeated", "v0": 2, "v1": 5, "M": 4},
    {"kind": "bayes", "v1": 3, "dist": {"support": [2, 4], "probs": [[1, 2], [1, 3]]}},
    {"kind": "multi", "v0": 3, "m0": 2, "holdings": [{"index": 1, "m": 2, "v": 1}]},
    {"kind": "settle", "p0": 1, "m0": 1, "follower_budget": 5,
     "leaders": [{"index": 1, "bid": 1, "units": 1, "budget": 0}]},
    {"kind": "solve2p", "v0": 0, "v1": 1},
    {"kind": "solve2p", "v0": 1},
    {"kind": "nope"},
    {"kind": "solve2p", "v0": 1, "v1": 1, "extra": 1},
    {"kind": "verify", "target": "grid", "grid": "missing"},
])
def test_invalid_configs_exit_1(tmp_path, cfg):
    assert run(write(tmp_path, cfg), str(tmp_path / "o.json")) == 1


def test_io_failures_exit_1(tmp_path):
    assert run(str(tmp_path / "missing.json")) == 1
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert run(str(bad)) == 1
    cfg = write(tmp_path, {"kind": "solve2p", "v0": 1, "v1": 1})
    assert run(cfg, str(tmp_path / "no" / "dir" / "o.json")) == 1


def test_subcommand_must_match_kind(tmp_path):
    cfg = write(tmp_path, {"kind": "solve2p", "v0": 1, "v1": 1})
    assert main(["bayes", "--config", cfg, "--out", str(tmp_path / "o")]) == 1
    assert main(["solve2p", "--config", cfg, "--out", str(tmp_path / "o")]) == 0


def test_solve2p_sweep():
    text = sweep_csv({"kind": "solve2p", "ranges": {"v0": [1, 12], "v1": [1, 12]}})
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 144
    assert {r["u0_half"] for r in rows} == {"0"}
    assert {r["stackelberg_ok"] for r in rows} == {"1"}


def test_bayes_sweep_matches_oracle():
    text = sweep_csv({"kind": "bayes", "ranges": {"count": 50}}, seed=4)
    rows = list(csv.DictReader(io.StringIO(text)))
    assert len(rows) == 50 * 12
    assert all(r["closed_form"] == r["oracle"] for r in rows)


def test_empty_range_gives_header_only():
    text = sweep_csv({"kind": "solve2p", "ranges": {"v0": [3, 2], "v1": [1, 4]}})
    assert text == "v0,v1,m1,p0,p1,u0_half,u1_half,stackelberg_ok,nash_ok\n"


def test_range_guard():
    with pytest.raises(RangeTooLarge):
        sweep_csv({"kind": "solve2p", "max_points": 10, "ranges": {"v0": [1, 5], "v1": [1, 5]}})


def test_repeated_sweep_rows():
    text = sweep_csv({"kind": "repeated", "ranges": {"v0": [1, 2], "v1": [1, 2], "M": [3]}})
    assert text.splitlines()[1:] == ["3,1,2,1,2,z1,1,0,2", "3,1,2,2,1,z1,2,0,3",
                                     "3,2,1,1,2,z0,2,3,0", "3,2,1,2,1,z0,1,2,0"]


def test_half_units():
    assert half_units(3) == 6
    assert half_units([5, 2]) == 5
    with pytest.raises(ValueError):
        half_units([1, 3])


@pytest.mark.parametrize("path", sorted(SCENARIOS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_scenarios_are_deterministic(tmp_path, path):
    kind = json.loads(path.read_text())["kind"]
    outs = []
    for i in range(2):
        out = tmp_path / f"{i}.out"
        code = main([kind, "--config", str(path), "--out", str(out), "--seed", "7"])
        assert code in (0, 2)
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_console_entry_point(tmp_path):
    cfg = write(tmp_path, {"kind": "solve2p", "v0": 4, "v1": 5})
    proc = subprocess.run([sys.executable, "-m", "absnft.cli", "solve2p", "--config", cfg],
                          capture_output=True, text=True, check=True)
    assert json.loads(proc.stdout)["results"]["equilibrium"]["p1"] == 5
