"""Acceptance criteria, one test per criterion.

Each test prints a single ``[criterion N] PASS|FAIL ...`` line with case
counts and wall time, and asserts both correctness and the time limit.
Run with ``pytest tests/test_acceptance.py -v``.
"""

import json
import random
import time
from pathlib import Path

import pytest

from absnft import checks, ledger as L
from absnft.cli import main
from absnft.scenario import sweep_csv

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


@pytest.fixture
def verdict(capsys):
    def emit(n, ok, detail, elapsed, limit):
        in_time = limit is None or elapsed < limit
        status = "PASS" if ok and in_time else "FAIL"
        limit_txt = "" if limit is None else f" (limit {limit:g}s)"
        with capsys.disabled():
            print(f"\n[criterion {n}] {status} {detail}; {elapsed:.2f}s{limit_txt}")
        return ok, in_time
    return emit


def timed(fn):
    t = time.perf_counter()
    out = fn()
    return out, time.perf_counter() - t


def summary(results):
    return ", ".join(f"{r.name}: {r.cases - len(r.failures)}/{r.cases}" for r in results)


def first_failure(results):
    for r in results:
        if r.failures:
            return r.failures[0]
    return None


def test_criterion_01_follower_best_response(verdict):
    res, dt = timed(lambda: checks.check_follower_best_response(v_max=20, p_max=25))
    ok, in_time = verdict(1, res.ok, summary([res]), dt, 1)
    assert ok, res.failures[:3]
    assert in_time


def test_criterion_02_two_player_equilibrium(verdict):
    res, dt = timed(lambda: checks.check_two_player_se(v_max=20, m_values=(1,)))
    ok, in_time = verdict(2, res.ok and res.cases == 400, summary([res]), dt, 5)
    assert ok, res.failures[:3]
    assert in_time


def test_criterion_03_truthful_safety(verdict):
    res, dt = timed(lambda: checks.check_truthful_safety(samples=10_000, seed=0))
    ok, in_time = verdict(3, res.ok, summary([res]), dt, None)
    assert ok, res.failures[:3]


def test_criterion_04_bayesian(verdict):
    def run():
        return [checks.check_bayesian(samples=200, seed=0, v1_max=12), checks.check_degenerate_prior(v_max=20)]
    results, dt = timed(run)
    ok, in_time = verdict(4, all(r.ok for r in results), summary(results), dt, 10)
    assert ok, first_failure(results)
    assert in_time


def test_criterion_05_repeated_game(verdict):
    out, dt = timed(lambda: checks.check_repeated_equilibrium(M_values=(3, 5, 7, 9), v_max=6))
    results = list(out.values())
    ok = all(r.ok for r in results)
    detail = summary(results)
    if not ok:
        detail += f"; first counterexample {json.dumps(first_failure(results), sort_keys=True)}"
    ok, in_time = verdict(5, ok, detail, dt, 10)
    assert ok, first_failure(results)
    assert in_time


def test_criterion_06_deviation_certificate(verdict):
    res, dt = timed(lambda: checks.check_deviation_certificate(M=3, v_max=5, B=7, T=10, prune=False))
    ok, in_time = verdict(6, res.ok, summary([res]), dt, 60)
    assert ok, res.failures[:3]
    assert in_time


def test_criterion_07_multiplayer(verdict):
    def run():
        grid = checks.check_multiplayer_grid(k_max=3, m_max=4, v_max=6)
        return list(grid.values()) + [checks.check_collusion(samples=1000, seed=0, bid_max=12)]
    results, dt = timed(run)
    ok, in_time = verdict(7, all(r.ok for r in results), summary(results), dt, 60)
    assert ok, first_failure(results)
    assert in_time


ADDRS = ["A", "B", "C", "D", "E"]


def random_ledger_walk(rng, steps):
    """Random operations, checking invariants after each one."""
    s = L.LedgerState()
    for t in range(4):
        s = L.mint(s, rng.choice(ADDRS), t)
    applied = 0
    for _ in range(steps):
        t = rng.randrange(4)
        a, b = rng.choice(ADDRS), rng.choice(ADDRS)
        op = rng.randrange(4)
        try:
            if op == 0:
                s = L.securitize(s, a, b, t, rng.randint(0, 50))
            elif op == 1:
                s = L.snft_transfer(s, a, b, t, rng.randint(0, 30))
            elif op == 2:
                s = L.cnft_transfer(s, a, b, t)
            else:
                s = L.restruct(s, a, b, t)
            applied += 1
        except L.LedgerError:
            pass
        L.check_invariants(s)
    return applied


def ledger_round_trip():
    before = L.mint(L.LedgerState(), "A", 1)
    s = L.securitize(before, "A", "A", 1, 101)
    for who, n in (("B", 30), ("C", 20), ("D", 10)):
        s = L.snft_transfer(s, "A", who, 1, n)
    s = L.snft_transfer(s, "C", "B", 1, 20)
    assert L.can_trigger_repurchase(s, "A", 1) is False
    s = L.snft_transfer(s, "D", "B", 1, 10)
    assert L.can_trigger_repurchase(s, "B", 1)
    s = L.snft_transfer(s, "A", "B", 1, 41)
    s = L.restruct(s, "B", "B", 1)
    L.check_invariants(s)
    return not s.nfts[1].frozen and s.owner_of(1) == "B" and s.to_dict()["books"] == before.to_dict()["books"]


def test_criterion_08_ledger(verdict):
    def run():
        rng = random.Random(0)
        applied = sum(random_ledger_walk(rng, 200) for _ in range(100))
        return applied, ledger_round_trip()
    (applied, round_trip), dt = timed(run)
    ok, in_time = verdict(8, round_trip, f"20000 random operations ({applied} applied), invariants held; "
                                         f"round trip {'ok' if round_trip else 'broken'}", dt, 5)
    assert ok
    assert in_time


def test_criterion_09_settlement(verdict):
    res, dt = timed(lambda: checks.check_settlement(samples=1000, seed=0))
    ok, in_time = verdict(9, res.ok, summary([res]), dt, 5)
    assert ok, res.failures[:3]
    assert in_time


def test_criterion_10_determinism(verdict, tmp_path):
    def run():
        mismatched = []
        paths = sorted(SCENARIOS.glob("*.json"))
        for path in paths:
            kind = json.loads(path.read_text())["kind"]
            outs = []
            for i in range(2):
                out = tmp_path / f"{path.stem}.{i}"
                main([kind, "--config", str(path), "--out", str(out), "--seed", "12345"])
                outs.append(out.read_bytes())
            if outs[0] != outs[1]:
                mismatched.append(path.name)
        cfg = {"kind": "bayes", "ranges": {"count": 20}}
        if sweep_csv(cfg, seed=99) != sweep_csv(cfg, seed=99):
            mismatched.append("bayes sweep")
        return len(paths) + 1, mismatched
    (n, mismatched), dt = timed(run)
    ok, _ = verdict(10, not mismatched, f"{n - len(mismatched)}/{n} reports byte-identical on re-run", dt, None)
    assert ok, mismatched
