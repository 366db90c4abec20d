"""Scenario configs: validation, dispatch and report assembly.

Configs and reports are JSON holding only integers and ``[num, den]``
pairs.  Money in reports is given in half units under ``*_half`` keys.
Sweeps produce CSV with a fixed column order per scenario kind.
"""

from __future__ import annotations

import csv
import io
import itertools
import json
import random
from fractions import Fraction
from typing import Any, Optional

import jsonschema

from absnft import __version__, bayesian, checks, multiplayer, repeated, settlement, two_player
from absnft.money import to_pair
from absnft.oracle import bounded_deviation_search, verify_nash

KINDS = ("solve2p", "bayes", "repeated", "multi", "settle", "verify")


class MalformedConfig(ValueError):
    pass


class VerificationFailed(Exception):
    def __init__(self, report: dict):
        super().__init__("verification failed")
        self.report = report


class RangeTooLarge(MalformedConfig):
    pass


_int = {"type": "integer"}
_pos = {"type": "integer", "minimum": 1}
_nonneg = {"type": "integer", "minimum": 0}
_pair = {"type": "array", "items": {"type": ["integer", "string"]}, "minItems": 2, "maxItems": 2}
_money = {"oneOf": [_int, _pair]}
_range = {"type": "array", "items": _int, "minItems": 2, "maxItems": 2}
_holding = {
    "type": "object",
    "properties": {"index": _pos, "m": _pos, "v": _pos},
    "required": ["index", "m", "v"],
    "additionalProperties": False,
}
_dist = {
    "type": "object",
    "properties": {"support": {"type": "array", "items": _pos, "minItems": 1},
                   "probs": {"type": "array", "items": _pair, "minItems": 1}},
    "required": ["support", "probs"],
    "additionalProperties": False,
}
_strategy = {"oneOf": [
    {"enum": ["equilibrium", "truthful"]},
    {"type": "object", "properties": {"constant": _nonneg}, "required": ["constant"], "additionalProperties": False},
]}

SCHEMAS: dict[str, dict] = {
    "solve2p": {
        "type": "object",
        "properties": {"kind": {"const": "solve2p"}, "v0": _pos, "v1": _pos, "m1": _pos,
                       "ranges": {"type": "object", "properties": {"v0": _range, "v1": _range},
                                  "required": ["v0", "v1"], "additionalProperties": False},
                       "max_points": _pos},
        "required": ["kind"],
        "additionalProperties": False,
    },
    "bayes": {
        "type": "object",
        "properties": {"kind": {"const": "bayes"}, "v1": _pos, "m1": _pos, "dist": _dist, "actual_v0": _pos,
                       "verbose": {"type": "boolean"},
                       "ranges": {"type": "object",
                                  "properties": {"count": _nonneg, "max_support": _pos, "max_value": _pos,
                                                 "v1": _range},
                                  "required": ["count"], "additionalProperties": False},
                       "max_points": _pos},
        "required": ["kind"],
        "additionalProperties": False,
    },
    "repeated": {
        "type": "object",
        "properties": {"kind": {"const": "repeated"}, "v0": _pos, "v1": _pos, "M": _pos,
                       "initial": {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2},
                       "strategies": {"type": "array", "items": _strategy, "minItems": 2, "maxItems": 2},
                       "max_rounds": _pos,
                       "ranges": {"type": "object",
                                  "properties": {"v0": _range, "v1": _range, "M": {"type": "array", "items": _pos}},
                                  "required": ["v0", "v1", "M"], "additionalProperties": False},
                       "max_points": _pos},
        "required": ["kind"],
        "additionalProperties": False,
    },
    "multi": {
        "type": "object",
        "properties": {"kind": {"const": "multi"}, "v0": _pos, "m0": _pos,
                       "holdings": {"type": "array", "items": _holding, "minItems": 1},
                       "deviations": {"type": "array",
                                      "items": {"type": "object", "additionalProperties": _nonneg}}},
        "required": ["kind", "v0", "holdings"],
        "additionalProperties": False,
    },
    "settle": {
        "type": "object",
        "properties": {
            "kind": {"const": "settle"}, "p0": _nonneg, "m0": _pos, "follower_budget": _money,
            "deadline": _nonneg,
            "leaders": {"type": "array", "minItems": 1, "items": {
                "type": "object",
                "properties": {"index": _pos, "bid": _nonneg, "units": _pos, "budget": _money,
                               "choice": {"enum": ["pay", "option"]}, "option_price": _int,
                               "fallback_option_price": _int},
                "required": ["index", "bid", "units", "budget"],
                "additionalProperties": False}},
            "buyers": {"type": "object", "additionalProperties": _money},
            "acceptances": {"type": "array", "items": {
                "type": "object",
                "properties": {"tick": _nonneg, "buyer": {"type": "string"}, "holder": _pos},
                "required": ["tick", "buyer", "holder"], "additionalProperties": False}},
            "random": {"type": "object", "properties": {"count": _nonneg}, "required": ["count"],
                       "additionalProperties": False},
        },
        "required": ["kind"],
        "additionalProperties": False,
    },
    "verify": {
        "type": "object",
        "properties": {
            "kind": {"const": "verify"},
            "target": {"enum": ["2p", "multi", "repeated", "grid"]},
            "v0": _pos, "v1": _pos, "m1": _pos, "M": _pos,
            "initial": {"type": "array", "items": _pos, "minItems": 2, "maxItems": 2},
            "horizon": _nonneg,
            "profile": {"type": "object",
                        "properties": {"p0": _nonneg, "p1": _nonneg,
                                       "leader_bids": {"type": "object", "additionalProperties": _nonneg}},
                        "additionalProperties": False},
            "holdings": {"type": "array", "items": _holding, "minItems": 1},
            "grid": {"type": "string"},
        },
        "required": ["kind", "target"],
        "additionalProperties": False,
    },
}


def load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except json.JSONDecodeError as exc:
        raise MalformedConfig(f"{path}: invalid JSON: {exc}") from exc
    validate(cfg)
    return cfg


def validate(cfg: Any) -> None:
    if not isinstance(cfg, dict) or cfg.get("kind") not in SCHEMAS:
        raise MalformedConfig(f"config needs a 'kind' in {KINDS}")
    try:
        jsonschema.validate(cfg, SCHEMAS[cfg["kind"]])
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise MalformedConfig(f"{where}: {exc.message}") from None
    _semantic(cfg)


def _need(cfg: dict, *keys: str) -> None:
    missing = [k for k in keys if k not in cfg]
    if missing:
        raise MalformedConfig(f"{cfg['kind']}: missing {', '.join(missing)}")


def _semantic(cfg: dict) -> None:
    kind = cfg["kind"]
    sweeping = "ranges" in cfg or "random" in cfg
    if kind == "solve2p" and not sweeping:
        _need(cfg, "v0", "v1")
    elif kind == "bayes" and not sweeping:
        _need(cfg, "v1", "dist")
    elif kind == "repeated":
        if sweeping:
            if any(M % 2 == 0 for M in cfg["ranges"]["M"]):
                raise MalformedConfig("repeated: every M must be odd")
        else:
            _need(cfg, "v0", "v1", "M")
            if cfg["M"] % 2 == 0:
                raise MalformedConfig(f"repeated: M must be odd, got {cfg['M']}")
            init = cfg.get("initial")
            if init is not None and sum(init) != cfg["M"]:
                raise MalformedConfig("repeated: initial holdings must sum to M")
    elif kind == "multi":
        if "m0" in cfg:
            outside = sum(h["m"] for h in cfg["holdings"])
            if 2 * cfg["m0"] <= cfg["m0"] + outside:
                raise MalformedConfig("multi: follower must hold more than half of the supply")
    elif kind == "settle" and not sweeping:
        _need(cfg, "p0", "m0", "follower_budget", "leaders")
        outside = sum(l["units"] for l in cfg["leaders"])
        if 2 * cfg["m0"] <= cfg["m0"] + outside:
            raise MalformedConfig("settle: follower must hold more than half of the supply")
    elif kind == "verify":
        target = cfg["target"]
        if target == "2p":
            _need(cfg, "v0", "v1")
        elif target == "multi":
            _need(cfg, "v0", "holdings")
        elif target == "repeated":
            _need(cfg, "v0", "v1", "M")
            if cfg["M"] % 2 == 0:
                raise MalformedConfig("verify: M must be odd")
    if "dist" in cfg:
        parse_dist(cfg["dist"])


def parse_dist(d: dict) -> bayesian.DiscreteValueDistribution:
    try:
        return bayesian.DiscreteValueDistribution.from_pairs(d["support"], d["probs"])
    except (ValueError, ZeroDivisionError) as exc:
        raise MalformedConfig(f"dist: {exc}") from None


def half_units(x) -> int:
    """Config money (int units or ``[num, den]``) to half units."""
    f = Fraction(x) if isinstance(x, int) else Fraction(int(x[0]), int(x[1]))
    h = 2 * f
    if h.denominator != 1:
        raise MalformedConfig(f"amount {x} is not a multiple of one half")
    return int(h)


def _strategy(spec, v0: int, v1: int) -> repeated.Strategy:
    if spec == "equilibrium":
        return repeated.equilibrium_strategy(v0, v1)
    if spec == "truthful":
        return repeated.truthful_strategy(v0, v1)
    return repeated.constant_strategy(spec["constant"])


def _holdings(items) -> tuple[multiplayer.Holding, ...]:
    hs = tuple(multiplayer.Holding(h["index"], h["m"], h["v"]) for h in items)
    try:
        multiplayer.validate_holdings(hs)
    except ValueError as exc:
        raise MalformedConfig(f"holdings: {exc}") from None
    return hs


# --- runners ---------------------------------------------------------------------

def run_solve2p(cfg: dict, seed: int, bound: Optional[int]) -> dict:
    v0, v1, m1 = cfg["v0"], cfg["v1"], cfg.get("m1", 1)
    se = two_player.solve_se(v0, v1, m1)
    B = bound if bound is not None else max(v0, v1) + 2
    stack, nash = checks.verify_two_player_profile(v0, v1, m1, se.p0, se.p1, B)
    eq = se.to_dict()
    eq["u0"], eq["u1"] = to_pair(se.u0), to_pair(se.u1)
    return {"equilibrium": eq, "bound": B, "stackelberg": stack.to_dict(), "nash": nash.to_dict()}


def run_bayes(cfg: dict, seed: int, bound: Optional[int]) -> dict:
    dist = parse_dist(cfg["dist"])
    v1, m1 = cfg["v1"], cfg.get("m1", 1)
    bid = bayesian.optimal_bayesian_leader_bid(v1, dist, m1)
    out = {"leader_bid": bid,
           "expected_utility_half": _frac(bayesian.expected_leader_utility(bid, v1, dist, m1))}
    if cfg.get("verbose"):
        out["tied_maximizers"] = bayesian.bayesian_argmax_set(v1, dist, m1)
        out["expected_by_candidate_half"] = {
            str(b): _frac(bayesian.expected_leader_utility(b, v1, dist, m1)) for b in bayesian.candidate_bids(dist)}
    if "actual_v0" in cfg:
        out["equilibrium"] = bayesian.bayesian_se(cfg["actual_v0"], v1, dist, m1).to_dict()
    return out


def _default_initial(M: int) -> tuple[int, int]:
    return ((M + 1) // 2, (M - 1) // 2)


def run_repeated(cfg: dict, seed: int, bound: Optional[int]) -> dict:
    v0, v1, M = cfg["v0"], cfg["v1"], cfg["M"]
    initial = tuple(cfg.get("initial") or _default_initial(M))
    specs = cfg.get("strategies", ["equilibrium", "equilibrium"])
    if "equilibrium" in specs and v0 == v1:
        raise MalformedConfig("repeated: equilibrium strategy needs v0 != v1")
    strats = [_strategy(s, v0, v1) for s in specs]
    trace = repeated.simulate(v0, v1, M, initial, strats[0], strats[1], cfg.get("max_rounds"))
    return {"trace": trace.to_dict()}


def run_multi(cfg: dict, seed: int, bound: Optional[int]) -> dict:
    v0 = cfg["v0"]
    hs = _holdings(cfg["holdings"])
    sol = multiplayer.solve_multiplayer_se(v0, hs)
    bids = [sol.profile.leader_bids[h.index] for h in hs]
    B = bound if bound is not None else max(bids + [v0]) + 2
    verdict = checks.verify_multiplayer_profile(v0, hs, bids, B)
    out = {"equilibrium": sol.to_dict(), "bound": B, "stackelberg": verdict.to_dict(), "coalitions": []}
    for dev in cfg.get("deviations", []):
        try:
            w = multiplayer.check_collusion_resistance(v0, hs, {int(k): b for k, b in dev.items()})
        except (multiplayer.EmptyCoalition, ValueError) as exc:
            out["coalitions"].append({"deviation": dev, "error": str(exc)})
            continue
        out["coalitions"].append(w.to_dict())
    return out


def _settlement_instance(cfg: dict) -> settlement.SettlementInstance:
    leaders = []
    for l in cfg["leaders"]:
        choice = settlement.Pay() if l.get("choice", "option") == "pay" else settlement.PostOption(l.get("option_price", 0))
        leaders.append(settlement.LeaderSpec(
            settlement.BudgetedParticipant(l["index"], half_units(l["budget"]), l["bid"], l["units"]),
            choice, l.get("fallback_option_price", 0)))
    buyers = {k: half_units(v) for k, v in cfg.get("buyers", {}).items()}
    acc = tuple(settlement.Acceptance(a["tick"], a["buyer"], a["holder"]) for a in cfg.get("acceptances", []))
    return settlement.SettlementInstance(cfg["p0"], cfg["m0"], half_units(cfg["follower_budget"]),
                                         tuple(leaders), buyers, acc, cfg.get("deadline", 10))


def run_settle(cfg: dict, seed: int, bound: Optional[int]) -> dict:
    if "random" in cfg:
        res = checks.CheckResult("settlement conserves money and assigns every unit")
        rng = random.Random(seed)
        for s in range(cfg["random"]["count"]):
            inst = checks.random_settlement(rng)
            rep = settlement.settle(inst)
            res.cases += 1
            bad = checks.settlement_violations(inst, rep)
            if bad:
                res.fail({"sample": s, "problems": bad})
        out = {"checks": [res.to_dict()]}
        if not res.ok:
            raise VerificationFailed(out)
        return out
    inst = _settlement_instance(cfg)
    try:
        rep = settlement.settle(inst)
    except settlement.SettlementError as exc:
        raise MalformedConfig(f"settle: {exc}") from None
    out = rep.to_dict()
    out["conserved"] = rep.total.balance() == 0
    return out


def run_verify(cfg: dict, seed: int, bound: Optional[int], grid: Optional[str] = None) -> dict:
    target = cfg["target"]
    if target == "grid" or grid:
        name = grid or cfg.get("grid")
        if name not in checks.GRIDS:
            raise MalformedConfig(f"unknown grid {name!r}; choose from {sorted(checks.GRIDS)}")
        results = checks.GRIDS[name](seed, bound)
        out = {"grid": name, "checks": [r.to_dict() for r in results]}
        if not all(r.ok for r in results):
            raise VerificationFailed(out)
        return out
    if target == "2p":
        v0, v1, m1 = cfg["v0"], cfg["v1"], cfg.get("m1", 1)
        if "profile" in cfg:
            prof = cfg["profile"]
            p0, p1 = prof["p0"], prof["p1"]
        else:
            se = two_player.solve_se(v0, v1, m1)
            p0, p1 = se.p0, se.p1
        B = bound if bound is not None else max(v0, v1, p0, p1) + 2
        stack, nash = checks.verify_two_player_profile(v0, v1, m1, p0, p1, B)
        out = {"profile": {"p0": p0, "p1": p1}, "bound": B,
               "stackelberg": stack.to_dict(), "nash": nash.to_dict()}
        if not (stack and nash):
            raise VerificationFailed(out)
        return out
    if target == "multi":
        v0 = cfg["v0"]
        hs = _holdings(cfg["holdings"])
        if "profile" in cfg and "leader_bids" in cfg["profile"]:
            given = {int(k): b for k, b in cfg["profile"]["leader_bids"].items()}
            bids = [given.get(h.index, multiplayer.leader_bid_star(v0, h.v)) for h in hs]
        else:
            bids = [multiplayer.leader_bid_star(v0, h.v) for h in hs]
        B = bound if bound is not None else max(bids + [v0]) + 2
        verdict = checks.verify_multiplayer_profile(v0, hs, bids, B)
        out = {"leader_bids": {str(h.index): b for h, b in zip(hs, bids)}, "bound": B,
               "stackelberg": verdict.to_dict()}
        if not verdict:
            raise VerificationFailed(out)
        return out
    v0, v1, M = cfg["v0"], cfg["v1"], cfg["M"]
    if v0 == v1:
        raise MalformedConfig("verify repeated: values must differ")
    initial = tuple(cfg.get("initial") or _default_initial(M))
    strat = repeated.equilibrium_strategy(v0, v1)
    B = bound if bound is not None else max(v0, v1) + 2
    T = cfg.get("horizon", 10)
    try:
        dev = bounded_deviation_search(v0, v1, M, initial, (strat, strat), T, B)
    except ValueError as exc:
        raise MalformedConfig(str(exc)) from None
    out = {"bound": B, "horizon": T, "deviation": None if dev is None else dev.to_dict()}
    if dev is not None:
        raise VerificationFailed(out)
    return out


RUNNERS = {
    "solve2p": run_solve2p,
    "bayes": run_bayes,
    "repeated": run_repeated,
    "multi": run_multi,
    "settle": run_settle,
}


def _frac(x: Fraction):
    return x.numerator if x.denominator == 1 else [x.numerator, x.denominator]


def build_report(cfg: dict, results: dict, seed: int) -> dict:
    return {"artifact_version": __version__, "kind": cfg["kind"], "seed": seed,
            "scenario": cfg, "results": results}


def run_scenario(cfg: dict, seed: int = 0, bound: Optional[int] = None, grid: Optional[str] = None) -> dict:
    """Run a validated single-instance config and return the report dict.

    Raises :class:`VerificationFailed` (carrying the report) when an
    invariant is falsified.
    """
    kind = cfg["kind"]
    if kind == "verify":
        try:
            results = run_verify(cfg, seed, bound, grid)
        except VerificationFailed as exc:
            raise VerificationFailed(build_report(cfg, exc.report, seed)) from None
        return build_report(cfg, results, seed)
    try:
        results = RUNNERS[kind](cfg, seed, bound)
    except VerificationFailed as exc:
        raise VerificationFailed(build_report(cfg, exc.report, seed)) from None
    return build_report(cfg, results, seed)


def dumps_report(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2) + "\n"


# --- sweeps ----------------------------------------------------------------------

SWEEP_COLUMNS = {
    "solve2p": ["v0", "v1", "m1", "p0", "p1", "u0_half", "u1_half", "stackelberg_ok", "nash_ok"],
    "bayes": ["sample", "v1", "support", "probs", "closed_form", "oracle", "match"],
    "repeated": ["M", "v0", "v1", "m0_initial", "m1_initial", "terminal", "rounds", "u0_half", "u1_half"],
}


def _span(r: list[int]) -> range:
    return range(r[0], r[1] + 1)


def sweep_rows(cfg: dict, seed: int = 0) -> tuple[list[str], list[list]]:
    kind = cfg["kind"]
    if kind not in SWEEP_COLUMNS or "ranges" not in cfg:
        raise MalformedConfig(f"{kind}: sweeps need a 'ranges' block (supported: {sorted(SWEEP_COLUMNS)})")
    limit = cfg.get("max_points", 100_000)
    rng = cfg["ranges"]
    rows: list[list] = []
    if kind == "solve2p":
        m1 = cfg.get("m1", 1)
        pts = list(itertools.product(_span(rng["v0"]), _span(rng["v1"])))
        _guard(len(pts), limit)
        for v0, v1 in pts:
            if v0 < 1 or v1 < 1:
                raise MalformedConfig("values must be >= 1")
            se = two_player.solve_se(v0, v1, m1)
            stack, nash = checks.verify_two_player_profile(v0, v1, m1, se.p0, se.p1, max(v0, v1) + 2)
            rows.append([v0, v1, m1, se.p0, se.p1, se.u0, se.u1, int(stack.ok), int(nash.ok)])
    elif kind == "bayes":
        count = rng["count"]
        v1s = _span(rng.get("v1", [1, 12]))
        _guard(count * len(v1s), limit)
        m1 = cfg.get("m1", 1)
        r = random.Random(seed)
        for s in range(count):
            dist = checks.random_distribution(r, rng.get("max_support", 6), rng.get("max_value", 12))
            for v1 in v1s:
                got = bayesian.optimal_bayesian_leader_bid(v1, dist, m1)
                want = checks.oracle_bayesian_argmax(v1, dist, m1)[0]
                rows.append([s, v1, " ".join(map(str, dist.support)),
                             " ".join(f"{p.numerator}/{p.denominator}" for p in dist.probs),
                             got, want, int(got == want)])
    else:
        pts = [(M, v0, v1, m0) for M in rng["M"] for v0 in _span(rng["v0"]) for v1 in _span(rng["v1"])
               if v0 != v1 for m0 in range(1, M)]
        _guard(len(pts), limit)
        for M, v0, v1, m0 in pts:
            strat = repeated.equilibrium_strategy(v0, v1)
            t = repeated.simulate(v0, v1, M, (m0, M - m0), strat, strat)
            rows.append([M, v0, v1, m0, M - m0, t.terminal.value, len(t.rounds), t.total_u0, t.total_u1])
    return SWEEP_COLUMNS[kind], rows


def _guard(n: int, limit: int) -> None:
    if n > limit:
        raise RangeTooLarge(f"sweep has {n} points, limit is {limit}")


def sweep_csv(cfg: dict, seed: int = 0) -> str:
    header, rows = sweep_rows(cfg, seed)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()
