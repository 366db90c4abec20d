"""Grid and sampled checks of closed forms against the brute-force oracle.

Each ``check_*`` function returns a :class:`CheckResult` listing every
counterexample found.  Utilities on the oracle side are evaluated with
:func:`_deal` below, written directly from the deal rule, so a bug in a
solver's own payoff helpers cannot hide itself.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional

from absnft import bayesian, multiplayer, repeated, settlement, two_player
from absnft.oracle import bounded_deviation_search, brute_best_response, verify_nash, verify_stackelberg


@dataclass
class CheckResult:
    name: str
    cases: int = 0
    failures: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def fail(self, item) -> None:
        self.failures.append(item)

    def to_dict(self, limit: int = 20) -> dict:
        return {"name": self.name, "cases": self.cases, "ok": self.ok,
                "failure_count": len(self.failures),
                "failures": [_jsonable(f) for f in self.failures[:limit]]}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, Fraction):
        return [x.numerator, x.denominator]
    if hasattr(x, "to_dict"):
        return x.to_dict()
    return x


def _deal(m: int, v0: int, vi: int, p0: int, pi: int) -> tuple[int, int]:
    """(follower, leader) utilities in half units for one deal."""
    if p0 >= pi:
        return m * (2 * v0 - p0 - pi), m * (p0 + pi - 2 * vi)
    return m * (p0 + pi - 1 - 2 * v0), m * (2 * vi - p0 - pi)


# --- two player ----------------------------------------------------------------

def check_follower_best_response(v_max: int = 20, p_max: int = 25, m1: int = 1) -> CheckResult:
    res = CheckResult("follower best response vs brute force")
    for v0 in range(1, v_max + 1):
        for p1 in range(0, p_max + 1):
            res.cases += 1
            B = max(v0, p1) + 2
            argmax = brute_best_response(lambda q: _deal(m1, v0, 1, q, p1)[0], B)
            br = two_player.best_response_follower(p1, v0)
            best = _deal(m1, v0, 1, argmax[0], p1)[0]
            if br not in argmax or _deal(m1, v0, 1, br, p1)[0] != best:
                res.fail({"v0": v0, "p1": p1, "closed_form": br, "argmax": argmax})
    return res


def check_optimal_leader_bid(v_max: int = 20, m1: int = 1) -> CheckResult:
    res = CheckResult("leader bid vs brute force")
    for v0 in range(1, v_max + 1):
        for v1 in range(1, v_max + 1):
            res.cases += 1
            B = max(v0, v1) + 2

            def anticipated(p1):
                q = brute_best_response(lambda p0: _deal(m1, v0, v1, p0, p1)[0], B + 1)[0]
                return _deal(m1, v0, v1, q, p1)[1]

            argmax = brute_best_response(anticipated, B)
            got = two_player.optimal_leader_bid(v0, v1)
            if got not in argmax:
                res.fail({"v0": v0, "v1": v1, "closed_form": got, "argmax": argmax})
    return res


def verify_two_player_profile(v0: int, v1: int, m1: int, p0: int, p1: int, B: int):
    """Stackelberg and Nash verdicts for a two-player profile."""
    stack = verify_stackelberg(
        [p1],
        lambda bids: two_player.best_response_follower(bids[0], v0),
        lambda q, bids: _deal(m1, v0, v1, q, bids[0])[0],
        lambda pos, q, bids: _deal(m1, v0, v1, q, bids[0])[1],
        B, follower_bid=p0,
    )
    nash = verify_nash([p0, p1], lambda i, prof: _deal(m1, v0, v1, prof[0], prof[1])[i], B)
    return stack, nash


def check_two_player_se(v_max: int = 20, m_values: Iterable[int] = (1, 3), bound: Optional[int] = None) -> CheckResult:
    res = CheckResult("two-player equilibrium: Stackelberg, Nash, zero follower utility")
    for m1 in m_values:
        for v0 in range(1, v_max + 1):
            for v1 in range(1, v_max + 1):
                res.cases += 1
                se = two_player.solve_se(v0, v1, m1)
                B = bound if bound is not None else max(v0, v1) + 2
                stack, nash = verify_two_player_profile(v0, v1, m1, se.p0, se.p1, B)
                if not stack or not nash or se.u0 != 0:
                    res.fail({"v0": v0, "v1": v1, "m1": m1, "profile": se.to_dict(),
                              "stackelberg": stack.to_dict(), "nash": nash.to_dict()})
    return res


# --- truthful safety -------------------------------------------------------------

def check_truthful_safety(samples: int = 10_000, seed: int = 0) -> CheckResult:
    res = CheckResult("truthful bidding never yields negative utility")
    rng = random.Random(seed)
    for _ in range(samples):
        m = rng.randint(1, 20)
        v = rng.randint(1, 30)
        other_v = rng.randint(1, 30)
        other_bid = rng.randint(0, 40)
        res.cases += 1
        u_follower = _deal(m, v, other_v, v, other_bid)[0]
        u_leader = _deal(m, other_v, v, other_bid, v)[1]
        if u_follower < 0 or u_leader < 0:
            res.fail({"kind": "single", "m": m, "v": v, "opposing_bid": other_bid})
        M = 2 * rng.randint(1, 25) + 1
        m0 = rng.randint(1, M - 1)
        state = repeated.RepeatedState(m0, M - m0)
        v0, v1 = rng.randint(1, 30), rng.randint(1, 30)
        for player in (0, 1):
            res.cases += 1
            p0 = v0 if player == 0 else other_bid
            p1 = v1 if player == 1 else other_bid
            u = repeated.round_utilities(state, v0, v1, p0, p1)[player]
            if u < 0:
                res.fail({"kind": "repeated", "state": state.split, "v0": v0, "v1": v1,
                          "player": player, "opposing_bid": other_bid})
    return res


# --- bayesian --------------------------------------------------------------------

def random_distribution(rng: random.Random, max_support: int = 6, max_value: int = 12) -> bayesian.DiscreteValueDistribution:
    k = rng.randint(1, max_support)
    support = sorted(rng.sample(range(1, max_value + 1), k))
    weights = [rng.randint(1, 10) for _ in range(k)]
    total = sum(weights)
    return bayesian.DiscreteValueDistribution(tuple(support), tuple(Fraction(w, total) for w in weights))


def oracle_expected_utility(p1: int, v1: int, dist: bayesian.DiscreteValueDistribution, m1: int) -> Fraction:
    """Expected leader utility via a brute-force follower response per realised value."""
    total = Fraction(0)
    B = max(max(dist.support), p1) + 2
    for v0, prob in dist.items():
        q = brute_best_response(lambda p0: _deal(m1, v0, v1, p0, p1)[0], B)[0]
        total += prob * _deal(m1, v0, v1, q, p1)[1]
    return total


def oracle_bayesian_argmax(v1: int, dist: bayesian.DiscreteValueDistribution, m1: int = 1) -> list[int]:
    B = max(dist.support) + 2
    return brute_best_response(lambda p1: oracle_expected_utility(p1, v1, dist, m1), B)


def check_bayesian(samples: int = 200, seed: int = 0, v1_max: int = 12, m1: int = 1) -> CheckResult:
    res = CheckResult("bayesian leader bid vs exhaustive expected-utility argmax")
    rng = random.Random(seed)
    for s in range(samples):
        dist = random_distribution(rng)
        cands = set(bayesian.candidate_bids(dist))
        for v1 in range(1, v1_max + 1):
            res.cases += 1
            got = bayesian.optimal_bayesian_leader_bid(v1, dist, m1)
            argmax = oracle_bayesian_argmax(v1, dist, m1)
            if got != argmax[0] or got not in cands:
                res.fail({"sample": s, "dist": dist.to_dict(), "v1": v1, "closed_form": got, "oracle": argmax})
    return res


def check_degenerate_prior(v_max: int = 20, m1: int = 1) -> CheckResult:
    res = CheckResult("point prior reproduces the complete-information equilibrium")
    for v0 in range(1, v_max + 1):
        for v1 in range(1, v_max + 1):
            res.cases += 1
            b = bayesian.bayesian_se(v0, v1, bayesian.DiscreteValueDistribution.point(v0), m1)
            se = two_player.solve_se(v0, v1, m1)
            stack, nash = verify_two_player_profile(v0, v1, m1, b.p0, b.p1, max(v0, v1) + 2)
            if b != se or not stack or not nash or b.u0 != 0:
                res.fail({"v0": v0, "v1": v1, "bayes": b.to_dict(), "complete": se.to_dict()})
    return res


# --- repeated --------------------------------------------------------------------

def check_repeated_equilibrium(M_values: Iterable[int] = (3, 5, 7, 9), v_max: int = 6) -> dict[str, CheckResult]:
    """Equilibrium play over every odd supply, value pair and initial split.

    The winner identity is checked literally, as the value margin times the
    winner's total unit gain from the initial split.
    """
    out = {
        "terminal": CheckResult("terminates at the higher-valued player's terminal state"),
        "loser_zero": CheckResult("loser total utility is exactly zero"),
        "winner_identity": CheckResult("winner total equals unit gain from initial split times value margin"),
        "welfare_bound": CheckResult("per-round welfare bound on every leader purchase"),
    }
    for M in M_values:
        for v0 in range(1, v_max + 1):
            for v1 in range(1, v_max + 1):
                if v0 == v1:
                    continue
                strat = repeated.equilibrium_strategy(v0, v1)
                for m0 in range(1, M):
                    trace = repeated.simulate(v0, v1, M, (m0, M - m0), strat, strat)
                    winner = 0 if v0 > v1 else 1
                    tag = {"M": M, "v0": v0, "v1": v1, "initial": [m0, M - m0]}
                    for r in out.values():
                        r.cases += 1
                    want = repeated.Terminal.Z0 if winner == 0 else repeated.Terminal.Z1
                    if trace.terminal is not want:
                        out["terminal"].fail({**tag, "terminal": trace.terminal.value})
                    if trace.total(1 - winner) != 0:
                        out["loser_zero"].fail({**tag, "loser_half": trace.total(1 - winner)})
                    m_first = trace.initial[winner]
                    m_last = trace.final[winner]
                    expected = 2 * (m_last - m_first) * abs(v0 - v1)
                    if trace.total(winner) != expected:
                        out["winner_identity"].fail({**tag, "winner_half": trace.total(winner),
                                                     "identity_half": expected})
                    for rec in trace.rounds:
                        if rec.terminal:
                            continue
                        moved = rec.units_moved if rec.leader == 0 else -rec.units_moved
                        bound = 2 * moved * (v0 - v1) - 1
                        if rec.u0 + rec.u1 > bound:
                            out["welfare_bound"].fail({**tag, "round": rec.round,
                                                       "welfare_half": rec.u0 + rec.u1, "bound_half": bound})
    return out


def check_repeated_closed_form(M_values: Iterable[int] = (3, 5, 7, 9), v_max: int = 6) -> CheckResult:
    """Simulated equilibrium totals against :func:`repeated.equilibrium_payoff`."""
    res = CheckResult("equilibrium totals match the minority-purchase-adjusted closed form")
    for M in M_values:
        for v0, v1 in itertools.permutations(range(1, v_max + 1), 2):
            strat = repeated.equilibrium_strategy(v0, v1)
            for m0 in range(1, M):
                res.cases += 1
                t = repeated.simulate(v0, v1, M, (m0, M - m0), strat, strat)
                want = repeated.equilibrium_payoff(v0, v1, M, (m0, M - m0))
                if (t.total_u0, t.total_u1) != want:
                    res.fail({"M": M, "v0": v0, "v1": v1, "initial": [m0, M - m0],
                              "sim": [t.total_u0, t.total_u1], "closed_form": list(want)})
    return res


def check_deviation_certificate(M: int = 3, v_max: int = 5, B: int = 7, T: int = 10,
                                prune: bool = False) -> CheckResult:
    res = CheckResult("no profitable Markov deviation from equilibrium play")
    for v0, v1 in itertools.permutations(range(1, v_max + 1), 2):
        strat = repeated.equilibrium_strategy(v0, v1)
        for m0 in range(1, M):
            res.cases += 1
            dev = bounded_deviation_search(v0, v1, M, (m0, M - m0), (strat, strat), T, B, prune=prune)
            if dev is not None:
                res.fail({"v0": v0, "v1": v1, "initial": [m0, M - m0], "deviation": dev.to_dict()})
    return res


# --- multiplayer -------------------------------------------------------------------

def _multi_follower_u(p0, bids, holdings, v0):
    return sum(_deal(h.m, v0, h.v, p0, bids[k])[0] for k, h in enumerate(holdings))


def verify_multiplayer_profile(v0: int, holdings, leader_bids: list[int], B: int):
    """Stackelberg verdict for leader bids listed in holdings order."""
    idx = [h.index for h in holdings]

    def br(bids):
        return multiplayer.follower_best_response(dict(zip(idx, bids)), holdings, v0)

    return verify_stackelberg(
        leader_bids, br,
        lambda q, bids: _multi_follower_u(q, bids, holdings, v0),
        lambda pos, q, bids: _deal(holdings[pos].m, v0, holdings[pos].v, q, bids[pos])[1],
        B,
    )


def multiplayer_grid(k_max: int = 3, m_max: int = 4, v_max: int = 6):
    """Every (v0, holdings) with leaders as unordered multisets of (m, v)."""
    types = [(m, v) for m in range(1, m_max + 1) for v in range(1, v_max + 1)]
    for k in range(1, k_max + 1):
        for combo in itertools.combinations_with_replacement(types, k):
            holdings = tuple(multiplayer.Holding(i + 1, m, v) for i, (m, v) in enumerate(combo))
            for v0 in range(1, v_max + 1):
                yield v0, holdings


def check_multiplayer_grid(k_max: int = 3, m_max: int = 4, v_max: int = 6) -> dict[str, CheckResult]:
    out = {
        "follower_br": CheckResult("follower answers equilibrium leader bids with its value"),
        "stackelberg": CheckResult("multi-leader profile passes the Stackelberg check"),
    }
    for v0, holdings in multiplayer_grid(k_max, m_max, v_max):
        sol = multiplayer.solve_multiplayer_se(v0, holdings)
        bids = [sol.profile.leader_bids[h.index] for h in holdings]
        B = max(bids + [v0]) + 2
        out["follower_br"].cases += 1
        out["stackelberg"].cases += 1
        argmax = brute_best_response(lambda q: _multi_follower_u(q, bids, holdings, v0), B)
        br = multiplayer.follower_best_response(sol.profile.leader_bids, holdings, v0)
        tag = {"v0": v0, "holdings": [[h.m, h.v] for h in holdings]}
        if br != v0 or v0 not in argmax or br != argmax[0]:
            out["follower_br"].fail({**tag, "br": br, "argmax": argmax})
        verdict = verify_multiplayer_profile(v0, holdings, bids, B)
        if not verdict:
            out["stackelberg"].fail({**tag, "verdict": verdict.to_dict()})
    return out


def check_collusion(samples: int = 1000, seed: int = 0, k_max: int = 3, m_max: int = 4,
                    v_max: int = 6, bid_max: int = 12) -> CheckResult:
    res = CheckResult("coalition deviations strictly lower the coalition's utility")
    rng = random.Random(seed)
    while res.cases < samples:
        k = rng.randint(1, k_max)
        holdings = tuple(multiplayer.Holding(i + 1, rng.randint(1, m_max), rng.randint(1, v_max)) for i in range(k))
        v0 = rng.randint(1, v_max)
        star = multiplayer.star_bids(holdings, v0)
        size = rng.randint(1, k)
        members = rng.sample([h.index for h in holdings], size)
        deviation = {}
        for i in members:
            b = rng.randint(0, bid_max - 1)
            deviation[i] = b if b < star[i] else b + 1  # never equal to the equilibrium bid
        res.cases += 1
        w = multiplayer.check_collusion_resistance(v0, holdings, deviation)
        q = brute_best_response(
            lambda p0: sum(_deal(h.m, v0, h.v, p0, w.deviated_bids[h.index])[0] for h in holdings),
            bid_max + 2)[0]
        oracle_u = sum(_deal(h.m, v0, h.v, q, w.deviated_bids[h.index])[1] for h in holdings if h.index in members)
        if not w.resistant or q != w.follower_response or oracle_u != w.deviated_utility:
            res.fail({"v0": v0, "holdings": [[h.m, h.v] for h in holdings], "witness": w.to_dict(),
                      "oracle_response": q})
    return res


# --- settlement ----------------------------------------------------------------------

def random_settlement(rng: random.Random) -> settlement.SettlementInstance:
    k = rng.randint(1, 5)
    p0 = rng.randint(1, 10)
    leaders = []
    for i in range(1, k + 1):
        units = rng.randint(1, 6)
        bid = rng.randint(0, 2 * p0 + 3)
        budget = rng.randint(0, 3 * (p0 + bid) * units)
        choice = settlement.Pay() if rng.random() < 0.5 else settlement.PostOption(rng.randint(-5, 5))
        leaders.append(settlement.LeaderSpec(
            settlement.BudgetedParticipant(i, budget, bid, units), choice, rng.randint(-3, 3)))
    outside = sum(l.participant.units for l in leaders)
    m0 = outside + rng.randint(1, 6)
    budget0 = 2 * outside * p0 + rng.randint(0, 20)
    buyers = {f"B{j}": rng.randint(0, 200) for j in range(rng.randint(0, 3))}
    acceptances = tuple(
        settlement.Acceptance(rng.randint(0, 12), rng.choice(sorted(buyers)), rng.randint(1, k))
        for _ in range(rng.randint(0, 4))
    ) if buyers else ()
    return settlement.SettlementInstance(p0, m0, budget0, tuple(leaders), buyers, acceptances, deadline=10)


def settlement_violations(inst: settlement.SettlementInstance, rep: settlement.SettlementReport) -> list[str]:
    bad = []
    if rep.total.balance() != 0:
        bad.append(f"cash imbalance {rep.total.balance()}")
    discounted = sum(
        s.discount_sink for name, s in rep.steps.items() if name in ("step2", "step3")
    )
    failed_units = sum(
        l.participant.units for l in inst.leaders
        if l.participant.bid > inst.p0 and not any(o.holder == l.participant.index and o.status is settlement.OptionStatus.EXPIRED for o in rep.options)
    )
    if rep.total.discount_sink != discounted or discounted != failed_units:
        bad.append(f"discount sink {rep.total.discount_sink} != {failed_units}")
    if sum(rep.final_holdings.values()) != inst.total_units:
        bad.append("units not conserved")
    if any(v < 0 for v in rep.final_holdings.values()):
        bad.append("negative holding")
    p0 = inst.p0
    expected = {settlement.FOLLOWER: inst.m0}
    for l in inst.leaders:
        p = l.participant
        opt = next((o for o in rep.options if o.holder == p.index), None)
        if p.bid <= p0 or (opt is not None and opt.status is settlement.OptionStatus.EXPIRED):
            expected[settlement.FOLLOWER] += p.units
        elif opt is None:
            expected[p.name] = expected.get(p.name, 0) + 2 * p.units
            expected[settlement.FOLLOWER] -= p.units
        else:
            expected[p.name] = expected.get(p.name, 0) + p.units
            expected[opt.buyer] = expected.get(opt.buyer, 0) + p.units
            expected[settlement.FOLLOWER] -= p.units
    expected = {k: v for k, v in expected.items() if v}
    if expected != rep.final_holdings:
        bad.append(f"holdings {rep.final_holdings} != {expected}")
    spent = -(rep.steps["step1"].cash.get(settlement.FOLLOWER, 0) + rep.steps["step4"].cash.get(settlement.FOLLOWER, 0))
    if spent > inst.follower_budget and all(
            settlement.step4_unit_price(p0, o.bid) <= p0 for o in rep.unsold):
        bad.append(f"follower overspent {spent} > {inst.follower_budget}")
    return bad


def check_settlement(samples: int = 1000, seed: int = 0) -> CheckResult:
    res = CheckResult("settlement conserves money and assigns every unit")
    rng = random.Random(seed)
    for s in range(samples):
        inst = random_settlement(rng)
        rep = settlement.settle(inst)
        res.cases += 1
        bad = settlement_violations(inst, rep)
        if bad:
            res.fail({"sample": s, "problems": bad})
    return res


GRIDS = {
    "follower_br": lambda seed, bound: [check_follower_best_response()],
    "leader_bid": lambda seed, bound: [check_optimal_leader_bid()],
    "2p": lambda seed, bound: [check_two_player_se(bound=bound)],
    "truthful": lambda seed, bound: [check_truthful_safety(seed=seed)],
    "bayes": lambda seed, bound: [check_bayesian(seed=seed), check_degenerate_prior()],
    "repeated": lambda seed, bound: list(check_repeated_equilibrium().values()) + [check_repeated_closed_form()],
    "deviation": lambda seed, bound: [check_deviation_certificate(B=bound if bound is not None else 7)],
    "multi": lambda seed, bound: list(check_multiplayer_grid().values()) + [check_collusion(seed=seed)],
    "settle": lambda seed, bound: [check_settlement(seed=seed)],
}
