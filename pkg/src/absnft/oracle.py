"""Brute-force checks used as ground truth for the closed forms.

Nothing here imports the closed-form solvers; utilities are passed in as
callables and every search is a plain enumeration over ``[0..B]``.
Witnesses are the lexicographically first improving deviation found
(player index, then bid ascending).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

from absnft.repeated import RepeatedState, Strategy, Terminal, leader_of, play_round


class SearchSpaceTooLarge(ValueError):
    pass


def brute_best_response(utility: Callable[[int], object], B: int) -> list[int]:
    """Full argmax set of ``utility`` over ``0..B``."""
    if B < 0:
        raise ValueError("bid bound must be >= 0")
    values = [utility(b) for b in range(B + 1)]
    best = max(values)
    return [b for b, u in enumerate(values) if u == best]


@dataclass(frozen=True)
class Deviation:
    player: int
    bid: int
    utility_before: object
    utility_after: object
    follower_response: Optional[int] = None

    def to_dict(self) -> dict:
        d = {"player": self.player, "bid": self.bid,
             "utility_before_half": _num(self.utility_before),
             "utility_after_half": _num(self.utility_after)}
        if self.follower_response is not None:
            d["follower_response"] = self.follower_response
        return d


def _num(x):
    if isinstance(x, int):
        return x
    return [x.numerator, x.denominator]


@dataclass(frozen=True)
class Verdict:
    ok: bool
    witness: Optional[Deviation] = None
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok

    def to_dict(self) -> dict:
        return {"ok": self.ok, "reason": self.reason,
                "witness": None if self.witness is None else self.witness.to_dict()}


def verify_nash(profile: Sequence[int], utility: Callable[[int, Sequence[int]], object], B: int) -> Verdict:
    """No player gains from any unilateral switch to a bid in ``0..B``."""
    profile = list(profile)
    if any(not 0 <= b <= B for b in profile):
        raise ValueError(f"profile {profile} outside [0, {B}]")
    if len(profile) <= 1:
        return Verdict(True, reason="single-player game")
    for i in range(len(profile)):
        base = utility(i, profile)
        for b in range(B + 1):
            if b == profile[i]:
                continue
            trial = profile.copy()
            trial[i] = b
            u = utility(i, trial)
            if u > base:
                return Verdict(False, Deviation(i, b, base, u), f"player {i} gains by bidding {b}")
    return Verdict(True)


def verify_stackelberg(
    leader_bids: Sequence[int],
    follower_br: Callable[[Sequence[int]], int],
    follower_utility: Callable[[int, Sequence[int]], object],
    leader_utility: Callable[[int, int, Sequence[int]], object],
    B: int,
    follower_bid: Optional[int] = None,
) -> Verdict:
    """Check a two-stage profile.

    ``follower_br`` must land in the brute-force argmax at the profile and at
    every single-leader deviation, and no leader may gain by deviating once
    the follower re-responds through ``follower_br``.  ``leader_utility``
    takes ``(leader_position, p0, leader_bids)``; leader positions start at 1
    in witnesses (position 0 is the follower).
    """
    leader_bids = list(leader_bids)
    p0 = follower_br(leader_bids)
    if follower_bid is not None and follower_bid != p0:
        return Verdict(False, Deviation(0, p0, None, None),
                       f"follower bid {follower_bid} differs from its response {p0}")
    ok_br = _check_br(leader_bids, p0, follower_utility, B)
    if ok_br is not None:
        return ok_br
    for pos in range(len(leader_bids)):
        base = leader_utility(pos, p0, leader_bids)
        for b in range(B + 1):
            if b == leader_bids[pos]:
                continue
            trial = leader_bids.copy()
            trial[pos] = b
            q0 = follower_br(trial)
            bad = _check_br(trial, q0, follower_utility, B)
            if bad is not None:
                return bad
            u = leader_utility(pos, q0, trial)
            if u > base:
                return Verdict(False, Deviation(pos + 1, b, base, u, q0),
                               f"leader {pos + 1} gains by bidding {b}")
    return Verdict(True)


def _check_br(leader_bids, p0, follower_utility, B) -> Optional[Verdict]:
    argmax = brute_best_response(lambda q: follower_utility(q, leader_bids), B)
    if p0 not in argmax:
        u = follower_utility(p0, leader_bids)
        best = follower_utility(argmax[0], leader_bids)
        return Verdict(False, Deviation(0, argmax[0], u, best),
                       f"follower response {p0} not optimal at leader bids {leader_bids}")
    return None


# --- repeated game ---------------------------------------------------------

@dataclass(frozen=True)
class RepeatedDeviation:
    player: int
    table: Mapping[tuple[int, int], int]
    baseline_utility: int
    deviation_utility: int
    rounds: int

    def to_dict(self) -> dict:
        return {
            "player": self.player,
            "table": [{"state": list(s), "bid": b} for s, b in sorted(self.table.items())],
            "baseline_utility_half": self.baseline_utility,
            "deviation_utility_half": self.deviation_utility,
            "rounds": self.rounds,
        }


def _rollout(v0, v1, initial, strategies, T, table=None, player=None):
    """Total utilities over at most ``T`` rounds; ``table`` overrides ``player``."""
    state = RepeatedState(*initial)
    totals = [0, 0]
    played = 0
    for _ in range(T):
        leader = leader_of(state)

        def bid(p, observed):
            if table is not None and p == player:
                return table[state.split]
            return strategies[p](p, state, observed)

        pl = bid(leader, None)
        pf = bid(1 - leader, pl)
        nxt, rec = play_round(state, pl, pf, v0, v1)
        totals[0] += rec.u0
        totals[1] += rec.u1
        played += 1
        if isinstance(nxt, Terminal):
            break
        state = nxt
    return totals, played


MAX_SEARCH_M = 9
MAX_SEARCH_T = 12
MAX_SEARCH_B = 8


def bounded_deviation_search(
    v0: int, v1: int, M: int, initial: tuple[int, int],
    baseline: Sequence[Strategy], T: int, B: int, prune: bool = True,
) -> Optional[RepeatedDeviation]:
    """Look for a profitable unilateral Markov deviation from ``baseline``.

    A deviation is a table from holdings split to bid in ``0..B``; the
    opponent keeps its baseline strategy and payoffs are summed over the
    first ``T`` rounds.  Tables are enumerated along the play path: a bid is
    chosen the first time a split is reached and reused on revisits.  With
    ``prune`` the enumeration keeps, at each newly reached split, only the
    best-paying bid for each distinct successor, which cannot lose an
    improving table since the chosen bid repeats identically on every visit.
    Returns the best improving deviation (first player, then smallest
    table) or ``None``.
    """
    if M > MAX_SEARCH_M or T > MAX_SEARCH_T or B > MAX_SEARCH_B:
        raise SearchSpaceTooLarge(f"M={M}, T={T}, B={B} exceeds ({MAX_SEARCH_M}, {MAX_SEARCH_T}, {MAX_SEARCH_B})")
    if T <= 0:
        return None
    base_totals, _ = _rollout(v0, v1, initial, baseline, T)
    for player in (0, 1):
        best = _search_player(v0, v1, initial, baseline, T, B, player, prune)
        if best is not None and best[0] > base_totals[player]:
            gain, table, rounds = best
            return RepeatedDeviation(player, table, base_totals[player], gain, rounds)
    return None


def _search_player(v0, v1, initial, baseline, T, B, player, prune):
    best = None  # (utility, sorted table items, rounds)

    def step(state, table, total, played):
        nonlocal best
        if played == T:
            _offer(total, table, played)
            return
        leader = leader_of(state)
        if state.split in table:
            options = [table[state.split]]
            fresh = False
        else:
            options = list(range(B + 1))
            fresh = True
        branches = []
        for b in options:
            if leader == player:
                pl = b
                pf = baseline[1 - player](1 - player, state, pl)
            else:
                pl = baseline[leader](leader, state, None)
                pf = b
            nxt, rec = play_round(state, pl, pf, v0, v1)
            u = rec.u0 if player == 0 else rec.u1
            branches.append((b, nxt, u))
        if fresh and prune:
            kept = {}
            for b, nxt, u in branches:
                key = nxt if isinstance(nxt, Terminal) else nxt.split
                if key not in kept or u > kept[key][2]:
                    kept[key] = (b, nxt, u)
            branches = sorted(kept.values(), key=lambda x: x[0])
        for b, nxt, u in branches:
            new_table = table if not fresh else {**table, state.split: b}
            if isinstance(nxt, Terminal):
                _offer(total + u, new_table, played + 1)
            else:
                step(nxt, new_table, total + u, played + 1)

    def _offer(total, table, played):
        nonlocal best
        key = tuple(sorted(table.items()))
        if best is None or total > best[0] or (total == best[0] and key < best[1]):
            best = (total, key, played)

    step(RepeatedState(*initial), {}, 0, 0)
    if best is None:
        return None
    return best[0], dict(best[1]), best[2]
