"""Repeated two-player repurchase game.

Each round the minority holder leads and the majority holder follows.  If the
leader's bid does not exceed the follower's, the follower buys the leader out
and the game ends.  Otherwise the leader buys as many units as it already
holds from the follower (its holding doubles, the follower takes the
half-unit discount) and play continues from the new split.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Protocol

from absnft.money import HalfUnits


class EqualHoldings(ValueError):
    pass


class EvenSupply(ValueError):
    pass


@dataclass(frozen=True)
class RepeatedState:
    m0: int
    m1: int
    round: int = 1

    def __post_init__(self) -> None:
        if self.m0 <= 0 or self.m1 <= 0:
            raise ValueError(f"non-terminal state needs positive holdings, got {self.m0, self.m1}")
        if self.m0 == self.m1:
            raise EqualHoldings(f"holdings {self.m0} == {self.m1}; supply must be odd")

    @property
    def total(self) -> int:
        return self.m0 + self.m1

    def holding(self, player: int) -> int:
        return self.m0 if player == 0 else self.m1

    @property
    def split(self) -> tuple[int, int]:
        return (self.m0, self.m1)


class Terminal(enum.Enum):
    Z0 = "z0"
    Z1 = "z1"
    TRUNCATED = "truncated"


@dataclass(frozen=True)
class RoundRecord:
    round: int
    m0: int
    m1: int
    leader: int
    p0: int
    p1: int
    buyer: int
    units_moved: int
    unit_price: HalfUnits
    u0: HalfUnits
    u1: HalfUnits

    @property
    def terminal(self) -> bool:
        return self.buyer != self.leader

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "state": [self.m0, self.m1],
            "leader": self.leader,
            "p0": self.p0,
            "p1": self.p1,
            "buyer": self.buyer,
            "units_moved": self.units_moved,
            "unit_price_half": self.unit_price,
            "u0_half": self.u0,
            "u1_half": self.u1,
        }


@dataclass(frozen=True)
class GameTrace:
    rounds: tuple[RoundRecord, ...]
    terminal: Terminal
    total_u0: HalfUnits
    total_u1: HalfUnits
    initial: tuple[int, int] = (0, 0)
    final: tuple[int, int] = (0, 0)

    def total(self, player: int) -> HalfUnits:
        return self.total_u0 if player == 0 else self.total_u1

    def to_dict(self) -> dict:
        return {
            "rounds": [r.to_dict() for r in self.rounds],
            "terminal": self.terminal.value,
            "initial": list(self.initial),
            "final": list(self.final),
            "total_u0_half": self.total_u0,
            "total_u1_half": self.total_u1,
        }


class Strategy(Protocol):
    def __call__(self, player: int, state: RepeatedState, leader_bid: Optional[int]) -> int:
        """Bid for ``player``; ``leader_bid`` is ``None`` when ``player`` leads."""


def leader_of(state: RepeatedState) -> int:
    if state.m0 == state.m1:
        raise EqualHoldings("no leader when holdings are equal")
    return 1 if state.m0 > state.m1 else 0


def round_utilities(state: RepeatedState, v0: int, v1: int, p0: int, p1: int) -> tuple[HalfUnits, HalfUnits]:
    """Per-round utilities of both players, in half units."""
    price = p0 + p1
    if state.m0 > state.m1:
        m = state.m1
        if p0 >= p1:
            return (2 * v0 - price) * m, (price - 2 * v1) * m
        return (price - 1 - 2 * v0) * m, (2 * v1 - price) * m
    m = state.m0
    if p1 >= p0:
        return (price - 2 * v0) * m, (2 * v1 - price) * m
    return (2 * v0 - price) * m, (price - 1 - 2 * v1) * m


def play_round(state: RepeatedState, p_leader: int, p_follower: int, v0: int, v1: int):
    """Play one round.

    Returns ``(next_state, record)``; ``next_state`` is a :class:`Terminal`
    member when the follower bought the leader out.
    """
    if p_leader < 0 or p_follower < 0:
        raise ValueError("bids must be non-negative")
    leader = leader_of(state)
    follower = 1 - leader
    p0, p1 = (p_leader, p_follower) if leader == 0 else (p_follower, p_leader)
    u0, u1 = round_utilities(state, v0, v1, p0, p1)
    moved = state.holding(leader)
    if p_leader <= p_follower:
        buyer = follower
        nxt = Terminal.Z0 if follower == 0 else Terminal.Z1
    else:
        buyer = leader
        if leader == 0:
            nxt = RepeatedState(state.m0 + moved, state.m1 - moved, state.round + 1)
        else:
            nxt = RepeatedState(state.m0 - moved, state.m1 + moved, state.round + 1)
    record = RoundRecord(state.round, state.m0, state.m1, leader, p0, p1, buyer, moved, p0 + p1, u0, u1)
    return nxt, record


def equilibrium_bid(v0: int, v1: int, player: int, state: RepeatedState, leader_bid: Optional[int]) -> int:
    """Equilibrium bid of ``player`` when the two values differ.

    The lower-valued player always bids its value.  The higher-valued player
    bids one above that value when leading, and when following matches any
    leader bid up to that value and undercuts anything higher by one.
    """
    if v0 == v1:
        raise ValueError("equilibrium strategy needs distinct values")
    winner = 0 if v0 > v1 else 1
    v_low = v1 if winner == 0 else v0
    if player != winner:
        return v_low
    if leader_of(state) == player:
        return v_low + 1
    if leader_bid is None:
        raise ValueError("follower bid needs the observed leader bid")
    return leader_bid if leader_bid <= v_low else leader_bid - 1


def equilibrium_strategy(v0: int, v1: int) -> Strategy:
    def strategy(player: int, state: RepeatedState, leader_bid: Optional[int]) -> int:
        return equilibrium_bid(v0, v1, player, state, leader_bid)
    return strategy


def constant_strategy(bid: int) -> Strategy:
    def strategy(player: int, state: RepeatedState, leader_bid: Optional[int]) -> int:
        return bid
    return strategy


def truthful_strategy(v0: int, v1: int) -> Strategy:
    def strategy(player: int, state: RepeatedState, leader_bid: Optional[int]) -> int:
        return v0 if player == 0 else v1
    return strategy


def default_max_rounds(M: int) -> int:
    return 4 * math.ceil(math.log2(M)) + 4


def check_supply(M: int, initial: tuple[int, int]) -> None:
    if M < 1 or M % 2 == 0:
        raise EvenSupply(f"total supply must be odd and positive, got {M}")
    if initial[0] + initial[1] != M:
        raise ValueError(f"initial holdings {initial} do not sum to {M}")


def simulate(v0: int, v1: int, M: int, initial: tuple[int, int], strat0: Strategy, strat1: Strategy,
             max_rounds: Optional[int] = None) -> GameTrace:
    check_supply(M, initial)
    if max_rounds is None:
        max_rounds = default_max_rounds(M)
    strategies = (strat0, strat1)
    state = RepeatedState(*initial)
    rounds: list[RoundRecord] = []
    result: Terminal = Terminal.TRUNCATED
    for _ in range(max_rounds):
        leader = leader_of(state)
        p_lead = strategies[leader](leader, state, None)
        p_follow = strategies[1 - leader](1 - leader, state, p_lead)
        nxt, rec = play_round(state, p_lead, p_follow, v0, v1)
        rounds.append(rec)
        if isinstance(nxt, Terminal):
            result = nxt
            break
        state = nxt
    if result is Terminal.Z0:
        final = (M, 0)
    elif result is Terminal.Z1:
        final = (0, M)
    else:
        final = state.split
    return GameTrace(
        tuple(rounds), result,
        sum(r.u0 for r in rounds), sum(r.u1 for r in rounds),
        tuple(initial), final,
    )


def equilibrium_payoff(v0: int, v1: int, M: int, initial: tuple[int, int]) -> tuple[HalfUnits, HalfUnits]:
    """Closed-form totals under equilibrium play, in half units.

    The loser gets nothing.  The winner gains its value margin on every unit
    it ends up buying, minus half a unit on each unit it buys while still in
    the minority (those purchases close at the loser's value plus one half).
    """
    check_supply(M, initial)
    winner = 0 if v0 > v1 else 1
    margin = abs(v0 - v1)
    m = initial[winner]
    total = 2 * (M - m) * margin
    while 2 * m < M:
        total -= m
        m *= 2
    return (total, 0) if winner == 0 else (0, total)
