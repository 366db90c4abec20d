"""Several minority holders (leaders) against one majority holder (follower).

The follower trades separately with every leader but bids once, so its
payoff is the sum of the pairwise payoffs.  Leaders bid ``v0`` when their
value does not exceed the follower's and ``v0 + 1`` otherwise; the follower
then bids ``v0``.  No subset of leaders gains by jointly deviating.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from absnft.mechanism import pairwise_outcome
from absnft.money import HALF, HalfUnits


class EmptyCoalition(ValueError):
    pass


@dataclass(frozen=True)
class Holding:
    index: int
    m: int
    v: int

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError("leader indices start at 1")
        if self.m < 1 or self.v < 1:
            raise ValueError(f"leader {self.index}: units and value must be >= 1")


@dataclass(frozen=True)
class BidProfile:
    p0: int
    leader_bids: Mapping[int, int]

    def to_dict(self) -> dict:
        return {"p0": self.p0, "leader_bids": {str(i): b for i, b in sorted(self.leader_bids.items())}}


@dataclass(frozen=True)
class MultiplayerSolution:
    profile: BidProfile
    u0: HalfUnits
    leader_utilities: Mapping[int, HalfUnits]

    def to_dict(self) -> dict:
        d = self.profile.to_dict()
        d["u0_half"] = self.u0
        d["leader_utilities_half"] = {str(i): u for i, u in sorted(self.leader_utilities.items())}
        return d


def validate_holdings(holdings: Sequence[Holding], m0: int | None = None) -> None:
    if not holdings:
        raise ValueError("need at least one leader")
    idx = [h.index for h in holdings]
    if len(set(idx)) != len(idx):
        raise ValueError("duplicate leader index")
    if m0 is not None and 2 * m0 <= m0 + sum(h.m for h in holdings):
        raise ValueError("follower must hold a strict majority")


def leader_bid_star(v0: int, vi: int) -> int:
    return v0 if vi <= v0 else v0 + 1


def follower_utility(p0: int, leader_bids: Mapping[int, int], holdings: Sequence[Holding], v0: int) -> HalfUnits:
    return sum(pairwise_outcome(h.m, v0, h.v, p0, leader_bids[h.index]).u_follower for h in holdings)


def follower_best_response(leader_bids: Mapping[int, int], holdings: Sequence[Holding], v0: int) -> int:
    """Smallest follower bid maximising the summed pairwise payoff.

    The payoff is piecewise linear in ``p0`` and only jumps at leader bids,
    rising below all of them and falling above all of them, so only
    ``p_i - 1`` and ``p_i`` need checking.
    """
    cands = sorted({max(b, 0) for h in holdings for b in (leader_bids[h.index] - 1, leader_bids[h.index])})
    best, best_u = cands[0], follower_utility(cands[0], leader_bids, holdings, v0)
    for p0 in cands[1:]:
        u = follower_utility(p0, leader_bids, holdings, v0)
        if u > best_u:
            best, best_u = p0, u
    return best


def leader_utilities(p0: int, leader_bids: Mapping[int, int], holdings: Sequence[Holding], v0: int) -> dict[int, HalfUnits]:
    return {h.index: pairwise_outcome(h.m, v0, h.v, p0, leader_bids[h.index]).u_leader for h in holdings}


def star_bids(holdings: Sequence[Holding], v0: int) -> dict[int, int]:
    return {h.index: leader_bid_star(v0, h.v) for h in holdings}


def solve_multiplayer_se(v0: int, holdings: Sequence[Holding]) -> MultiplayerSolution:
    validate_holdings(holdings)
    bids = star_bids(holdings, v0)
    return MultiplayerSolution(
        BidProfile(v0, bids),
        follower_utility(v0, bids, holdings, v0),
        leader_utilities(v0, bids, holdings, v0),
    )


def coalition_utility(leader_bids: Mapping[int, int], coalition: Iterable[int],
                      holdings: Sequence[Holding], v0: int, p0: int | None = None) -> HalfUnits:
    """Summed utility of ``coalition`` once the follower has best-responded.

    Pass ``p0`` to evaluate at a fixed follower bid instead.
    """
    coalition = set(coalition)
    if p0 is None:
        p0 = follower_best_response(leader_bids, holdings, v0)
    utils = leader_utilities(p0, leader_bids, holdings, v0)
    return sum(utils[i] for i in coalition)


@dataclass(frozen=True)
class CollusionWitness:
    resistant: bool
    coalition: tuple[int, ...]
    deviated_bids: Mapping[int, int]
    follower_response: int
    deviated_utility: HalfUnits
    equilibrium_utility: HalfUnits

    def to_dict(self) -> dict:
        return {
            "resistant": self.resistant,
            "coalition": list(self.coalition),
            "deviated_bids": {str(i): b for i, b in sorted(self.deviated_bids.items())},
            "follower_response": self.follower_response,
            "deviated_utility_half": self.deviated_utility,
            "equilibrium_utility_half": self.equilibrium_utility,
        }


def check_collusion_resistance(v0: int, holdings: Sequence[Holding], deviation: Mapping[int, int]) -> CollusionWitness:
    """Compare a coalition's utility after deviating with its equilibrium utility.

    The coalition is every leader whose bid in ``deviation`` differs from
    its equilibrium bid; leaders missing from ``deviation`` keep theirs.
    """
    star = star_bids(holdings, v0)
    unknown = set(deviation) - set(star)
    if unknown:
        raise ValueError(f"unknown leaders in deviation: {sorted(unknown)}")
    coalition = tuple(sorted(i for i, b in deviation.items() if b != star[i]))
    if not coalition:
        raise EmptyCoalition("deviation does not change any bid")
    bids = {**star, **deviation}
    br = follower_best_response(bids, holdings, v0)
    dev_u = coalition_utility(bids, coalition, holdings, v0, p0=br)
    eq_u = coalition_utility(star, coalition, holdings, v0, p0=v0)
    return CollusionWitness(dev_u < eq_u, coalition, bids, br, dev_u, eq_u)


def coalition_bound_cb(coalition: Iterable[int], holdings: Sequence[Holding], v0: int) -> HalfUnits:
    """Upper bound on coalition-plus-follower utility over the coalition's deals.

    Each member above the follower's value contributes its margin less a
    single half unit, independent of its holding.
    """
    members = set(coalition)
    total = 0
    for h in holdings:
        if h.index not in members:
            continue
        if h.v <= v0:
            total += 2 * h.m * (v0 - h.v)
        else:
            total += 2 * h.m * (h.v - v0) - HALF
    return total
