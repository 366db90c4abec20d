"""Single-round game between the majority holder and one minority holder.

The minority holder (player 1) commits to a bid first; the majority holder
(player 0) answers.  Both closed forms below are the unique optima of the
respective stage problems.
"""

from __future__ import annotations

from dataclasses import dataclass

from absnft.mechanism import pairwise_outcome
from absnft.money import HalfUnits


@dataclass(frozen=True)
class EquilibriumProfile2P:
    p0: int
    p1: int
    u0: HalfUnits
    u1: HalfUnits

    def to_dict(self) -> dict:
        return {"p0": self.p0, "p1": self.p1, "u0_half": self.u0, "u1_half": self.u1}


def follower_utility(m1: int, v0: int, p0: int, p1: int) -> HalfUnits:
    """Majority holder's utility given both bids (half units)."""
    if p0 >= p1:
        return m1 * (2 * v0 - p0 - p1)
    return m1 * (p0 + p1 - 1 - 2 * v0)


def leader_utility(m1: int, v1: int, p0: int, p1: int) -> HalfUnits:
    if p1 <= p0:
        return m1 * (p0 + p1 - 2 * v1)
    return m1 * (2 * v1 - p0 - p1)


def best_response_follower(p1: int, v0: int) -> int:
    """Undercut by one when the leader bids above ``v0``; match otherwise."""
    return p1 - 1 if p1 >= v0 + 1 else p1


def optimal_leader_bid(v0: int, v1: int) -> int:
    return v0 if v1 <= v0 else v0 + 1


def solve_se(v0: int, v1: int, m1: int = 1) -> EquilibriumProfile2P:
    if m1 < 1:
        raise ValueError("m1 must be >= 1")
    p1 = optimal_leader_bid(v0, v1)
    p0 = best_response_follower(p1, v0)
    out = pairwise_outcome(m1, v0, v1, p0, p1)
    return EquilibriumProfile2P(p0, p1, out.u_follower, out.u_leader)
