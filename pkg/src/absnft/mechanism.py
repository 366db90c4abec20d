"""Pairwise repurchase deal between the majority holder and one minority holder.

The majority holder (index 0, the follower) and a minority holder ``i`` both
bid.  If ``p0 >= pi`` the majority holder buys the ``m_i`` units at the bid
midpoint.  Otherwise the minority holder buys ``m_i`` units from the majority
holder at the midpoint, and the seller receives half a unit less per unit.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

from absnft.money import HALF, HalfUnits


class Direction(enum.Enum):
    FOLLOWER_BUYS = "follower_buys"
    LEADER_BUYS = "leader_buys"


@dataclass(frozen=True)
class PairwiseOutcome:
    direction: Direction
    unit_price: HalfUnits
    seller_unit_revenue: HalfUnits
    u_follower: HalfUnits
    u_leader: HalfUnits

    @property
    def follower_buys(self) -> bool:
        return self.direction is Direction.FOLLOWER_BUYS


def _check(m_i: int, v0: int, vi: int, p0: int, pi: int) -> None:
    if m_i < 1:
        raise ValueError(f"m_i must be >= 1, got {m_i}")
    if v0 < 1 or vi < 1:
        raise ValueError(f"valuations must be >= 1, got v0={v0}, vi={vi}")
    if p0 < 0 or pi < 0:
        raise ValueError(f"bids must be >= 0, got p0={p0}, pi={pi}")


def pairwise_outcome(m_i: int, v0: int, vi: int, p0: int, pi: int) -> PairwiseOutcome:
    """Settle one deal; all money fields are in half units."""
    _check(m_i, v0, vi, p0, pi)
    price = p0 + pi
    if p0 >= pi:
        return PairwiseOutcome(
            Direction.FOLLOWER_BUYS,
            unit_price=price,
            seller_unit_revenue=price,
            u_follower=m_i * (2 * v0 - price),
            u_leader=m_i * (price - 2 * vi),
        )
    return PairwiseOutcome(
        Direction.LEADER_BUYS,
        unit_price=price,
        seller_unit_revenue=price - HALF,
        u_follower=m_i * (price - HALF - 2 * v0),
        u_leader=m_i * (2 * vi - price),
    )


def utility_sum(m_i: int, v0: int, vi: int, p0: int, pi: int) -> HalfUnits:
    """Joint utility of both sides of a deal.

    The failed-repurchase branch loses half a unit on each of the ``m_i``
    units traded, which is what :func:`pairwise_outcome` pays out.
    """
    _check(m_i, v0, vi, p0, pi)
    if p0 >= pi:
        return 2 * m_i * (v0 - vi)
    return 2 * m_i * (vi - v0) - m_i * HALF


def utility_sum_unscaled(m_i: int, v0: int, vi: int, p0: int, pi: int) -> HalfUnits:
    """Joint utility with a single half-unit loss on a failed repurchase.

    Agrees with :func:`utility_sum` only for ``m_i == 1``; kept for the
    coalition bound, which is written with this form.
    """
    _check(m_i, v0, vi, p0, pi)
    if p0 >= pi:
        return 2 * m_i * (v0 - vi)
    return 2 * m_i * (vi - v0) - HALF


def max_utility_sum(m_i: int, v0: int, vi: int) -> HalfUnits:
    """Best achievable joint utility over all bid pairs."""
    if v0 >= vi:
        return 2 * m_i * (v0 - vi)
    return 2 * m_i * (vi - v0) - m_i * HALF
