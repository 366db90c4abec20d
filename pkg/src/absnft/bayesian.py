"""Leader bidding against a discrete prior on the follower's value.

The follower knows its own value and best-responds exactly as in the
complete-information game, so the leader's payoff for a bid ``p1`` is
``m1*(p1 - v1)`` whenever the realised follower value is at least ``p1`` and
``m1*(v1 - p1 + 1/2)`` otherwise.  Expected utility is piecewise linear in
``p1`` with breakpoints at the support points, so the smallest maximiser is
always one of ``v`` or ``v + 1`` for some support point ``v``.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from absnft.mechanism import pairwise_outcome
from absnft.two_player import EquilibriumProfile2P, best_response_follower


@dataclass(frozen=True)
class DiscreteValueDistribution:
    support: tuple[int, ...]
    probs: tuple[Fraction, ...]

    def __post_init__(self) -> None:
        if not self.support:
            raise ValueError("support must be non-empty")
        if len(self.support) != len(self.probs):
            raise ValueError("support and probs differ in length")
        if any(v < 1 for v in self.support):
            raise ValueError("support values must be >= 1")
        if any(b <= a for a, b in zip(self.support, self.support[1:])):
            raise ValueError("support must be strictly ascending")
        if any(p <= 0 for p in self.probs):
            raise ValueError("probabilities must be positive")
        if sum(self.probs) != 1:
            raise ValueError(f"probabilities sum to {sum(self.probs)}, not 1")

    @classmethod
    def from_pairs(cls, support: Sequence[int], probs: Iterable) -> "DiscreteValueDistribution":
        """Build from integer support and ``(num, den)`` pairs (ints or digit strings)."""
        fr = []
        for p in probs:
            if isinstance(p, Fraction):
                fr.append(p)
            else:
                num, den = p
                fr.append(Fraction(int(num), int(den)))
        return cls(tuple(int(v) for v in support), tuple(fr))

    @classmethod
    def point(cls, v: int) -> "DiscreteValueDistribution":
        return cls((v,), (Fraction(1),))

    def items(self):
        return zip(self.support, self.probs)

    def to_dict(self) -> dict:
        return {
            "support": list(self.support),
            "probs": [[p.numerator, p.denominator] for p in self.probs],
        }


def expected_leader_utility(p1: int, v1: int, dist: DiscreteValueDistribution, m1: int = 1) -> Fraction:
    """Expected leader utility of bidding ``p1``, in half units."""
    total = Fraction(0)
    for v0, prob in dist.items():
        if v0 >= p1:
            total += m1 * (2 * p1 - 2 * v1) * prob
        else:
            total += m1 * (2 * v1 - 2 * p1 + 1) * prob
    return total


def candidate_bids(dist: DiscreteValueDistribution) -> list[int]:
    return sorted({b for v in dist.support for b in (v, v + 1)})


def bayesian_argmax_set(v1: int, dist: DiscreteValueDistribution, m1: int = 1) -> list[int]:
    """All candidate bids attaining the maximal expected utility."""
    scored = [(expected_leader_utility(b, v1, dist, m1), b) for b in candidate_bids(dist)]
    best = max(u for u, _ in scored)
    return [b for u, b in scored if u == best]


def optimal_bayesian_leader_bid(v1: int, dist: DiscreteValueDistribution, m1: int = 1) -> int:
    """Smallest bid maximising expected utility."""
    return bayesian_argmax_set(v1, dist, m1)[0]


def bayesian_se(actual_v0: int, v1: int, dist: DiscreteValueDistribution,
                m1: int = 1) -> EquilibriumProfile2P:
    p1 = optimal_bayesian_leader_bid(v1, dist, m1)
    p0 = best_response_follower(p1, actual_v0)
    out = pairwise_outcome(m1, actual_v0, v1, p0, p1)
    return EquilibriumProfile2P(p0, p1, out.u_follower, out.u_leader)


def upper_mass_dominates(dist: DiscreteValueDistribution, l: int) -> bool:
    """Whether the mass at index ``l`` and above is at least the mass below it."""
    return sum(dist.probs[l:]) >= sum(dist.probs[:l])
