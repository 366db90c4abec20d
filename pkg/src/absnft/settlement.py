"""Budget-constrained payment procedure after bids are in.

Step 1: the follower buys out every leader that bid at most ``p0``.
Step 2: every leader that bid above ``p0`` either pays for its units or
posts a repurchase option at some price (zero when it does nothing, also
forced when the payment exceeds its budget).
Step 3: third parties may accept open options until the deadline tick.
Step 4: the follower buys back the units of leaders whose options went
unsold, at ``2*p0 - p_i`` per unit.

Buyers on failed repurchases pay the bid midpoint while the follower gets
half a unit less per unit; that gap is credited to ``DISCOUNT_SINK`` so the
cash flows of a settlement always sum to zero.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence, Union

from absnft.money import HalfUnits

log = logging.getLogger(__name__)

FOLLOWER = "N0"
DISCOUNT_SINK = "<discount>"


class SettlementError(Exception):
    pass


class BudgetExceeded(SettlementError):
    pass


class BuyerBudgetExceeded(SettlementError):
    pass


class OptionNotOpen(SettlementError):
    pass


class FollowerBudgetInsufficient(SettlementError):
    pass


def leader_name(index: int) -> str:
    return f"N{index}"


@dataclass(frozen=True)
class BudgetedParticipant:
    index: int
    budget: HalfUnits
    bid: int
    units: int

    @property
    def name(self) -> str:
        return leader_name(self.index)


@dataclass(frozen=True)
class Pay:
    pass


@dataclass(frozen=True)
class PostOption:
    price: int = 0  # full currency units, may be negative


Choice = Union[Pay, PostOption]


class OptionStatus(enum.Enum):
    OPEN = "open"
    SOLD = "sold"
    EXPIRED = "expired"


@dataclass
class RepurchaseOption:
    holder: int
    price: int
    units: int
    bid: int
    status: OptionStatus = OptionStatus.OPEN
    buyer: Optional[str] = None

    def to_dict(self) -> dict:
        return {"holder": leader_name(self.holder), "price": self.price, "units": self.units,
                "status": self.status.value, "buyer": self.buyer}


@dataclass
class SettlementLedger:
    """Cash deltas (half units) and unit movements for one settlement."""

    cash: dict[str, HalfUnits] = field(default_factory=dict)
    units: dict[str, int] = field(default_factory=dict)
    discount_sink: HalfUnits = 0

    def move_cash(self, payer: str, payee: str, amount: HalfUnits) -> None:
        self.cash[payer] = self.cash.get(payer, 0) - amount
        self.cash[payee] = self.cash.get(payee, 0) + amount

    def move_units(self, seller: str, buyer: str, amount: int) -> None:
        self.units[seller] = self.units.get(seller, 0) - amount
        self.units[buyer] = self.units.get(buyer, 0) + amount

    def sink(self, payer: str, amount: HalfUnits) -> None:
        self.cash[payer] = self.cash.get(payer, 0) - amount
        self.discount_sink += amount

    def merge(self, other: "SettlementLedger") -> None:
        for k, v in other.cash.items():
            self.cash[k] = self.cash.get(k, 0) + v
        for k, v in other.units.items():
            self.units[k] = self.units.get(k, 0) + v
        self.discount_sink += other.discount_sink

    def balance(self) -> HalfUnits:
        return sum(self.cash.values()) + self.discount_sink

    def to_dict(self) -> dict:
        return {
            "cash_half": {k: self.cash[k] for k in sorted(self.cash)},
            "units": {k: self.units[k] for k in sorted(self.units)},
            "discount_sink_half": self.discount_sink,
        }


def settle_step1(p0: int, participants: Sequence[BudgetedParticipant]) -> SettlementLedger:
    """Follower buys out every leader with ``bid <= p0`` at the midpoint."""
    out = SettlementLedger()
    for p in participants:
        if p.bid > p0:
            continue
        out.move_cash(FOLLOWER, p.name, (p0 + p.bid) * p.units)
        out.move_units(p.name, FOLLOWER, p.units)
    return out


def step2_cost(p0: int, participant: BudgetedParticipant) -> HalfUnits:
    return (p0 + participant.bid) * participant.units


def settle_step2_pay_or_option(p0: int, participant: BudgetedParticipant,
                               choice: Choice) -> Union[SettlementLedger, RepurchaseOption]:
    if participant.bid < p0 + 1:
        raise ValueError(f"{participant.name} bid {participant.bid} does not exceed p0={p0}")
    if isinstance(choice, PostOption):
        return RepurchaseOption(participant.index, choice.price, participant.units, participant.bid)
    cost = step2_cost(p0, participant)
    if cost > participant.budget:
        raise BudgetExceeded(f"{participant.name} needs {cost} half units, has {participant.budget}")
    out = SettlementLedger()
    m = participant.units
    out.move_cash(participant.name, FOLLOWER, (p0 + participant.bid - 1) * m)
    out.sink(participant.name, m)
    out.move_units(FOLLOWER, participant.name, m)
    return out


def option_cost(p0: int, option: RepurchaseOption) -> HalfUnits:
    return 2 * option.price + (p0 + option.bid) * option.units


def settle_step3_accept_option(p0: int, option: RepurchaseOption, buyer: str,
                               buyer_budget: HalfUnits) -> SettlementLedger:
    """Third-party purchase of an open option; marks the option sold."""
    if option.status is not OptionStatus.OPEN:
        raise OptionNotOpen(f"option of {leader_name(option.holder)} is {option.status.value}")
    cost = option_cost(p0, option)
    if cost > buyer_budget:
        raise BuyerBudgetExceeded(f"{buyer} needs {cost} half units, has {buyer_budget}")
    m = option.units
    out = SettlementLedger()
    out.move_cash(buyer, leader_name(option.holder), 2 * option.price)
    out.move_cash(buyer, FOLLOWER, (p0 + option.bid - 1) * m)
    out.sink(buyer, m)
    out.move_units(FOLLOWER, buyer, m)
    option.status = OptionStatus.SOLD
    option.buyer = buyer
    return out


def step4_unit_price(p0: int, bid: int) -> int:
    return 2 * p0 - bid


def settle_step4_discount_buyback(p0: int, unsold: Sequence[RepurchaseOption]) -> tuple[SettlementLedger, list[str]]:
    """Follower buys the units behind every expired option.

    Returns the flows and a warning per option whose buy-back price is
    negative (leader bid above ``2*p0``); those are still executed.
    """
    out = SettlementLedger()
    warnings = []
    for opt in unsold:
        price = step4_unit_price(p0, opt.bid)
        if price < 0:
            msg = f"NegativePriceWarning: {leader_name(opt.holder)} buy-back price {price} per unit"
            log.debug(msg)
            warnings.append(msg)
        out.move_cash(FOLLOWER, leader_name(opt.holder), 2 * price * opt.units)
        out.move_units(leader_name(opt.holder), FOLLOWER, opt.units)
        opt.status = OptionStatus.EXPIRED
    return out, warnings


# --- full procedure -----------------------------------------------------------

@dataclass(frozen=True)
class LeaderSpec:
    participant: BudgetedParticipant
    choice: Choice = PostOption(0)
    fallback_option_price: int = 0


@dataclass(frozen=True)
class Acceptance:
    tick: int
    buyer: str
    holder: int


@dataclass(frozen=True)
class SettlementInstance:
    p0: int
    m0: int
    follower_budget: HalfUnits
    leaders: tuple[LeaderSpec, ...]
    buyers: Mapping[str, HalfUnits] = field(default_factory=dict)
    acceptances: tuple[Acceptance, ...] = ()
    deadline: int = 10

    @property
    def total_units(self) -> int:
        return self.m0 + sum(l.participant.units for l in self.leaders)


@dataclass
class SettlementReport:
    steps: dict[str, SettlementLedger]
    total: SettlementLedger
    options: list[RepurchaseOption]
    initial_holdings: dict[str, int]
    final_holdings: dict[str, int]
    events: list[str]
    warnings: list[str]

    @property
    def unsold(self) -> list[RepurchaseOption]:
        return [o for o in self.options if o.status is OptionStatus.EXPIRED]

    def to_dict(self) -> dict:
        return {
            "steps": {k: v.to_dict() for k, v in self.steps.items()},
            "total": self.total.to_dict(),
            "options": [o.to_dict() for o in self.options],
            "initial_holdings": dict(sorted(self.initial_holdings.items())),
            "final_holdings": dict(sorted(self.final_holdings.items())),
            "events": list(self.events),
            "warnings": list(self.warnings),
        }


def follower_budget_ok(inst: SettlementInstance) -> bool:
    outside = inst.total_units - inst.m0
    return inst.follower_budget >= 2 * outside * inst.p0


def settle(inst: SettlementInstance) -> SettlementReport:
    if not follower_budget_ok(inst):
        raise FollowerBudgetInsufficient(
            f"follower budget {inst.follower_budget} below {2 * (inst.total_units - inst.m0) * inst.p0} half units")
    if 2 * inst.m0 <= inst.total_units:
        raise SettlementError("follower must hold a strict majority")
    p0 = inst.p0
    parts = [l.participant for l in inst.leaders]
    events: list[str] = []
    steps = {"step1": settle_step1(p0, parts)}

    step2 = SettlementLedger()
    options: list[RepurchaseOption] = []
    for spec in inst.leaders:
        p = spec.participant
        if p.bid <= p0:
            continue
        try:
            res = settle_step2_pay_or_option(p0, p, spec.choice)
        except BudgetExceeded as exc:
            events.append(f"step2: {exc}; option posted at {spec.fallback_option_price}")
            res = settle_step2_pay_or_option(p0, p, PostOption(spec.fallback_option_price))
        if isinstance(res, RepurchaseOption):
            options.append(res)
            events.append(f"step2: {p.name} posted option at {res.price}")
        else:
            step2.merge(res)
            events.append(f"step2: {p.name} paid")
    steps["step2"] = step2

    step3 = SettlementLedger()
    budgets = dict(inst.buyers)
    by_holder = {o.holder: o for o in options}
    ordered = sorted(inst.acceptances, key=lambda a: (a.tick, a.buyer, a.holder))
    for acc in ordered:
        if acc.tick > inst.deadline:
            events.append(f"step3: {acc.buyer} late for {leader_name(acc.holder)} at tick {acc.tick}")
            continue
        opt = by_holder.get(acc.holder)
        if opt is None:
            events.append(f"step3: no option from {leader_name(acc.holder)}")
            continue
        try:
            flows = settle_step3_accept_option(p0, opt, acc.buyer, budgets.get(acc.buyer, 0))
        except SettlementError as exc:
            events.append(f"step3: {exc}")
            continue
        budgets[acc.buyer] = budgets.get(acc.buyer, 0) + flows.cash.get(acc.buyer, 0)
        step3.merge(flows)
        events.append(f"step3: {acc.buyer} bought option of {leader_name(acc.holder)} at tick {acc.tick}")
    steps["step3"] = step3

    unsold = [o for o in options if o.status is OptionStatus.OPEN]
    step4, warnings = settle_step4_discount_buyback(p0, unsold)
    steps["step4"] = step4

    total = SettlementLedger()
    for s in steps.values():
        total.merge(s)
    initial = {FOLLOWER: inst.m0}
    initial.update({p.name: p.units for p in parts})
    final = dict(initial)
    for k, v in total.units.items():
        final[k] = final.get(k, 0) + v
    final = {k: v for k, v in final.items() if v != 0}
    return SettlementReport(steps, total, options, initial, final, events, warnings)


# --- lazy bidders -----------------------------------------------------------

@dataclass(frozen=True)
class BidPolicy:
    """How a holder's bid is obtained if it does not bid itself.

    ``predetermined`` is recorded when the holder acquires shares, so a bid
    always exists.
    """

    predetermined: int
    custodian: Optional[str] = None
    custodian_bid: Optional[int] = None
    timeout_ticks: int = 10


def resolve_bid(policy: BidPolicy, active_bid: Optional[int], clock_ticks: int) -> int:
    """Bid used for a holder; ``clock_ticks`` is when ``active_bid`` arrived."""
    if active_bid is not None and clock_ticks < policy.timeout_ticks:
        return active_bid
    if policy.custodian is not None and policy.custodian_bid is not None:
        return policy.custodian_bid
    return policy.predetermined
