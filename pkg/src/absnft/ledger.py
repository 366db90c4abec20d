"""Token ledger for complete and securitized NFTs.

A complete NFT is securitized by freezing it (ownership moves to
``FROZEN_ADDR``) and minting share units to a recipient.  Shares trade
freely.  Whoever ends up holding every share can restruct: burn the shares
and take the complete NFT back out of escrow.

All operations are pure and return a new :class:`LedgerState`.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Mapping

Address = str
TokenId = int

FROZEN_ADDR: Address = "<frozen>"


class LedgerError(Exception):
    pass


class NotOwner(LedgerError):
    pass


class AlreadySecuritized(LedgerError):
    pass


class ZeroAmount(LedgerError):
    pass


class InsufficientBalance(LedgerError):
    pass


class Frozen(LedgerError):
    pass


class NotSoleHolder(LedgerError):
    pass


class UnknownToken(LedgerError):
    pass


class ReservedAddress(LedgerError):
    pass


class TokenExists(LedgerError):
    pass


@dataclass(frozen=True)
class CompleteNftRecord:
    token: TokenId
    owner: Address

    @property
    def frozen(self) -> bool:
        return self.owner == FROZEN_ADDR


@dataclass(frozen=True)
class BalanceBook:
    token: TokenId
    total_supply: int = 0
    balances: Mapping[Address, int] = field(default_factory=lambda: MappingProxyType({}))

    def balance_of(self, addr: Address) -> int:
        return self.balances.get(addr, 0)

    def holders(self) -> list[Address]:
        return sorted(self.balances)


def _frozen_map(d: dict) -> Mapping:
    return MappingProxyType(dict(d))


@dataclass(frozen=True)
class LedgerState:
    nfts: Mapping[TokenId, CompleteNftRecord] = field(default_factory=lambda: MappingProxyType({}))
    books: Mapping[TokenId, BalanceBook] = field(default_factory=lambda: MappingProxyType({}))

    def owner_of(self, token: TokenId) -> Address:
        return self._record(token).owner

    def total_supply(self, token: TokenId) -> int:
        book = self.books.get(token)
        return 0 if book is None else book.total_supply

    def balance_of(self, addr: Address, token: TokenId) -> int:
        book = self.books.get(token)
        return 0 if book is None else book.balance_of(addr)

    def _record(self, token: TokenId) -> CompleteNftRecord:
        try:
            return self.nfts[token]
        except KeyError:
            raise UnknownToken(f"token {token} does not exist") from None

    def _with(self, record: CompleteNftRecord | None = None, book: BalanceBook | None = None,
              drop_book: TokenId | None = None) -> "LedgerState":
        nfts = dict(self.nfts)
        books = dict(self.books)
        if record is not None:
            nfts[record.token] = record
        if book is not None:
            books[book.token] = book
        if drop_book is not None:
            books.pop(drop_book, None)
        return LedgerState(_frozen_map(nfts), _frozen_map(books))

    def to_dict(self) -> dict:
        return {
            "nfts": [
                {"token": t, "owner": r.owner, "frozen": r.frozen}
                for t, r in sorted(self.nfts.items())
            ],
            "books": [
                {
                    "token": t,
                    "total_supply": b.total_supply,
                    "balances": {a: b.balances[a] for a in sorted(b.balances)},
                }
                for t, b in sorted(self.books.items())
            ],
        }


def _user(addr: Address) -> None:
    if not addr:
        raise ValueError("address must be non-empty")
    if addr == FROZEN_ADDR:
        raise ReservedAddress("the frozen escrow address cannot take part in user operations")


def mint(ledger: LedgerState, owner: Address, token: TokenId) -> LedgerState:
    """Create a fresh complete NFT owned by ``owner``."""
    _user(owner)
    if token < 0:
        raise ValueError("token ids are non-negative")
    if token in ledger.nfts:
        raise TokenExists(f"token {token} already exists")
    return ledger._with(record=CompleteNftRecord(token, owner))


def securitize(ledger: LedgerState, sender: Address, recipient: Address,
               token: TokenId, amount: int) -> LedgerState:
    _user(sender)
    _user(recipient)
    record = ledger._record(token)
    if record.frozen:
        raise AlreadySecuritized(f"token {token} is already securitized")
    if record.owner != sender:
        raise NotOwner(f"{sender} does not own token {token}")
    if amount < 1:
        raise ZeroAmount("securitization needs at least one share unit")
    book = BalanceBook(token, amount, _frozen_map({recipient: amount}))
    return ledger._with(record=replace(record, owner=FROZEN_ADDR), book=book)


def snft_transfer(ledger: LedgerState, from_: Address, to: Address,
                  token: TokenId, amount: int) -> LedgerState:
    _user(from_)
    _user(to)
    ledger._record(token)
    if amount < 1:
        raise ZeroAmount("transfer amount must be positive")
    book = ledger.books.get(token)
    have = 0 if book is None else book.balance_of(from_)
    if have < amount:
        raise InsufficientBalance(f"{from_} holds {have} units of token {token}, needs {amount}")
    if from_ == to:
        return ledger
    balances = dict(book.balances)
    balances[from_] = have - amount
    if balances[from_] == 0:
        del balances[from_]
    balances[to] = balances.get(to, 0) + amount
    return ledger._with(book=replace(book, balances=_frozen_map(balances)))


def cnft_transfer(ledger: LedgerState, from_: Address, to: Address, token: TokenId) -> LedgerState:
    _user(from_)
    _user(to)
    record = ledger._record(token)
    if record.frozen:
        raise Frozen(f"token {token} is frozen")
    if record.owner != from_:
        raise NotOwner(f"{from_} does not own token {token}")
    if from_ == to:
        return ledger
    return ledger._with(record=replace(record, owner=to))


def restruct(ledger: LedgerState, sender: Address, recipient: Address, token: TokenId) -> LedgerState:
    _user(sender)
    _user(recipient)
    record = ledger._record(token)
    book = ledger.books.get(token)
    if book is None or book.total_supply == 0 or book.balance_of(sender) != book.total_supply:
        raise NotSoleHolder(f"{sender} does not hold every share of token {token}")
    return ledger._with(record=replace(record, owner=recipient), drop_book=token)


def can_trigger_repurchase(ledger: LedgerState, holder: Address, token: TokenId) -> bool:
    ledger._record(token)
    book = ledger.books.get(token)
    if book is None:
        raise UnknownToken(f"token {token} is not securitized")
    return 2 * book.balance_of(holder) > book.total_supply


def check_invariants(ledger: LedgerState) -> None:
    """Raise ``AssertionError`` if conservation or freeze coupling is broken."""
    for token, book in ledger.books.items():
        assert token in ledger.nfts, f"book for unknown token {token}"
        assert all(v > 0 for v in book.balances.values()), f"zero entry in book {token}"
        assert sum(book.balances.values()) == book.total_supply, f"supply mismatch on {token}"
    for token, record in ledger.nfts.items():
        supply = ledger.total_supply(token)
        assert (supply > 0) == record.frozen, f"freeze coupling broken on {token}"
