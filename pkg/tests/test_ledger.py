import pytest
from hypothesis import settings, strategies as st
from hypothesis.stateful import RuleBasedStateMachine, initialize, invariant, rule

from absnft import ledger as L


def fresh(owner="A", token=7):
    return L.mint(L.LedgerState(), owner, token)


def test_securitize_freezes_and_mints():
    s = L.securitize(fresh(), "A", "A", 7, 100)
    assert s.total_supply(7) == 100
    assert dict(s.books[7].balances) == {"A": 100}
    assert s.owner_of(7) == L.FROZEN_ADDR
    L.check_invariants(s)


def test_single_share_can_restruct_at_once():
    s = L.securitize(fresh(), "A", "B", 7, 1)
    assert s.books[7].holders() == ["B"]
    s = L.restruct(s, "B", "B", 7)
    assert s.owner_of(7) == "B"


def test_securitize_errors():
    with pytest.raises(L.NotOwner):
        L.securitize(fresh(), "B", "B", 7, 10)
    with pytest.raises(L.ZeroAmount):
        L.securitize(fresh(), "A", "A", 7, 0)
    s = L.securitize(fresh(), "A", "A", 7, 10)
    with pytest.raises(L.AlreadySecuritized):
        L.securitize(s, "A", "A", 7, 10)
    with pytest.raises(L.UnknownToken):
        L.securitize(fresh(), "A", "A", 8, 10)
    with pytest.raises(L.ReservedAddress):
        L.securitize(fresh(), "A", L.FROZEN_ADDR, 7, 10)


def split(a=60, b=40):
    s = L.securitize(fresh(), "A", "A", 7, a + b)
    return L.snft_transfer(s, "A", "B", 7, b)


def test_share_transfer():
    s = L.snft_transfer(split(), "A", "B", 7, 10)
    assert dict(s.books[7].balances) == {"A": 50, "B": 50}


def test_self_transfer_is_identity():
    s = split()
    assert L.snft_transfer(s, "A", "A", 7, 10) == s


def test_overdraw_rejected():
    with pytest.raises(L.InsufficientBalance):
        L.snft_transfer(split(), "A", "B", 7, 61)
    with pytest.raises(L.ZeroAmount):
        L.snft_transfer(split(), "A", "B", 7, 0)


def test_emptied_holder_is_dropped():
    s = L.snft_transfer(split(), "B", "A", 7, 40)
    assert s.books[7].holders() == ["A"]


def test_complete_transfer():
    s = L.cnft_transfer(fresh(), "A", "B", 7)
    assert s.owner_of(7) == "B"
    assert L.cnft_transfer(s, "B", "B", 7) == s
    with pytest.raises(L.NotOwner):
        L.cnft_transfer(s, "A", "C", 7)
    frozen = L.securitize(s, "B", "B", 7, 5)
    with pytest.raises(L.Frozen):
        L.cnft_transfer(frozen, "B", "C", 7)


def test_restruct():
    s = L.restruct(L.securitize(fresh(), "A", "A", 7, 100), "A", "A", 7)
    assert s.total_supply(7) == 0
    assert s.owner_of(7) == "A"
    assert not s.nfts[7].frozen
    with pytest.raises(L.NotSoleHolder):
        L.restruct(split(99, 1), "A", "A", 7)


def test_round_trip_restores_unfrozen_nft():
    before = fresh()
    s = L.securitize(before, "A", "A", 7, 5)
    s = L.snft_transfer(s, "A", "B", 7, 2)
    s = L.snft_transfer(s, "A", "C", 7, 1)
    assert L.can_trigger_repurchase(s, "A", 7) is False
    s = L.snft_transfer(s, "C", "B", 7, 1)
    assert L.can_trigger_repurchase(s, "B", 7)
    # B, now the majority, buys the remaining shares
    s = L.snft_transfer(s, "A", "B", 7, 2)
    s = L.restruct(s, "B", "B", 7)
    assert s.to_dict()["books"] == before.to_dict()["books"] == []
    assert s.nfts[7] == L.CompleteNftRecord(7, "B")


@pytest.mark.parametrize("held,total,expected", [(51, 100, True), (50, 100, False), (2, 3, True)])
def test_majority_trigger(held, total, expected):
    s = L.securitize(fresh(), "A", "A", 7, total)
    if held < total:
        s = L.snft_transfer(s, "A", "B", 7, total - held)
    assert L.can_trigger_repurchase(s, "A", 7) is expected


def test_to_dict_is_sorted():
    d = split().to_dict()
    assert d["books"][0]["balances"] == {"A": 60, "B": 40}
    assert d["nfts"] == [{"token": 7, "owner": L.FROZEN_ADDR, "frozen": True}]


ADDRS = ["A", "B", "C", "D"]


class LedgerMachine(RuleBasedStateMachine):
    """Random operation sequences against a plain-dict model."""

    @initialize()
    def start(self):
        self.state = L.LedgerState()
        for t in range(3):
            self.state = L.mint(self.state, ADDRS[t], t)
        self.model_owner = {t: ADDRS[t] for t in range(3)}
        self.model_bal: dict[int, dict[str, int]] = {}

    @rule(t=st.integers(0, 2), who=st.sampled_from(ADDRS), to=st.sampled_from(ADDRS), n=st.integers(0, 20))
    def securitize(self, t, who, to, n):
        try:
            self.state = L.securitize(self.state, who, to, t, n)
        except L.LedgerError:
            assert t in self.model_bal or self.model_owner[t] != who or n == 0
            return
        self.model_owner[t] = L.FROZEN_ADDR
        self.model_bal[t] = {to: n}

    @rule(t=st.integers(0, 2), a=st.sampled_from(ADDRS), b=st.sampled_from(ADDRS), n=st.integers(0, 20))
    def transfer_shares(self, t, a, b, n):
        try:
            self.state = L.snft_transfer(self.state, a, b, t, n)
        except L.LedgerError:
            assert n == 0 or self.model_bal.get(t, {}).get(a, 0) < n
            return
        bal = self.model_bal[t]
        bal[a] -= n
        bal[b] = bal.get(b, 0) + n
        self.model_bal[t] = {k: v for k, v in bal.items() if v}

    @rule(t=st.integers(0, 2), a=st.sampled_from(ADDRS), b=st.sampled_from(ADDRS))
    def transfer_whole(self, t, a, b):
        try:
            self.state = L.cnft_transfer(self.state, a, b, t)
        except L.LedgerError:
            assert t in self.model_bal or self.model_owner[t] != a
            return
        self.model_owner[t] = b

    @rule(t=st.integers(0, 2), a=st.sampled_from(ADDRS), b=st.sampled_from(ADDRS))
    def restruct(self, t, a, b):
        try:
            self.state = L.restruct(self.state, a, b, t)
        except L.LedgerError:
            assert list(self.model_bal.get(t, {})) != [a]
            return
        del self.model_bal[t]
        self.model_owner[t] = b

    @invariant()
    def matches_model(self):
        L.check_invariants(self.state)
        for t in range(3):
            assert self.state.owner_of(t) == self.model_owner[t]
            want = self.model_bal.get(t, {})
            got = dict(self.state.books[t].balances) if t in self.state.books else {}
            assert got == want


TestLedgerMachine = LedgerMachine.TestCase
TestLedgerMachine.settings = settings(max_examples=60, stateful_step_count=30, deadline=None)
