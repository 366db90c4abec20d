import pytest

from absnft.two_player import (
    best_response_follower, follower_utility, leader_utility, optimal_leader_bid, solve_se,
)


@pytest.mark.parametrize("p1,v0,want", [(5, 3, 4), (3, 3, 3), (0, 1, 0)])
def test_best_response(p1, v0, want):
    assert best_response_follower(p1, v0) == want


@pytest.mark.parametrize("v0,v1,want", [(4, 2, 4), (4, 5, 5), (4, 4, 4)])
def test_leader_bid(v0, v1, want):
    assert optimal_leader_bid(v0, v1) == want


def test_solve_examples():
    se = solve_se(4, 2, 1)
    assert (se.p0, se.p1, se.u0, se.u1) == (4, 4, 0, 4)
    se = solve_se(4, 5, 2)
    assert (se.p0, se.p1, se.u0, se.u1) == (4, 5, 0, 2)
    se = solve_se(7, 7, 3)
    assert (se.p0, se.p1, se.u0, se.u1) == (7, 7, 0, 0)
    assert se.to_dict() == {"p0": 7, "p1": 7, "u0_half": 0, "u1_half": 0}


def test_utilities_match_profile():
    se = solve_se(3, 8, 2)
    assert follower_utility(2, 3, se.p0, se.p1) == se.u0
    assert leader_utility(2, 8, se.p0, se.p1) == se.u1


def test_best_response_is_exact_argmax_small():
    for v0 in range(1, 8):
        for p1 in range(0, 10):
            utils = [follower_utility(1, v0, q, p1) for q in range(12)]
            assert utils[best_response_follower(p1, v0)] == max(utils)
