import warnings

import pytest
from hypothesis import given
from hypothesis import strategies as st

from tegsim.bargaining import (
    AuctionSpec,
    BlindVoteSpec,
    DiceSpec,
    random_ratio_from_rolls,
    random_votes,
    roll_dice,
    run_auction,
    run_blind_vote,
    run_random_ratio,
)
from tegsim.errors import EmptyVoterSet


def test_auction_single_layer():
    won = run_auction(AuctionSpec("s1", 10, {"s2": 40}, {("s2", "bob"): 55}))
    assert (won.layer, won.bidder, won.rate) == ("s2", "bob", 5.5)


def test_auction_no_valid_bid():
    assert run_auction(AuctionSpec("s1", 10, {"s2": 40}, {("s2", "bob"): 39})) is None
    assert run_auction(AuctionSpec("s1", 10, {"s2": 40})) is None


def test_auction_compares_ratio_to_minimum():
    spec = AuctionSpec("s1", 10, {"s2": 40, "s3": 20}, {("s2", "p"): 50, ("s3", "q"): 30})
    won = run_auction(spec)
    assert won.layer == "s3"
    assert won.rate == pytest.approx(3.0)


def test_auction_ties_go_to_smallest_layer_then_bidder():
    spec = AuctionSpec("s1", 1, {"s2": 10, "s3": 10}, {("s3", "a"): 20, ("s2", "z"): 20, ("s2", "b"): 20})
    won = run_auction(spec)
    assert (won.layer, won.bidder) == ("s2", "b")


def test_auction_warns_on_disjoint_players():
    spec = AuctionSpec("s1", 1, {"s2": 1}, {("s2", "x"): 2}, player_sets={"s1": {"a"}, "s2": {"b"}})
    with pytest.warns(UserWarning, match="shares no players"):
        run_auction(spec)
    spec = AuctionSpec("s1", 1, {"s2": 1}, {("s2", "x"): 2}, player_sets={"s1": {"a"}, "s2": {"a"}})
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        run_auction(spec)


def test_auction_spec_checks():
    with pytest.raises(ValueError):
        AuctionSpec("s1", 0, {"s2": 1})
    with pytest.raises(ValueError):
        AuctionSpec("s1", 1, {"s1": 1})


def test_dice_rolls_example():
    out = random_ratio_from_rolls([3, 5], [2, 4])
    assert (out.x_a, out.y_b) == (4.0, 3.0)
    assert out.rate_xy == 0.75
    assert out.rate_yx == pytest.approx(4 / 3)
    with pytest.raises(EmptyVoterSet):
        random_ratio_from_rolls([], [1])


def test_one_sided_dice_force_unit_rate():
    out = run_random_ratio(DiceSpec(1, 1, 3, 4), seed=5)
    assert (out.x_a, out.y_b, out.rate_xy) == (1, 1, 1)


def test_random_ratio_is_seeded():
    spec = DiceSpec(6, 4, 5, 5)
    assert run_random_ratio(spec, 11) == run_random_ratio(spec, 11)
    a, b = roll_dice(spec, 11)
    assert all(1 <= r <= 6 for r in a) and all(1 <= r <= 4 for r in b)


def test_blind_vote_examples():
    out = run_blind_vote(BlindVoteSpec(2, 5, [5, 5, 2], [2, 2, 5]))
    assert (out.x_a, out.y_b, out.rate_xy) == (2, 5, 2.5)
    assert run_blind_vote(BlindVoteSpec(2, 5, [2], [2])).rate_xy == 1.0


def test_blind_vote_tie_goes_to_alpha():
    out = run_blind_vote(BlindVoteSpec(2, 5, [2, 5], [5]))
    assert out.y_b == 2


def test_blind_vote_checks():
    with pytest.raises(ValueError):
        BlindVoteSpec(5, 2, [5], [2])
    with pytest.raises(ValueError):
        BlindVoteSpec(2, 5, [3], [2])
    with pytest.raises(EmptyVoterSet):
        run_blind_vote(BlindVoteSpec(2, 5, [], [2]))


def test_random_votes_seeded():
    assert random_votes(1, 3, 4, 5, 9) == random_votes(1, 3, 4, 5, 9)


@given(st.integers(1, 20), st.integers(1, 20), st.integers(1, 30), st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_random_ratio_bounds_and_reciprocity(kappa, alpha, na, nb, seed):
    out = run_random_ratio(DiceSpec(kappa, alpha, na, nb), seed)
    assert 1 <= out.x_a <= kappa
    assert 1 <= out.y_b <= alpha
    assert out.rate_xy * out.rate_yx == pytest.approx(1.0)


@given(st.lists(st.sampled_from([1.0, 4.0]), min_size=1, max_size=9),
       st.lists(st.sampled_from([1.0, 4.0]), min_size=1, max_size=9))
def test_blind_vote_rate_in_the_three_outcomes(va, vb):
    assert run_blind_vote(BlindVoteSpec(1.0, 4.0, va, vb)).rate_xy in (0.25, 1.0, 4.0)
