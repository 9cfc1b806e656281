import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from generators import random_matrix
from oracles import entropy_bits, kl_bits
from tegsim.engine import LayerState, TransferMatrix
from tegsim.errors import (
    EmptyActiveSet,
    EmptyIndexSets,
    InfiniteDivergence,
    NoDemand,
    NonPositiveRate,
    ZeroSupply,
)
from tegsim.metrics import (
    TokenDistribution,
    active_slots,
    entropy,
    estimate_divergence_rate,
    exchange_identity,
    inflation_ratio,
    normalize,
    relative_entropy,
    rounds_to_target,
    zeta,
    zeta_global,
)


def test_normalize_examples():
    assert normalize([2, 6, 2]).probs.tolist() == pytest.approx([0.2, 0.6, 0.2])
    assert normalize([7]).probs.tolist() == [1.0]
    with pytest.raises(ZeroSupply):
        normalize([0, 0])


def test_normalize_accepts_layer_state():
    s = LayerState.from_mapping("L", {"A": 1, "B": 3})
    assert normalize(s).probs.tolist() == [0.25, 0.75]


def test_distribution_rejects_bad_probabilities():
    with pytest.raises(ValueError):
        TokenDistribution([0.5, 0.6])
    with pytest.raises(ValueError):
        TokenDistribution([-0.1, 1.1])


def test_entropy_examples():
    assert entropy([0.25] * 4) == 2.0
    assert entropy([1, 0, 0]) == 0.0
    assert entropy([0.5, 0.25, 0.25]) == pytest.approx(1.5, abs=1e-15)


def test_relative_entropy_examples():
    assert relative_entropy([0.5, 0.5], [0.5, 0.5]) == 0.0
    assert relative_entropy([0.5, 0.5], [0.25, 0.75]) == pytest.approx(0.20752, abs=1e-5)
    assert relative_entropy([1, 0], [0, 1]) == math.inf


def test_rounds_to_target_examples():
    # D([1,0] || [.5,.5]) is exactly one bit
    assert rounds_to_target([1, 0], [0.5, 0.5], 0.25) == pytest.approx(4.0)
    assert rounds_to_target([0.3, 0.7], [0.3, 0.7], 0.01) == 0.0
    assert rounds_to_target([0.5, 0.5], [0.25, 0.75], 0.10376) == pytest.approx(2.0, abs=1e-3)


def test_rounds_to_target_errors():
    with pytest.raises(NonPositiveRate):
        rounds_to_target([1, 0], [0.5, 0.5], 0)
    with pytest.raises(InfiniteDivergence):
        rounds_to_target([1, 0], [0, 1], 1)


def test_estimate_divergence_rate_on_a_linear_approach():
    target = [0.5, 0.5]
    history = [[0.9, 0.1], [0.7, 0.3], [0.5, 0.5]]
    d0 = relative_entropy(target, [0.9, 0.1])
    assert estimate_divergence_rate(history, target) == pytest.approx(d0 / 2)
    with pytest.raises(ValueError):
        estimate_divergence_rate(history[:1], target)


def test_zeta_examples():
    rep = zeta(TransferMatrix.identity(5))
    assert (rep.zeta, rep.zeta_star) == (1.0, 0.0)
    perm = TransferMatrix.from_dense(np.roll(np.eye(4), 1, axis=0))
    assert zeta(perm).zeta == 0.0
    half = TransferMatrix.from_dense([[0.5, 0], [0.5, 1]])
    rep = zeta(half)
    assert (rep.zeta, rep.zeta_star) == (0.75, 0.25)


def test_zeta_over_active_slots():
    half = TransferMatrix.from_dense([[0.5, 0], [0.5, 1]])
    assert zeta(half, [0]).zeta == 0.5
    assert active_slots(LayerState.from_mapping("L", {"A": 0, "B": 2})) == [1]
    with pytest.raises(EmptyActiveSet):
        zeta(half, [])


def test_zeta_global_examples():
    assert zeta_global([[0.5, 0.7], [0.3, 0.9]]) == pytest.approx(0.6)
    assert zeta_global(np.ones((3, 4))) == 1.0
    assert zeta_global([[0.42]]) == 0.42
    with pytest.raises(EmptyIndexSets):
        zeta_global([])


def test_inflation_ratio_examples():
    assert inflation_ratio(0.6, 1000, 0.2, 100) == pytest.approx(5.0)
    assert inflation_ratio(1.0, 1000, 0.2, 100) == 0.0
    with pytest.raises(NoDemand):
        inflation_ratio(0.6, 1000, 1.0, 100)


def test_exchange_identity_example():
    ident = exchange_identity(1000, 0.6, 100, 0.2)
    assert ident.money_supply == 1000
    assert ident.velocity == pytest.approx(0.4)
    assert ident.price_level == pytest.approx(5.0)
    assert ident.real_expenditure == pytest.approx(80.0)
    assert ident.holds()
    assert exchange_identity(10, 0.0, 10, 0.5).velocity == 1.0


def test_swapped_roles_give_reciprocal_price():
    a = exchange_identity(1000, 0.6, 100, 0.2)
    b = exchange_identity(100, 0.2, 1000, 0.6)
    assert a.price_level * b.price_level == pytest.approx(1.0)
    assert b.holds()


probs = st.lists(st.floats(0, 10, allow_nan=False), min_size=1, max_size=12).filter(lambda v: sum(v) > 1e-6)


@given(probs)
def test_entropy_within_bounds_and_matches_oracle(v):
    p = normalize(v)
    h = entropy(p)
    assert 0.0 <= h <= math.log2(len(v))
    assert h == pytest.approx(entropy_bits(p.probs), abs=1e-9)


@given(st.integers(1, 10), probs)
def test_kl_nonnegative_and_matches_oracle(seed, v):
    p = normalize(v)
    q = normalize(np.random.default_rng(seed).random(len(v)) + 1e-3)
    d = relative_entropy(p, q)
    assert d >= 0
    assert d == pytest.approx(kl_bits(p.probs, q.probs), abs=1e-9)
    assert relative_entropy(p, p) == pytest.approx(0.0, abs=1e-12)


@given(st.integers(0, 2**32 - 1), st.integers(1, 25))
def test_zeta_stays_in_unit_interval(seed, n):
    W = random_matrix(np.random.default_rng(seed), n)
    rep = zeta(W)
    assert 0.0 <= rep.zeta <= 1.0
    assert rep.zeta + rep.zeta_star == pytest.approx(1.0)


@given(st.floats(0, 1), st.floats(1e-3, 1e6), st.floats(0, 0.999), st.floats(1e-3, 1e6))
def test_exchange_identity_always_holds(z1, c1, z2, c2):
    assert exchange_identity(c1, z1, c2, z2).holds()
