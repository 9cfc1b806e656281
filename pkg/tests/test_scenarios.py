import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import pagerank_power, ubi_iterate
from tegsim.engine import LayerState, TransferMatrix, build_matrix_from_transactions, step_closed
from tegsim.errors import DanglingPage, EmptyGraph, TreasuryDepleted
from tegsim.scenarios import (
    ChannelPlan,
    PageRankSpec,
    UbiSpec,
    build_pagerank_game,
    new_circles,
    run_circles,
    run_lightning_scenario,
    ubi_run,
)
from tegsim.scenarios.circles import (
    CoinSwap,
    attachment_probability,
    circles_round,
    degree_distribution,
    draw_attachment,
    ownership_bipartite,
)
from tegsim.scenarios.pagerank import link_fractions, pagerank
from tegsim.scenarios.ubi import ubi_closed_form, ubi_matrix

# -- pagerank -------------------------------------------------------------------

THREE = PageRankSpec.from_edges(3, [(0, 1), (0, 2), (1, 2), (2, 0)])


def test_three_page_stationary_vector():
    x, rounds = pagerank(THREE)
    assert x.tolist() == pytest.approx([0.38779, 0.21481, 0.39740], abs=1e-4)
    assert rounds < 500


def test_pure_teleport_is_uniform():
    x, _ = pagerank(PageRankSpec(THREE.links, damping=0.0))
    assert x.tolist() == pytest.approx([1 / 3] * 3, abs=1e-12)


def test_undamped_two_cycle_is_even():
    x, _ = pagerank(PageRankSpec.from_edges(2, [(0, 1), (1, 0)], damping=1.0))
    assert x.tolist() == pytest.approx([0.5, 0.5])


def test_pagerank_game_keeps_unit_mass():
    game = build_pagerank_game(THREE).run(30)
    assert np.allclose(game.supplies(), 1.0, atol=1e-12)
    assert game.final.balances.tolist() == pytest.approx(pagerank_power(THREE.links, 0.85), abs=1e-3)


def test_dangling_page():
    spec = PageRankSpec.from_edges(3, [(0, 1), (1, 0)])
    with pytest.raises(DanglingPage):
        link_fractions(spec)
    uniform = PageRankSpec(spec.links, dangling_uniform=True)
    assert link_fractions(uniform)[:, 2].tolist() == pytest.approx([1 / 3] * 3)


def test_pagerank_spec_checks():
    with pytest.raises(ValueError):
        PageRankSpec(np.eye(2))
    with pytest.raises(ValueError):
        PageRankSpec(np.zeros((2, 2)), damping=1.5)


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.floats(0, 0.95))
def test_pagerank_matches_power_iteration(seed, n, p):
    rng = np.random.default_rng(seed)
    links = (rng.random((n, n)) < 0.5).astype(float)
    np.fill_diagonal(links, 0)
    for i in range(n):
        if links[i].sum() == 0:
            links[i, (i + 1) % n] = 1
    x, _ = pagerank(PageRankSpec(links, p))
    assert x == pytest.approx(pagerank_power(links, p), abs=1e-9)


# -- ubi ------------------------------------------------------------------------

SPEC = UbiSpec(100, 0.1, 0.5)


def test_ubi_matrix_round_zero():
    W = ubi_matrix(0, 100, SPEC)
    assert W.dense[:, 0].tolist() == pytest.approx([0.9, 0.1])
    assert W.dense[:, 1].tolist() == pytest.approx([0.5, 0.5])


def test_ubi_matrix_without_issuance_keeps_treasury():
    W = ubi_matrix(0, 100, UbiSpec(100, 0.0, 0.5))
    assert W.dense[:, 0].tolist() == [1.0, 0.0]


def test_ubi_depletion():
    with pytest.raises(TreasuryDepleted) as info:
        ubi_matrix(4, 5, SPEC)
    assert info.value.round == 4


def test_ubi_closed_form_examples():
    assert ubi_closed_form(2, SPEC) == pytest.approx((85, 15))
    assert ubi_closed_form(0, SPEC) == (100, 0)
    assert ubi_closed_form(10_000, SPEC)[1] == pytest.approx(20.0)


def test_ubi_run_two_rounds():
    assert ubi_run(SPEC, 2).final.balances.tolist() == pytest.approx([85, 15], abs=1e-12)


@given(st.floats(1, 1e4), st.floats(0, 0.2), st.floats(0, 1), st.integers(0, 30))
def test_ubi_closed_form_matches_recurrence(omega, delta, eps, j):
    spec = UbiSpec(omega, delta, eps)
    seq = ubi_iterate(omega, delta, eps, j)
    # the closed form only describes rounds the treasury could pay for
    k = len(seq) - 1
    assert ubi_closed_form(k, spec) == pytest.approx(seq[-1], rel=1e-9, abs=1e-9 * omega)


# -- lightning --------------------------------------------------------------------

MAIN = LayerState.from_mapping("main", {"A": 10, "B": 7, "C": 3})
COMMIT = {"A": 4, "B": 2}


def test_lightning_example():
    out = run_lightning_scenario(MAIN, ChannelPlan(COMMIT, [[("A", "B", 3)]]))
    assert out.final.as_dict() == pytest.approx({"A": 7, "B": 10, "C": 3})
    assert out.sub_run.final.as_dict() == pytest.approx({"A": 1, "B": 5})
    assert [s.supply() for s in out.main_states] == pytest.approx([20, 20, 20])


def test_lightning_no_sub_rounds_is_identity():
    assert run_lightning_scenario(MAIN, ChannelPlan(COMMIT)).final.as_dict() == MAIN.as_dict()


def test_lightning_identity_sub_rounds():
    plan = ChannelPlan(COMMIT, [TransferMatrix.identity(2)] * 5)
    assert run_lightning_scenario(MAIN, plan).final.as_dict() == MAIN.as_dict()


def test_lightning_pads_and_rejects_round_counts():
    out = run_lightning_scenario(MAIN, ChannelPlan(COMMIT, [[("A", "B", 1)]]), rounds=3)
    assert out.sub_run.rounds == 3
    with pytest.raises(ValueError):
        run_lightning_scenario(MAIN, ChannelPlan(COMMIT, [[], []]), rounds=1)


@given(st.lists(st.tuples(st.sampled_from("AB"), st.sampled_from("AB"), st.floats(0, 0.33)), max_size=6))
def test_sub_supply_never_exceeds_committed(txs):
    out = run_lightning_scenario(MAIN, ChannelPlan(COMMIT, [[t] for t in txs]))
    committed = sum(COMMIT.values())
    assert all(s <= committed * (1 + 1e-12) for s in out.sub_run.supplies())
    assert out.final.supply() == pytest.approx(MAIN.supply())


# -- circles ----------------------------------------------------------------------

def star():
    return nx.star_graph(3)


def test_circles_round_mints_one_per_owner():
    state = new_circles([("a", "b"), ("b", "c"), ("a", "c")])
    nxt = circles_round(state, seed=0)
    for p in "abc":
        assert nxt.balance(p, p) == 1.0
    assert len(nxt.players) == 4
    assert nxt.trust.degree("p3") == 2


def test_personal_supply_equals_age():
    history = run_circles(new_circles([("a", "b")], m=1), 12, seed=3)
    final = history[-1]
    for owner, layer in final.layers.items():
        born = next(k for k, st_ in enumerate(history) if owner in st_.layers)
        assert layer.supply() == final.round - born


def test_circles_is_seeded():
    a = run_circles(new_circles(star()), 15, seed=8)[-1]
    b = run_circles(new_circles(star()), 15, seed=8)[-1]
    assert sorted(a.trust.edges) == sorted(b.trust.edges)


def test_new_circles_checks():
    with pytest.raises(EmptyGraph):
        new_circles(nx.Graph())
    g = nx.Graph()
    g.add_nodes_from("ab")
    with pytest.raises(ValueError):
        new_circles(g)


def test_swap_policy_moves_coins_between_trusting_players():
    def policy(state, rng):
        return [CoinSwap("a", "b", "a", "b", 1.0)]

    state = new_circles([("a", "b")], m=1)
    history = run_circles(state, 3, seed=1, swap_policy=policy)
    # no trades in the first round; two 1:1 trades afterwards
    final = history[-1]
    assert final.balance("b", "a") == 2.0 and final.balance("a", "b") == 2.0
    assert final.layers["a"].supply() == 3.0


def test_attachment_probability_examples():
    assert attachment_probability(star(), 0) == 0.5
    ring = nx.cycle_graph(6)
    assert all(attachment_probability(ring, v) == pytest.approx(1 / 6) for v in ring)
    lonely = nx.Graph()
    lonely.add_node(0)
    with pytest.raises(EmptyGraph):
        attachment_probability(lonely, 0)
    with pytest.raises(EmptyGraph):
        draw_attachment(lonely, 0)


def test_degree_distribution_examples():
    assert degree_distribution(star()) == {1: 0.75, 3: 0.25}
    assert degree_distribution(nx.cycle_graph(5)) == {2: 1.0}
    assert degree_distribution(nx.Graph()) == {}


def test_ownership_after_one_way_payments():
    # five rounds of minting, then Eve pays Alice 3 of her coins and Bob pays 1
    layers = {p: LayerState.from_mapping(p, {p: 5.0}) for p in ("alice", "bob", "eve")}
    for owner, amount in (("eve", 3.0), ("bob", 1.0)):
        lay = layers[owner].with_players(["alice"])
        layers[owner] = step_closed(lay, build_matrix_from_transactions([(owner, "alice", amount)], lay))
    F = ownership_bipartite(layers)
    assert F.holdings("alice") == pytest.approx({"alice": 5, "eve": 3, "bob": 1})
    assert F.player_total("alice") == pytest.approx(9)


def test_ownership_edge_rules():
    own = {p: LayerState.from_mapping(p, {p: 2.0, "x": 0.0}) for p in "abc"}
    F = ownership_bipartite(own)
    assert set(F.edges) == {("a", "a"), ("b", "b"), ("c", "c")}
    assert nx.is_perfect_matching(F.to_networkx(), set(F.to_networkx().edges))
