"""Reference games: PageRank, UBI, payment channels and personal currencies."""

from .circles import (
    CirclesState,
    CoinSwap,
    attachment_probabilities,
    attachment_probability,
    circles_round,
    degree_distribution,
    degree_tail_slope,
    draw_attachment,
    grow_trust_graph,
    new_circles,
    ownership_bipartite,
    run_circles,
)
from .lightning import ChannelPlan, LightningResult, run_lightning_scenario, transfer_matrix_for
from .pagerank import PageRankGame, PageRankSpec, build_pagerank_game, link_fractions, pagerank
from .ubi import UbiSpec, ubi_closed_form, ubi_initial, ubi_matrix, ubi_provider, ubi_run

__all__ = [
    "CirclesState", "CoinSwap", "attachment_probabilities", "attachment_probability", "circles_round",
    "degree_distribution", "degree_tail_slope", "draw_attachment", "grow_trust_graph", "new_circles",
    "ownership_bipartite", "run_circles",
    "ChannelPlan", "LightningResult", "run_lightning_scenario", "transfer_matrix_for",
    "PageRankGame", "PageRankSpec", "build_pagerank_game", "link_fractions", "pagerank",
    "UbiSpec", "ubi_closed_form", "ubi_initial", "ubi_matrix", "ubi_provider", "ubi_run",
]
