"""One full engine turn: search, evolve, re-rank with attention, decide.

The search tree is condensed into a small graph for the attention network:
the four heads collapse into a single super-node whose feature is the mean
of the heads' (child-averaged) features, and every retained move node keeps
its mixed autoencoder feature.  The attention scores re-rank the
neighborhood of the evolutionary target; the final move is then drawn
between the plain search argmax and the re-ranked candidate.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import board, genetic, search
from .board import BoardState, Move
from .config import EngineConfig
from .model_io import ModelBundle
from .nets import GatNetwork, ae_forward
from .search import MOVE, SearchTree

SOURCE_UCT = "uct-argmax"
SOURCE_GENETIC = "genetic-gat"
SOURCE_FALLBACK = "fallback"

MAX_SUBGRAPH_ROWS = 64


class EmptyTree(Exception):
    pass


@dataclass
class Subgraph:
    x: np.ndarray                 # (n, 5) node features, super-node first
    a: np.ndarray                 # (n, n) symmetric adjacency with self-loops
    node_map: dict                # row index -> tree node id (move rows only)
    super_row: int = 0


def node_feature(mv, models: ModelBundle, alpha: float) -> np.ndarray:
    """Mixed autoencoder embedding of a measure vector (pre-head)."""
    v = mv.to_array()
    return alpha * ae_forward(models.ae_move, v) + (1.0 - alpha) * ae_forward(models.ae_place, v)


def extract_subgraph(tree: SearchTree, models: ModelBundle, alpha: float,
                     target: Optional[int] = None,
                     max_rows: int = MAX_SUBGRAPH_ROWS) -> Subgraph:
    """Rows: super-node, then move nodes on and adjacent to the path.

    With no target the whole tree is taken (up to the row cap, breadth
    first).  Head-to-child edges re-root at the super-node; all edges are
    symmetric and every row carries a self-loop.
    """
    if not tree.move_nodes():
        raise EmptyTree("no move nodes to extract")

    if target is None:
        chosen: list[int] = []
        for node in sorted(tree.move_nodes(), key=lambda n: (n.height, n.id)):
            chosen.append(node.id)
            if len(chosen) >= max_rows - 1:
                break
    else:
        path = []
        node = tree.node(target)
        while node.kind == MOVE:
            path.append(node.id)
            node = tree.node(node.parent)
        path.reverse()
        chosen = list(path)
        # the path starts at the super-node, so every first-layer node is
        # adjacent to it and joins the subgraph alongside the path's children
        first_layer = sorted(c for h in tree.heads for c in tree.node(h).children)
        for nid in first_layer:
            if nid not in chosen:
                chosen.append(nid)
        for nid in path:
            for c in tree.node(nid).children:
                if c not in chosen:
                    chosen.append(c)
        chosen = chosen[: max_rows - 1]

    included = set(chosen)
    n = len(chosen) + 1
    feats = {nid: node_feature(tree.node(nid).measures, models, alpha) for nid in chosen}

    head_feats = []
    for h in tree.heads:
        kids = tree.node(h).children
        if kids:
            head_feats.append(np.mean([node_feature(tree.node(c).measures, models, alpha)
                                       for c in kids], axis=0))
        else:
            head_feats.append(np.zeros(5))
    super_feat = np.mean(head_feats, axis=0)

    x = np.zeros((n, 5))
    x[0] = super_feat
    a = np.eye(n)
    node_map: dict[int, int] = {}
    row_of = {nid: i + 1 for i, nid in enumerate(chosen)}
    for nid in chosen:
        row = row_of[nid]
        x[row] = feats[nid]
        node_map[row] = nid
        node = tree.node(nid)
        parent = tree.node(node.parent)
        prow = 0 if parent.kind != MOVE else row_of.get(parent.id)
        if prow is not None:
            a[row, prow] = 1.0
            a[prow, row] = 1.0
    return Subgraph(x=x, a=a, node_map=node_map, super_row=0)


def gat_rank(sub: Subgraph, gat: GatNetwork) -> tuple[int, np.ndarray]:
    """Best move-node id by attention score; ties break on lowest node id."""
    scores = gat.forward(sub.x, sub.a)
    best = min(sub.node_map.items(),
               key=lambda kv: (-scores[kv[0]], kv[1]))
    return best[1], scores


@dataclass
class Candidate:
    move: Move
    value: float
    node_id: int


@dataclass
class TurnDecision:
    chosen: Move
    source: str
    uct: Candidate
    genetic: Optional[Candidate] = None
    gat_scores: dict = field(default_factory=dict)   # tree node id -> score
    tree: Optional[SearchTree] = None


def best_search_move(tree: SearchTree) -> Candidate:
    """Argmax objective over the first action layer (height 2)."""
    first_layer = [n for n in tree.move_nodes() if n.height == 2]
    if not first_layer:
        raise EmptyTree("no first-layer move nodes")
    best = min(first_layer, key=lambda n: (-n.obj, n.id))
    return Candidate(best.move, best.obj, best.id)


def decide(uct_best: Candidate, genetic_best: Optional[Candidate],
           rng: random.Random, strategy: str = "softmax") -> tuple[Candidate, str]:
    """Pick between the search argmax and the re-ranked candidate.

    softmax: sample proportionally to exp(value); argmax: higher value
    wins; always-genetic: take the re-ranked candidate whenever present.
    Without a re-ranked candidate the search argmax is the fallback.
    """
    if genetic_best is None:
        return uct_best, SOURCE_FALLBACK
    if strategy == "always-genetic":
        return genetic_best, SOURCE_GENETIC
    if strategy == "argmax":
        if genetic_best.value > uct_best.value:
            return genetic_best, SOURCE_GENETIC
        return uct_best, SOURCE_UCT
    if strategy != "softmax":
        raise ValueError(f"unknown decision strategy {strategy!r}")
    top = max(uct_best.value, genetic_best.value)
    w_uct = math.exp(uct_best.value - top)
    w_gen = math.exp(genetic_best.value - top)
    if rng.random() * (w_uct + w_gen) < w_uct:
        return uct_best, SOURCE_UCT
    return genetic_best, SOURCE_GENETIC


def play_turn(state: BoardState, models: ModelBundle, config: EngineConfig,
              rng: random.Random) -> TurnDecision:
    """Full pipeline for one turn; the chosen move is legality-checked."""
    tree = search.run_search(state, config.budget, models, config, rng)
    search.propagate_values(tree)
    result = genetic.evolve(tree, config.walk_bias, rng, config.max_generations)
    sub = extract_subgraph(tree, models, config.alpha, result.target)
    best_node, scores = gat_rank(sub, models.gat)
    gat_scores = {nid: float(scores[row]) for row, nid in sub.node_map.items()}

    genetic_best = None
    if result.target is not None:
        mv = genetic.trace_trajectory(tree, best_node)
        # value the candidate by its own first-layer node so the decision
        # compares objectives on the same depth-normalized scale
        anchor = tree.node(best_node)
        while anchor.height > 2:
            anchor = tree.node(anchor.parent)
        genetic_best = Candidate(mv, anchor.obj, best_node)

    uct_best = best_search_move(tree)
    chosen, source = decide(uct_best, genetic_best, rng, config.decision)
    if not board.is_legal(state, chosen.move):
        raise board.IllegalMove(f"engine produced illegal move {board.format_move(chosen.move)}")
    return TurnDecision(chosen=chosen.move, source=source, uct=uct_best,
                        genetic=genetic_best, gat_scores=gat_scores, tree=tree)


def analysis_payload(decision: TurnDecision) -> list[dict]:
    """Tree dump with attention scores merged in, for UIs and logs."""
    records = decision.tree.dump() if decision.tree else []
    for rec in records:
        rec["gat_score"] = decision.gat_scores.get(rec["id"])
    return records
