"""Evolutionary walk over the search tree viewed as a graph.

The four head nodes are linked pairwise into a ring, turning the tree into
a connected graph.  A repository seeded with the two best move nodes then
drives generations of: softmax selection of two candidates, one biased
random-walk step for each (child with probability ``walk_bias``, parent
otherwise; heads step to a ring peer instead of a parent), and a crossover
that deposits one extra entry whenever both walkers land on the same node.

The loop stops at the first move node whose hit count reaches
2**(H_max - height + 1), i.e. deeper nodes need exponentially fewer hits,
or returns None when the generation cap runs out.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from typing import Optional

from .board import Move
from .search import HEAD, MOVE, SearchTree

MAX_GENERATIONS = 50000
WALK_BIAS = 0.8


class EmptyTree(Exception):
    pass


class TargetIsHead(Exception):
    pass


class GraphView:
    """Neighborhood structure: tree edges plus the head ring."""

    def __init__(self, tree: SearchTree):
        self.tree = tree

    def is_head(self, nid: int) -> bool:
        return self.tree.node(nid).kind == HEAD

    def children(self, nid: int) -> list[int]:
        return self.tree.node(nid).children

    def up_targets(self, nid: int) -> list[int]:
        node = self.tree.node(nid)
        if node.kind == HEAD:
            return [h for h in self.tree.heads if h != nid]
        return [node.parent]


@dataclass
class GeneticRepository:
    """Multiset of visited node ids plus per-node hit counts."""

    entries: list[int] = field(default_factory=list)
    counts: dict[int, int] = field(default_factory=dict)
    counter: int = 0

    def record(self, nid: int) -> None:
        self.entries.append(nid)
        self.counts[nid] = self.counts.get(nid, 0) + 1


def init_repository(tree: SearchTree) -> GeneticRepository:
    """Seed with the two best move nodes; a lone node is entered twice."""
    move_nodes = tree.move_nodes()
    if not move_nodes:
        raise EmptyTree("search tree holds no move nodes")
    ranked = sorted(move_nodes, key=lambda n: (-n.obj, n.id))
    repo = GeneticRepository()
    if len(ranked) == 1:
        repo.record(ranked[0].id)
        repo.record(ranked[0].id)
    else:
        repo.record(ranked[0].id)
        repo.record(ranked[1].id)
    return repo


def select_pair(repo: GeneticRepository, tree: SearchTree,
                rng: random.Random) -> tuple[int, int]:
    """Two independent softmax draws over the repository entries.

    An entry's weight is exp(obj); multiplicities accumulate, so the draw
    over unique ids uses count * exp(obj).
    """
    ids = list(repo.counts)
    top = max(tree.node(i).obj for i in ids)
    weights = [repo.counts[i] * math.exp(tree.node(i).obj - top) for i in ids]
    total = sum(weights)

    def draw() -> int:
        x = rng.random() * total
        acc = 0.0
        for i, w in zip(ids, weights):
            acc += w
            if x < acc:
                return i
        return ids[-1]

    return draw(), draw()


def walk_step(view: GraphView, nid: int, walk_bias: float, rng: random.Random) -> int:
    """One biased step; falls back to the other direction at dead ends."""
    down = view.children(nid)
    up = view.up_targets(nid)
    if rng.random() < walk_bias:
        pool = down if down else up
    else:
        pool = up if up else down
    return pool[rng.randrange(len(pool))]


def mutate(view: GraphView, repo: GeneticRepository, nid: int,
           walk_bias: float, rng: random.Random) -> int:
    """Walk one step and record the landing node in the repository."""
    target = walk_step(view, nid, walk_bias, rng)
    repo.record(target)
    return target


def crossover(repo: GeneticRepository, c1: int, c2: int) -> Optional[int]:
    """Same landing node: deposit one extra entry of it; else nothing."""
    if c1 != c2:
        return None
    repo.record(c1)
    return c1


def hit_threshold(height: int, h_max: int) -> int:
    return 2 ** (h_max - height + 1)


@dataclass
class EvolutionResult:
    target: Optional[int]
    repo: GeneticRepository
    generations: int


def evolve(tree: SearchTree, walk_bias: float = WALK_BIAS,
           rng: Optional[random.Random] = None,
           max_generations: int = MAX_GENERATIONS,
           trace: Optional[list] = None) -> EvolutionResult:
    """Run the full loop; result carries the repository for inspection.

    Only move nodes can terminate the loop: head nodes carry no action to
    trace back, so their hit counts are ignored by the stopping rule.
    """
    if not tree.propagated:
        raise ValueError("tree must be propagated before evolving")
    rng = rng or random.Random()
    repo = init_repository(tree)
    view = GraphView(tree)
    h_max = tree.h_max

    def hit(nid: int) -> bool:
        node = tree.node(nid)
        return node.kind == MOVE and repo.counts[nid] >= hit_threshold(node.height, h_max)

    for nid in sorted(repo.counts, key=lambda i: (-repo.counts[i], i)):
        if hit(nid):
            return EvolutionResult(nid, repo, 0)

    while repo.counter < max_generations:
        repo.counter += 1
        c1, c2 = select_pair(repo, tree, rng)
        m1 = mutate(view, repo, c1, walk_bias, rng)
        m2 = mutate(view, repo, c2, walk_bias, rng)
        crossed = crossover(repo, m1, m2)
        if trace is not None:
            trace.append({"generation": repo.counter, "selected": (c1, c2),
                          "walked": (m1, m2), "crossover": crossed is not None})
        for nid in (m1, m2):
            if hit(nid):
                return EvolutionResult(nid, repo, repo.counter)
    return EvolutionResult(None, repo, repo.counter)


def run_evolution(tree: SearchTree, walk_bias: float = WALK_BIAS,
                  rng: Optional[random.Random] = None,
                  max_generations: int = MAX_GENERATIONS) -> Optional[int]:
    """Convenience wrapper returning just the target node id (or None)."""
    return evolve(tree, walk_bias, rng, max_generations).target


def trace_trajectory(tree: SearchTree, target: int) -> Move:
    """First action on the path from the heads to ``target``."""
    node = tree.node(target)
    if node.kind == HEAD:
        raise TargetIsHead(f"node {target} is a head node")
    while node.height > 2:
        node = tree.node(node.parent)
    return node.move
