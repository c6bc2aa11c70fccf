"""UCT search with learned value reshaping and two-pass value propagation.

The tree roots at four head nodes, one per amazon of the side to move;
every other node is a full action (move plus arrow).  Child selection is
softmax-randomized over modified UCB scores.  A new leaf is valued by the
mixed, squashed readout of the two scorers instead of a playout (random
rollouts remain available behind a config flag).

After the search, ``propagate_values`` runs the two-pass update: a
bottom-up accumulation whose form alternates with height parity, then a
top-down division that discounts values by their distance from the deepest
layer, putting all heights on a comparable scale.
"""

from __future__ import annotations

import math
import random
import time
from dataclasses import dataclass, field
from typing import Optional

from . import board
from .board import BoardState, GameStatus, Move
from .config import EngineConfig
from .measures import MeasureVector, action_measures
from .model_io import ModelBundle
from .nets import score, squash

HEAD = "head"
MOVE = "move"


class NoLegalMoves(Exception):
    """Raised when a search is requested at a terminal position."""


class AlreadyPropagated(Exception):
    """propagate_values must run exactly once per tree."""


@dataclass
class SearchNode:
    id: int
    kind: str                      # HEAD or MOVE
    height: int                    # head layer = 1
    state: BoardState
    parent: Optional[int] = None
    piece_index: Optional[int] = None      # head nodes
    move: Optional[Move] = None            # move nodes
    measures: Optional[MeasureVector] = None
    obj: float = 0.0
    visits: int = 0
    children: list = field(default_factory=list)
    untried: Optional[list] = None # None until first expansion from this node
    exhausted: bool = False


class SearchTree:
    def __init__(self, root_state: BoardState):
        self.root_state = root_state
        self.nodes: list[SearchNode] = []
        self.heads: list[int] = []
        self.total_visits = 0
        self.h_max = 1
        self.propagated = False
        self.propagation_stats: Optional[dict] = None

    def node(self, nid: int) -> SearchNode:
        return self.nodes[nid]

    def add_node(self, node: SearchNode) -> int:
        node.id = len(self.nodes)
        self.nodes.append(node)
        if node.height > self.h_max:
            self.h_max = node.height
        return node.id

    def move_nodes(self) -> list[SearchNode]:
        return [n for n in self.nodes if n.kind == MOVE]

    def dump(self) -> list[dict]:
        """One record per node, for debugging and the analysis endpoint."""
        records = []
        for n in self.nodes:
            records.append({
                "id": n.id,
                "parent": n.parent,
                "kind": n.kind,
                "move": board.format_move(n.move) if n.move else None,
                "height": n.height,
                "visits": n.visits,
                "obj": n.obj,
                "measures": list(n.measures) if n.measures else None,
            })
        return records


def exploration_term(total_visits: int, visits: int) -> float:
    """sqrt(2 ln n / (n_j + 1)); finite at zero visits thanks to the +1."""
    return math.sqrt(2.0 * math.log(total_visits) / (visits + 1))


def ucb(node: SearchNode, total_visits: int, models: ModelBundle) -> float:
    """Raw movement readout plus the exploration term."""
    return (score(models.ae_move, models.head_move, node.measures.to_array())
            + exploration_term(total_visits, node.visits))


def model_value(mv: MeasureVector, models: ModelBundle, alpha: float) -> float:
    """Mixed, squashed readout of both scorers; always in (0, 1)."""
    v = mv.to_array()
    s_move = squash(score(models.ae_move, models.head_move, v))
    s_place = squash(score(models.ae_place, models.head_place, v))
    return alpha * s_move + (1.0 - alpha) * s_place


def node_value(node: SearchNode, models: ModelBundle, alpha: float,
               total_visits: int) -> float:
    """Full selection value: mixed squashed readout plus exploration.

    The squashed model part alone is stored into node.obj; the exploration
    term varies with visit counts and is never persisted.
    """
    part = model_value(node.measures, models, alpha)
    node.obj = part
    return part + exploration_term(max(total_visits, 1), node.visits)


def _softmax_pick(scores: list[float], temperature: float, rng: random.Random) -> int:
    if len(scores) == 1:
        return 0
    if temperature <= 0.0:
        return max(range(len(scores)), key=lambda i: (scores[i], -i))
    top = max(scores)
    weights = [math.exp((s - top) / temperature) for s in scores]
    total = sum(weights)
    x = rng.random() * total
    acc = 0.0
    for i, w in enumerate(weights):
        acc += w
        if x < acc:
            return i
    return len(scores) - 1


def select_child(tree: SearchTree, node: SearchNode, models: ModelBundle,
                 temperature: float, rng: random.Random) -> int:
    """Sample a child id with probability softmax(UCB / temperature)."""
    total = max(tree.total_visits, 1)
    scores = [ucb(tree.node(c), total, models) for c in node.children]
    return node.children[_softmax_pick(scores, temperature, rng)]


def _head_ucb(tree: SearchTree, head: SearchNode) -> float:
    # Heads carry no measures; their exploitation term is the mean value of
    # their expanded children.
    if head.children:
        exploit = sum(tree.node(c).obj for c in head.children) / len(head.children)
    else:
        exploit = 0.0
    return exploit + exploration_term(max(tree.total_visits, 1), head.visits)


def _random_piece_move(state: BoardState, piece, rng: random.Random) -> Optional[Move]:
    grid = state.grid
    origin = board.square_index(piece)
    dests = board._reach_indices(grid, origin, -1)
    if not dests:
        return None
    t = dests[rng.randrange(len(dests))]
    arrows = board._reach_indices(grid, t, origin)
    a = arrows[rng.randrange(len(arrows))]
    return Move(piece, board.INDEX_TO_SQUARE[t], board.INDEX_TO_SQUARE[a])


def _static_action_score(state: BoardState, mv: Move) -> float:
    """Cheap post-action heuristic used to rank expansion candidates.

    Mover's piece freedom after the move plus how much the arrow and the
    new blockage cramp the opponent's queen reach; no distance fields, so
    it costs a few ray scans per candidate.
    """
    mover = state.side_to_move
    opp = board.opponent(mover)
    empty = board.EMPTY
    grid = bytearray(state.grid)
    grid[board.square_index(mv.frm)] = empty
    ti = board.square_index(mv.to)
    grid[ti] = mover
    grid[board.square_index(mv.arrow)] = board.ARROW
    free = 0
    for nb in board.KING_NEIGHBORS[ti]:
        if grid[nb] == empty:
            free += 1
    opp_reach = 0
    for sq in state.pieces(opp):
        opp_reach += len(board._reach_indices(grid, board.square_index(sq), -1))
    return free / 8.0 + (1.0 - opp_reach / 140.0)


class _Expander:
    """Tracks explored children per node and yields fresh actions.

    Each expansion samples up to ``pool`` unexplored actions and returns
    the best under the static heuristic; the full move list is only
    materialized when sampling keeps colliding with existing children.
    """

    def __init__(self, rng: random.Random, pool: int):
        self.rng = rng
        self.pool = max(pool, 1)
        self.seen: dict[int, set] = {}

    def _candidates(self, tree: SearchTree, node: SearchNode) -> list[Move]:
        if node.kind == HEAD:
            piece = tree.root_state.pieces(tree.root_state.side_to_move)[node.piece_index]
            return board.piece_moves(tree.root_state, piece)
        return board.legal_moves(node.state)

    def _sample(self, state: BoardState, node: SearchNode, seen: set) -> list[Move]:
        out = []
        for _ in range(self.pool * 3):
            if len(out) >= self.pool:
                break
            if node.kind == HEAD:
                piece = state.pieces(state.side_to_move)[node.piece_index]
                mv = _random_piece_move(state, piece, self.rng)
            else:
                mv = board.random_move(state, self.rng)
            if mv is None:
                break
            if mv not in seen and mv not in out:
                out.append(mv)
        return out

    def next_action(self, tree: SearchTree, node: SearchNode) -> Optional[Move]:
        if node.exhausted:
            return None
        seen = self.seen.setdefault(node.id, set())
        state = tree.root_state if node.kind == HEAD else node.state
        if node.untried is None:
            pool = self._sample(state, node, seen)
            if pool:
                mv = max(pool, key=lambda m: _static_action_score(state, m))
                seen.add(mv)
                return mv
            node.untried = [m for m in self._candidates(tree, node) if m not in seen]
        if not node.untried:
            node.exhausted = True
            return None
        indices = self.rng.sample(range(len(node.untried)),
                                  min(self.pool, len(node.untried)))
        best_index = max(indices,
                         key=lambda i: _static_action_score(state, node.untried[i]))
        mv = node.untried.pop(best_index)
        seen.add(mv)
        return mv


def _rollout_value(state: BoardState, owner: int, cap: int, rng: random.Random) -> float:
    """Random playout from ``state``; 1.0 if the node owner ends up winning."""
    cur = state
    for _ in range(cap):
        mv = board.random_move(cur, rng)
        if mv is None:
            break
        cur = board.apply_move(cur, mv)
    st = board.status(cur)
    if st is GameStatus.ONGOING:
        # undecided at the cap: fall back to a mobility comparison
        mine = board.has_any_move(cur, owner)
        theirs = board.has_any_move(cur, board.opponent(owner))
        return 0.5 if mine == theirs else (1.0 if mine else 0.0)
    winner = board.WHITE if st is GameStatus.WHITE_WINS else board.BLACK
    return 1.0 if winner == owner else 0.0


def run_search(state: BoardState, budget: int, models: ModelBundle,
               config: EngineConfig, rng: random.Random,
               time_limit: Optional[float] = None) -> SearchTree:
    """Grow a tree of up to ``budget`` move nodes under the four heads.

    Each iteration descends from the heads by softmax-UCB; at a node that
    still has unexplored actions it either expands one of them or, with
    probability ``config.descend_bias``, keeps descending into an existing
    child so that small budgets still probe deeper layers.  Visit counts
    are backtracked along the path every iteration.
    """
    if board.status(state) is not GameStatus.ONGOING:
        raise NoLegalMoves("no legal moves at the search root")
    if budget < 1:
        raise ValueError("budget must be at least 1")
    if time_limit is None:
        time_limit = config.time_limit
    deadline = None if time_limit is None else time.monotonic() + time_limit

    tree = SearchTree(state)
    for i in range(len(state.pieces(state.side_to_move))):
        head = SearchNode(id=-1, kind=HEAD, height=1, state=state, piece_index=i)
        tree.heads.append(tree.add_node(head))

    expander = _Expander(rng, config.expand_pool)
    created = 0
    stall_guard = 0
    max_stalls = budget * 20 + 40
    while created < budget and stall_guard < max_stalls:
        if deadline is not None and time.monotonic() >= deadline:
            break
        live = [h for h in tree.heads
                if not (tree.node(h).exhausted and not tree.node(h).children)]
        if not live:
            break
        head_scores = [_head_ucb(tree, tree.node(h)) for h in live]
        current = tree.node(live[_softmax_pick(head_scores, config.temperature, rng)])
        path = [current]
        new_node = None
        while True:
            action = None
            want_expand = True
            if current.children and rng.random() < config.descend_bias:
                want_expand = False
            if want_expand:
                action = expander.next_action(tree, current)
            if action is not None:
                after = board.apply_move(current.state, action)
                child = SearchNode(
                    id=-1, kind=MOVE, height=current.height + 1, state=after,
                    parent=current.id, move=action,
                    measures=action_measures(current.state, action, after),
                )
                child.id = tree.add_node(child)
                current.children.append(child.id)
                if board.status(after) is not GameStatus.ONGOING:
                    # the mover sealed the opponent: decisive leaf
                    child.obj = 1.0
                    child.exhausted = True
                elif config.rollout == "random":
                    mover = current.state.side_to_move
                    child.obj = _rollout_value(after, mover, config.rollout_cap, rng)
                else:
                    node_value(child, models, config.alpha, tree.total_visits)
                new_node = child
                path.append(child)
                created += 1
                break
            if current.children:
                current = tree.node(select_child(tree, current, models,
                                                 config.temperature, rng))
                path.append(current)
                continue
            break  # saturated branch: nothing to expand, nothing to enter
        if new_node is None:
            stall_guard += 1
        tree.total_visits += 1
        for n in path:
            n.visits += 1
    return tree


def propagate_values(tree: SearchTree) -> None:
    """Two-pass, in-place update of every node's objective value.

    Pass one walks bottom-up: each internal node takes the mean of its
    children's values and adds it directly at even heights, or folded
    through 2**(-mean) at odd heights, so a fully losing opponent layer
    still returns a reward of one to its parent.  Pass two divides every
    value by (H_max + 1 - height), discounting shallow accumulations by
    the number of layers they aggregate.
    """
    if tree.propagated:
        raise AlreadyPropagated("propagate_values already ran on this tree")
    if not tree.nodes:
        raise ValueError("empty tree")
    pass1 = 0
    for node in sorted(tree.nodes, key=lambda n: (-n.height, n.id)):
        if not node.children:
            continue
        mean = sum(tree.node(c).obj for c in node.children) / len(node.children)
        if node.height % 2 == 0:
            node.obj += mean
        else:
            node.obj += 2.0 ** (-mean)
        pass1 += 1
    h_max = max(n.height for n in tree.nodes)
    tree.h_max = h_max
    pass2 = 0
    for node in tree.nodes:
        node.obj /= (h_max + 1 - node.height)
        pass2 += 1
    tree.propagated = True
    tree.propagation_stats = {"pass1_updates": pass1, "pass2_updates": pass2}
