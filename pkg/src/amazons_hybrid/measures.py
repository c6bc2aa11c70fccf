"""Handcrafted position measures feeding the value networks.

Five numbers per executed action, all computed from the perspective of the
player who just moved (the node owner in the search tree):

1. adjacency territory  - share of empty squares reached strictly faster
   under king-step distances
2. line territory       - the same under queen-move distances
3. one-step mobility    - empty king neighbors of the moved piece / 8
4. line mobility        - summed queen reach of all four pieces / 4 / 35
5. position             - normalized exponential gap between the two
   sides' distance fields, queen metric up to ply 30, king metric after

All functions are pure; nothing here mutates a board state.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .board import (
    BOARD_SIZE,
    EMPTY,
    KING_NEIGHBORS,
    N_SQUARES,
    RAYS,
    BoardState,
    Square,
    _reach_indices,
    opponent,
    square_index,
)

UNREACHABLE = 1 << 20

QUEEN_MOVE = "queen"
KING_MOVE = "king"

# A lone piece on an empty board reaches at most 35 squares in one queen
# move, so 4 * 35 caps the line-mobility sum.
MAX_SINGLE_REACH = 35

# Exponent clamp for the position measure; keeps 2**(d1 - d2) finite when
# one side cannot reach a square at all.
POSITION_EXP_CLAMP = 10

# Ply threshold switching the position measure from queen to king distances.
POSITION_MODE_SWITCH_PLY = 30


@dataclass
class DistanceField:
    d: list[int]
    mode: str
    side: int

    def at(self, sq: Square) -> int:
        return self.d[sq[1] * BOARD_SIZE + sq[0]]


def distance_field(state: BoardState, side: int, mode: str) -> DistanceField:
    """Multi-source BFS distance from the side's four pieces.

    Queen mode expands whole unobstructed rays per step; king mode expands
    the 8 neighbors.  Pieces of either color and arrows block.
    """
    grid = state.grid
    d = [UNREACHABLE] * N_SQUARES
    queue = deque()
    for sq in state.pieces(side):
        i = square_index(sq)
        d[i] = 0
        queue.append(i)
    if mode == KING_MOVE:
        while queue:
            cur = queue.popleft()
            nd = d[cur] + 1
            for nb in KING_NEIGHBORS[cur]:
                if grid[nb] == EMPTY and d[nb] > nd:
                    d[nb] = nd
                    queue.append(nb)
    elif mode == QUEEN_MOVE:
        while queue:
            cur = queue.popleft()
            nd = d[cur] + 1
            for ray in RAYS[cur]:
                for t in ray:
                    if grid[t] != EMPTY:
                        break
                    if d[t] > nd:
                        d[t] = nd
                        queue.append(t)
    else:
        raise ValueError(f"unknown distance mode {mode!r}")
    return DistanceField(d, mode, side)


def _territory_from_fields(grid: bytes, mine: list[int], theirs: list[int]) -> float:
    n_me = 0
    n_opp = 0
    for i in range(N_SQUARES):
        if grid[i] != EMPTY:
            continue
        dm = mine[i]
        do = theirs[i]
        if dm < do:
            n_me += 1
        elif do < dm:
            n_opp += 1
        # ties and mutually unreachable squares count for neither side
    total = n_me + n_opp
    return 0.5 if total == 0 else n_me / total


def territory(state: BoardState, side: int, mode: str) -> float:
    """Share of contested empty squares the side reaches strictly faster."""
    mine = distance_field(state, side, mode).d
    theirs = distance_field(state, opponent(side), mode).d
    return _territory_from_fields(state.grid, mine, theirs)


def one_mobility(state: BoardState, moved_to: Square) -> float:
    """Empty king neighbors of the just-moved piece, divided by 8."""
    grid = state.grid
    free = sum(1 for nb in KING_NEIGHBORS[square_index(moved_to)] if grid[nb] == EMPTY)
    return free / 8.0


def line_mobility(state: BoardState, side: int) -> float:
    """Summed queen reach of the side's four pieces, scaled to [0, 1].

    Normalized by 4 * 35: four pieces times the 35-square ceiling of a
    single unobstructed queen.
    """
    grid = state.grid
    total = 0
    for sq in state.pieces(side):
        total += len(_reach_indices(grid, square_index(sq), -1))
    return total / (4.0 * MAX_SINGLE_REACH)


def _position_from_fields(grid: bytes, mine: list[int], theirs: list[int]) -> float:
    p = 0.0
    counted = 0
    clamp = POSITION_EXP_CLAMP
    for i in range(N_SQUARES):
        if grid[i] != EMPTY:
            continue
        dm = mine[i]
        do = theirs[i]
        if dm == UNREACHABLE and do == UNREACHABLE:
            continue
        counted += 1
        if dm == UNREACHABLE:
            e = clamp
        elif do == UNREACHABLE:
            e = -clamp
        else:
            e = dm - do
            if e > clamp:
                e = clamp
            elif e < -clamp:
                e = -clamp
        p += 2.0 ** e
    if counted == 0:
        return 0.5
    return 1.0 / (1.0 + p / counted)


def position_score(state: BoardState, turn: Optional[int] = None,
                   perspective: Optional[int] = None) -> float:
    """Distance-gap measure; larger is better for ``perspective``.

    Uses queen distances while turn <= 30 and king distances after.  The
    raw exponential sum is unbounded and smaller-is-better, so it is
    squashed through 1 / (1 + p / n) over the counted squares.
    """
    if turn is None:
        turn = state.turn
    if perspective is None:
        perspective = state.side_to_move
    mode = QUEEN_MOVE if turn <= POSITION_MODE_SWITCH_PLY else KING_MOVE
    mine = distance_field(state, perspective, mode).d
    theirs = distance_field(state, opponent(perspective), mode).d
    return _position_from_fields(state.grid, mine, theirs)


class MeasureVector(NamedTuple):
    adjacency_territory: float
    line_territory: float
    one_mobility: float
    line_mobility: float
    position: float

    def to_array(self) -> np.ndarray:
        return np.array(self, dtype=np.float64)


def action_measures(state_before: BoardState, move, state_after: BoardState) -> MeasureVector:
    """Assemble the five measures for one executed action.

    All values are taken from the mover's perspective; the mover is the
    side to move in ``state_before``.
    """
    mover = state_before.side_to_move
    other = opponent(mover)
    grid = state_after.grid

    king_me = distance_field(state_after, mover, KING_MOVE).d
    king_opp = distance_field(state_after, other, KING_MOVE).d
    queen_me = distance_field(state_after, mover, QUEEN_MOVE).d
    queen_opp = distance_field(state_after, other, QUEEN_MOVE).d

    adj = _territory_from_fields(grid, king_me, king_opp)
    line = _territory_from_fields(grid, queen_me, queen_opp)
    om = one_mobility(state_after, move.to)
    lm = line_mobility(state_after, mover)
    if state_after.turn <= POSITION_MODE_SWITCH_PLY:
        pos = _position_from_fields(grid, queen_me, queen_opp)
    else:
        pos = _position_from_fields(grid, king_me, king_opp)
    return MeasureVector(adj, line, om, lm, pos)
