"""Rules engine for the Game of the Amazons on a 10x10 board.

A position is the grid plus both piece lists, the set of arrows, the side
to move, and a ply counter.  States are immutable; ``apply_move`` returns
a fresh state, so positions can be shared freely between threads and tree
nodes.

Cell encoding on the wire (and in the digit-grid text format): 0 empty,
1 white amazon, 2 black amazon, 3 arrow.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple, Optional

BOARD_SIZE = 10
N_SQUARES = BOARD_SIZE * BOARD_SIZE

EMPTY = 0
WHITE = 1
BLACK = 2
ARROW = 3

FILE_LETTERS = "abcdefghij"

# Longest game: one arrow per ply, 100 squares minus 8 pieces.
MAX_PLIES = N_SQUARES - 8


class IllegalMove(Exception):
    """Raised when a move fails the legality re-check in apply_move."""


class ParseError(Exception):
    """Raised for malformed grid text or move notation."""


class GameStatus(Enum):
    ONGOING = "ongoing"
    WHITE_WINS = "white_wins"
    BLACK_WINS = "black_wins"


class Square(NamedTuple):
    file: int
    rank: int


class Move(NamedTuple):
    frm: Square
    to: Square
    arrow: Square


def opponent(side: int) -> int:
    return BLACK if side == WHITE else WHITE


def square_index(sq: Square) -> int:
    return sq[1] * BOARD_SIZE + sq[0]


# Fixed direction order for all ray walks: N, NE, E, SE, S, SW, W, NW.
# Reachability lists are direction-major, distance-minor in this order.
DIRECTIONS = ((0, 1), (1, 1), (1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1))


def _build_rays() -> tuple:
    rays = []
    for rank in range(BOARD_SIZE):
        for file in range(BOARD_SIZE):
            per_dir = []
            for df, dr in DIRECTIONS:
                ray = []
                f, r = file + df, rank + dr
                while 0 <= f < BOARD_SIZE and 0 <= r < BOARD_SIZE:
                    ray.append(r * BOARD_SIZE + f)
                    f += df
                    r += dr
                per_dir.append(tuple(ray))
            rays.append(tuple(per_dir))
    return tuple(rays)


RAYS = _build_rays()
INDEX_TO_SQUARE = tuple(Square(i % BOARD_SIZE, i // BOARD_SIZE) for i in range(N_SQUARES))
KING_NEIGHBORS = tuple(
    tuple(ray[0] for ray in RAYS[i] if ray) for i in range(N_SQUARES)
)


@dataclass(frozen=True)
class BoardState:
    grid: bytes
    white: tuple[Square, ...]
    black: tuple[Square, ...]
    arrows: frozenset[Square]
    side_to_move: int = WHITE
    turn: int = 0

    def pieces(self, side: int) -> tuple[Square, ...]:
        return self.white if side == WHITE else self.black

    def cell(self, sq: Square) -> int:
        return self.grid[sq[1] * BOARD_SIZE + sq[0]]


# Standard tournament setup.  Piece tuples are kept sorted by board index
# so that grid round-trips reproduce them exactly.
INITIAL_WHITE = (Square(3, 0), Square(6, 0), Square(0, 3), Square(9, 3))
INITIAL_BLACK = (Square(0, 6), Square(9, 6), Square(3, 9), Square(6, 9))


def initial_state() -> BoardState:
    grid = bytearray(N_SQUARES)
    for sq in INITIAL_WHITE:
        grid[square_index(sq)] = WHITE
    for sq in INITIAL_BLACK:
        grid[square_index(sq)] = BLACK
    return BoardState(bytes(grid), INITIAL_WHITE, INITIAL_BLACK, frozenset(), WHITE, 0)


def _reach_indices(grid: bytes, origin: int, ignore: int) -> list[int]:
    """Flat indices reachable by one queen move from ``origin``.

    ``ignore`` (or -1) is treated as empty; used for arrow rays from a
    just-moved piece whose origin square is vacated.
    """
    out = []
    append = out.append
    for ray in RAYS[origin]:
        for t in ray:
            if grid[t] != EMPTY and t != ignore:
                break
            append(t)
    return out


def queen_reachable(state: BoardState, origin: Square, ignore: Optional[Square] = None) -> list[Square]:
    """All squares reachable in one queen move, direction-major order."""
    oi = square_index(origin)
    ig = -1 if ignore is None else square_index(ignore)
    return [INDEX_TO_SQUARE[t] for t in _reach_indices(state.grid, oi, ig)]


def piece_moves(state: BoardState, piece: Square) -> list[Move]:
    """Every (move, arrow) pair for one piece of the side to move."""
    grid = state.grid
    pi = square_index(piece)
    moves = []
    append = moves.append
    sq = INDEX_TO_SQUARE
    for ray in RAYS[pi]:
        for t in ray:
            if grid[t] != EMPTY:
                break
            to_sq = sq[t]
            for aray in RAYS[t]:
                for a in aray:
                    if grid[a] != EMPTY and a != pi:
                        break
                    append(Move(piece, to_sq, sq[a]))
    return moves


def legal_moves(state: BoardState) -> list[Move]:
    """All legal moves for the side to move.

    Deterministic ordering: piece index in the piece tuple, then
    destination in ray order, then arrow in ray order.
    """
    moves = []
    for piece in state.pieces(state.side_to_move):
        moves.extend(piece_moves(state, piece))
    return moves


def _on_board(sq: Square) -> bool:
    return 0 <= sq[0] < BOARD_SIZE and 0 <= sq[1] < BOARD_SIZE


def _line_clear(grid: bytes, src: Square, dst: Square, ignore: int) -> bool:
    """True when dst is a queen move away from src over empty squares.

    Endpoints: src is not examined, dst must itself be empty (or equal to
    the ignored square).
    """
    df = dst[0] - src[0]
    dr = dst[1] - src[1]
    if df == 0 and dr == 0:
        return False
    if df != 0 and dr != 0 and abs(df) != abs(dr):
        return False
    sf = (df > 0) - (df < 0)
    sr = (dr > 0) - (dr < 0)
    step = sr * BOARD_SIZE + sf
    t = square_index(src)
    last = square_index(dst)
    while t != last:
        t += step
        if grid[t] != EMPTY and t != ignore:
            return False
    return True


def is_legal(state: BoardState, move: Move) -> bool:
    frm, to, arrow = move
    if not (_on_board(frm) and _on_board(to) and _on_board(arrow)):
        return False
    if state.cell(frm) != state.side_to_move:
        return False
    if not _line_clear(state.grid, frm, to, -1):
        return False
    return _line_clear(state.grid, to, arrow, square_index(frm))


def apply_move(state: BoardState, move: Move) -> BoardState:
    """Apply a legal move; raises IllegalMove otherwise.

    The original state is left untouched (value semantics).
    """
    if not is_legal(state, move):
        raise IllegalMove(f"illegal move {format_move(move)}")
    frm, to, arrow = move
    side = state.side_to_move
    grid = bytearray(state.grid)
    grid[square_index(frm)] = EMPTY
    grid[square_index(to)] = side
    grid[square_index(arrow)] = ARROW
    moved = tuple(sorted((to if p == frm else p for p in state.pieces(side)),
                         key=square_index))
    if side == WHITE:
        white, black = moved, state.black
    else:
        white, black = state.white, moved
    return BoardState(bytes(grid), white, black, state.arrows | {arrow},
                      opponent(side), state.turn + 1)


def has_any_move(state: BoardState, side: int) -> bool:
    """A side can move iff some piece has an empty king-step neighbor.

    One adjacent empty square always yields a full legal move: the piece
    steps there and shoots back at its vacated origin.
    """
    grid = state.grid
    for p in state.pieces(side):
        for nb in KING_NEIGHBORS[square_index(p)]:
            if grid[nb] == EMPTY:
                return True
    return False


def status(state: BoardState) -> GameStatus:
    if has_any_move(state, state.side_to_move):
        return GameStatus.ONGOING
    return GameStatus.BLACK_WINS if state.side_to_move == WHITE else GameStatus.WHITE_WINS


def random_move(state: BoardState, rng: random.Random) -> Optional[Move]:
    """Sample a legal move without enumerating the full move list.

    Picks a movable piece, then a destination, then an arrow, uniformly at
    each stage.  Returns None at terminal positions.
    """
    grid = state.grid
    pieces = state.pieces(state.side_to_move)
    for pi in rng.sample(range(len(pieces)), len(pieces)):
        piece = pieces[pi]
        origin = square_index(piece)
        dests = _reach_indices(grid, origin, -1)
        if not dests:
            continue
        t = dests[rng.randrange(len(dests))]
        arrows = _reach_indices(grid, t, origin)
        a = arrows[rng.randrange(len(arrows))]
        return Move(piece, INDEX_TO_SQUARE[t], INDEX_TO_SQUARE[a])
    return None


def check_invariants(state: BoardState) -> None:
    """Raise ValueError if the state is internally inconsistent."""
    if len(state.white) != 4 or len(state.black) != 4:
        raise ValueError("piece lists must hold exactly 4 pieces per side")
    if len(state.grid) != N_SQUARES:
        raise ValueError("grid must hold 100 cells")
    counts = {EMPTY: 0, WHITE: 0, BLACK: 0, ARROW: 0}
    for c in state.grid:
        if c not in counts:
            raise ValueError(f"invalid cell value {c}")
        counts[c] += 1
    if counts[WHITE] != 4 or counts[BLACK] != 4:
        raise ValueError("grid piece counts must be 4 per side")
    for sq in state.white:
        if state.cell(sq) != WHITE:
            raise ValueError(f"white list square {sq} does not hold a white piece")
    for sq in state.black:
        if state.cell(sq) != BLACK:
            raise ValueError(f"black list square {sq} does not hold a black piece")
    if counts[ARROW] != len(state.arrows):
        raise ValueError("arrow set inconsistent with grid")
    for sq in state.arrows:
        if state.cell(sq) != ARROW:
            raise ValueError(f"arrow set square {sq} does not hold an arrow")
    if len(state.arrows) != state.turn:
        raise ValueError("arrow count must equal the ply counter")
    if state.side_to_move not in (WHITE, BLACK):
        raise ValueError("side_to_move must be WHITE or BLACK")


def encode_grid(state: BoardState) -> str:
    """Digit-grid text: 10 lines of 10 digits, rank 9 first."""
    lines = []
    for rank in range(BOARD_SIZE - 1, -1, -1):
        base = rank * BOARD_SIZE
        lines.append("".join(str(state.grid[base + f]) for f in range(BOARD_SIZE)))
    return "\n".join(lines)


def parse_grid(text: str) -> tuple[bytes, tuple[Square, ...], tuple[Square, ...], frozenset[Square]]:
    """Parse the digit-grid text back into grid, piece lists, and arrows."""
    lines = [ln for ln in text.strip().splitlines()]
    if len(lines) != BOARD_SIZE:
        raise ParseError(f"expected 10 lines, got {len(lines)}")
    grid = bytearray(N_SQUARES)
    for li, line in enumerate(lines):
        line = line.strip()
        if len(line) != BOARD_SIZE:
            raise ParseError(f"line {li + 1} has {len(line)} characters, expected 10")
        rank = BOARD_SIZE - 1 - li
        for f, ch in enumerate(line):
            if ch not in "0123":
                raise ParseError(f"invalid cell character {ch!r}")
            grid[rank * BOARD_SIZE + f] = int(ch)
    white = tuple(INDEX_TO_SQUARE[i] for i in range(N_SQUARES) if grid[i] == WHITE)
    black = tuple(INDEX_TO_SQUARE[i] for i in range(N_SQUARES) if grid[i] == BLACK)
    arrows = frozenset(INDEX_TO_SQUARE[i] for i in range(N_SQUARES) if grid[i] == ARROW)
    return bytes(grid), white, black, arrows


def state_from_grid(text: str, side_to_move: int = WHITE, turn: Optional[int] = None) -> BoardState:
    """Build a state from grid text; turn defaults to the arrow count."""
    grid, white, black, arrows = parse_grid(text)
    if len(white) != 4 or len(black) != 4:
        raise ParseError("grid must hold exactly 4 pieces per side")
    if turn is None:
        turn = len(arrows)
    return BoardState(grid, white, black, arrows, side_to_move, turn)


def format_square(sq: Square) -> str:
    return f"{FILE_LETTERS[sq[0]]}{sq[1] + 1}"


def parse_square(text: str) -> Square:
    text = text.strip().lower()
    if len(text) < 2 or text[0] not in FILE_LETTERS:
        raise ParseError(f"bad square {text!r}")
    try:
        rank = int(text[1:])
    except ValueError:
        raise ParseError(f"bad square {text!r}") from None
    if not 1 <= rank <= BOARD_SIZE:
        raise ParseError(f"rank out of range in {text!r}")
    return Square(FILE_LETTERS.index(text[0]), rank - 1)


def format_move(move: Move) -> str:
    """Log/API notation: from-to/arrow, e.g. d1-d7/g7."""
    return f"{format_square(move.frm)}-{format_square(move.to)}/{format_square(move.arrow)}"


def parse_move(text: str) -> Move:
    try:
        rest, arrow = text.strip().split("/")
        frm, to = rest.split("-")
    except ValueError:
        raise ParseError(f"bad move notation {text!r}") from None
    return Move(parse_square(frm), parse_square(to), parse_square(arrow))
