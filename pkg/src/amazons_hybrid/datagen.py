"""LLM-backed labeling of executed actions and self-play dataset generation.

Each executed (move, arrow) pair is rated by a chat-completion provider
through a fixed prompt; responses are parsed strictly first, leniently
second, cached on disk by prompt hash, and retried with backoff.  A
deterministic mock provider keeps the whole pipeline runnable offline.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import random
import re
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import requests

from . import board, genetic, search
from .board import BLACK, WHITE, BoardState, Move, Square
from .config import DATAGEN_TEMPERATURE, EngineConfig, ProviderConfig
from .engine import best_search_move, extract_subgraph
from .measures import KING_MOVE, MeasureVector, action_measures, line_mobility, territory
from .model_io import ModelBundle


class ParseError(Exception):
    pass


class OutOfRange(ParseError):
    pass


class RatingUnavailable(Exception):
    pass


class AuthError(Exception):
    pass


class RateLimited(Exception):
    pass


class TransportError(Exception):
    pass


PROMPT_TEMPLATE = """Amazon is a two-player abstract strategy game that combines elements of strategy and board games. Below are the basic rules of Amazon:

1.Board and Pieces

Board: Amazon is played on a 10×10 grid.

Pieces: Each player has four "Amazons", typically distinguished by color (e.g., White vs. Black).

2.Objective

Players aim to occupy as much space as possible by moving their Amazons and firing arrows, while simultaneously blocking the opponent's mobility.

3.Rules of Play

Initial Setup: Each player's four Amazons are placed on predetermined squares of the first and last ranks.

Turn Sequence: Players alternate turns. On your turn, you perform two actions in order:

Move: Choose one of your Amazons and move it along any straight line—horizontal, vertical, or diagonal—for any number of empty squares, without jumping over other pieces.

Shoot: After moving, choose a target square along another straight line from that Amazon's new location; that square becomes permanently blocked and cannot be occupied or traversed.

Restrictions: You may not move into or shoot at squares that are already occupied or already blocked.

4.Additional Rule

Players must ensure they follow the movement and shooting rules at every step.

Please review the above rules. Now you are a professional Amazon player, and the current position is:

{board}

Here, 1 represents White Amazons, 2 represents Black Amazons, and 3 represents blocked squares. You are to evaluate the move just played by player {chess} (ID {target}): they moved the Amazon with index {step_from} to square {step_to}, then place an obstacle at {put}. Based on both the current and potential future positions, score this turn using two values (each between 0 and 1):

[move_score place_score]

A score closer to 1 favors the player; closer to 0 favors the opponent.

Please output exactly the above format and no other text."""


@dataclass(frozen=True)
class RatingRequest:
    grid_text: str           # digit grid of the position after the action
    chess: str               # "white" or "black": the player who just moved
    step_from: Square
    step_to: Square
    put: Square

    def __post_init__(self):
        if self.chess not in ("white", "black"):
            raise ValueError(f"chess must be 'white' or 'black', got {self.chess!r}")

    @property
    def target(self) -> int:
        return 1 if self.chess == "white" else 2


@dataclass
class RatingResponse:
    move_score: float
    place_score: float
    raw_text: str
    provider: str
    cached: bool = False


def request_from_action(state_before: BoardState, move: Move,
                        state_after: BoardState) -> RatingRequest:
    mover = state_before.side_to_move
    return RatingRequest(
        grid_text=board.encode_grid(state_after),
        chess="white" if mover == WHITE else "black",
        step_from=move.frm,
        step_to=move.to,
        put=move.arrow,
    )


def build_prompt(req: RatingRequest) -> str:
    """Byte-stable prompt for one rating request."""
    return PROMPT_TEMPLATE.format(
        board=req.grid_text,
        chess=req.chess,
        target=req.target,
        step_from=board.format_square(req.step_from),
        step_to=board.format_square(req.step_to),
        put=board.format_square(req.put),
    )


_NUMBER = re.compile(r"[-+]?\d*\.?\d+(?:[eE][-+]?\d+)?")
_STRICT = re.compile(
    r"^\s*\[?\s*([-+]?\d*\.?\d+)\s+([-+]?\d*\.?\d+)\s*\]?\s*$")


def parse_scores(text: str) -> tuple[float, float]:
    """Extract (move_score, place_score) from provider output.

    Strict pass: one line, optionally bracketed, two numbers.  Lenient
    pass: the first two in-range numbers anywhere in the text.  Raises
    OutOfRange when numbers exist but none fit [0, 1], ParseError when no
    usable pair is present at all.
    """
    m = _STRICT.match(text)
    if m:
        a, b = float(m.group(1)), float(m.group(2))
        if 0.0 <= a <= 1.0 and 0.0 <= b <= 1.0:
            return a, b
    found = []
    saw_number = False
    for tok in _NUMBER.findall(text):
        saw_number = True
        val = float(tok)
        if 0.0 <= val <= 1.0:
            found.append(val)
            if len(found) == 2:
                return found[0], found[1]
    if saw_number:
        raise OutOfRange(f"no pair of scores in [0, 1] found in {text!r}")
    raise ParseError(f"no scores found in {text!r}")


class HttpChatProvider:
    """OpenAI-compatible chat-completion endpoint."""

    def __init__(self, config: ProviderConfig):
        self.config = config
        self.name = config.model_name
        self._session = requests.Session()
        self._min_interval = 60.0 / max(config.requests_per_minute, 1)
        self._last_call = 0.0

    def _api_key(self) -> str:
        key = os.environ.get(self.config.api_key_env, "")
        if not key:
            raise AuthError(f"environment variable {self.config.api_key_env} is not set")
        return key

    def complete(self, prompt: str) -> str:
        wait = self._min_interval - (time.monotonic() - self._last_call)
        if wait > 0:
            time.sleep(wait)
        try:
            resp = self._session.post(
                self.config.endpoint_url,
                headers={"Authorization": f"Bearer {self._api_key()}"},
                json={
                    "model": self.config.model_name,
                    "messages": [{"role": "user", "content": prompt}],
                    "temperature": self.config.temperature,
                },
                timeout=self.config.timeout,
            )
        except requests.RequestException as exc:
            raise TransportError(str(exc)) from exc
        finally:
            self._last_call = time.monotonic()
        if resp.status_code in (401, 403):
            raise AuthError(f"provider rejected credentials ({resp.status_code})")
        if resp.status_code == 429:
            raise RateLimited("provider rate limit hit")
        if resp.status_code != 200:
            raise TransportError(f"provider returned {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, ValueError) as exc:
            raise TransportError(f"malformed provider response: {exc}") from exc

    def rate(self, req: RatingRequest) -> RatingResponse:
        raw = self.complete(build_prompt(req))
        move_score, place_score = parse_scores(raw)
        return RatingResponse(move_score, place_score, raw, self.name)


class MockProvider:
    """Deterministic offline labeler.

    move_score follows the mover's adjacency territory in the resulting
    position; place_score follows how much the arrow cut the opponent's
    line mobility.  Seedable uniform noise emulates an unreliable grader.
    """

    def __init__(self, seed: int = 0, noise: float = 0.1):
        self.seed = seed
        self.noise = noise
        self.name = "mock"

    def rate(self, req: RatingRequest) -> RatingResponse:
        state = board.state_from_grid(req.grid_text,
                                      side_to_move=WHITE if req.chess == "black" else BLACK)
        mover = WHITE if req.chess == "white" else BLACK
        move_score = territory(state, mover, KING_MOVE)
        place_score = 1.0 - line_mobility(state, board.opponent(mover))
        if self.noise > 0.0:
            digest = hashlib.sha256(f"{self.seed}:{build_prompt(req)}".encode()).digest()
            noise_rng = random.Random(int.from_bytes(digest[:8], "big"))
            move_score += noise_rng.uniform(-self.noise, self.noise)
            place_score += noise_rng.uniform(-self.noise, self.noise)
        move_score = min(1.0, max(0.0, move_score))
        place_score = min(1.0, max(0.0, place_score))
        raw = f"[{move_score:.6f} {place_score:.6f}]"
        return RatingResponse(move_score, place_score, raw, self.name)


class RatingClient:
    """Cache plus retry wrapper around any provider with a rate() method."""

    def __init__(self, provider, cache_dir=None, max_retries: int = 3,
                 backoff: float = 0.5):
        self.provider = provider
        self.cache_dir = Path(cache_dir) if cache_dir else None
        self.max_retries = max_retries
        self.backoff = backoff
        if self.cache_dir:
            self.cache_dir.mkdir(parents=True, exist_ok=True)

    def _cache_path(self, prompt: str) -> Optional[Path]:
        if not self.cache_dir:
            return None
        return self.cache_dir / (hashlib.sha256(prompt.encode()).hexdigest() + ".json")

    def rate(self, req: RatingRequest) -> RatingResponse:
        prompt = build_prompt(req)
        path = self._cache_path(prompt)
        if path is not None and path.exists():
            data = json.loads(path.read_text())
            return RatingResponse(data["move_score"], data["place_score"],
                                  data["raw_text"], data["provider"], cached=True)
        last_error: Optional[Exception] = None
        for attempt in range(self.max_retries):
            try:
                resp = self.provider.rate(req)
                break
            except (ParseError, RateLimited, TransportError) as exc:
                last_error = exc
                if attempt + 1 < self.max_retries and self.backoff > 0:
                    time.sleep(self.backoff * (2 ** attempt))
        else:
            raise RatingUnavailable(f"provider failed after {self.max_retries} attempts: {last_error}")
        if path is not None:
            tmp = path.with_suffix(".tmp")
            tmp.write_text(json.dumps({
                "move_score": resp.move_score, "place_score": resp.place_score,
                "raw_text": resp.raw_text, "provider": resp.provider,
            }))
            tmp.replace(path)
        return resp


# ---------------------------------------------------------------------------
# Dataset files

DATASET_SCHEMA = "amazons-ratings"
DATASET_VERSION = 1
GRAPH_SCHEMA = "amazons-subgraphs"


@dataclass
class DatasetRecord:
    game: int
    ply: int
    mover: str
    move: str
    grid: str
    measures: MeasureVector
    move_score: float
    place_score: float

    def to_json(self) -> str:
        return json.dumps({
            "game": self.game, "ply": self.ply, "mover": self.mover,
            "move": self.move, "grid": self.grid,
            "measures": [float(x) for x in self.measures],
            "move_score": self.move_score, "place_score": self.place_score,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "DatasetRecord":
        d = json.loads(line)
        return cls(d["game"], d["ply"], d["mover"], d["move"], d["grid"],
                   MeasureVector(*d["measures"]), d["move_score"], d["place_score"])


def _header_line(schema: str) -> str:
    return json.dumps({"schema": schema, "version": DATASET_VERSION}, sort_keys=True)


def read_dataset(path) -> list[DatasetRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("schema") != DATASET_SCHEMA:
            raise ParseError(f"unexpected dataset schema {header.get('schema')!r}")
        for line in fh:
            if line.strip():
                records.append(DatasetRecord.from_json(line))
    return records


def _existing_games(path: Path, schema: str) -> set[int]:
    if not path.exists():
        return set()
    games = set()
    with open(path, "r", encoding="utf-8") as fh:
        first = fh.readline()
        if first:
            header = json.loads(first)
            if header.get("schema") != schema:
                raise ParseError(f"refusing to append to {path}: schema mismatch")
        for line in fh:
            if line.strip():
                games.add(json.loads(line)["game"])
    return games


def _weighted_arrow(state_before: BoardState, frm: Square, to: Square,
                    rng: random.Random) -> Square:
    """Weighted-random arrow for a fixed movement.

    Candidate arrows are weighted by how much they cut the opponent's line
    mobility, softly, so placements stay diverse rather than optimal.
    """
    mover = state_before.side_to_move
    opp = board.opponent(mover)
    grid = bytearray(state_before.grid)
    fi = board.square_index(frm)
    ti = board.square_index(to)
    grid[fi] = board.EMPTY
    grid[ti] = mover
    candidates = board._reach_indices(grid, ti, -1)
    weights = []
    probe = bytearray(grid)
    opp_indices = [board.square_index(sq) for sq in state_before.pieces(opp)]
    for a in candidates:
        probe[a] = board.ARROW
        total = 0
        for oi in opp_indices:
            total += len(board._reach_indices(probe, oi, -1))
        probe[a] = board.EMPTY
        proxy = 1.0 - total / 140.0
        weights.append(math.exp(proxy / 0.25))
    pick = rng.choices(candidates, weights=weights, k=1)[0]
    return board.INDEX_TO_SQUARE[pick]


def generate_dataset(n_games: int, engine_config: EngineConfig, client: RatingClient,
                     out_path, models: Optional[ModelBundle] = None, seed: int = 0,
                     graphs_path=None, graphs_per_game: int = 8,
                     movement: str = "genetic", placement: str = "weighted-random",
                     max_plies: int = board.MAX_PLIES) -> int:
    """Self-play games labeled ply by ply; appends and resumes by game id.

    Movement comes from the evolutionary target's trajectory (search argmax
    when the walk caps out); placement is redrawn by weighted random unless
    ``placement='tree'`` keeps the searched arrow.  Returns the number of
    records written; plies whose rating is unavailable are skipped but the
    game still advances.
    """
    out_path = Path(out_path)
    models = models or ModelBundle.fresh(seed)
    config = engine_config.replace(temperature=DATAGEN_TEMPERATURE)
    done = _existing_games(out_path, DATASET_SCHEMA)
    graphs_file = Path(graphs_path) if graphs_path else None
    graphs_done = _existing_games(graphs_file, GRAPH_SCHEMA) if graphs_file else set()

    new_file = not out_path.exists()
    written = 0
    with open(out_path, "a", encoding="utf-8") as out:
        if new_file:
            out.write(_header_line(DATASET_SCHEMA) + "\n")
        graphs_out = None
        if graphs_file:
            graphs_new = not graphs_file.exists()
            graphs_out = open(graphs_file, "a", encoding="utf-8")
            if graphs_new:
                graphs_out.write(_header_line(GRAPH_SCHEMA) + "\n")
        try:
            for game in range(n_games):
                if game in done:
                    continue
                rng = random.Random(f"{seed}:{game}")
                lines, graph_lines = _play_labeled_game(
                    game, config, client, models, rng,
                    graphs_per_game if (graphs_out and game not in graphs_done) else 0,
                    movement, placement, max_plies)
                out.write("".join(lines))
                out.flush()
                if graphs_out and graph_lines:
                    graphs_out.write("".join(graph_lines))
                    graphs_out.flush()
                written += len(lines)
        finally:
            if graphs_out:
                graphs_out.close()
    return written


def _play_labeled_game(game: int, config: EngineConfig, client: RatingClient,
                       models: ModelBundle, rng: random.Random, n_graphs: int,
                       movement: str, placement: str, max_plies: int):
    state = board.initial_state()
    lines: list[str] = []
    graph_lines: list[str] = []
    ply = 0
    while board.status(state) is board.GameStatus.ONGOING and ply < max_plies:
        tree = search.run_search(state, config.budget, models, config, rng)
        search.propagate_values(tree)
        result = genetic.evolve(tree, config.walk_bias, rng, config.max_generations)
        if movement == "genetic" and result.target is not None:
            picked = genetic.trace_trajectory(tree, result.target)
        else:
            picked = best_search_move(tree).move
        if placement == "weighted-random":
            arrow = _weighted_arrow(state, picked.frm, picked.to, rng)
            picked = Move(picked.frm, picked.to, arrow)
        after = board.apply_move(state, picked)
        mv = action_measures(state, picked, after)
        req = request_from_action(state, picked, after)
        try:
            rating = client.rate(req)
            rec = DatasetRecord(
                game=game, ply=ply,
                mover="white" if state.side_to_move == WHITE else "black",
                move=board.format_move(picked), grid=req.grid_text,
                measures=mv, move_score=rating.move_score,
                place_score=rating.place_score)
            lines.append(rec.to_json() + "\n")
        except RatingUnavailable:
            pass
        if len(graph_lines) < n_graphs:
            graph_lines.append(_graph_record(game, ply, tree, models, config, result) + "\n")
        state = after
        ply += 1
    return lines, graph_lines


def _graph_record(game: int, ply: int, tree, models: ModelBundle,
                  config: EngineConfig, result) -> str:
    """Subgraph with per-node propagated values; walked rows are marked.

    Every row carries its value so the re-ranker never extrapolates blind;
    the rows the evolutionary walk actually landed on are listed separately
    and get the dominant training weight.
    """
    sub = extract_subgraph(tree, models, config.alpha, result.target)
    edges = []
    n = sub.a.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            if sub.a[i, j] > 0:
                edges.append([i, j])
    labels = {}
    visited = []
    for row, nid in sub.node_map.items():
        labels[str(row)] = round(tree.node(nid).obj, 9)
        if result.repo.counts.get(nid, 0) > 0:
            visited.append(row)
    return json.dumps({
        "game": game, "ply": ply,
        "x": [[round(float(v), 9) for v in row] for row in sub.x],
        "edges": edges, "labels": labels, "visited": sorted(visited),
        "super": sub.super_row,
    }, sort_keys=True)


@dataclass
class GraphRecord:
    x: list
    edges: list
    labels: dict        # row index -> target value
    visited: list       # rows the walk landed on (weighted up in training)


def read_graphs(path) -> list[GraphRecord]:
    records = []
    with open(path, "r", encoding="utf-8") as fh:
        header = json.loads(fh.readline())
        if header.get("schema") != GRAPH_SCHEMA:
            raise ParseError(f"unexpected graph schema {header.get('schema')!r}")
        for line in fh:
            if not line.strip():
                continue
            d = json.loads(line)
            records.append(GraphRecord(
                x=d["x"], edges=d["edges"],
                labels={int(k): v for k, v in d["labels"].items()},
                visited=list(d.get("visited", []))))
    return records
