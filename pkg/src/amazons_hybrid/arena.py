"""Agent-vs-agent competition harness.

Agents wrap the engine pipeline at different cut points so ablations play
under identical budgets: full pipeline, search argmax only, evolutionary
walk only, attention re-rank only, an LLM move generator behind a legality
guard, and uniform random.  The harness alternates colors, re-checks every
move itself, counts an agent exception as a loss, and reports binomial
standard-error confidence intervals.
"""

from __future__ import annotations

import csv
import math
import random
import time
from dataclasses import dataclass, field
from typing import Optional

from . import board, datagen, engine, genetic, search
from .board import BLACK, WHITE, BoardState, GameStatus, Move
from .config import EngineConfig, ProviderConfig
from .measures import KING_MOVE, territory
from .model_io import ModelBundle

AGENT_KINDS = ("hybrid", "uct-ae", "genetic", "gat-ae", "llm", "random")


class AgentFailure(Exception):
    pass


@dataclass(frozen=True)
class AgentSpec:
    kind: str = "hybrid"
    node_budget: int = 20
    model_path: Optional[str] = None
    seed: int = 0
    decision: str = "softmax"
    provider: Optional[ProviderConfig] = None

    def engine_config(self) -> EngineConfig:
        return EngineConfig(budget=self.node_budget, decision=self.decision)


class RandomAgent:
    name = "random"

    def choose(self, state: BoardState, rng: random.Random) -> tuple[Move, str]:
        mv = board.random_move(state, rng)
        if mv is None:
            raise AgentFailure("no legal move available")
        return mv, "random"


class SearchAgent:
    """Shared search front end; subclasses pick the final move."""

    def __init__(self, config: EngineConfig, models: ModelBundle):
        self.config = config
        self.models = models
        self.last_tree = None        # kept for analysis endpoints
        self.last_decision = None

    def _tree(self, state: BoardState, rng: random.Random):
        tree = search.run_search(state, self.config.budget, self.models,
                                 self.config, rng)
        search.propagate_values(tree)
        self.last_tree = tree
        return tree


class UctAgent(SearchAgent):
    name = "uct-ae"

    def choose(self, state, rng):
        tree = self._tree(state, rng)
        return engine.best_search_move(tree).move, "uct-argmax"


class GeneticAgent(SearchAgent):
    name = "genetic"

    def choose(self, state, rng):
        tree = self._tree(state, rng)
        target = genetic.run_evolution(tree, self.config.walk_bias, rng,
                                       self.config.max_generations)
        if target is None:
            return engine.best_search_move(tree).move, "fallback"
        return genetic.trace_trajectory(tree, target), "genetic"


class GatAgent(SearchAgent):
    name = "gat-ae"

    def choose(self, state, rng):
        tree = self._tree(state, rng)
        sub = engine.extract_subgraph(tree, self.models, self.config.alpha, None)
        best, _ = engine.gat_rank(sub, self.models.gat)
        return genetic.trace_trajectory(tree, best), "gat"


class HybridAgent(SearchAgent):
    name = "hybrid"

    def choose(self, state, rng):
        decision = engine.play_turn(state, self.models, self.config, rng)
        self.last_tree = decision.tree
        self.last_decision = decision
        return decision.chosen, decision.source


MOVE_PROMPT = """You are playing the Game of the Amazons on a 10x10 board as {color}.
Squares are written as a file letter a-j and a rank number 1-10; a move is
written from-to/arrow, e.g. d1-d7/g7: move your amazon from d1 to d7, then
shoot an arrow to g7.  Amazons and arrows travel like chess queens and are
blocked by any occupied square; the vacated square may be shot at.

The position, top rank first (0 empty, 1 white amazon, 2 black amazon, 3 arrow):

{grid}

Your amazons stand on: {pieces}.
Reply with exactly one legal move in the from-to/arrow format and no other text.{feedback}"""


class LlmAgent:
    """Move generator backed by a chat provider, wrapped in a legality guard.

    Up to three re-prompts with explicit feedback; after that the best
    adjacency-territory legal move is played instead.
    """

    name = "llm"
    MAX_PROMPTS = 3

    def __init__(self, completer, reprompts: int = MAX_PROMPTS):
        self.completer = completer
        self.reprompts = reprompts

    def _prompt(self, state: BoardState, feedback: str) -> str:
        color = "White" if state.side_to_move == WHITE else "Black"
        pieces = ", ".join(board.format_square(sq)
                           for sq in state.pieces(state.side_to_move))
        return MOVE_PROMPT.format(color=color, grid=board.encode_grid(state),
                                  pieces=pieces, feedback=feedback)

    def choose(self, state, rng):
        feedback = ""
        for _ in range(self.reprompts):
            try:
                reply = self.completer.complete(self._prompt(state, feedback))
                mv = board.parse_move(reply)
            except (datagen.TransportError, datagen.RateLimited, board.ParseError) as exc:
                feedback = f"\nYour previous reply was invalid ({exc}); answer with one legal move only."
                continue
            if board.is_legal(state, mv):
                return mv, "llm"
            feedback = (f"\nYour previous move {board.format_move(mv)} is illegal"
                        " in this position; answer with one legal move only.")
        return self._guard_move(state), "llm-guard"

    @staticmethod
    def _guard_move(state: BoardState) -> Move:
        best_mv, best_score = None, -1.0
        for mv in board.legal_moves(state):
            after = board.apply_move(state, mv)
            score = territory(after, state.side_to_move, KING_MOVE)
            if score > best_score:
                best_mv, best_score = mv, score
        if best_mv is None:
            raise AgentFailure("no legal move available")
        return best_mv


def build_agent(spec: AgentSpec, models: Optional[ModelBundle] = None,
                completer=None):
    if spec.kind == "random":
        return RandomAgent()
    if spec.kind == "llm":
        if completer is None:
            completer = datagen.HttpChatProvider(spec.provider or ProviderConfig())
        return LlmAgent(completer)
    if models is None:
        if spec.model_path:
            models = ModelBundle.load(spec.model_path)
        else:
            models = ModelBundle.fresh(spec.seed)
    config = spec.engine_config()
    cls = {"hybrid": HybridAgent, "uct-ae": UctAgent,
           "genetic": GeneticAgent, "gat-ae": GatAgent}.get(spec.kind)
    if cls is None:
        raise ValueError(f"unknown agent kind {spec.kind!r}")
    return cls(config, models)


@dataclass
class MatchRecord:
    game_index: int
    winner: str                  # "a" or "b"
    winner_color: str
    a_color: str
    plies: int
    moves: list = field(default_factory=list)
    sources: list = field(default_factory=list)
    wall_time: float = 0.0
    failure: Optional[str] = None


def play_game(agent_a, agent_b, a_color: int, seed: int,
              max_plies: int = board.MAX_PLIES) -> MatchRecord:
    """One game; every agent move is re-checked by the harness itself."""
    rng_a = random.Random(f"a:{seed}")
    rng_b = random.Random(f"b:{seed}")
    state = board.initial_state()
    moves: list[str] = []
    sources: list[str] = []
    start = time.monotonic()
    failure = None
    winner_color: Optional[int] = None
    while len(moves) < max_plies:
        st = board.status(state)
        if st is not GameStatus.ONGOING:
            winner_color = WHITE if st is GameStatus.WHITE_WINS else BLACK
            break
        to_move = state.side_to_move
        agent, rng = (agent_a, rng_a) if to_move == a_color else (agent_b, rng_b)
        try:
            mv, source = agent.choose(state, rng)
            if not board.is_legal(state, mv):
                raise AgentFailure(f"agent returned illegal move {board.format_move(mv)}")
        except Exception as exc:  # noqa: BLE001 - a broken agent forfeits
            failure = f"{type(exc).__name__}: {exc}"
            winner_color = board.opponent(to_move)
            break
        state = board.apply_move(state, mv)
        moves.append(board.format_move(mv))
        sources.append(source)
    if winner_color is None:
        st = board.status(state)
        winner_color = WHITE if st is GameStatus.WHITE_WINS else BLACK
    winner = "a" if winner_color == a_color else "b"
    return MatchRecord(
        game_index=0, winner=winner,
        winner_color="white" if winner_color == WHITE else "black",
        a_color="white" if a_color == WHITE else "black",
        plies=len(moves), moves=moves, sources=sources,
        wall_time=time.monotonic() - start, failure=failure)


@dataclass
class MatchSummary:
    n_games: int
    wins_a: int
    wins_b: int
    win_rate_a: float
    ci_lo: float
    ci_hi: float
    curve: list = field(default_factory=list)   # running win rate of agent a


def win_rate_ci(wins: int, n: int, z: float = 1.96) -> tuple[float, float, float]:
    """Binomial standard-error interval, clamped to [0, 1]."""
    if n < 1 or not 0 <= wins <= n:
        raise ValueError("need 0 <= wins <= n and n >= 1")
    p = wins / n
    half = z * math.sqrt(p * (1.0 - p) / n)
    return p, max(0.0, p - half), min(1.0, p + half)


def run_match(agent_a, agent_b, n_games: int, seed: int = 0,
              progress=None) -> tuple[list[MatchRecord], MatchSummary]:
    """Independent games with alternating colors and derived seeds."""
    if n_games < 1:
        raise ValueError("n_games must be >= 1")
    records = []
    wins_a = 0
    curve = []
    for i in range(n_games):
        a_color = WHITE if i % 2 == 0 else BLACK
        rec = play_game(agent_a, agent_b, a_color, seed=seed * 1_000_003 + i)
        rec.game_index = i
        records.append(rec)
        if rec.winner == "a":
            wins_a += 1
        curve.append(wins_a / (i + 1))
        if progress:
            progress(i + 1, n_games, rec)
    p, lo, hi = win_rate_ci(wins_a, n_games)
    summary = MatchSummary(n_games=n_games, wins_a=wins_a, wins_b=n_games - wins_a,
                           win_rate_a=p, ci_lo=lo, ci_hi=hi, curve=curve)
    return records, summary


def emit_report(records: list[MatchRecord], summary: MatchSummary, out_dir,
                label_a: str = "a", label_b: str = "b") -> list[str]:
    """Stable CSVs: running win-rate curve, CI summary, per-game log."""
    if not records:
        raise ValueError("no records to report")
    from pathlib import Path
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []

    curve_path = out / "win_curve.csv"
    with open(curve_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["game", "winner", "running_win_rate_a"])
        for rec, rate in zip(records, summary.curve):
            writer.writerow([rec.game_index, rec.winner, f"{rate:.6f}"])
    paths.append(str(curve_path))

    ci_path = out / "ci_summary.csv"
    with open(ci_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["agent_a", "agent_b", "games", "wins_a", "win_rate_a",
                         "ci_lo", "ci_hi"])
        writer.writerow([label_a, label_b, summary.n_games, summary.wins_a,
                         f"{summary.win_rate_a:.6f}", f"{summary.ci_lo:.6f}",
                         f"{summary.ci_hi:.6f}"])
    paths.append(str(ci_path))

    games_path = out / "games.csv"
    with open(games_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["game", "a_color", "winner", "winner_color", "plies",
                         "failure", "moves"])
        for rec in records:
            writer.writerow([rec.game_index, rec.a_color, rec.winner,
                             rec.winner_color, rec.plies, rec.failure or "",
                             " ".join(rec.moves)])
    paths.append(str(games_path))
    return paths
