"""Hybrid decision engine for the Game of the Amazons."""

from .board import (
    BoardState,
    GameStatus,
    IllegalMove,
    Move,
    Square,
    apply_move,
    encode_grid,
    initial_state,
    legal_moves,
    parse_grid,
    status,
)
from .config import EngineConfig, ProviderConfig, TrainConfig
from .engine import TurnDecision, play_turn
from .measures import MeasureVector, action_measures
from .model_io import ModelBundle

__all__ = [
    "BoardState", "GameStatus", "IllegalMove", "Move", "Square",
    "apply_move", "encode_grid", "initial_state", "legal_moves",
    "parse_grid", "status",
    "EngineConfig", "ProviderConfig", "TrainConfig",
    "TurnDecision", "play_turn",
    "MeasureVector", "action_measures",
    "ModelBundle",
]

__version__ = "0.1.0"
