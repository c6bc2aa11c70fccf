import random

import pytest

from amazons_hybrid import board
from amazons_hybrid.config import EngineConfig
from amazons_hybrid.model_io import ModelBundle


@pytest.fixture(scope="session")
def models():
    return ModelBundle.fresh(0)


@pytest.fixture
def engine_config():
    return EngineConfig(budget=16)


def play_random_plies(seed: int, plies: int) -> board.BoardState:
    """A realistic position reached by seeded random play."""
    rng = random.Random(seed)
    state = board.initial_state()
    for _ in range(plies):
        mv = board.random_move(state, rng)
        if mv is None:
            break
        state = board.apply_move(state, mv)
    return state


@pytest.fixture
def random_position():
    return play_random_plies
