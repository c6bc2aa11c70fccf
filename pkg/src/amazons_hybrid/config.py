"""Dataclass configs shared across search, data generation, and the arena."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional


@dataclass(frozen=True)
class EngineConfig:
    """Knobs for one engine turn: search, the evolutionary walk, decision."""

    budget: int = 20                 # move nodes created per search
    alpha: float = 0.5               # movement/placement mix in the node value
    temperature: float = 0.1         # softmax temperature for in-tree selection
    descend_bias: float = 0.5        # chance to follow an existing child over expanding a sibling
    expand_pool: int = 8             # candidate actions sampled and ranked per expansion
    rollout: str = "none"            # none | random
    rollout_cap: int = 24            # ply cap for random rollouts
    walk_bias: float = 0.8           # chance the walk steps to a child rather than the parent
    max_generations: int = 50000     # hard cap on evolutionary iterations
    decision: str = "softmax"        # softmax | argmax | always-genetic
    time_limit: Optional[float] = None

    def replace(self, **kw) -> "EngineConfig":
        return replace(self, **kw)


# Softmax temperature used while generating training data; deliberately
# hotter than play so simulations cover diverse scenarios.
DATAGEN_TEMPERATURE = 1.0


@dataclass(frozen=True)
class ProviderConfig:
    endpoint_url: str = "https://api.openai.com/v1/chat/completions"
    api_key_env: str = "OPENAI_API_KEY"
    model_name: str = "gpt-4o-mini"
    temperature: float = 0.0
    max_retries: int = 3
    timeout: float = 30.0
    requests_per_minute: int = 60


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 2
    batch_size: int = 32
    seed: int = 0
    uct_lr: float = 0.01             # Adam, movement/placement scorers
    gat_lr: float = 0.0001           # RMSprop, graph re-ranker
    recon_weight: float = 0.1        # auxiliary reconstruction term on the autoencoders
    gat_anchor_weight: float = 0.25  # training weight of rows the walk never reached
    holdout_fraction: float = 0.1
    smoothing_window: int = 50
    tail_start: int = 50             # first iteration used for variance comparison


def parse_config_file(path) -> dict[str, str]:
    """Read a plain ``key = value`` config file; '#' starts a comment."""
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def write_config_file(path, values: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for key in sorted(values):
            fh.write(f"{key} = {values[key]}\n")
