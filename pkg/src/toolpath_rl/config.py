"""Run configuration: a flat key=value file mapped onto one dataclass.

Every key has a default; unknown keys are rejected so typos fail loudly.
Booleans accept true/false, tuples of ints are comma-separated.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path


@dataclass
class TrainConfig:
    # Run identity / environment
    algorithm: str = "dqn"  # dqn | ppo | sac
    reward_mode: str = "dense"  # dense | sparse
    grid_size: int = 32
    horizon: int = 400
    seed: int = 0
    sections_dir: str = ""  # empty -> procedural generation
    n_sections: int = 10
    section_shapes: str = "rectangle,ellipse"
    holdout_fraction: float = 0.0
    nozzle_channel: bool = False

    # Budgets and evaluation cadence
    # Bootstrap TD/GAE targets through horizon truncation (the observation
    # carries no step counter, so treating truncation as terminal makes
    # value targets depend on unobservable remaining time).
    horizon_bootstrap: bool = True

    total_steps: int = 200_000  # env steps (all algorithms)
    total_episodes: int = 0  # PPO only; overrides total_steps when > 0
    eval_interval: int = 5_000  # env steps between evaluations (dqn/sac)
    ppo_eval_every_iters: int = 10
    eval_episodes: int = 16
    timing_enabled: bool = True

    # Network
    conv_channels: str = "16,32,32"
    conv_strides: str = "2,2,1"
    hidden: int = 128

    # Shared agent hyperparameters
    lr: float = 3e-4
    lr_final_frac: float = 1.0  # 1.0 = constant lr; <1 decays linearly over the run
    gamma: float = 0.99
    clip_norm: float = 0.5

    # DQN / SAC (off-policy)
    batch_size: int = 64
    buffer_capacity: int = 100_000
    learning_starts: int = 1_000
    tau: float = 0.005
    train_every: int = 1
    gradient_steps: int = 1
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_frac: float = 0.2

    # PPO
    n_streams: int = 8
    rollout_steps: int = 256
    ppo_epochs: int = 4
    minibatch_size: int = 512
    clip_eps: float = 0.2
    c_value: float = 0.5
    c_entropy: float = 0.01
    gae_lambda: float = 0.95
    adv_norm: bool = True

    # SAC
    alpha_lr: float = 3e-4
    gumbel_temperature: float = 1.0
    target_entropy_scale: float = 0.98

    def __post_init__(self):
        if self.algorithm not in ("dqn", "ppo", "sac"):
            raise ValueError(f"unknown algorithm {self.algorithm!r}")
        if self.reward_mode not in ("dense", "sparse"):
            raise ValueError(f"unknown reward mode {self.reward_mode!r}")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")

    @property
    def conv_channel_tuple(self) -> tuple[int, ...]:
        return tuple(int(c) for c in self.conv_channels.split(","))

    @property
    def conv_stride_tuple(self) -> tuple[int, ...]:
        return tuple(int(s) for s in self.conv_strides.split(","))

    @property
    def shape_kind_tuple(self) -> tuple[str, ...]:
        return tuple(s.strip() for s in self.section_shapes.split(",") if s.strip())


def _parse_value(raw: str, field_type: type):
    raw = raw.strip()
    if field_type is bool:
        if raw.lower() in ("true", "1", "yes", "on"):
            return True
        if raw.lower() in ("false", "0", "no", "off"):
            return False
        raise ValueError(f"expected boolean, got {raw!r}")
    if field_type is int:
        return int(raw)
    if field_type is float:
        return float(raw)
    return raw


def parse_config(text: str, **overrides) -> TrainConfig:
    """Parse ``key = value`` lines ('#' starts a comment) into a TrainConfig."""
    fields = {f.name: f for f in dataclasses.fields(TrainConfig)}
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in fields:
            raise ValueError(f"line {lineno}: unknown config key {key!r}")
        values[key] = _parse_value(raw, type(fields[key].default))
    values.update(overrides)
    return TrainConfig(**values)


def load_config(path: str | Path, **overrides) -> TrainConfig:
    return parse_config(Path(path).read_text(), **overrides)


def serialize_config(config: TrainConfig) -> str:
    lines = []
    for f in dataclasses.fields(TrainConfig):
        value = getattr(config, f.name)
        if isinstance(value, bool):
            value = "true" if value else "false"
        lines.append(f"{f.name} = {value}")
    return "\n".join(lines) + "\n"
