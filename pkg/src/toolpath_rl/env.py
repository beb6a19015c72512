"""Deterministic single-nozzle deposition environment on a pixel grid.

Eight actions: four movement directions, each with deposition on or off.
Action index = 2 * direction + deposit bit, directions ordered
Up, Down, Left, Right. Off-grid moves leave the nozzle in place; all eight
actions are always legal.

Dense rewards: +1.0 for depositing on an unfilled desired pixel, -1.0 for
depositing anywhere else (outside the section or already filled), -0.5 for
any move without deposition. Sparse mode pays +/-0.1 per deposit and, at the
final step, a similarity score between the direction history and a hidden
pattern (up, up, right, down, down).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .sections import Section

UP, DOWN, LEFT, RIGHT = 0, 1, 2, 3
N_ACTIONS = 8
HISTORY_LEN = 10
DEFAULT_HORIZON = 400

# Row/col deltas indexed by direction; row 0 is the top of the grid.
_DELTAS = ((-1, 0), (1, 0), (0, -1), (0, 1))

# Hidden pattern for the sparse reward system, as direction codes.
HIDDEN_PATTERN = (UP, UP, RIGHT, DOWN, DOWN)
MIN_PATTERN_PREFIX = 3

DIRECTION_NAMES = ("U", "D", "L", "R")


def action_index(direction: int, deposit: bool) -> int:
    return 2 * direction + int(deposit)


def action_direction(action: int) -> int:
    return action // 2


def action_deposit(action: int) -> bool:
    return bool(action % 2)


class StepKind(Enum):
    CORRECT_DEPOSIT = "correct_deposit"
    WRONG_DEPOSIT = "wrong_deposit"
    MOVE_ONLY = "move_only"
    BLOCKED_MOVE = "blocked_move"


class DoneReason(Enum):
    NOT_DONE = "not_done"
    SECTION_COMPLETE = "section_complete"
    HORIZON_REACHED = "horizon_reached"


@dataclass(frozen=True)
class StepOutcome:
    kind: StepKind
    reward_dense: float
    done: bool
    done_reason: DoneReason


@dataclass(frozen=True)
class ObsConfig:
    """Observation options; the nozzle channel is off by default."""

    nozzle_channel: bool = False

    @property
    def n_channels(self) -> int:
        return 2 if self.nozzle_channel else 1


@dataclass(frozen=True)
class Observation:
    image: np.ndarray  # float, (channels, H, W)
    history: np.ndarray  # float, (HISTORY_LEN * N_ACTIONS,)


@dataclass(frozen=True)
class EnvState:
    section: Section
    filled: np.ndarray  # bool, same shape as section.mask
    nozzle: tuple[int, int]  # (row, col)
    step_count: int
    action_history: tuple[int, ...]
    wrong_deposits: int
    horizon: int = DEFAULT_HORIZON

    @property
    def section_complete(self) -> bool:
        return bool((self.filled | ~self.section.mask).all())

    @property
    def done(self) -> bool:
        return self.section_complete or self.step_count >= self.horizon

    @property
    def done_reason(self) -> DoneReason:
        if self.section_complete:
            return DoneReason.SECTION_COMPLETE
        if self.step_count >= self.horizon:
            return DoneReason.HORIZON_REACHED
        return DoneReason.NOT_DONE

    @property
    def correct_deposits(self) -> int:
        return int(self.filled.sum())


def reset(
    section: Section, rng: np.random.Generator, horizon: int = DEFAULT_HORIZON
) -> EnvState:
    """Fresh episode with the nozzle at a uniformly random grid cell."""
    if section.n_pixels == 0:
        raise ValueError(f"section {section.name!r} has no desired pixels")
    row = int(rng.integers(section.height))
    col = int(rng.integers(section.width))
    return EnvState(
        section=section,
        filled=np.zeros_like(section.mask),
        nozzle=(row, col),
        step_count=0,
        action_history=(),
        wrong_deposits=0,
        horizon=horizon,
    )


def step(state: EnvState, action: int) -> tuple[EnvState, StepOutcome]:
    """Apply one action; returns the successor state and its outcome."""
    if state.done:
        raise ValueError("cannot step a terminal state")
    if not 0 <= action < N_ACTIONS:
        raise ValueError(f"action index {action} out of range 0..7")

    direction = action_direction(action)
    deposit = action_deposit(action)
    dr, dc = _DELTAS[direction]
    row, col = state.nozzle
    nr, nc = row + dr, col + dc
    blocked = not (0 <= nr < state.section.height and 0 <= nc < state.section.width)
    if blocked:
        nr, nc = row, col

    filled = state.filled
    wrong = state.wrong_deposits
    if deposit:
        if state.section.mask[nr, nc] and not filled[nr, nc]:
            kind = StepKind.CORRECT_DEPOSIT
            reward = 1.0
            filled = filled.copy()
            filled[nr, nc] = True
        else:
            kind = StepKind.WRONG_DEPOSIT
            reward = -1.0
            wrong += 1
    else:
        kind = StepKind.BLOCKED_MOVE if blocked else StepKind.MOVE_ONLY
        reward = -0.5

    new_state = replace(
        state,
        filled=filled,
        nozzle=(nr, nc),
        step_count=state.step_count + 1,
        action_history=state.action_history + (action,),
        wrong_deposits=wrong,
    )
    return new_state, StepOutcome(
        kind=kind,
        reward_dense=reward,
        done=new_state.done,
        done_reason=new_state.done_reason,
    )


def observe(state: EnvState, obs_config: ObsConfig = ObsConfig()) -> Observation:
    """Encode the state: unfilled-section image plus one-hot action history."""
    h, w = state.section.mask.shape
    image = np.zeros((obs_config.n_channels, h, w), dtype=np.float32)
    image[0] = (state.section.mask & ~state.filled).astype(np.float32)
    if obs_config.nozzle_channel:
        image[1, state.nozzle[0], state.nozzle[1]] = 1.0
    history = np.zeros(HISTORY_LEN * N_ACTIONS, dtype=np.float32)
    recent = state.action_history[-HISTORY_LEN:]
    # Most recent action occupies the last slot; short episodes pad older
    # slots with zeros.
    offset = HISTORY_LEN - len(recent)
    for i, a in enumerate(recent):
        history[(offset + i) * N_ACTIONS + a] = 1.0
    return Observation(image=image, history=history)


def pattern_score(actions) -> float:
    """Similarity of an action sequence to the hidden direction pattern.

    Greedy left-to-right, non-overlapping: at each index take the longest
    matching prefix of the pattern (length >= 3), scoring length/5, then skip
    past it. Matches on directions only; the deposit bit is ignored.
    """
    dirs = [action_direction(a) for a in actions]
    p = HIDDEN_PATTERN
    score = 0.0
    i = 0
    n = len(dirs)
    while i < n:
        matched = 0
        limit = min(len(p), n - i)
        for j in range(limit):
            if dirs[i + j] != p[j]:
                break
            matched = j + 1
        if matched >= MIN_PATTERN_PREFIX:
            score += matched / len(p)
            i += matched
        else:
            i += 1
    return score


def sparse_episode_reward(state: EnvState) -> float:
    """Terminal-state sparse score: pattern similarity plus deposit bonuses."""
    if not state.done:
        raise ValueError("sparse episode reward requires a terminal state")
    return (
        pattern_score(state.action_history)
        + 0.1 * state.correct_deposits
        - 0.1 * state.wrong_deposits
    )


def sparse_step_reward(outcome: StepOutcome, new_state: EnvState) -> float:
    """Per-step sparse stream: +/-0.1 deposit bonus; pattern lump when done."""
    reward = 0.0
    if outcome.kind is StepKind.CORRECT_DEPOSIT:
        reward = 0.1
    elif outcome.kind is StepKind.WRONG_DEPOSIT:
        reward = -0.1
    if outcome.done:
        reward += pattern_score(new_state.action_history)
    return reward


class ToolpathEnv:
    """Stateful convenience wrapper used by the agents and the harness.

    Samples a section on reset, tracks the current EnvState, and emits the
    reward stream for the configured mode (dense or sparse).
    """

    def __init__(
        self,
        dataset,
        rng: np.random.Generator,
        reward_mode: str = "dense",
        horizon: int = DEFAULT_HORIZON,
        obs_config: ObsConfig = ObsConfig(),
    ):
        if reward_mode not in ("dense", "sparse"):
            raise ValueError(f"unknown reward mode {reward_mode!r}")
        self.dataset = dataset
        self.rng = rng
        self.reward_mode = reward_mode
        self.horizon = horizon
        self.obs_config = obs_config
        self.state: EnvState | None = None
        self.episode_return = 0.0
        self._last_obs: Observation | None = None

    def reset(self, section: Section | None = None) -> Observation:
        from .sections import sample as _sample

        if section is None:
            section = _sample(self.dataset, self.rng)
        self.state = reset(section, self.rng, horizon=self.horizon)
        self.episode_return = 0.0
        self._last_obs = observe(self.state, self.obs_config)
        return self._last_obs

    def step(self, action: int) -> tuple[Observation, float, bool, StepOutcome]:
        self.state, outcome = step(self.state, action)
        if self.reward_mode == "dense":
            reward = outcome.reward_dense
        else:
            reward = sparse_step_reward(outcome, self.state)
        self.episode_return += reward
        self._last_obs = observe(self.state, self.obs_config)
        return self._last_obs, reward, outcome.done, outcome
