"""Ring-storage replay buffer with corrected sampling.

Corrected sampling: every batch contains the most recently inserted
transition plus ``batch_size - 1`` uniform draws, which removes the need for
an oversized buffer before fresh experience is ever revisited.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..env import Observation


@dataclass(frozen=True)
class Transition:
    obs: Observation
    action: int
    reward: float
    next_obs: Observation
    done: bool


class ReplayBuffer:
    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.capacity = capacity
        self._storage: list[Transition] = []
        self._cursor = 0
        self._last_index: int | None = None

    def __len__(self) -> int:
        return len(self._storage)

    def push(self, transition: Transition) -> None:
        if len(self._storage) < self.capacity:
            self._storage.append(transition)
            self._last_index = len(self._storage) - 1
        else:
            self._storage[self._cursor] = transition
            self._last_index = self._cursor
            self._cursor = (self._cursor + 1) % self.capacity

    @property
    def last(self) -> Transition:
        if self._last_index is None:
            raise ValueError("buffer is empty")
        return self._storage[self._last_index]

    def sample_corrected(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        """batch_size - 1 uniform transitions plus the newest one."""
        if len(self._storage) < batch_size:
            raise ValueError(
                f"buffer holds {len(self._storage)} transitions, need {batch_size}"
            )
        idx = rng.integers(0, len(self._storage), size=batch_size - 1)
        batch = [self._storage[i] for i in idx]
        batch.append(self._storage[self._last_index])
        return batch
