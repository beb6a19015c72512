"""Double DQN with corrected replay, gradient clipping, and Polyak targets."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..env import N_ACTIONS
from ..nn import AdamState, Network, adam_step, clip_global_norm, polyak_update
from ..nn.network import flatten_obs_batch
from .replay import ReplayBuffer, Transition


@dataclass
class DqnConfig:
    lr: float = 3e-4
    gamma: float = 0.99
    batch_size: int = 64
    tau: float = 0.005
    clip_norm: float = 0.5
    buffer_capacity: int = 100_000
    learning_starts: int = 1_000
    eps_start: float = 1.0
    eps_end: float = 0.05
    eps_decay_frac: float = 0.2
    train_every: int = 1
    gradient_steps: int = 1


def linear_epsilon(step: int, total_steps: int, config: DqnConfig) -> float:
    """Linear decay from eps_start to eps_end over the first decay fraction."""
    decay_steps = max(1, int(config.eps_decay_frac * total_steps))
    frac = min(1.0, step / decay_steps)
    return config.eps_start + frac * (config.eps_end - config.eps_start)


def batch_arrays(batch: list[Transition]):
    obs_img, obs_hist = flatten_obs_batch([t.obs for t in batch])
    next_img, next_hist = flatten_obs_batch([t.next_obs for t in batch])
    actions = np.array([t.action for t in batch], dtype=np.int64)
    rewards = np.array([t.reward for t in batch], dtype=np.float64)
    dones = np.array([t.done for t in batch], dtype=np.float64)
    return obs_img, obs_hist, actions, rewards, next_img, next_hist, dones


def td_target(
    online: Network,
    target: Network,
    next_img: np.ndarray,
    next_hist: np.ndarray,
    rewards: np.ndarray,
    dones: np.ndarray,
    gamma: float,
) -> np.ndarray:
    """Double-DQN target: action chosen online, evaluated by the target net."""
    q_online = online.forward(next_img, next_hist)["q"]
    a_star = np.argmax(q_online, axis=1)  # first max = lowest index on ties
    q_target = target.forward(next_img, next_hist)["q"]
    boot = q_target[np.arange(len(a_star)), a_star]
    return rewards + gamma * (1.0 - dones) * boot


class DqnAgent:
    def __init__(self, net_config, rng: np.random.Generator, config: DqnConfig = DqnConfig()):
        assert net_config.heads == {"q": N_ACTIONS}
        self.config = config
        self.online = Network(net_config, rng=rng)
        self.target = self.online.copy()
        self.adam = AdamState()
        self.buffer = ReplayBuffer(config.buffer_capacity)

    def act(self, obs, epsilon: float, rng: np.random.Generator) -> int:
        """Epsilon-greedy; greedy ties break to the lowest action index."""
        if epsilon > 0 and rng.random() < epsilon:
            return int(rng.integers(N_ACTIONS))
        q = self.online.forward(obs.image[None], obs.history[None])["q"][0]
        return int(np.argmax(q))

    def train_step(self, rng: np.random.Generator, lr: float | None = None) -> dict:
        cfg = self.config
        if lr is None:
            lr = cfg.lr
        batch = self.buffer.sample_corrected(cfg.batch_size, rng)
        obs_img, obs_hist, actions, rewards, next_img, next_hist, dones = batch_arrays(batch)
        y = td_target(self.online, self.target, next_img, next_hist, rewards, dones, cfg.gamma)
        outputs, cache = self.online.forward(obs_img, obs_hist, want_cache=True)
        q = outputs["q"]
        n = len(batch)
        taken = q[np.arange(n), actions]
        delta = taken - y
        loss = float(np.mean(delta**2))
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite DQN loss {loss}")
        gq = np.zeros_like(q)
        gq[np.arange(n), actions] = 2.0 * delta / n
        grads = self.online.backward(cache, {"q": gq})
        clip_global_norm(grads, cfg.clip_norm)
        adam_step(self.online.params, grads, self.adam, lr)
        polyak_update(self.target.params, self.online.params, cfg.tau)
        return {"loss": loss, "mean_q": float(q.mean())}
