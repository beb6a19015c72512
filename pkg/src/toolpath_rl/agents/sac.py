"""Discrete soft actor-critic with twin critics and a learned temperature.

The continuous-action reparameterization is replaced by a Gumbel-softmax
relaxation: the policy loss evaluates the critics on a soft one-hot action
sample so gradients flow back to the policy logits. Critic targets take the
exact expectation over the 8-action distribution instead of sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..env import N_ACTIONS
from ..nn import AdamState, Network, adam_step, clip_global_norm, polyak_update
from ..nn.gumbel import gumbel_softmax_sample, log_softmax
from .dqn import batch_arrays
from .replay import ReplayBuffer


@dataclass
class SacConfig:
    lr: float = 3e-4
    alpha_lr: float = 3e-4
    gamma: float = 0.99
    batch_size: int = 64
    tau: float = 0.005
    clip_norm: float = 0.5
    buffer_capacity: int = 100_000
    learning_starts: int = 1_000
    temperature: float = 1.0  # Gumbel-softmax relaxation temperature
    target_entropy_scale: float = 0.98
    train_every: int = 1
    gradient_steps: int = 1


def soft_state_value(
    logits_next: np.ndarray,
    qt1: np.ndarray,
    qt2: np.ndarray,
    alpha: float,
) -> np.ndarray:
    """E_{a~pi}[min_i Q_target_i(s,a) - alpha * log pi(a|s)], exact over actions."""
    lp = log_softmax(logits_next)
    pi = np.exp(lp)
    qmin = np.minimum(qt1, qt2)
    return (pi * (qmin - alpha * lp)).sum(axis=1)


def critic_targets(rewards, dones, soft_next, gamma: float) -> np.ndarray:
    return rewards + gamma * (1.0 - dones) * soft_next


def policy_loss_and_grad(
    logits: np.ndarray,
    q1: np.ndarray,
    q2: np.ndarray,
    soft_action: np.ndarray,
    alpha: float,
    temperature: float,
):
    """Loss -E[min_i <Q_i, a~> - alpha * <a~, log pi>] and d/d logits.

    Critics are frozen here; the gradient reaches the logits through both the
    Gumbel-softmax sample a~ and the policy log-probabilities.
    """
    n = logits.shape[0]
    lp = log_softmax(logits)
    pi = np.exp(lp)
    a = soft_action
    qs1 = (q1 * a).sum(axis=1)
    qs2 = (q2 * a).sum(axis=1)
    use1 = qs1 <= qs2
    q_sel = np.where(use1, qs1, qs2)
    q_vec = np.where(use1[:, None], q1, q2)
    soft_logp = (a * lp).sum(axis=1)
    loss = -float(np.mean(q_sel - alpha * soft_logp))

    def soft_jac(v):
        # J_softmax(u)^T v evaluated at the sample a (J is symmetric).
        return a * v - a * (a * v).sum(axis=1, keepdims=True)

    dlogits = (
        -soft_jac(q_vec) / temperature
        + alpha * (soft_jac(lp) / temperature + a - pi)
    ) / n
    return loss, dlogits.astype(logits.dtype), float(-(pi * lp).sum(axis=1).mean())


class SacAgent:
    def __init__(self, policy_net_config, critic_net_config, rng: np.random.Generator,
                 config: SacConfig = SacConfig()):
        assert policy_net_config.heads == {"logits": N_ACTIONS}
        assert critic_net_config.heads == {"q": N_ACTIONS}
        self.config = config
        self.policy = Network(policy_net_config, rng=rng)
        self.critic1 = Network(critic_net_config, rng=rng)
        self.critic2 = Network(critic_net_config, rng=rng)
        self.target1 = self.critic1.copy()
        self.target2 = self.critic2.copy()
        self.log_alpha = 0.0
        self.target_entropy = config.target_entropy_scale * math.log(N_ACTIONS)
        self.adam_policy = AdamState()
        self.adam_c1 = AdamState()
        self.adam_c2 = AdamState()
        self.adam_alpha = AdamState()
        self.buffer = ReplayBuffer(config.buffer_capacity)

    @property
    def alpha(self) -> float:
        return math.exp(self.log_alpha)

    def act(self, obs, rng: np.random.Generator, greedy: bool = False) -> int:
        logits = self.policy.forward(obs.image[None], obs.history[None])["logits"][0]
        if greedy:
            return int(np.argmax(logits))
        p = np.exp(log_softmax(logits[None]))[0]
        return int(rng.choice(N_ACTIONS, p=p / p.sum()))

    def train_step(self, rng: np.random.Generator, lr: float | None = None) -> dict:
        cfg = self.config
        if lr is None:
            lr = cfg.lr
        batch = self.buffer.sample_corrected(cfg.batch_size, rng)
        obs_img, obs_hist, actions, rewards, next_img, next_hist, dones = batch_arrays(batch)
        n = len(batch)
        alpha = self.alpha

        # Critic step.
        logits_next = self.policy.forward(next_img, next_hist)["logits"]
        qt1 = self.target1.forward(next_img, next_hist)["q"]
        qt2 = self.target2.forward(next_img, next_hist)["q"]
        y = critic_targets(
            rewards, dones, soft_state_value(logits_next, qt1, qt2, alpha), cfg.gamma
        )
        critic_loss = 0.0
        for critic, adam in ((self.critic1, self.adam_c1), (self.critic2, self.adam_c2)):
            out, cache = critic.forward(obs_img, obs_hist, want_cache=True)
            q = out["q"]
            delta = q[np.arange(n), actions] - y
            critic_loss += float(np.mean(delta**2))
            gq = np.zeros_like(q)
            gq[np.arange(n), actions] = 2.0 * delta / n
            grads = critic.backward(cache, {"q": gq})
            clip_global_norm(grads, cfg.clip_norm)
            adam_step(critic.params, grads, adam, lr)

        # Policy step (critics frozen).
        pol_out, pol_cache = self.policy.forward(obs_img, obs_hist, want_cache=True)
        logits = pol_out["logits"]
        soft_a, _ = gumbel_softmax_sample(logits, cfg.temperature, rng)
        q1 = self.critic1.forward(obs_img, obs_hist)["q"]
        q2 = self.critic2.forward(obs_img, obs_hist)["q"]
        policy_loss, dlogits, entropy = policy_loss_and_grad(
            logits, q1, q2, soft_a, alpha, cfg.temperature
        )
        if not (np.isfinite(policy_loss) and np.isfinite(critic_loss)):
            raise FloatingPointError(
                f"non-finite SAC loss (policy {policy_loss}, critic {critic_loss})"
            )
        pgrads = self.policy.backward(pol_cache, {"logits": dlogits})
        clip_global_norm(pgrads, cfg.clip_norm)
        adam_step(self.policy.params, pgrads, self.adam_policy, lr)

        # Temperature step on log_alpha, exact expectation over actions.
        lp = log_softmax(logits)
        pi = np.exp(lp)
        expected_logp = float((pi * lp).sum(axis=1).mean())
        dlog_alpha = -alpha * (expected_logp + self.target_entropy)
        la = {"log_alpha": np.array([self.log_alpha])}
        adam_step(la, {"log_alpha": np.array([dlog_alpha])}, self.adam_alpha, cfg.alpha_lr)
        self.log_alpha = float(la["log_alpha"][0])

        polyak_update(self.target1.params, self.critic1.params, cfg.tau)
        polyak_update(self.target2.params, self.critic2.params, cfg.tau)
        return {
            "critic_loss": critic_loss,
            "policy_loss": policy_loss,
            "alpha": self.alpha,
            "entropy": entropy,
        }
