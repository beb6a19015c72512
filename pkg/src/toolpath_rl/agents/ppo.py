"""Clipped-surrogate PPO with GAE and parallel rollout streams.

Policy and value function are separate networks (no shared trunk). The loss
is the clipped surrogate minus an entropy bonus plus a value-regression term;
gradients with respect to logits and value outputs are closed-form and then
pushed through the networks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..env import N_ACTIONS, DoneReason
from ..nn import AdamState, Network, adam_step, clip_global_norm
from ..nn.gumbel import log_softmax


@dataclass
class PpoConfig:
    lr: float = 3e-4
    gamma: float = 0.99
    gae_lambda: float = 0.95
    clip_eps: float = 0.2
    c_value: float = 0.5
    c_entropy: float = 0.01
    n_streams: int = 8
    rollout_steps: int = 256
    epochs: int = 4
    minibatch_size: int = 512
    adv_norm: bool = True
    clip_norm: float = 0.5
    horizon_bootstrap: bool = True


@dataclass
class RolloutBatch:
    """Flattened on-policy batch with computed advantage targets."""

    images: np.ndarray
    history: np.ndarray
    actions: np.ndarray
    log_prob_old: np.ndarray
    advantages: np.ndarray
    returns: np.ndarray
    episode_returns: list
    episode_lengths: list
    env_steps: int


def ppo_gae(rewards, values, dones, gamma: float, lam: float):
    """Generalized advantage estimation.

    rewards/dones: (T, ...) arrays; values: (T+1, ...) including the bootstrap
    value of the final observation. Returns (advantages, returns).
    """
    rewards = np.asarray(rewards, dtype=np.float64)
    values = np.asarray(values, dtype=np.float64)
    dones = np.asarray(dones, dtype=np.float64)
    t_len = rewards.shape[0]
    adv = np.zeros_like(rewards)
    last = np.zeros_like(rewards[0] if rewards.ndim > 1 else np.float64(0.0))
    for t in range(t_len - 1, -1, -1):
        nonterm = 1.0 - dones[t]
        delta = rewards[t] + gamma * nonterm * values[t + 1] - values[t]
        last = delta + gamma * lam * nonterm * last
        adv[t] = last
    return adv, adv + values[:-1]


def ppo_loss_and_grads(
    logits: np.ndarray,
    values: np.ndarray,
    actions: np.ndarray,
    log_prob_old: np.ndarray,
    advantages: np.ndarray,
    returns: np.ndarray,
    config: PpoConfig,
):
    """Scalar loss plus closed-form gradients w.r.t. logits and values.

    Samples whose ratio is clipped (and whose advantage sign makes the
    clipped branch active) contribute exactly zero policy gradient.
    """
    n = logits.shape[0]
    lp = log_softmax(logits)
    pi = np.exp(lp)
    lp_a = lp[np.arange(n), actions]
    ratio = np.exp(lp_a - log_prob_old)
    eps = config.clip_eps
    unclipped = ratio * advantages
    clipped = np.clip(ratio, 1.0 - eps, 1.0 + eps) * advantages
    surrogate = np.minimum(unclipped, clipped)
    entropy = -(pi * lp).sum(axis=1)
    v = values[:, 0]
    v_err = v - returns
    loss = (
        -float(surrogate.mean())
        + config.c_value * float(np.mean(v_err**2))
        - config.c_entropy * float(entropy.mean())
    )

    active = ~(
        ((advantages > 0) & (ratio > 1.0 + eps))
        | ((advantages < 0) & (ratio < 1.0 - eps))
    )
    onehot = np.zeros_like(pi)
    onehot[np.arange(n), actions] = 1.0
    coef = np.where(active, ratio * advantages, 0.0) / n
    dlogits = -coef[:, None] * (onehot - pi)
    dlogits += config.c_entropy * pi * (lp + entropy[:, None]) / n
    dvalues = (2.0 * config.c_value * v_err / n)[:, None]
    metrics = {
        "entropy": float(entropy.mean()),
        "clip_frac": float(np.mean(~active)),
        "ratio_mean": float(ratio.mean()),
    }
    return loss, dlogits.astype(logits.dtype), dvalues.astype(values.dtype), metrics


class PpoAgent:
    def __init__(self, policy_net_config, value_net_config, rng: np.random.Generator,
                 config: PpoConfig = PpoConfig()):
        assert policy_net_config.heads == {"logits": N_ACTIONS}
        assert value_net_config.heads == {"value": 1}
        self.config = config
        self.policy = Network(policy_net_config, rng=rng)
        self.value = Network(value_net_config, rng=rng)
        self.adam_policy = AdamState()
        self.adam_value = AdamState()

    def act(self, obs, rng: np.random.Generator, greedy: bool = False) -> int:
        logits = self.policy.forward(obs.image[None], obs.history[None])["logits"][0]
        if greedy:
            return int(np.argmax(logits))
        p = np.exp(log_softmax(logits[None]))[0]
        return int(rng.choice(N_ACTIONS, p=p / p.sum()))

    def collect(self, envs: list, rng: np.random.Generator) -> RolloutBatch:
        """Roll the current policy for rollout_steps in every stream."""
        cfg = self.config
        n_env = len(envs)
        t_len = cfg.rollout_steps
        obs = [env.reset() if env.state is None or env.state.done else env._last_obs
               for env in envs]
        images = np.empty((t_len, n_env) + obs[0].image.shape, dtype=np.float32)
        history = np.empty((t_len, n_env, obs[0].history.shape[0]), dtype=np.float32)
        actions = np.empty((t_len, n_env), dtype=np.int64)
        logp_old = np.empty((t_len, n_env), dtype=np.float64)
        rewards = np.empty((t_len, n_env), dtype=np.float64)
        dones = np.empty((t_len, n_env), dtype=np.float64)
        values = np.empty((t_len + 1, n_env), dtype=np.float64)
        ep_returns: list = []
        ep_lengths: list = []
        for t in range(t_len):
            img = np.stack([o.image for o in obs])
            hist = np.stack([o.history for o in obs])
            logits = self.policy.forward(img, hist)["logits"]
            values[t] = self.value.forward(img, hist)["value"][:, 0]
            lp = log_softmax(logits)
            p = np.exp(lp)
            # Vectorized categorical draw via inverse CDF, one uniform per stream.
            cdf = np.cumsum(p, axis=1)
            cdf[:, -1] = 1.0
            u = rng.random(n_env)
            acts = (u[:, None] > cdf).sum(axis=1)
            images[t] = img
            history[t] = hist
            actions[t] = acts
            logp_old[t] = lp[np.arange(n_env), acts]
            for e, env in enumerate(envs):
                next_obs, reward, done, outcome = env.step(int(acts[e]))
                if (done and cfg.horizon_bootstrap
                        and outcome.done_reason is DoneReason.HORIZON_REACHED):
                    # Fold the bootstrap value of the truncated state's
                    # successor into the reward; the trace still cuts here.
                    v_term = self.value.forward(
                        next_obs.image[None], next_obs.history[None]
                    )["value"][0, 0]
                    reward = reward + cfg.gamma * float(v_term)
                rewards[t, e] = reward
                dones[t, e] = float(done)
                if done:
                    ep_returns.append(env.episode_return)
                    ep_lengths.append(env.state.step_count)
                    next_obs = env.reset()
                obs[e] = next_obs
        img = np.stack([o.image for o in obs])
        hist = np.stack([o.history for o in obs])
        values[t_len] = self.value.forward(img, hist)["value"][:, 0]
        for env, o in zip(envs, obs):
            env._last_obs = o
        adv, ret = ppo_gae(rewards, values, dones, cfg.gamma, cfg.gae_lambda)
        flat = t_len * n_env
        return RolloutBatch(
            images=images.reshape((flat,) + images.shape[2:]),
            history=history.reshape(flat, -1),
            actions=actions.reshape(flat),
            log_prob_old=logp_old.reshape(flat),
            advantages=adv.reshape(flat),
            returns=ret.reshape(flat),
            episode_returns=ep_returns,
            episode_lengths=ep_lengths,
            env_steps=flat,
        )

    def update(self, batch: RolloutBatch, rng: np.random.Generator,
               lr: float | None = None) -> dict:
        cfg = self.config
        if lr is None:
            lr = cfg.lr
        adv = batch.advantages
        if cfg.adv_norm:
            adv = (adv - adv.mean()) / (adv.std() + 1e-8)
        n = len(adv)
        metrics: dict = {}
        for _ in range(cfg.epochs):
            order = rng.permutation(n)
            for start in range(0, n, cfg.minibatch_size):
                idx = order[start : start + cfg.minibatch_size]
                img = batch.images[idx]
                hist = batch.history[idx]
                pol_out, pol_cache = self.policy.forward(img, hist, want_cache=True)
                val_out, val_cache = self.value.forward(img, hist, want_cache=True)
                loss, dlogits, dvalues, metrics = ppo_loss_and_grads(
                    pol_out["logits"], val_out["value"], batch.actions[idx],
                    batch.log_prob_old[idx], adv[idx], batch.returns[idx], cfg,
                )
                if not np.isfinite(loss):
                    raise FloatingPointError(f"non-finite PPO loss {loss}")
                pgrads = self.policy.backward(pol_cache, {"logits": dlogits})
                vgrads = self.value.backward(val_cache, {"value": dvalues})
                clip_global_norm(pgrads, cfg.clip_norm)
                clip_global_norm(vgrads, cfg.clip_norm)
                adam_step(self.policy.params, pgrads, self.adam_policy, lr)
                adam_step(self.value.params, vgrads, self.adam_value, lr)
                metrics["loss"] = loss
        return metrics
