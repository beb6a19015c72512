"""Gumbel-softmax sampling for differentiable discrete actions."""

from __future__ import annotations

import numpy as np


def log_softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def sample_gumbel(shape, rng: np.random.Generator, dtype=np.float64) -> np.ndarray:
    u = rng.random(shape, dtype=np.float64)
    # Guard against log(0) from a zero draw.
    u = np.clip(u, 1e-12, 1.0 - 1e-12)
    return (-np.log(-np.log(u))).astype(dtype)


def gumbel_softmax_sample(
    logits: np.ndarray,
    temperature: float,
    rng: np.random.Generator,
    noise: np.ndarray | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Soft categorical sample plus the policy's log-probabilities.

    Returns (soft_sample, log_probs): soft_sample = softmax((logits + g)/T)
    with g ~ Gumbel(0,1); log_probs = log-softmax(logits), used for entropy
    terms. Pass explicit noise for reproducible gradient checks.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if noise is None:
        noise = sample_gumbel(logits.shape, rng, dtype=logits.dtype)
    soft = softmax((logits + noise) / temperature)
    return soft, log_softmax(logits)
