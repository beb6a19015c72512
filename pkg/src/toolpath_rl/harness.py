"""Seeded training and evaluation orchestration.

Owns the run loop for all three algorithms, periodic greedy evaluation, the
zig-zag baseline, incremental metrics CSV output, and checkpointing. A run is
fully determined by (config, seed): all randomness flows through generators
derived from the config seed.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import env as genv
from . import sections as gsec
from .agents import DqnAgent, DqnConfig, PpoAgent, PpoConfig, SacAgent, SacConfig, Transition, linear_epsilon
from .config import TrainConfig, serialize_config
from .env import DOWN, LEFT, N_ACTIONS, RIGHT, UP, ObsConfig, ToolpathEnv, action_index
from .nn import NetConfig, Network

CSV_HEADER = "env_steps,episodes,mean_score,score_std,mean_ep_len,wall_clock_s"


@dataclass
class EvalRow:
    env_steps: int
    episodes: int
    mean_score: float
    score_std: float
    mean_ep_len: float
    wall_clock_s: float

    def csv(self) -> str:
        return (
            f"{self.env_steps},{self.episodes},{self.mean_score!r},"
            f"{self.score_std!r},{self.mean_ep_len!r},{self.wall_clock_s!r}"
        )


@dataclass
class RunRecord:
    rows: list[EvalRow] = field(default_factory=list)
    best_mean_score: float = float("-inf")


def _rng(seed: int, *stream: int) -> np.random.Generator:
    return np.random.default_rng((seed,) + stream)


def build_dataset(config: TrainConfig) -> gsec.SectionDataset:
    if config.sections_dir:
        return gsec.load_directory(config.sections_dir)
    rng = _rng(config.seed, 1)
    return gsec.generate_dataset(
        rng, config.n_sections, config.grid_size, config.shape_kind_tuple
    )


def obs_config_of(config: TrainConfig) -> ObsConfig:
    return ObsConfig(nozzle_channel=config.nozzle_channel)


def net_config_of(config: TrainConfig, heads: dict, dtype: str = "float32") -> NetConfig:
    return NetConfig(
        in_channels=obs_config_of(config).n_channels,
        grid_size=config.grid_size,
        history_dim=genv.HISTORY_LEN * N_ACTIONS,
        conv_channels=config.conv_channel_tuple,
        conv_strides=config.conv_stride_tuple,
        hidden=config.hidden,
        heads=heads,
        dtype=dtype,
    )


def random_policy(rng: np.random.Generator) -> int:
    """Uniform action; the evaluation floor."""
    return int(rng.integers(N_ACTIONS))


def evaluate(
    policy,
    dataset: gsec.SectionDataset,
    episodes: int,
    rng: np.random.Generator,
    reward_mode: str = "dense",
    horizon: int = genv.DEFAULT_HORIZON,
    obs_config: ObsConfig = ObsConfig(),
) -> tuple[float, float, float]:
    """Run a deterministic policy; returns (mean score, std, mean length).

    ``policy`` maps an Observation to an action index.
    """
    if episodes < 1:
        raise ValueError("episodes must be >= 1")
    world = ToolpathEnv(dataset, rng, reward_mode, horizon, obs_config)
    scores = []
    lengths = []
    for _ in range(episodes):
        obs = world.reset()
        done = False
        while not done:
            obs, _, done, _ = world.step(policy(obs))
        scores.append(world.episode_return)
        lengths.append(world.state.step_count)
    return float(np.mean(scores)), float(np.std(scores)), float(np.mean(lengths))


def zigzag_policy(section: gsec.Section, start: tuple[int, int],
                  horizon: int | None = None) -> list[int]:
    """Boustrophedon sweep of the section's bounding box.

    Travels to the top-left bounding-box corner, then sweeps row by row,
    alternating direction. Every move deposits exactly when the cell being
    entered is an unfilled desired pixel.
    """
    mask = section.mask
    rows, cols = np.nonzero(mask)
    rmin, rmax = int(rows.min()), int(rows.max())
    cmin, cmax = int(cols.min()), int(cols.max())
    filled = np.zeros_like(mask)
    actions: list[int] = []
    r, c = start

    def emit(direction: int):
        nonlocal r, c
        dr, dc = {UP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1)}[direction]
        r, c = r + dr, c + dc
        deposit = bool(mask[r, c]) and not filled[r, c]
        if deposit:
            filled[r, c] = True
        actions.append(action_index(direction, deposit))

    while r > rmin:
        emit(UP)
    while r < rmin:
        emit(DOWN)
    while c > cmin:
        emit(LEFT)
    while c < cmin:
        emit(RIGHT)
    going_right = True
    for row in range(rmin, rmax + 1):
        target = cmax if going_right else cmin
        while c != target:
            emit(RIGHT if going_right else LEFT)
        if row < rmax:
            emit(DOWN)
            going_right = not going_right
    if horizon is not None:
        actions = actions[:horizon]
    return actions


def zigzag_scores(
    dataset: gsec.SectionDataset,
    episodes: int,
    rng: np.random.Generator,
    horizon: int = genv.DEFAULT_HORIZON,
) -> list[float]:
    """Dense-mode episode scores of the zig-zag baseline from random starts."""
    scores = []
    for _ in range(episodes):
        section = gsec.sample(dataset, rng)
        state = genv.reset(section, rng, horizon=horizon)
        total = 0.0
        for action in zigzag_policy(section, state.nozzle, horizon=horizon):
            if state.done:
                break
            state, outcome = genv.step(state, action)
            total += outcome.reward_dense
        scores.append(total)
    return scores


# --- checkpointing -----------------------------------------------------------


def _config_hash(config: TrainConfig) -> str:
    return hashlib.sha256(serialize_config(config).encode()).hexdigest()[:16]


def save_checkpoint(path: Path, config: TrainConfig, agent, env_steps: int,
                    episodes: int) -> None:
    """Parameter npz plus a human-readable manifest next to it."""
    arrays: dict[str, np.ndarray] = {}
    if isinstance(agent, DqnAgent):
        nets = {"online": agent.online, "target": agent.target}
    elif isinstance(agent, PpoAgent):
        nets = {"policy": agent.policy, "value": agent.value}
    elif isinstance(agent, SacAgent):
        nets = {
            "policy": agent.policy,
            "critic1": agent.critic1,
            "critic2": agent.critic2,
            "target1": agent.target1,
            "target2": agent.target2,
        }
        arrays["log_alpha"] = np.array([agent.log_alpha])
    else:
        raise TypeError(f"unknown agent type {type(agent)!r}")
    for prefix, net in nets.items():
        for key, value in net.params.items():
            arrays[f"{prefix}.{key}"] = value
    np.savez(path, **arrays)
    manifest = [
        f"algorithm: {config.algorithm}",
        f"config_hash: {_config_hash(config)}",
        f"env_steps: {env_steps}",
        f"episodes: {episodes}",
        f"rng_seed: {config.seed}",
    ]
    manifest += [f"config.{line}" for line in serialize_config(config).splitlines()]
    Path(str(path) + ".manifest.txt").write_text("\n".join(manifest) + "\n")


def load_checkpoint(path: str | Path) -> tuple[TrainConfig, dict[str, dict[str, np.ndarray]]]:
    """Returns the stored config and parameter dicts grouped by network."""
    from .config import parse_config

    path = Path(path)
    manifest_path = Path(str(path) + ".manifest.txt")
    config_lines = []
    for line in manifest_path.read_text().splitlines():
        if line.startswith("config."):
            config_lines.append(line[len("config."):])
    config = parse_config("\n".join(config_lines))
    grouped: dict[str, dict[str, np.ndarray]] = {}
    with np.load(path) as data:
        for key in data.files:
            if key == "log_alpha":
                grouped.setdefault("_scalars", {})[key] = data[key]
                continue
            prefix, rest = key.split(".", 1)
            grouped.setdefault(prefix, {})[rest] = data[key]
    return config, grouped


def greedy_policy_from_checkpoint(path: str | Path):
    """Rebuild the deterministic evaluation policy stored in a checkpoint."""
    config, grouped = load_checkpoint(path)
    if config.algorithm == "dqn":
        net = Network(net_config_of(config, {"q": N_ACTIONS}), params=grouped["online"])
        head = "q"
    else:
        net = Network(net_config_of(config, {"logits": N_ACTIONS}), params=grouped["policy"])
        head = "logits"

    def policy(obs):
        out = net.forward(obs.image[None], obs.history[None])[head][0]
        return int(np.argmax(out))

    return policy, config


# --- training ----------------------------------------------------------------


class _MetricsWriter:
    def __init__(self, path: Path | None):
        self.path = path
        if path is not None:
            path.write_text(CSV_HEADER + "\n")

    def append(self, row: EvalRow):
        if self.path is not None:
            with self.path.open("a") as fh:
                fh.write(row.csv() + "\n")


def _make_agent(config: TrainConfig, rng: np.random.Generator):
    if config.algorithm == "dqn":
        return DqnAgent(
            net_config_of(config, {"q": N_ACTIONS}),
            rng,
            DqnConfig(
                lr=config.lr, gamma=config.gamma, batch_size=config.batch_size,
                tau=config.tau, clip_norm=config.clip_norm,
                buffer_capacity=config.buffer_capacity,
                learning_starts=config.learning_starts,
                eps_start=config.eps_start, eps_end=config.eps_end,
                eps_decay_frac=config.eps_decay_frac, train_every=config.train_every,
                gradient_steps=config.gradient_steps,
            ),
        )
    if config.algorithm == "ppo":
        return PpoAgent(
            net_config_of(config, {"logits": N_ACTIONS}),
            net_config_of(config, {"value": 1}),
            rng,
            PpoConfig(
                lr=config.lr, gamma=config.gamma, gae_lambda=config.gae_lambda,
                clip_eps=config.clip_eps, c_value=config.c_value,
                c_entropy=config.c_entropy, n_streams=config.n_streams,
                rollout_steps=config.rollout_steps, epochs=config.ppo_epochs,
                minibatch_size=config.minibatch_size, adv_norm=config.adv_norm,
                clip_norm=config.clip_norm, horizon_bootstrap=config.horizon_bootstrap,
            ),
        )
    return SacAgent(
        net_config_of(config, {"logits": N_ACTIONS}),
        net_config_of(config, {"q": N_ACTIONS}),
        rng,
        SacConfig(
            lr=config.lr, alpha_lr=config.alpha_lr, gamma=config.gamma,
            batch_size=config.batch_size, tau=config.tau,
            clip_norm=config.clip_norm, buffer_capacity=config.buffer_capacity,
            learning_starts=config.learning_starts,
            temperature=config.gumbel_temperature,
            target_entropy_scale=config.target_entropy_scale,
            train_every=config.train_every,
            gradient_steps=config.gradient_steps,
        ),
    )


def greedy_policy_of(agent):
    if isinstance(agent, DqnAgent):
        return lambda obs: agent.act(obs, epsilon=0.0, rng=None)

    def policy(obs):
        out = agent.policy.forward(obs.image[None], obs.history[None])["logits"][0]
        return int(np.argmax(out))

    return policy


def train(config: TrainConfig, out_dir: str | Path | None = None,
          log=None) -> RunRecord:
    """Train the configured agent; returns the evaluation record.

    When ``out_dir`` is given, writes the config copy, an incrementally
    updated metrics CSV, and best/final checkpoints.
    """
    out_path = Path(out_dir) if out_dir is not None else None
    if out_path is not None:
        out_path.mkdir(parents=True, exist_ok=True)
        (out_path / "run_config.txt").write_text(serialize_config(config))
    writer = _MetricsWriter(out_path / "metrics.csv" if out_path else None)

    dataset = build_dataset(config)
    obs_cfg = obs_config_of(config)
    agent = _make_agent(config, _rng(config.seed, 2))
    record = RunRecord()
    start_time = time.monotonic()
    eval_count = 0

    def run_eval(env_steps: int, episodes: int):
        nonlocal eval_count
        policy = greedy_policy_of(agent)
        mean, std, mean_len = evaluate(
            policy, dataset, config.eval_episodes, _rng(config.seed, 7, eval_count),
            config.reward_mode, config.horizon, obs_cfg,
        )
        eval_count += 1
        wall = round(time.monotonic() - start_time, 3) if config.timing_enabled else 0.0
        row = EvalRow(env_steps, episodes, mean, std, mean_len, wall)
        record.rows.append(row)
        writer.append(row)
        if log:
            log(f"eval @ {env_steps} steps / {episodes} episodes: "
                f"mean={mean:.3f} std={std:.3f} len={mean_len:.1f}")
        if mean > record.best_mean_score:
            record.best_mean_score = mean
            if out_path is not None:
                save_checkpoint(out_path / "checkpoint_best.npz", config, agent,
                                env_steps, episodes)
        return mean

    if config.algorithm == "ppo":
        _train_ppo(config, agent, dataset, obs_cfg, run_eval)
    else:
        _train_off_policy(config, agent, dataset, obs_cfg, run_eval)

    if out_path is not None:
        save_checkpoint(out_path / "checkpoint_final.npz", config, agent,
                        record.rows[-1].env_steps if record.rows else 0,
                        record.rows[-1].episodes if record.rows else 0)
    return record


def _scheduled_lr(config, frac_done: float) -> float:
    """Linear decay from lr to lr * lr_final_frac over the run."""
    return config.lr * (1.0 - (1.0 - config.lr_final_frac) * frac_done)


def _train_off_policy(config, agent, dataset, obs_cfg, run_eval):
    rng = _rng(config.seed, 3)
    world = ToolpathEnv(dataset, _rng(config.seed, 4), config.reward_mode,
                        config.horizon, obs_cfg)
    run_eval(0, 0)
    obs = world.reset()
    episodes = 0
    is_dqn = isinstance(agent, DqnAgent)
    for step in range(1, config.total_steps + 1):
        if is_dqn:
            eps = linear_epsilon(step, config.total_steps, agent.config)
            action = agent.act(obs, eps, rng)
        else:
            action = agent.act(obs, rng)
        next_obs, reward, done, outcome = world.step(action)
        # next_obs is the pre-reset terminal observation, so bootstrapping
        # through a horizon truncation just means storing done=0.
        truncated = outcome.done_reason is genv.DoneReason.HORIZON_REACHED
        stored_done = done and not (truncated and config.horizon_bootstrap)
        agent.buffer.push(Transition(obs, action, reward, next_obs, stored_done))
        obs = next_obs
        if done:
            episodes += 1
            obs = world.reset()
        if (len(agent.buffer) >= agent.config.learning_starts
                and step % agent.config.train_every == 0):
            lr = _scheduled_lr(config, step / config.total_steps)
            for _ in range(agent.config.gradient_steps):
                agent.train_step(rng, lr=lr)
        if step % config.eval_interval == 0:
            run_eval(step, episodes)


def _train_ppo(config, agent, dataset, obs_cfg, run_eval):
    rng = _rng(config.seed, 3)
    envs = [
        ToolpathEnv(dataset, _rng(config.seed, 4, i), config.reward_mode,
                    config.horizon, obs_cfg)
        for i in range(config.n_streams)
    ]
    run_eval(0, 0)
    env_steps = 0
    episodes = 0
    iteration = 0
    while True:
        if config.total_episodes > 0:
            if episodes >= config.total_episodes:
                break
        elif env_steps >= config.total_steps:
            break
        batch = agent.collect(envs, rng)
        env_steps += batch.env_steps
        episodes += len(batch.episode_returns)
        if config.total_episodes > 0:
            frac = episodes / config.total_episodes
        else:
            frac = env_steps / config.total_steps
        agent.update(batch, rng, lr=_scheduled_lr(config, min(1.0, frac)))
        iteration += 1
        if iteration % config.ppo_eval_every_iters == 0:
            run_eval(env_steps, episodes)
    if iteration > 0 and iteration % config.ppo_eval_every_iters != 0:
        run_eval(env_steps, episodes)
