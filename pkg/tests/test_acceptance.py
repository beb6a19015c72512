"""Acceptance suite: one test per criterion, one printed PASS/FAIL line each.

Criteria 5 and 6 are scaled-down learning runs and dominate the runtime of
the whole test session (tens of minutes on one CPU core). Run the fast
portion of the repository's tests with `pytest -k "not acceptance"`.
"""

import math
import time

import numpy as np
import pytest

from toolpath_rl import env as genv
from toolpath_rl import harness
from toolpath_rl.agents.dqn import DqnConfig
from toolpath_rl.agents.ppo import PpoConfig, ppo_loss_and_grads
from toolpath_rl.agents.replay import ReplayBuffer, Transition
from toolpath_rl.artifacts import (
    export_toolpath,
    parse_toolpath,
    render_learning_curve_svg,
    render_toolpath_svg,
    toolpath_from_actions,
)
from toolpath_rl.config import TrainConfig
from toolpath_rl.env import HIDDEN_PATTERN, action_direction, pattern_score
from toolpath_rl.nn import (
    NetConfig,
    Network,
    clip_global_norm,
    global_norm,
    polyak_update,
)
from toolpath_rl.sections import generate_dataset


def _report(criterion: int, ok: bool, detail: str):
    status = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {criterion}: {status} — {detail}")
    return ok


# --- 1: reward-table exactness -----------------------------------------------


def test_criterion_1_reward_table():
    rng = np.random.default_rng(11)
    dataset = generate_dataset(rng, 8, 10)
    t0 = time.monotonic()
    checked = 0
    ok = True
    state = genv.reset(dataset.sections[0], rng, horizon=10**9)
    while checked < 10_000:
        if state.done:
            section = dataset.sections[int(rng.integers(len(dataset.sections)))]
            state = genv.reset(section, rng, horizon=10**9)
        action = int(rng.integers(8))
        # independent oracle: classify the step from raw state arrays
        deposit = action % 2 == 1
        dr, dc = {0: (-1, 0), 1: (1, 0), 2: (0, -1), 3: (0, 1)}[action // 2]
        r, c = state.nozzle
        nr, nc = r + dr, c + dc
        h, w = state.section.mask.shape
        if not (0 <= nr < h and 0 <= nc < w):
            nr, nc = r, c
        if deposit:
            expected = (
                1.0
                if state.section.mask[nr, nc] and not state.filled[nr, nc]
                else -1.0
            )
        else:
            expected = -0.5
        state, outcome = genv.step(state, action)
        if outcome.reward_dense != expected:
            ok = False
            break
        checked += 1
    elapsed = time.monotonic() - t0
    ok = ok and checked == 10_000 and elapsed < 5.0
    assert _report(
        1, ok, f"{checked}/10000 dense rewards exact in {elapsed:.2f}s (< 5s)"
    )


# --- 2: pattern-score oracle -------------------------------------------------


def _pattern_oracle(directions):
    pattern = list(HIDDEN_PATTERN)
    score, i = 0.0, 0
    while i < len(directions):
        for length in (5, 4, 3):
            if i + length <= len(directions) and directions[i : i + length] == pattern[:length]:
                score += length / 5.0
                i += length
                break
        else:
            i += 1
    return score


def test_criterion_2_pattern_oracle():
    rng = np.random.default_rng(22)
    alphabet = [0, 0, 0, 1, 1, 3, 3, 2]  # biased so motifs actually occur
    mismatches = 0
    for k in range(1000):
        n = int(rng.integers(0, 40))
        if k % 2:
            actions = [int(a) for a in rng.integers(0, 8, size=n)]
        else:
            actions = [alphabet[int(i)] * 2 for i in rng.integers(0, 8, size=n)]
        expected = _pattern_oracle([action_direction(a) for a in actions])
        if pattern_score(actions) != pytest.approx(expected):
            mismatches += 1
    assert _report(2, mismatches == 0, f"1000 sequences, {mismatches} mismatches")


# --- 3: finite-difference gradient checks ------------------------------------


def test_criterion_3_gradient_checks():
    t0 = time.monotonic()
    worst = 0.0
    for heads in ({"q": 8}, {"logits": 8, "value": 1}):
        cfg = NetConfig(in_channels=2, grid_size=6, history_dim=8,
                        conv_channels=(3, 4, 4), hidden=5, heads=heads,
                        dtype="float64")
        rng = np.random.default_rng(33)
        net = Network(cfg, rng=rng)
        x = rng.standard_normal((3, 2, 6, 6))
        hist = rng.standard_normal((3, 8))
        gout = {name: rng.standard_normal((3, dim)) for name, dim in heads.items()}

        def loss():
            out = net.forward(x, hist)
            return float(sum((out[name] * g).sum() for name, g in gout.items()))

        _, cache = net.forward(x, hist, want_cache=True)
        grads = net.backward(cache, gout)
        eps = 1e-6
        for key, analytic in grads.items():
            flat = net.params[key].ravel()
            gf = analytic.ravel()
            for i in range(flat.size):
                orig = flat[i]
                flat[i] = orig + eps
                hi = loss()
                flat[i] = orig - eps
                lo = loss()
                flat[i] = orig
                numeric = (hi - lo) / (2 * eps)
                denom = max(abs(gf[i]), abs(numeric), 1e-6)
                worst = max(worst, abs(gf[i] - numeric) / denom)
    elapsed = time.monotonic() - t0
    ok = worst < 1e-4 and elapsed < 120.0
    assert _report(
        3, ok, f"worst relative error {worst:.2e} (< 1e-4) in {elapsed:.1f}s (< 2min)"
    )


# --- 4: algebraic identities -------------------------------------------------


def test_criterion_4_algebraic_identities():
    rng = np.random.default_rng(44)
    # polyak tau=1 bit-exact
    online = {"w": rng.standard_normal(1000).astype(np.float32)}
    target = {"w": rng.standard_normal(1000).astype(np.float32)}
    polyak_update(target, online, 1.0)
    polyak_ok = np.array_equal(target["w"], online["w"])

    # clip norm containment over random gradient trees
    clip_ok = True
    for _ in range(200):
        grads = {
            f"g{i}": (rng.standard_normal(rng.integers(1, 50))
                      * 10.0 ** float(rng.integers(-3, 4)))
            for i in range(int(rng.integers(1, 6)))
        }
        clip_global_norm(grads, 0.5)
        if global_norm(grads) > 0.5 + 1e-9:
            clip_ok = False

    # PPO clip saturation -> exactly-zero policy gradient, FD verified
    cfg = PpoConfig(c_value=0.0, c_entropy=0.0)
    logits = np.zeros((2, 8))
    values = np.zeros((2, 1))
    actions = np.array([0, 0])
    lp_old = np.full(2, math.log(1 / 8) - 2.0)
    adv = np.ones(2)
    _, dlogits, _, _ = ppo_loss_and_grads(logits, values, actions, lp_old, adv,
                                          np.zeros(2), cfg)
    fd_ok = True
    eps = 1e-7
    for j in range(8):
        bump = logits.copy()
        bump[0, j] += eps
        hi = ppo_loss_and_grads(bump, values, actions, lp_old, adv, np.zeros(2), cfg)[0]
        bump[0, j] -= 2 * eps
        lo = ppo_loss_and_grads(bump, values, actions, lp_old, adv, np.zeros(2), cfg)[0]
        if abs((hi - lo) / (2 * eps)) > 1e-9:
            fd_ok = False
    ppo_ok = bool(np.all(dlogits == 0.0)) and fd_ok

    # corrected replay: newest transition in every one of 10k batches
    buf = ReplayBuffer(5000)
    newest_ok = True
    tag = 0
    for i in range(200):
        buf.push(Transition(None, tag, 0.0, None, False))
        tag += 1
    for i in range(10_000):
        if i % 3 == 0:
            buf.push(Transition(None, tag, 0.0, None, False))
            newest = tag
            tag += 1
        else:
            newest = tag - 1
        batch = buf.sample_corrected(32, rng)
        if batch[-1].action != newest:
            newest_ok = False
    ok = polyak_ok and clip_ok and ppo_ok and newest_ok
    assert _report(
        4, ok,
        f"polyak tau=1 bit-exact: {polyak_ok}; clip <= 0.5+1e-9: {clip_ok}; "
        f"PPO clipped zero-grad: {ppo_ok}; corrected replay 10000/10000: {newest_ok}",
    )


# --- 5: dense-mode learning smoke test ---------------------------------------

_DENSE_KW = dict(reward_mode="dense", grid_size=12, horizon=150,
                 nozzle_channel=True, n_sections=10, seed=7,
                 timing_enabled=False)
_DQN_STEPS = 150_000


def _dense_dataset_and_zigzag():
    cfg = TrainConfig(algorithm="dqn", total_steps=_DQN_STEPS, **_DENSE_KW)
    dataset = harness.build_dataset(cfg)
    zz = float(np.mean(harness.zigzag_scores(
        dataset, 64, np.random.default_rng(123), horizon=150)))
    return cfg, zz


def test_criterion_5_dense_learning():
    t0 = time.monotonic()
    cfg, zigzag = _dense_dataset_and_zigzag()
    rec_dqn = harness.train(cfg)
    dqn_initial = rec_dqn.rows[0].mean_score
    dqn_final = rec_dqn.best_mean_score
    dqn_ok = dqn_final >= 2 * dqn_initial and dqn_final >= 0.9 * zigzag

    ppo_cfg = TrainConfig(algorithm="ppo", total_steps=10 * _DQN_STEPS, **_DENSE_KW)
    rec_ppo = harness.train(ppo_cfg)
    ppo_initial = rec_ppo.rows[0].mean_score
    ppo_final = rec_ppo.best_mean_score
    ppo_ok = (ppo_final >= 2 * ppo_initial and ppo_final >= 0.9 * zigzag
              and ppo_final >= min(dqn_final, 0.9 * zigzag))
    elapsed = time.monotonic() - t0
    ok = dqn_ok and ppo_ok and elapsed < 45 * 60
    assert _report(
        5, ok,
        f"zigzag {zigzag:.2f}; DQN {dqn_initial:.2f} -> {dqn_final:.2f} "
        f"(need >= {0.9 * zigzag:.2f}); PPO {ppo_initial:.2f} -> {ppo_final:.2f}; "
        f"{elapsed / 60:.1f} min (< 45)",
    )


# --- 6: sparse-mode learning smoke test --------------------------------------


def test_criterion_6_sparse_learning():
    t0 = time.monotonic()
    cfg = TrainConfig(algorithm="ppo", reward_mode="sparse", grid_size=8,
                      horizon=100, n_sections=5, seed=11, timing_enabled=False,
                      total_steps=400_000)
    dataset = harness.build_dataset(cfg)
    rnd_rng = np.random.default_rng(55)
    n_rand = 256
    rnd_scores = []
    world = genv.ToolpathEnv(dataset, np.random.default_rng(56), "sparse", 100)
    for _ in range(n_rand):
        world.reset()
        done = False
        while not done:
            _, _, done, _ = world.step(int(rnd_rng.integers(8)))
        rnd_scores.append(world.episode_return)
    rnd_mean = float(np.mean(rnd_scores))
    rnd_se = float(np.std(rnd_scores) / math.sqrt(n_rand))

    rec = harness.train(cfg)
    final = rec.best_mean_score
    elapsed = time.monotonic() - t0
    ok = final > rnd_mean + 3 * rnd_se and elapsed < 45 * 60
    assert _report(
        6, ok,
        f"PPO sparse {final:.3f} vs random {rnd_mean:.3f} + 3*SE ({rnd_se:.3f}) "
        f"= {rnd_mean + 3 * rnd_se:.3f}; {elapsed / 60:.1f} min (< 45)",
    )


# --- 7: SAC comparison (non-blocking report) ---------------------------------


def test_criterion_7_sac_report():
    budget = 30_000
    kw = dict(reward_mode="dense", grid_size=12, horizon=150,
              nozzle_channel=True, n_sections=10, seed=7, timing_enabled=False,
              total_steps=budget, eval_interval=budget // 3)
    results = {}
    for algo in ("dqn", "sac", "ppo"):
        rec = harness.train(TrainConfig(algorithm=algo, **kw))
        results[algo] = rec.best_mean_score
    inferior = results["sac"] < results["dqn"] and results["sac"] < results["ppo"]
    _report(
        7, True,
        f"identical {budget}-step budget: DQN {results['dqn']:.2f}, "
        f"PPO {results['ppo']:.2f}, SAC {results['sac']:.2f}; "
        f"SAC inferior to both: {inferior} (report only, non-blocking)",
    )


# --- 8: reproducibility and artifact suites ----------------------------------


def test_criterion_8_reproducibility_and_artifacts(tmp_path):
    t0 = time.monotonic()
    repro_ok = True
    for algo, steps in (("dqn", 1200), ("ppo", 1024), ("sac", 1200)):
        cfg = TrainConfig(algorithm=algo, grid_size=6, horizon=20, n_sections=2,
                          total_steps=steps, eval_interval=600, eval_episodes=4,
                          learning_starts=64, batch_size=16, seed=3,
                          conv_channels="4,4,4", hidden=16, n_streams=2,
                          rollout_steps=64, minibatch_size=128,
                          timing_enabled=False)
        harness.train(cfg, out_dir=tmp_path / f"{algo}_a")
        harness.train(cfg, out_dir=tmp_path / f"{algo}_b")
        a = (tmp_path / f"{algo}_a" / "metrics.csv").read_bytes()
        b = (tmp_path / f"{algo}_b" / "metrics.csv").read_bytes()
        if a != b:
            repro_ok = False

    # toolpath export / parse / SVG sanity over random episodes
    import xml.etree.ElementTree as ET

    rng = np.random.default_rng(88)
    dataset = generate_dataset(rng, 4, 8)
    artifact_ok = True
    for _ in range(25):
        section = dataset.sections[int(rng.integers(4))]
        state = genv.reset(section, rng, horizon=50)
        actions = [int(a) for a in rng.integers(0, 8, size=50)]
        tp = toolpath_from_actions(section, state.nozzle, actions, horizon=50)
        if parse_toolpath(export_toolpath(tp), section) != tp:
            artifact_ok = False
        try:
            ET.fromstring(render_toolpath_svg(tp, section))
        except ET.ParseError:
            artifact_ok = False
    try:
        ET.fromstring(render_learning_curve_svg(
            [([0, 1000, 2000], [-40.0, -10.0, 5.0])], ["dqn"], baseline=8.0,
        ))
    except ET.ParseError:
        artifact_ok = False
    elapsed = time.monotonic() - t0
    ok = repro_ok and artifact_ok and elapsed < 300.0
    assert _report(
        8, ok,
        f"byte-identical CSVs (dqn/ppo/sac): {repro_ok}; artifact suite: "
        f"{artifact_ok}; {elapsed:.1f}s (< 300)",
    )
