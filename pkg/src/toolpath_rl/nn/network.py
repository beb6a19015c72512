"""Conv-trunk network with per-head dense stacks, hand-derived backward pass.

Architecture: image -> conv x3 (ReLU) -> flatten -> concat action-history
vector -> per head: dense(hidden) -> ReLU -> dense(out). Parameters live in a
flat name->array dict so the optimizer, Polyak averaging, clipping and
checkpointing can treat every network uniformly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels


@dataclass(frozen=True)
class NetConfig:
    in_channels: int
    grid_size: int
    history_dim: int = 80
    conv_channels: tuple[int, ...] = (16, 32, 32)
    conv_strides: tuple[int, ...] = (2, 2, 1)
    kernel: int = 3
    pad: int = 1
    hidden: int = 128
    heads: dict = field(default_factory=dict)  # name -> output dim
    dtype: str = "float32"

    @property
    def np_dtype(self):
        return np.dtype(self.dtype)

    def conv_shapes(self):
        """Per-conv (out_channels, stride, out_size) given the input size."""
        size = self.grid_size
        shapes = []
        for ch, st in zip(self.conv_channels, self.conv_strides):
            size = (size + 2 * self.pad - self.kernel) // st + 1
            shapes.append((ch, st, size))
        return shapes

    @property
    def feature_dim(self) -> int:
        ch, _, size = self.conv_shapes()[-1]
        return ch * size * size + self.history_dim


def init_params(config: NetConfig, rng: np.random.Generator) -> dict[str, np.ndarray]:
    """He-uniform for ReLU layers, near-zero uniform for output heads."""
    dt = config.np_dtype
    params: dict[str, np.ndarray] = {}
    in_ch = config.in_channels
    for li, (out_ch, _, _) in enumerate(config.conv_shapes()):
        fan_in = in_ch * config.kernel * config.kernel
        limit = np.sqrt(6.0 / fan_in)
        params[f"conv{li}.w"] = rng.uniform(
            -limit, limit, (out_ch, in_ch, config.kernel, config.kernel)
        ).astype(dt)
        params[f"conv{li}.b"] = np.zeros(out_ch, dtype=dt)
        in_ch = out_ch
    feat = config.feature_dim
    for name, out_dim in config.heads.items():
        limit = np.sqrt(6.0 / feat)
        params[f"head.{name}.fc0.w"] = rng.uniform(
            -limit, limit, (config.hidden, feat)
        ).astype(dt)
        params[f"head.{name}.fc0.b"] = np.zeros(config.hidden, dtype=dt)
        params[f"head.{name}.fc1.w"] = rng.uniform(
            -1e-3, 1e-3, (out_dim, config.hidden)
        ).astype(dt)
        params[f"head.{name}.fc1.b"] = np.zeros(out_dim, dtype=dt)
    return params


def zeros_like_params(params: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
    return {k: np.zeros_like(v) for k, v in params.items()}


class Network:
    """Bundles a NetConfig with its parameter dict."""

    def __init__(self, config: NetConfig, params: dict[str, np.ndarray] | None = None,
                 rng: np.random.Generator | None = None):
        self.config = config
        if params is None:
            if rng is None:
                raise ValueError("need params or an rng to initialize them")
            params = init_params(config, rng)
        self.params = params

    def copy(self) -> "Network":
        return Network(self.config, {k: v.copy() for k, v in self.params.items()})

    def forward(self, images: np.ndarray, history: np.ndarray,
                head_names: list[str] | None = None, want_cache: bool = False):
        """Batched forward pass.

        images: (N, C, H, W); history: (N, history_dim). Returns a dict
        head name -> (N, out_dim) array, plus a cache when requested.
        """
        cfg = self.config
        dt = cfg.np_dtype
        x = np.ascontiguousarray(images, dtype=dt)
        hist = np.ascontiguousarray(history, dtype=dt)
        if x.ndim != 4 or x.shape[1] != cfg.in_channels:
            raise ValueError(
                f"expected images (N,{cfg.in_channels},{cfg.grid_size},"
                f"{cfg.grid_size}), got {x.shape}"
            )
        if head_names is None:
            head_names = list(cfg.heads)
        # NHWC internally: channel-innermost keeps the im2col gather contiguous.
        x_nhwc = np.ascontiguousarray(x.transpose(0, 2, 3, 1))
        h = x_nhwc
        relu_out = []
        conv_cols = []
        for li, (_, stride, _) in enumerate(cfg.conv_shapes()):
            y = kernels.conv2d_forward(
                h, self.params[f"conv{li}.w"], self.params[f"conv{li}.b"],
                stride, cfg.pad, want_cols=want_cache,
            )
            if want_cache:
                y, cols = y
                conv_cols.append(cols)
            h = np.maximum(y, 0)
            relu_out.append(h)
        n = x.shape[0]
        flat = h.reshape(n, -1)
        feat = np.concatenate([flat, hist], axis=1)
        outputs = {}
        head_hidden = {}
        for name in head_names:
            w0 = self.params[f"head.{name}.fc0.w"]
            b0 = self.params[f"head.{name}.fc0.b"]
            w1 = self.params[f"head.{name}.fc1.w"]
            b1 = self.params[f"head.{name}.fc1.b"]
            z0 = feat @ w0.T + b0
            a0 = np.maximum(z0, 0)
            outputs[name] = a0 @ w1.T + b1
            head_hidden[name] = a0
        if not want_cache:
            return outputs
        cache = {
            "x_nhwc": x_nhwc,
            "conv_relu": relu_out,
            "conv_cols": conv_cols,
            "feat": feat,
            "head_hidden": head_hidden,
            "head_names": head_names,
        }
        return outputs, cache

    def backward(self, cache, grad_outputs: dict[str, np.ndarray]) -> dict[str, np.ndarray]:
        """Gradients of a scalar loss given d(loss)/d(head output) arrays."""
        cfg = self.config
        grads = zeros_like_params(self.params)
        feat = cache["feat"]
        n = feat.shape[0]
        gfeat = np.zeros_like(feat)
        for name, gout in grad_outputs.items():
            gout = np.asarray(gout, dtype=cfg.np_dtype)
            a0 = cache["head_hidden"][name]
            w1 = self.params[f"head.{name}.fc1.w"]
            w0 = self.params[f"head.{name}.fc0.w"]
            grads[f"head.{name}.fc1.w"] = gout.T @ a0
            grads[f"head.{name}.fc1.b"] = gout.sum(axis=0)
            ga0 = (gout @ w1) * (a0 > 0)
            grads[f"head.{name}.fc0.w"] = ga0.T @ feat
            grads[f"head.{name}.fc0.b"] = ga0.sum(axis=0)
            gfeat += ga0 @ w0
        conv_shapes = cfg.conv_shapes()
        last_ch, _, last_size = conv_shapes[-1]
        gflat = gfeat[:, : last_ch * last_size * last_size]
        gh = gflat.reshape(n, last_size, last_size, last_ch)
        for li in range(len(conv_shapes) - 1, -1, -1):
            _, stride, _ = conv_shapes[li]
            relu = cache["conv_relu"][li]
            gy = gh * (relu > 0)
            x_in = cache["x_nhwc"] if li == 0 else cache["conv_relu"][li - 1]
            gh, gw, gb = kernels.conv2d_backward(
                x_in, self.params[f"conv{li}.w"], gy, stride, cfg.pad,
                need_grad_x=li > 0, cols=cache["conv_cols"][li],
            )
            grads[f"conv{li}.w"] = gw
            grads[f"conv{li}.b"] = gb
        return grads


def flatten_obs_batch(observations) -> tuple[np.ndarray, np.ndarray]:
    """Stack a list of Observation into (images, history) batch arrays."""
    images = np.stack([o.image for o in observations])
    history = np.stack([o.history for o in observations])
    return images, history


def save_params(path, params: dict[str, np.ndarray]) -> None:
    """Checkpoint: npz container keyed by layer name, bit-exact round trip."""
    np.savez(path, **params)


def load_params(path) -> dict[str, np.ndarray]:
    with np.load(path) as data:
        return {k: data[k] for k in data.files}
