from .kernels import BACKEND
from .network import (
    NetConfig,
    Network,
    flatten_obs_batch,
    init_params,
    load_params,
    save_params,
    zeros_like_params,
)
from .optim import AdamState, adam_step, clip_global_norm, global_norm, polyak_update
from .gumbel import gumbel_softmax_sample, log_softmax, softmax

__all__ = [
    "BACKEND",
    "NetConfig",
    "Network",
    "AdamState",
    "adam_step",
    "clip_global_norm",
    "global_norm",
    "polyak_update",
    "gumbel_softmax_sample",
    "log_softmax",
    "softmax",
    "flatten_obs_batch",
    "init_params",
    "zeros_like_params",
    "save_params",
    "load_params",
]
