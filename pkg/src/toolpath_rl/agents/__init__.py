from .replay import ReplayBuffer, Transition
from .dqn import DqnAgent, DqnConfig, linear_epsilon, td_target
from .ppo import PpoAgent, PpoConfig, RolloutBatch, ppo_gae, ppo_loss_and_grads
from .sac import SacAgent, SacConfig, policy_loss_and_grad, soft_state_value

__all__ = [
    "ReplayBuffer",
    "Transition",
    "DqnAgent",
    "DqnConfig",
    "linear_epsilon",
    "td_target",
    "PpoAgent",
    "PpoConfig",
    "RolloutBatch",
    "ppo_gae",
    "ppo_loss_and_grads",
    "SacAgent",
    "SacConfig",
    "policy_loss_and_grad",
    "soft_state_value",
]
