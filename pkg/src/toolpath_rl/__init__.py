"""RL workbench for learning deposition toolpaths on pixel-grid sections."""

__version__ = "0.1.0"

from .nn.kernels import BACKEND as kernel_backend  # noqa: F401
