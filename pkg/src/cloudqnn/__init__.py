"""Quantum and classical cloud-cover regression toolkit.

Submodules: statevector (dense simulator), qnn (re-uploading circuit),
gradients (parameter-shift, finite-difference, adjoint), baselines (MLP and
the Xu-Randall scheme), data (datasets, scaling, synthesis), training (loop,
metrics, sweeps), explain (KernelSHAP), checkpoints (JSON persistence), and
cli (the `cloudqnn` command).
"""

__version__ = "0.1.0"

from .errors import (
    CloudQnnError,
    ConfigurationError,
    TrainingDivergedError,
    ValidationError,
)

__all__ = [
    "CloudQnnError",
    "ConfigurationError",
    "TrainingDivergedError",
    "ValidationError",
    "__version__",
]
