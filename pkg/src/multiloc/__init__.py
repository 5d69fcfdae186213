"""Multi-sensor indoor localization toolkit.

Audio localization (GCC-PHAT time differences and robust multilateration),
massive-MIMO radio fingerprinting with fused fully connected networks,
trajectory evaluation, and a synthetic scene simulator.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .core import (
    ChannelSnapshot,
    MicArray,
    SceneConfig,
    TimedPosition,
    Trajectory,
    resample_trajectory,
)

__version__ = "0.1.0"

__all__ = [
    "ChannelSnapshot",
    "KERNEL_BACKEND",
    "MicArray",
    "SceneConfig",
    "TimedPosition",
    "Trajectory",
    "resample_trajectory",
]
