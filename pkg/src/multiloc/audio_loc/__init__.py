"""Sound-source localization from synchronized microphones at known positions."""

from .gcc import GccConfig, TdoaFrame, all_pairs, extract_tdoa_frames, frame_count, gcc_phat, spectrogram
from .multilat import (
    FrameFix,
    RansacConfig,
    SoundSpeedModel,
    multilaterate_frame,
    speed_of_sound,
    tdoa_residuals,
)
from .pipeline import AudioConfig, localize_audio, localize_audio_with_report
from .smoothing import CausalTracker, SmootherConfig, smooth_states, smooth_trajectory, smoother_cost

__all__ = [
    "AudioConfig",
    "CausalTracker",
    "FrameFix",
    "GccConfig",
    "RansacConfig",
    "SmootherConfig",
    "SoundSpeedModel",
    "TdoaFrame",
    "all_pairs",
    "extract_tdoa_frames",
    "frame_count",
    "gcc_phat",
    "localize_audio",
    "localize_audio_with_report",
    "multilaterate_frame",
    "smooth_states",
    "smooth_trajectory",
    "smoother_cost",
    "spectrogram",
    "speed_of_sound",
    "tdoa_residuals",
]
