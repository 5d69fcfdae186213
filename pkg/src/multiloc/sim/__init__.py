"""Synthetic measurement campaigns standing in for recorded data."""

from .audio import MultichannelRecording, image_sources, synth_audio
from .radio import (
    SPEED_OF_LIGHT,
    PathSet,
    antenna_positions,
    line_of_sight,
    room_paths,
    subcarrier_frequencies,
    synth_channel,
    synth_channel_run,
)
from .signals import SourceSignal, add_awgn, gate_signal, gen_chirp, gen_wideband
from .trajectories import PATTERNS, gen_trajectory, motion_heading

__all__ = [
    "MultichannelRecording",
    "PATTERNS",
    "PathSet",
    "SPEED_OF_LIGHT",
    "SourceSignal",
    "add_awgn",
    "antenna_positions",
    "gate_signal",
    "gen_chirp",
    "gen_trajectory",
    "gen_wideband",
    "image_sources",
    "line_of_sight",
    "motion_heading",
    "room_paths",
    "subcarrier_frequencies",
    "synth_audio",
    "synth_channel",
    "synth_channel_run",
]
