"""Time the numba kernels against their numpy twins.

    python benchmarks/bench_kernels.py [--repeat N] [--end-to-end]

Kernel timings call both backend modules directly, so the environment flag
does not matter for them. ``--end-to-end`` additionally localizes a short
simulated recording in two subprocesses, one with ``MULTILOC_DISABLE_NUMBA=1``.
"""

from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit
from itertools import combinations

import numpy as np

from multiloc._kernels import numpy_backend
from multiloc.audio_loc import all_pairs
from multiloc.core import SceneConfig
from multiloc.sim import antenna_positions, room_paths, subcarrier_frequencies
from multiloc.sim.radio import path_delays


def _cases(rng):
    scene = SceneConfig()
    n = 96_000
    src = rng.normal(size=n)
    idx = np.arange(n) - 300.25
    gain = np.full(n, 0.5)

    paths = room_paths([2.0, 1.0, 0.4], scene)
    delays = path_delays(np.array([2.0, 1.0, 0.4]), paths, antenna_positions(scene))
    freqs = subcarrier_frequencies(scene)

    mics = scene.mic_array.positions
    pairs = all_pairs(len(mics))
    p = np.array([2.0, 1.0, 0.4])
    d = np.linalg.norm(mics - p, axis=1)
    ranges = d[pairs[:, 1]] - d[pairs[:, 0]] + rng.normal(0, 1e-3, len(pairs))
    ranges[::7] += 0.5  # a few outliers so RANSAC evaluates every subset
    ref_rows = np.flatnonzero(pairs[:, 0] == 0)
    subsets = np.array(list(combinations(range(len(ref_rows)), 4)), dtype=np.int64)
    mask = np.ones(len(pairs), dtype=bool)
    mask[::7] = False

    z = np.cumsum(rng.normal(size=500))
    valid = rng.random(500) > 0.2
    return {
        "frac_delay_add (96k samples)":
            lambda m: m.frac_delay_add(np.zeros(n), src, idx, gain),
        f"channel_response ({len(paths.gains)} paths, 100x100)":
            lambda m: m.channel_response(delays, paths.gains, freqs),
        f"ransac_tdoa ({len(subsets)} hypotheses)":
            lambda m: m.ransac_tdoa(mics, pairs, ranges, ref_rows, subsets, 0.01, False, 0.0),
        "refine_tdoa (LM, 66 pairs)":
            lambda m: m.refine_tdoa(mics, pairs, ranges, mask, p + 0.05, False, 50, 1e-10),
        "rts_smooth (500 frames)":
            lambda m: m.rts_smooth(z, valid, 0.01, 4.0, 4e-4, 100.0, 1.0),
    }


def bench_kernels(repeat: int) -> None:
    from multiloc._kernels import numba_backend

    cases = _cases(np.random.default_rng(0))
    print(f"{'kernel':<40} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for name, fn in cases.items():
        fn(numba_backend)  # compile outside the timing
        t_np = min(timeit.repeat(lambda: fn(numpy_backend), number=1, repeat=repeat))
        t_nb = min(timeit.repeat(lambda: fn(numba_backend), number=1, repeat=repeat))
        print(f"{name:<40} {t_np * 1e3:>10.3f} {t_nb * 1e3:>10.3f} {t_np / t_nb:>7.1f}x")


_E2E = """
import time
from multiloc.core import SceneConfig
from multiloc.sim import gen_trajectory, gen_wideband, synth_audio
from multiloc.audio_loc import localize_audio, speed_of_sound
from multiloc import _kernels
sc = SceneConfig()
gt = gen_trajectory("circle", sc, 0.5, 100.0, radius=0.9, duration=2.0)
rec = synth_audio(gt, gen_wideband(gt.duration, 96000.0, seed=1), sc.mic_array,
                  speed_of_sound(sc.temperature), scene=sc)
localize_audio(rec, sc.mic_array, sc.temperature)  # warm-up (numba compile/cache)
t = time.perf_counter()
localize_audio(rec, sc.mic_array, sc.temperature)
print(_kernels.BACKEND, time.perf_counter() - t)
"""


def bench_end_to_end() -> None:
    print("\nend-to-end audio localization, 2 s circle at 96 kHz")
    for flag in ("0", "1"):
        env = dict(os.environ, MULTILOC_DISABLE_NUMBA=flag)
        res = subprocess.run([sys.executable, "-c", _E2E], env=env, capture_output=True,
                             text=True, check=True)
        backend, secs = res.stdout.split()
        print(f"  {backend:<6} {float(secs):8.3f} s")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--end-to-end", action="store_true")
    args = ap.parse_args()
    bench_kernels(args.repeat)
    if args.end_to_end:
        bench_end_to_end()


if __name__ == "__main__":
    main()
