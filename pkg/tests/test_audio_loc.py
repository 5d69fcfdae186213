import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multiloc.audio_loc import (
    AudioConfig,
    GccConfig,
    RansacConfig,
    SmootherConfig,
    TdoaFrame,
    all_pairs,
    extract_tdoa_frames,
    frame_count,
    gcc_phat,
    localize_audio,
    localize_audio_with_report,
    multilaterate_frame,
    smooth_states,
    smooth_trajectory,
    smoother_cost,
    spectrogram,
    speed_of_sound,
    tdoa_residuals,
)
from multiloc.core import MicArray, Trajectory
from multiloc.errors import ConfigurationError, NoSignalError, PipelineError
from multiloc.sim import SourceSignal, gen_chirp, gen_trajectory, gen_wideband, synth_audio

FS = 96_000.0
C = 344.0


def _brute_lag(x, y, max_lag):
    n = len(x)
    vals = [np.dot(x[:n - k], y[k:]) if k >= 0 else np.dot(x[-k:], y[:n + k])
            for k in range(-max_lag, max_lag + 1)]
    return int(np.argmax(vals)) - max_lag


def _exact_frame(p, mics, c=C, t=0.0):
    pairs = all_pairs(len(mics))
    d = np.linalg.norm(mics.positions - p, axis=1)
    delays = (d[pairs[:, 1]] - d[pairs[:, 0]]) / c
    return TdoaFrame(t, pairs, delays, np.ones(len(pairs)))


def _interior(scene, rng):
    return np.array([rng.uniform(0.3, scene.area_x - 0.3),
                     rng.uniform(0.3, scene.area_y - 0.3),
                     rng.uniform(0.1, 1.0)])


# -- speed of sound ----------------------------------------------------------------

def test_speed_of_sound_model():
    assert speed_of_sound(22.0) == pytest.approx(344.632)
    assert abs(speed_of_sound(22.0) - 344.0) < 1.0
    assert speed_of_sound(28.0) - speed_of_sound(22.0) == pytest.approx(3.636)
    assert speed_of_sound(0.0) == 331.3
    for bad in (-21.0, 51.0):
        with pytest.raises(ConfigurationError):
            speed_of_sound(bad)


@given(st.floats(-20, 50))
def test_speed_of_sound_range(t):
    assert 300 <= speed_of_sound(t) <= 400


# -- GCC-PHAT ----------------------------------------------------------------------

@pytest.fixture(scope="module")
def noise():
    return gen_wideband(0.1, FS, seed=11).samples


def test_self_correlation(noise):
    x = noise[:4096]
    delay, score = gcc_phat(x, x, FS)
    assert abs(delay) < 1e-9
    assert score == pytest.approx(1.0, abs=1e-9)


def test_integer_delay_matches_brute_force(noise):
    x = noise[1000:1000 + 4096]
    y = noise[1000 - 25:1000 - 25 + 4096]  # y lags x by 25 samples
    assert _brute_lag(x, y, 100) == 25
    delay, _ = gcc_phat(x, y, FS)
    assert abs(delay - 260.4e-6) < 0.5 / FS


def test_amplitude_invariance(noise):
    x, y = noise[:4096], noise[40:4136]
    d0, s0 = gcc_phat(x, y, FS)
    d1, s1 = gcc_phat(x, 5 * y, FS)
    assert abs(d1 - d0) < 1e-9 and abs(s1 - s0) < 1e-9


@given(st.integers(-300, 300), st.floats(0.01, 100), st.floats(0.01, 100))
def test_antisymmetry_and_scale(lag, a, b):
    base = gen_wideband(0.1, FS, seed=12).samples
    x = base[2000:2000 + 4096]
    y = base[2000 - lag:2000 - lag + 4096]
    d, s = gcc_phat(x, y, FS)
    d_swap, _ = gcc_phat(y, x, FS)
    assert abs(d + d_swap) < 0.5 / FS
    assert abs(d * FS - lag) < 0.5
    d_s, s_s = gcc_phat(a * x, b * y, FS)
    assert abs(d_s - d) < 1e-9 and abs(s_s - s) < 1e-9


def test_zero_window_is_no_signal(noise):
    with pytest.raises(NoSignalError):
        gcc_phat(np.zeros(4096), noise[:4096], FS)


def test_config_validation():
    for kw in ({"hop": 0}, {"hop": 5000}, {"max_lag": 2048}, {"peak_interp": "cubic"},
               {"band": (500, 100)}):
        with pytest.raises(ConfigurationError):
            GccConfig(**kw)
    with pytest.raises(ConfigurationError):
        RansacConfig(iterations=0)


# -- framing -----------------------------------------------------------------------

@given(st.integers(0, 50_000), st.integers(1, 4096))
def test_frame_count_formula(n, hop):
    cfg = GccConfig(hop=hop)
    expected = 0 if n < 4096 else (n - 4096) // hop + 1
    assert frame_count(n, cfg) == expected


def _static_recording(room, pos, source, **kw):
    tr = Trajectory([0.0, len(source) / FS], [pos, pos])
    return synth_audio(tr, source, room.mic_array, C, **kw)


def test_static_source_delays_match_geometry(scene):
    pos = np.array([1.3, 0.8, 0.5])
    rec = _static_recording(scene, pos, gen_wideband(0.2, FS, seed=13))
    frames = extract_tdoa_frames(rec, GccConfig.for_rate(FS), scene.mic_array, C)
    assert len(frames) == frame_count(rec.n_samples, GccConfig.for_rate(FS))
    d = np.linalg.norm(scene.mic_array.positions - pos, axis=1)
    checked = 0
    for fr in frames:
        ref = fr.pairs[:, 0] == 0
        expected = (d[fr.pairs[ref, 1]] - d[0]) / C
        np.testing.assert_array_less(np.abs(fr.delays[ref] - expected), 0.5 / FS)
        checked += ref.sum()
    assert checked >= 0.9 * len(frames) * (len(d) - 1)


def test_chirp_gap_frames_are_empty(scene):
    rec = _static_recording(scene, [2.0, 1.2, 0.4], gen_chirp(1.0, FS))
    cfg = GccConfig.for_rate(FS)
    frames = extract_tdoa_frames(rec, cfg, scene.mic_array, C)
    # two 300 ms silences per second; a window counts once it starts after the
    # burst plus the longest propagation delay and ends before the next burst
    lag = 10.0 / C * FS
    gap = [fr for k, fr in enumerate(frames)
           if any(k * cfg.hop > (start + 0.2) * FS + lag
                  and k * cfg.hop + cfg.window <= (start + 0.5) * FS for start in (0.0, 0.5))]
    assert len(gap) > 40
    assert all(len(fr) == 0 for fr in gap)
    assert any(len(fr) > 0 for fr in frames[:5])


def test_retained_delays_respect_physical_bound(scene):
    rec = _static_recording(scene, [2.0, 1.2, 0.4], gen_wideband(0.2, FS, seed=14),
                            snr_db=0.0, seed=3, scene=scene, reflection=0.6,
                            interferer=([-0.5, -0.5, 0.8], gen_wideband(0.2, FS, seed=15)))
    m = scene.mic_array.positions
    for fr in extract_tdoa_frames(rec, GccConfig.for_rate(FS), scene.mic_array, C):
        base = np.linalg.norm(m[fr.pairs[:, 0]] - m[fr.pairs[:, 1]], axis=1)
        assert np.all(np.abs(fr.delays) <= base / C + 1e-15)
        assert np.all(fr.scores >= 0.15)


# -- multilateration ---------------------------------------------------------------

def test_centroid_of_symmetric_array():
    mics = MicArray(np.vstack([np.eye(3), -np.eye(3)]) + [1.0, 2.0, 0.5])
    fix = multilaterate_frame(_exact_frame(np.array([1.0, 2.0, 0.5]), mics), mics, C)
    assert fix.status == "ok"
    np.testing.assert_allclose(fix.position, [1.0, 2.0, 0.5], atol=1e-9)


def test_exact_recovery(scene):
    rng = np.random.default_rng(21)
    mics = scene.mic_array
    for _ in range(10):
        p = _interior(scene, rng)
        frame = _exact_frame(p, mics)
        fix = multilaterate_frame(frame, mics, C)
        assert np.linalg.norm(fix.position - p) < 1e-6
        assert fix.inliers == len(frame)
        ranges = C * frame.delays
        np.testing.assert_allclose(tdoa_residuals(p, mics, frame.pairs, ranges), 0.0, atol=1e-12)


def test_recovery_with_outliers(scene):
    rng = np.random.default_rng(22)
    mics = scene.mic_array
    cfg = RansacConfig.for_rate(FS, iterations=500, seed=5)
    span = np.linalg.norm(np.ptp(mics.positions, axis=0)) / C
    hits = 0
    for _ in range(20):
        p = _interior(scene, rng)
        fr = _exact_frame(p, mics)
        delays = fr.delays.copy()
        bad = rng.choice(len(delays), int(0.3 * len(delays)), replace=False)
        delays[bad] = rng.uniform(-span, span, len(bad))
        fix = multilaterate_frame(TdoaFrame(0.0, fr.pairs, delays, fr.scores), mics, C, cfg)
        hits += fix.position is not None and np.linalg.norm(fix.position - p) < 0.01
    assert hits >= 19


@settings(max_examples=20)
@given(st.integers(0, 2**32 - 1))
def test_residual_no_worse_than_truth(seed):
    from multiloc.core import SceneConfig
    scene = SceneConfig()
    rng = np.random.default_rng(seed)
    mics = scene.mic_array
    p = _interior(scene, rng)
    fr = _exact_frame(p, mics)
    noisy = fr.delays + rng.normal(0, 0.3 / FS, len(fr.delays))
    fix = multilaterate_frame(TdoaFrame(0.0, fr.pairs, noisy, fr.scores), mics, C)
    assert fix.inliers == len(noisy)
    ranges = C * noisy
    at_fix = np.sum(tdoa_residuals(fix.position, mics, fr.pairs, ranges) ** 2)
    at_true = np.sum(tdoa_residuals(p, mics, fr.pairs, ranges) ** 2)
    assert at_fix <= at_true + 1e-9


@settings(max_examples=20)
@given(st.tuples(*[st.floats(-20, 20)] * 3), st.integers(0, 1000))
def test_multilateration_translation_equivariance(shift, seed):
    from multiloc.core import SceneConfig
    scene = SceneConfig()
    v = np.array(shift)
    p = _interior(scene, np.random.default_rng(seed))
    mics = scene.mic_array
    moved = MicArray(mics.positions + v)
    a = multilaterate_frame(_exact_frame(p, mics), mics, C).position
    b = multilaterate_frame(_exact_frame(p + v, moved), moved, C).position
    np.testing.assert_allclose(b - v, a, atol=1e-6)


def test_unlocalizable_frames(scene):
    mics = scene.mic_array
    fr = _exact_frame(np.array([1.0, 1.0, 0.5]), mics)
    few = TdoaFrame(0.0, fr.pairs[:3], fr.delays[:3], fr.scores[:3])
    assert multilaterate_frame(few, mics, C).status == "insufficient-measurements"
    small = MicArray(mics.positions[:4])
    assert multilaterate_frame(_exact_frame(np.ones(3), small), small, C).position is None
    planar = RansacConfig(planar=True, plane_z=0.5)
    fix = multilaterate_frame(_exact_frame(np.array([1.0, 1.0, 0.5]), small), small, C, planar)
    np.testing.assert_allclose(fix.position, [1.0, 1.0, 0.5], atol=1e-6)


# -- smoothing ---------------------------------------------------------------------

def _raw(t, pos):
    return [(ti, None if p is None else np.asarray(p), 10) for ti, p in zip(t, pos)]


def test_constant_input_is_stationary():
    t = np.arange(50) * 0.01
    p = np.array([1.0, 2.0, 0.3])
    tr = smooth_trajectory(_raw(t, [p] * 50))
    np.testing.assert_allclose(tr.xyz, np.tile(p, (50, 1)), atol=1e-9)
    _, vel = smooth_states(t, np.tile(p, (50, 1)), np.ones(50, bool))
    np.testing.assert_allclose(vel, 0.0, atol=1e-9)


def test_gap_on_a_line_is_filled():
    t = np.arange(100) * 0.01
    line = np.column_stack([0.5 * t, 0.2 + 0.3 * t, np.full_like(t, 0.4)])
    pos = list(line)
    pos[40] = None
    tr = smooth_trajectory(_raw(t, pos))
    assert np.linalg.norm(tr.xyz[40] - line[40]) < 1e-3


def test_coasts_after_signal_ends():
    t = np.arange(100) * 0.01
    line = np.column_stack([0.5 * t, np.ones_like(t), np.zeros_like(t)])
    pos = list(line[:60]) + [None] * 40
    tr = smooth_trajectory(_raw(t, pos))
    step = np.diff(tr.xyz[59:], axis=0)
    np.testing.assert_allclose(step, np.tile(step[0], (len(step), 1)), atol=1e-9)
    np.testing.assert_allclose(tr.xyz[99], line[99], atol=1e-3)


def test_single_frame_and_empty():
    tr = smooth_trajectory(_raw(np.arange(5) * 0.01, [None, None, [1, 2, 3], None, None]))
    np.testing.assert_allclose(tr.xyz, np.tile([1, 2, 3], (5, 1)), atol=1e-9)
    with pytest.raises(PipelineError):
        smooth_trajectory([])
    with pytest.raises(PipelineError):
        smooth_trajectory(_raw([0.0, 0.01], [None, None]))


@settings(max_examples=25)
@given(st.integers(0, 2**32 - 1), st.floats(-1e-2, 1e-2).filter(lambda e: abs(e) > 1e-6))
def test_smoother_is_the_cost_minimizer(seed, eps):
    rng = np.random.default_rng(seed)
    n = 30
    t = np.arange(n) * 0.01
    z = np.cumsum(rng.normal(0, 0.01, (n, 3)), axis=0) + rng.normal(0, 0.02, (n, 3))
    valid = rng.random(n) > 0.2
    valid[0] = True
    cfg = SmootherConfig()
    pos, vel = smooth_states(t, z, valid, cfg)
    best = smoother_cost(pos, vel, t, z, valid, cfg)["total"]
    raw_vel = np.gradient(z, t, axis=0)
    assert best <= smoother_cost(z, raw_vel, t, z, valid, cfg)["total"]
    k = rng.integers(n)
    bumped = pos.copy()
    bumped[k, rng.integers(3)] += eps
    assert best <= smoother_cost(bumped, vel, t, z, valid, cfg)["total"]


# -- spectrogram -------------------------------------------------------------------

def test_spectrogram_tone():
    x = np.sin(2 * np.pi * 1000 * np.arange(int(0.2 * FS)) / FS)
    S = spectrogram(x, FS)
    peak = np.argmax(S, axis=1) * FS / 4096
    assert np.all(np.abs(peak - 1000) <= FS / 4096)


def test_spectrogram_chirp_ridge():
    x = gen_chirp(1.0, FS).samples
    S = spectrogram(x, FS, window=2048, hop=480)
    centers = (np.arange(len(S)) * 480 + 1024) / FS
    burst = (centers > 0.02) & (centers < 0.18)
    ridge = np.argmax(S[burst], axis=1) * FS / 2048
    expected = 400 + 1000 * centers[burst] / 0.2
    assert np.all(np.abs(ridge - expected) < 80)
    assert np.all(np.diff(ridge) >= 0)


def test_spectrogram_null_and_errors():
    assert not np.any(spectrogram(np.zeros(10_000), FS))
    assert spectrogram(np.zeros(10), FS).shape == (0, 2049)
    with pytest.raises(ConfigurationError):
        spectrogram(np.zeros(100), FS, window=1)


# -- end to end --------------------------------------------------------------------

def test_wideband_circle_end_to_end(scene):
    gt = gen_trajectory("circle", scene, 0.5, 100.0, radius=0.9, duration=1.0)
    src = gen_wideband(gt.duration, FS, seed=16)
    rec = synth_audio(gt, src, scene.mic_array, speed_of_sound(scene.temperature), scene=scene)
    est, report = localize_audio_with_report(rec, scene.mic_array, scene.temperature)
    assert report["localized_frames"] == report["total_frames"] > 0
    err = np.linalg.norm(est.xyz[:, :2] - gt.position_at(est.t)[:, :2], axis=1)
    assert err.mean() < 0.05
    assert report["seed"] == 0 and "gcc" in report["config"]


def test_end_to_end_translation_equivariance(scene):
    v = np.array([3.0, -2.0, 1.0])
    pos = np.array([1.5, 1.0, 0.4])
    src = gen_wideband(0.08, FS, seed=17)
    tr = Trajectory([0.0, 0.1], [pos, pos])
    cfg = AudioConfig.for_rate(FS)
    c = speed_of_sound(22.0)
    a = localize_audio(synth_audio(tr, src, scene.mic_array, c), scene.mic_array, 22.0, cfg)
    moved = MicArray(scene.mic_array.positions + v)
    trv = Trajectory([0.0, 0.1], [pos + v, pos + v])
    b = localize_audio(synth_audio(trv, src, moved, c), moved, 22.0, cfg)
    np.testing.assert_allclose(b.xyz - v, a.xyz, atol=1e-6)


def test_channel_count_mismatch(scene):
    rec = _static_recording(scene, [2.0, 1.0, 0.4], gen_wideband(0.05, FS, seed=18))
    with pytest.raises(ConfigurationError):
        localize_audio(rec, MicArray(scene.mic_array.positions[:6]), 22.0)
