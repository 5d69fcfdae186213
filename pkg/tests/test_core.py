import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra import numpy as hnp

from multiloc.core import (
    ChannelSnapshot,
    MicArray,
    SceneConfig,
    TimedPosition,
    Trajectory,
    derive_seed,
    ring_mic_layout,
    read_mic_csv,
    read_trajectory_csv,
    resample_trajectory,
    stage_rng,
    write_mic_csv,
    write_trajectory_csv,
)
from multiloc.errors import ConfigurationError, DegenerateInputError, GeometryError


def _brute_interp(t_knots, x_knots, tq):
    """Piecewise-linear evaluation by explicit bracket search."""
    out = []
    for t in tq:
        for k in range(len(t_knots) - 1):
            if t_knots[k] <= t <= t_knots[k + 1]:
                w = (t - t_knots[k]) / (t_knots[k + 1] - t_knots[k])
                out.append((1 - w) * x_knots[k] + w * x_knots[k + 1])
                break
    return np.array(out)


@st.composite
def trajectories(draw, min_len=2, max_len=12):
    n = draw(st.integers(min_len, max_len))
    gaps = draw(hnp.arrays(float, n - 1, elements=st.floats(0.01, 2.0)))
    t0 = draw(st.floats(-5, 5))
    t = t0 + np.concatenate([[0.0], np.cumsum(gaps)])
    xyz = draw(hnp.arrays(float, (n, 3), elements=st.floats(-10, 10)))
    return Trajectory(t, xyz)


def test_timed_position_rejects_non_finite():
    with pytest.raises(DegenerateInputError):
        TimedPosition(0.0, np.nan, 0.0, 0.0)
    assert TimedPosition(1.0, 1.0, 2.0, 3.0).xyz.tolist() == [1.0, 2.0, 3.0]


def test_trajectory_invariants():
    with pytest.raises(DegenerateInputError):
        Trajectory([], np.zeros((0, 3)))
    with pytest.raises(DegenerateInputError):
        Trajectory([0.0, 0.0], np.zeros((2, 3)))
    with pytest.raises(DegenerateInputError):
        Trajectory([0.0, 1.0], [[0, 0, np.inf], [0, 0, 0]])
    tr = Trajectory([0.0, 1.0], [[0, 0, 0], [1, 1, 1]])
    assert len(tr) == 2 and tr.duration == 1.0
    assert [s.t for s in tr] == [0.0, 1.0]
    with pytest.raises(ValueError):
        tr.xyz[0, 0] = 5.0  # read-only storage


def test_resample_identity_on_uniform_grid():
    t = np.arange(11) / 10.0
    xyz = np.column_stack([np.sin(t), np.cos(t), t])
    out = resample_trajectory(Trajectory(t, xyz), 10.0)
    np.testing.assert_allclose(out.t, t, atol=1e-12)
    np.testing.assert_allclose(out.xyz, xyz, atol=1e-12)


def test_resample_linear_midpoint():
    tr = Trajectory([0.0, 1.0], [[0, 0, 0], [2, 0, 0]])
    out = resample_trajectory(tr, 2.0)
    assert out.t.tolist() == [0.0, 0.5, 1.0]
    assert out.xyz[1, 0] == pytest.approx(1.0)


def test_resample_matches_brute_force_oracle(rng):
    t = np.sort(rng.uniform(0, 3, size=3))
    t[0] = 0.0
    xyz = rng.normal(size=(3, 3))
    out = resample_trajectory(Trajectory(t, xyz), 10.0)
    for a in range(3):
        np.testing.assert_allclose(out.xyz[:, a], _brute_interp(t, xyz[:, a], out.t), atol=1e-12)
    assert out.t[0] == t[0] and out.t[-1] <= t[-1]


def test_resample_needs_two_samples():
    with pytest.raises(DegenerateInputError):
        resample_trajectory(Trajectory([0.0], [[0, 0, 0]]), 10.0)
    with pytest.raises(ConfigurationError):
        resample_trajectory(Trajectory([0.0, 1.0], np.zeros((2, 3))), 0.0)


@given(trajectories())
def test_position_at_original_timestamps_is_exact(tr):
    np.testing.assert_array_equal(tr.position_at(tr.t), tr.xyz)


@given(trajectories(), st.floats(0.5, 50.0))
def test_resampled_points_stay_within_bracketing_samples(tr, rate):
    out = resample_trajectory(tr, rate)
    assert out.t[0] == tr.t[0] and out.t[-1] <= tr.t[-1] + 1e-12
    steps = np.diff(out.t)
    np.testing.assert_allclose(steps, 1.0 / rate, rtol=1e-6)
    hi = np.clip(np.searchsorted(tr.t, out.t, side="left"), 1, len(tr) - 1)
    lo = hi - 1
    lower = np.minimum(tr.xyz[lo], tr.xyz[hi]) - 1e-9
    upper = np.maximum(tr.xyz[lo], tr.xyz[hi]) + 1e-9
    assert np.all((out.xyz >= lower) & (out.xyz <= upper))


def test_trajectory_csv_round_trip(tmp_path, rng):
    tr = Trajectory(np.cumsum(rng.uniform(0.01, 0.1, 20)), rng.normal(size=(20, 3)))
    path = write_trajectory_csv(tr, tmp_path / "sub" / "gt.csv")
    assert path.read_text().splitlines()[0] == "t,x,y,z"
    back = read_trajectory_csv(path)
    np.testing.assert_array_equal(back.t, tr.t)
    np.testing.assert_array_equal(back.xyz, tr.xyz)


def test_trajectory_csv_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("time,x,y,z\n0,0,0,0\n")
    with pytest.raises(DegenerateInputError):
        read_trajectory_csv(p)


def test_mic_array_invariants(tmp_path):
    with pytest.raises(GeometryError):
        MicArray(np.eye(3))
    with pytest.raises(GeometryError):
        MicArray([[0, 0, 0], [0, 0, 0], [1, 0, 0], [0, 1, 0]])
    with pytest.raises(GeometryError):
        MicArray([[k, 0, 0] for k in range(5)])
    mics = ring_mic_layout()
    assert len(mics) == 12
    back = read_mic_csv(write_mic_csv(mics, tmp_path / "mics.csv"))
    np.testing.assert_array_equal(back.positions, mics.positions)
    assert mics.baseline(0, 1) == pytest.approx(np.linalg.norm(mics.positions[0] - mics.positions[1]))


def test_scene_config_invariants():
    sc = SceneConfig()
    assert (sc.area_x, sc.area_y, sc.antenna_count, sc.subcarrier_count) == (4.2, 2.5, 100, 100)
    assert sc.center_frequency == 3.7e9 and sc.bandwidth == 20e6
    assert sc.audio_sample_rate == 96_000.0
    assert sc.diagonal == pytest.approx(np.hypot(4.2, 2.5))
    for bad in ({"area_x": 0.0}, {"antenna_count": 0}, {"audio_sample_rate": 30_000.0}):
        with pytest.raises(ConfigurationError):
            SceneConfig(**bad)
    with pytest.raises(ConfigurationError):
        SceneConfig.from_dict({"nonsense": 1})
    again = SceneConfig.from_dict(sc.to_dict())
    np.testing.assert_array_equal(again.mic_array.positions, sc.mic_array.positions)


def test_stage_rng_is_stable_and_label_separated():
    a = stage_rng(7, "audio").standard_normal(4)
    b = stage_rng(7, "audio").standard_normal(4)
    c = stage_rng(7, "radio").standard_normal(4)
    np.testing.assert_array_equal(a, b)
    assert not np.allclose(a, c)
    assert derive_seed(7, "x") == derive_seed(7, "x") != derive_seed(8, "x")


def test_channel_snapshot_validation():
    with pytest.raises(DegenerateInputError):
        ChannelSnapshot(np.zeros(3))
    with pytest.raises(DegenerateInputError):
        ChannelSnapshot(np.array([[np.nan]]))
    assert ChannelSnapshot(np.ones((2, 3))).shape == (2, 3)
