import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra import numpy as hnp

from multiloc.core import ChannelSnapshot, SceneConfig
from multiloc.errors import (
    ConfigurationError,
    DegenerateInputError,
    DivergenceError,
    ModelError,
    ShapeError,
)
from multiloc.radio_loc import (
    FeatureSet,
    FeatureVector,
    MlpArch,
    MlpModel,
    RadioConfig,
    TrainConfig,
    build_split,
    cir_features,
    covariance_features,
    extract_features,
    fit_radio,
    grid_campaign,
    load_model,
    localize_radio,
    predict_fused,
    read_run,
    save_model,
    spatial_covariance,
    train_fcnn,
    vectorize_covariance,
    write_run,
)
from multiloc.radio_loc.mlp import Layer, gradient_check, init_layers, smoothed
from multiloc.radio_loc.split import trajectory_number

complex_mats = hnp.arrays(
    np.complex128, st.tuples(st.integers(1, 6), st.integers(1, 8)),
    elements=st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False))


# -- covariance --------------------------------------------------------------------

def test_rank_one_covariance(rng):
    h = rng.normal(size=5) + 1j * rng.normal(size=5)
    R = spatial_covariance(ChannelSnapshot(h[:, None], 0.0))
    np.testing.assert_allclose(R, np.outer(h, h.conj()))
    assert np.trace(R).real == pytest.approx(np.linalg.norm(h) ** 2)


def test_two_vector_covariance_by_hand():
    h1 = np.array([1.0, 1j])
    h2 = np.array([2.0, -1.0])
    R = spatial_covariance(ChannelSnapshot(np.column_stack([h1, h2]), 0.0))
    # 0.5 * ([[1, -1j], [1j, 1]] + [[4, -2], [-2, 1]])
    expected = np.array([[2.5, -1 - 0.5j], [-1 + 0.5j, 1.0]])
    np.testing.assert_allclose(R, expected)
    np.testing.assert_allclose(vectorize_covariance(R), [2.5, 1.0, -1.0, -0.5])


def test_covariance_feature_length():
    H = np.ones((3, 100, 4), dtype=complex)
    assert covariance_features(H).shape == (3, 10_000)


def test_covariance_shape_errors():
    with pytest.raises(ShapeError):
        spatial_covariance([])
    with pytest.raises(ShapeError):
        spatial_covariance([np.ones((2, 3)), np.ones((3, 3))])
    with pytest.raises(ShapeError):
        vectorize_covariance(np.ones((2, 3)))


@given(complex_mats, st.floats(-np.pi, np.pi))
def test_covariance_hermitian_psd_and_phase_invariant(H, phi):
    R = spatial_covariance(H)
    np.testing.assert_allclose(R, R.conj().T, atol=1e-12)
    scale = max(1.0, np.abs(R).max())
    assert np.linalg.eigvalsh(R).min() >= -1e-9 * scale
    np.testing.assert_allclose(spatial_covariance(H * np.exp(1j * phi)), R, atol=1e-9 * scale)


def test_per_snapshot_features_match_definition(rng):
    H = rng.normal(size=(4, 6, 5)) + 1j * rng.normal(size=(4, 6, 5))
    F = covariance_features(H, chunk=3)
    for s in range(4):
        np.testing.assert_allclose(F[s], vectorize_covariance(spatial_covariance(H[s])))


# -- CIR ---------------------------------------------------------------------------

def test_flat_spectrum_is_zero_delay_impulse():
    K = 64
    f = cir_features(ChannelSnapshot(np.ones((3, K), dtype=complex), 0.0), taps=8).reshape(3, 8)
    np.testing.assert_allclose(f[:, 0], np.sqrt(K))
    np.testing.assert_allclose(f[:, 1:], 0.0, atol=1e-12)


@pytest.mark.parametrize("d", [0, 1, 5, 15])
def test_linear_phase_is_delayed_impulse(d):
    K = 32
    k = np.arange(K)
    H = np.exp(-2j * np.pi * k * d / K)[None, :]
    # brute-force unitary inverse DFT oracle
    h = np.array([np.sum(H[0] * np.exp(2j * np.pi * k * t / K)) / np.sqrt(K) for t in range(K)])
    f = cir_features(H, taps=16)
    np.testing.assert_allclose(f, np.abs(h[:16]), atol=1e-9)
    assert np.argmax(f) == d and np.count_nonzero(f > 1e-9) == 1


@given(complex_mats)
def test_parseval(H):
    K = H.shape[1]
    f = cir_features(H, taps=K).reshape(H.shape[0], K)
    np.testing.assert_allclose(np.sum(f ** 2, axis=1), np.sum(np.abs(H) ** 2, axis=1),
                               rtol=1e-9, atol=1e-9)


@given(complex_mats, st.data())
def test_cir_phase_offset_invariance(H, data):
    phis = data.draw(hnp.arrays(np.float64, H.shape[0], elements=st.floats(-np.pi, np.pi)))
    rotated = H * np.exp(1j * phis)[:, None]
    np.testing.assert_allclose(cir_features(rotated, 1), cir_features(H, 1), atol=1e-9)


def test_taps_range():
    H = np.ones((2, 8), dtype=complex)
    for bad in (0, 9):
        with pytest.raises(ConfigurationError):
            cir_features(H, bad)
    assert cir_features(H, 8).shape == (16,)
    assert cir_features(np.ones((5, 2, 8)), 3).shape == (5, 6)


def test_feature_vector_rejects_non_finite():
    with pytest.raises(ShapeError):
        FeatureVector(np.array([1.0, np.nan]), np.ones(2))


# -- split -------------------------------------------------------------------------

def test_odd_even_split():
    s = build_split(range(1, 7))
    assert s.train == (1, 3, 5) and s.test == (2, 4, 6)
    s = build_split(["grid01", "grid02", "Grid110", "rr3"])
    assert s.train == ("grid01", "rr3") and s.test == ("grid02", "Grid110")
    with pytest.warns(UserWarning):
        s = build_split([1])
    assert s.train == (1,) and s.test == ()
    with pytest.raises(ConfigurationError):
        build_split([2, 4])
    with pytest.raises(DegenerateInputError):
        build_split([1, 1])
    with pytest.raises(DegenerateInputError):
        trajectory_number("none")


@given(st.sets(st.integers(0, 500), min_size=1))
def test_split_partitions_ids(ids):
    if not any(i % 2 for i in ids):
        with pytest.raises(ConfigurationError):
            build_split(ids)
        return
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s = build_split(ids)
    assert set(s.train).isdisjoint(s.test)
    assert set(s.train) | set(s.test) == ids


# -- networks ----------------------------------------------------------------------

SMALL = MlpArch((16,) * 8)


def test_single_sample_memorization():
    X = np.array([[0.3, -1.0, 2.0, 0.5]])
    Y = np.array([[1.0, 2.0, 0.4]])
    res = train_fcnn(X, Y, SMALL, TrainConfig(learning_rate=0.01, epochs=200))
    assert res.loss_curve[-1] < 1e-4
    assert res.model.depth == 8


def test_few_sample_memorization(rng):
    X = rng.normal(size=(6, 5))
    Y = rng.uniform(0, 3, size=(6, 3))
    res = train_fcnn(X, Y, MlpArch((64,) * 8),
                     TrainConfig(learning_rate=0.02, epochs=1500, batch_size=6))
    assert res.loss_curve[-1] < 1e-4
    np.testing.assert_allclose(res.model.predict(X), Y, atol=0.02)


@pytest.mark.parametrize("seed", range(3))
def test_gradient_check(seed):
    rng = np.random.default_rng(seed)
    layers = init_layers(4, MlpArch((6,), output=3), rng, dtype=np.float64)
    for layer in layers:
        layer.b[:] = rng.normal(size=layer.b.shape)
    X = rng.normal(size=(5, 4))
    Y = rng.normal(size=(5, 3))
    assert gradient_check(layers, X, Y) < 1e-4


def test_training_is_bitwise_deterministic(rng):
    X = rng.normal(size=(40, 7))
    Y = rng.normal(size=(40, 3))
    hyper = TrainConfig(epochs=5, batch_size=8, seed=3, input_noise=0.1, ema_decay=0.9)
    a = train_fcnn(X, Y, SMALL, hyper)
    b = train_fcnn(X, Y, SMALL, hyper)
    for p, q in zip(a.model.params(), b.model.params()):
        assert p.tobytes() == q.tobytes()
    assert a.loss_curve.tobytes() == b.loss_curve.tobytes()
    c = train_fcnn(X, Y, SMALL, TrainConfig(epochs=5, batch_size=8, seed=4))
    assert not np.array_equal(a.model.layers[0].W, c.model.layers[0].W)


def test_standardization_uses_training_data_only(rng):
    X = rng.normal(3.0, 2.0, size=(30, 4))
    Y = rng.normal(size=(30, 3))
    m = train_fcnn(X, Y, SMALL, TrainConfig(epochs=2)).model
    np.testing.assert_allclose(m.x_mean, X.mean(axis=0), rtol=1e-6)
    np.testing.assert_allclose(m.x_scale, X.std(axis=0), rtol=1e-6)
    assert m.meta["samples"] == 30 and len(m.meta["data_fingerprint"]) == 64


def test_divergence_reports_epoch(rng):
    X = rng.normal(size=(20, 3)) * 1e3
    Y = rng.normal(size=(20, 3))
    with np.errstate(all="ignore"), pytest.raises(DivergenceError) as info:
        train_fcnn(X, Y, SMALL, TrainConfig(learning_rate=1e30, clip_norm=0.0, epochs=3))
    assert info.value.epoch == 0


def test_training_input_errors(rng):
    with pytest.raises(ShapeError):
        train_fcnn(np.ones((3, 2)), np.ones((2, 3)), SMALL)
    with pytest.raises(DegenerateInputError):
        train_fcnn(np.ones((0, 2)), np.ones((0, 3)), SMALL)
    with pytest.raises(DegenerateInputError):
        train_fcnn(np.array([[np.inf, 1.0]]), np.ones((1, 3)), SMALL)
    for kw in ({"learning_rate": 0}, {"epochs": 0}, {"momentum": 1.0}, {"ema_decay": 1.0}):
        with pytest.raises(ConfigurationError):
            TrainConfig(**kw)


def test_model_round_trip(tmp_path, rng):
    X = rng.normal(size=(20, 6))
    m = train_fcnn(X, rng.normal(size=(20, 3)), SMALL, TrainConfig(epochs=2)).model
    path = save_model(m, tmp_path / "m.mlpm")
    raw = path.read_bytes()
    assert raw[:4] == b"MLPM" and int.from_bytes(raw[4:8], "little") == 9
    back = load_model(path)
    np.testing.assert_array_equal(back.predict(X), m.predict(X))
    path.write_bytes(raw[:-3])
    with pytest.raises(ModelError):
        load_model(path)
    path.write_bytes(b"NOPE" + raw[4:])
    with pytest.raises(ModelError):
        load_model(path)


def test_model_shape_checks():
    W = np.ones((3, 2), np.float32)
    with pytest.raises(ShapeError):
        MlpModel([Layer(W, np.zeros(2, np.float32), "relu"),
                  Layer(np.ones((3, 3), np.float32), np.zeros(3, np.float32), "linear")],
                 np.zeros(3), np.ones(3), np.zeros(3), np.ones(3))
    with pytest.raises(ModelError):
        Layer(W, np.zeros(2, np.float32), "tanh")


def test_smoothing_window():
    np.testing.assert_allclose(smoothed(np.arange(12.0), 10), [4.5, 5.5, 6.5])
    np.testing.assert_allclose(smoothed([3.0, 1.0], 10), [3.0, 1.0])


# -- fusion ------------------------------------------------------------------------

def _constant_model(value, n_in):
    layer = Layer(np.zeros((n_in, 3), np.float32), np.zeros(3, np.float32), "linear")
    return MlpModel([layer], np.zeros(n_in, np.float32), np.ones(n_in, np.float32),
                    np.asarray(value, np.float32), np.ones(3, np.float32))


def test_fused_prediction_examples():
    fv = FeatureVector(np.ones(4), np.ones(2))
    p = [1.0, 2.0, 0.5]
    q = [3.0, 0.0, 0.5]
    np.testing.assert_allclose(predict_fused(_constant_model(p, 4), _constant_model(p, 2), fv), p)
    np.testing.assert_allclose(predict_fused(_constant_model(p, 4), _constant_model(q, 2), fv),
                               [2.0, 1.0, 0.5])
    fs = FeatureSet(np.ones((5, 4)), np.ones((5, 2)))
    assert predict_fused(_constant_model(p, 4), _constant_model(q, 2), fs).shape == (5, 3)
    with pytest.raises(ShapeError):
        predict_fused(_constant_model(p, 3), _constant_model(q, 2), fv)
    with pytest.raises(ShapeError):
        predict_fused(_constant_model(p, 4), _constant_model(q, 2), np.ones(6))


def test_small_campaign_pipeline(tmp_path):
    scene = SceneConfig(antenna_count=16, subcarrier_count=16)
    runs = grid_campaign(scene, rows=4, rate=4.0)
    assert [r.run_id for r in runs] == ["grid01", "grid02", "grid03", "grid04"]
    split = build_split([r.run_id for r in runs])
    train = [r for r in runs if r.run_id in split.train]
    cfg = RadioConfig(taps=4, cov_arch=SMALL, cir_arch=SMALL,
                      cov_train=TrainConfig(epochs=3), cir_train=TrainConfig(epochs=3))
    models = fit_radio(train, cfg)
    test = runs[1]
    est = localize_radio(models, test.H, test.trajectory.t, cfg.taps)
    assert est.xyz.shape == (len(test), 3) and np.all(np.isfinite(est.xyz))
    feats = extract_features(test.H, cfg.taps)
    np.testing.assert_allclose(
        est.xyz, 0.5 * (models.cov.predict(feats.cov) + models.cir.predict(feats.cir)))
    with pytest.raises(ConfigurationError):
        localize_radio(models, test.H, test.trajectory.t, cfg.taps, which="both")
    write_run(test, tmp_path)
    back = read_run(tmp_path, test.run_id)
    np.testing.assert_allclose(back.H, test.H, rtol=1e-6, atol=1e-6 * np.abs(test.H).max())
    noisy = test.with_noise(10.0, seed=1)
    assert np.array_equal(noisy.H, test.with_noise(10.0, seed=1).H)
    assert not np.array_equal(noisy.H, test.H)
    assert RadioConfig.from_dict(cfg.to_dict()) == cfg
