"""The numba kernels and their numpy twins must agree."""

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from multiloc._kernels import numpy_backend as ref

nb = pytest.importorskip("multiloc._kernels.numba_backend")

seeds = st.integers(0, 2**32 - 1)


@given(seeds, st.integers(1, 200))
def test_frac_delay_add(seed, n_src):
    rng = np.random.default_rng(seed)
    src = rng.normal(size=n_src)
    idx = rng.uniform(-3, n_src + 3, size=300)
    idx[:5] = [-1.0, -0.5, 0.0, n_src - 1, n_src - 0.5]
    gain = rng.uniform(0.1, 2, size=300)
    a = ref.frac_delay_add(np.zeros(300), src, idx, gain)
    b = nb.frac_delay_add(np.zeros(300), src, idx, gain)
    np.testing.assert_allclose(b, a, rtol=1e-12, atol=1e-12)


def test_frac_delay_zero_extension():
    src = np.array([2.0, 4.0])
    idx = np.array([-1.0, -0.5, 0.0, 0.5, 1.0, 1.5, 2.0, 5.0])
    expected = [0.0, 1.0, 2.0, 3.0, 4.0, 2.0, 0.0, 0.0]
    for mod in (ref, nb):
        np.testing.assert_allclose(mod.frac_delay_add(np.zeros(8), src, idx, np.ones(8)), expected)


@given(seeds)
def test_channel_response(seed):
    rng = np.random.default_rng(seed)
    delays = rng.uniform(1e-9, 1e-7, size=(3, 5))
    gains = rng.normal(size=3) + 1j * rng.normal(size=3)
    freqs = 3.5e9 + rng.uniform(-1e7, 1e7, size=7)
    np.testing.assert_allclose(nb.channel_response(delays, gains, freqs),
                               ref.channel_response(delays, gains, freqs), rtol=1e-9, atol=1e-12)


def _problem(rng, n_mics=8):
    from multiloc.audio_loc import all_pairs

    mics = rng.uniform(0, 4, size=(n_mics, 3))
    p = rng.uniform(1, 3, size=3)
    pairs = all_pairs(n_mics)
    d = np.linalg.norm(mics - p, axis=1)
    ranges = d[pairs[:, 1]] - d[pairs[:, 0]] + rng.normal(0, 1e-3, len(pairs))
    return mics, pairs, ranges, p


@settings(max_examples=20)
@given(seeds, st.booleans())
def test_ransac_tdoa(seed, planar):
    rng = np.random.default_rng(seed)
    mics, pairs, ranges, p = _problem(rng)
    ref_rows = np.flatnonzero(pairs[:, 0] == 0)
    k = 3 if planar else 4
    subsets = np.argsort(rng.random((30, len(ref_rows))), axis=1)[:, :k].astype(np.int64)
    a = ref.ransac_tdoa(mics, pairs, ranges, ref_rows, subsets, 0.01, planar, float(p[2]))
    b = nb.ransac_tdoa(mics, pairs, ranges, ref_rows, subsets, 0.01, planar, float(p[2]))
    assert a[3] == b[3]
    n = a[3]
    np.testing.assert_array_equal(a[1][:n], b[1][:n])
    ok = a[1][:n] >= 0
    np.testing.assert_allclose(b[0][:n][ok], a[0][:n][ok], atol=1e-6)


@settings(max_examples=20)
@given(seeds)
def test_refine_tdoa(seed):
    rng = np.random.default_rng(seed)
    mics, pairs, ranges, p = _problem(rng)
    mask = np.ones(len(pairs), dtype=bool)
    x0 = p + rng.normal(0, 0.05, 3)
    pa, ca, _ = ref.refine_tdoa(mics, pairs, ranges, mask, x0, False, 50, 1e-10)
    pb, cb, _ = nb.refine_tdoa(mics, pairs, ranges, mask, x0, False, 50, 1e-10)
    np.testing.assert_allclose(pb, pa, atol=1e-7)
    assert cb == pytest.approx(ca, rel=1e-6, abs=1e-15)


@given(seeds)
def test_rts_smooth(seed):
    rng = np.random.default_rng(seed)
    z = np.cumsum(rng.normal(size=40))
    valid = rng.random(40) > 0.3
    a = ref.rts_smooth(z, valid, 0.01, 4.0, 4e-4, 100.0, 1.0)
    b = nb.rts_smooth(z, valid, 0.01, 4.0, 4e-4, 100.0, 1.0)
    for x, y in zip(a, b):
        np.testing.assert_allclose(y, x, rtol=1e-10, atol=1e-12)
