import math
import struct

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nsfcontact.exceptions import InvalidParameter, UnresolvableKernel
from nsfcontact.fields import (
    MollifierKernel, PeriodicGrid, bump_profile, divergence, gradient, integrate,
    lp_norm, mollify, pairwise_sum, read_snapshot, sample_interpolate, write_snapshot,
)


def test_grid_basics():
    g = PeriodicGrid(2, 16)
    assert g.h == 1 / 16 and g.size == 256 and g.shape == (16, 16)
    assert g.centers.shape == (2, 16, 16)
    assert g.centers[0, 0, 0] == g.h / 2
    with pytest.raises(InvalidParameter):
        PeriodicGrid(1, 4)
    with pytest.raises(InvalidParameter):
        PeriodicGrid(4, 16)


@pytest.mark.parametrize("d, n", [(1, 64), (2, 16), (3, 8)])
def test_integrate_one(d, n):
    g = PeriodicGrid(d, n)
    assert integrate(g, np.ones(g.shape)) == pytest.approx(1.0, abs=1e-15)


def test_l2_norm_of_sine():
    g = PeriodicGrid(1, 256)
    f = np.sin(2 * np.pi * g.centers[0])
    assert lp_norm(g, f, 2) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert lp_norm(g, f, np.inf) == pytest.approx(1.0, abs=1e-3)


def test_lp_rejects_unsupported_exponent():
    g = PeriodicGrid(1, 16)
    with pytest.raises(ValueError):
        lp_norm(g, np.ones(16), 3)


def test_integrate_thread_count_bit_identical(rng):
    g = PeriodicGrid(2, 128)
    f = rng.normal(size=g.shape) * np.exp(rng.normal(size=g.shape) * 5)
    values = {integrate(g, f, threads=t) for t in (1, 2, 3, 8)}
    assert len(values) == 1


@settings(max_examples=30)
@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=3000), st.integers(1, 8))
def test_pairwise_sum_accurate_and_schedule_free(values, threads):
    exact = math.fsum(values)
    s1 = pairwise_sum(values, threads=1)
    assert s1 == pairwise_sum(values, threads=threads)
    assert abs(s1 - exact) <= 1e-12 * max(1.0, sum(abs(v) for v in values))


def test_gradient_of_constant_and_sine():
    g = PeriodicGrid(2, 64)
    assert np.all(gradient(g, np.full(g.shape, 3.7)) == 0)
    x = g.centers[0]
    grad = gradient(g, np.sin(2 * np.pi * x))
    err = np.max(np.abs(grad[0] - 2 * np.pi * np.cos(2 * np.pi * x)))
    assert err < (2 * np.pi) ** 3 * g.h ** 2 / 6 * 1.01
    assert np.all(grad[1] == 0)


def test_gradient_second_order():
    errs = []
    for n in (32, 64, 128):
        g = PeriodicGrid(1, n)
        x = g.centers[0]
        errs.append(np.max(np.abs(gradient(g, np.sin(2 * np.pi * x))[0]
                                  - 2 * np.pi * np.cos(2 * np.pi * x))))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(rates > 1.95)


def test_divergence_of_constant():
    g = PeriodicGrid(3, 8)
    assert np.all(divergence(g, np.ones((3,) + g.shape)) == 0)


@pytest.mark.parametrize("d, n", [(1, 64), (2, 32), (3, 12)])
def test_discrete_adjointness(d, n, rng):
    """integrate(f div v) = -integrate(grad f . v) for random fields."""
    g = PeriodicGrid(d, n)
    f = rng.normal(size=g.shape)
    v = rng.normal(size=(d,) + g.shape)
    lhs = integrate(g, f * divergence(g, v))
    rhs = -integrate(g, np.sum(gradient(g, f) * v, axis=0))
    assert abs(lhs - rhs) < 1e-12


def test_kernel_normalization_and_limits():
    for d, n, r in ((1, 256, 0.05), (2, 64, 0.1), (3, 32, 0.1)):
        g = PeriodicGrid(d, n)
        k = MollifierKernel(g, r)
        assert np.all(k.weights >= 0)
        assert abs(np.sum(k.weights) * g.cell_volume - 1.0) < 1e-14
        assert np.all(np.abs(k.offsets) * g.h < r)
    g = PeriodicGrid(1, 64)
    with pytest.raises(UnresolvableKernel):
        MollifierKernel(g, 1.5 * g.h)
    with pytest.raises(UnresolvableKernel):
        MollifierKernel(g, 0.3)
    MollifierKernel(g, 2 * g.h)


def test_bump_profile():
    r = np.array([0.0, 0.5, 0.999, 1.0, 2.0])
    b = bump_profile(r)
    assert b[0] == pytest.approx(math.exp(-1))
    assert b[3] == 0 and b[4] == 0 and b[2] > 0


def test_mollify_constant_integral_bounds(rng):
    g = PeriodicGrid(2, 48)
    k = MollifierKernel(g, 0.1)
    c = mollify(np.full(g.shape, 2.5), k)
    assert np.max(np.abs(c - 2.5)) < 1e-14
    f = rng.uniform(-1, 3, size=g.shape)
    mf = mollify(f, k)
    assert abs(integrate(g, mf) - integrate(g, f)) <= 1e-12 * abs(integrate(g, f))
    assert mf.min() >= f.min() - 1e-14 and mf.max() <= f.max() + 1e-14


def test_mollify_is_linear(rng):
    g = PeriodicGrid(1, 128)
    k = MollifierKernel(g, 0.05)
    f, h = rng.normal(size=(2, 128))
    np.testing.assert_allclose(mollify(2 * f - h, k), 2 * mollify(f, k) - mollify(h, k),
                               atol=1e-14)


def test_mollified_indicator_matches_analytic_convolution():
    g = PeriodicGrid(1, 1024)
    r = 0.05
    k = MollifierKernel(g, r)
    x = g.centers[0]
    ind = (x > 0.5).astype(float)
    m = mollify(ind, k)
    assert m.min() >= -1e-15 and m.max() <= 1 + 1e-15
    # monotone rise across [0.5 - r, 0.5 + r], flat outside
    rise = m[(x > 0.5 - r) & (x < 0.5 + r)]
    assert np.all(np.diff(rise) >= -1e-15)
    assert np.all(m[(x > 0.1) & (x < 0.5 - r)] == 0)
    assert np.all(np.abs(m[(x > 0.5 + r) & (x < 0.9)] - 1) < 1e-14)
    # continuous oracle: cumulative integral of the normalized bump
    z = np.linspace(-1, 1, 200001)
    cdf = np.cumsum(bump_profile(np.abs(z)))
    cdf /= cdf[-1]
    sel = (x > 0.5 - r) & (x < 0.5 + r)
    oracle = np.interp((x[sel] - 0.5) / r, z, cdf)
    assert np.max(np.abs(m[sel] - oracle)) < 5e-3


def test_mollify_sine_eigenfunction():
    g = PeriodicGrid(1, 256)
    k = MollifierKernel(g, 0.05)
    x = g.centers[0]
    f = np.sin(2 * np.pi * x)
    mu = float(np.sum(k.weights * g.h * np.cos(2 * np.pi * k.offsets[:, 0] * g.h)))
    assert 0 < mu < 1
    np.testing.assert_allclose(mollify(f, k), mu * f, atol=1e-14)


def test_mollify_translation_equivariant(rng):
    g = PeriodicGrid(2, 32)
    k = MollifierKernel(g, 0.1)
    f = rng.normal(size=g.shape)
    shifted = np.roll(f, (3, -5), axis=(0, 1))
    assert np.array_equal(mollify(shifted, k), np.roll(mollify(f, k), (3, -5), axis=(0, 1)))


def test_mollify_components_independent(rng):
    g = PeriodicGrid(1, 64)
    k = MollifierKernel(g, 0.05)
    v = rng.normal(size=(3, 64))
    mv = mollify(v, k)
    for c in range(3):
        np.testing.assert_array_equal(mv[c], mollify(v[c], k))


def test_interpolate_constant_and_centers():
    g = PeriodicGrid(2, 16)
    pts = np.random.default_rng(0).uniform(-2, 3, size=(2, 50))
    assert np.allclose(sample_interpolate(g, np.full(g.shape, 4.2), pts), 4.2, atol=1e-15)
    field = g.centers[0]
    c = g.centers.reshape(2, -1)
    np.testing.assert_allclose(sample_interpolate(g, field, c), c[0], atol=1e-15)


def test_interpolate_affine_exact_inside():
    g = PeriodicGrid(2, 32)
    x, y = g.centers
    f = 0.3 + 2 * x - 1.5 * y
    pts = np.random.default_rng(1).uniform(0.1, 0.9, size=(2, 200))
    np.testing.assert_allclose(sample_interpolate(g, f, pts), 0.3 + 2 * pts[0] - 1.5 * pts[1],
                               atol=1e-13)


def test_interpolate_periodic_wrap():
    g = PeriodicGrid(1, 32)
    f = np.sin(2 * np.pi * g.centers[0])
    p = np.array([[0.37]])
    assert sample_interpolate(g, f, p) == pytest.approx(sample_interpolate(g, f, p + 3))
    assert sample_interpolate(g, f, p) == pytest.approx(sample_interpolate(g, f, p - 1))


def test_interpolate_second_order():
    pts = np.random.default_rng(2).uniform(0, 1, size=(1, 500))
    errs = []
    for n in (32, 64, 128):
        g = PeriodicGrid(1, n)
        f = np.sin(2 * np.pi * g.centers[0])
        errs.append(np.max(np.abs(sample_interpolate(g, f, pts) - np.sin(2 * np.pi * pts[0]))))
    assert errs[0] / errs[1] > 3.5 and errs[1] / errs[2] > 3.5


def test_snapshot_roundtrip_and_layout(tmp_path):
    g = PeriodicGrid(2, 8)
    i1, i2 = np.meshgrid(np.arange(8), np.arange(8), indexing="ij")
    field = np.stack([i1 + 100.0 * i2, -(i1 + 100.0 * i2)])
    path = tmp_path / "f.bin"
    write_snapshot(path, g, field)
    raw = path.read_bytes()
    assert raw[:4] == b"NSFC"
    assert struct.unpack("<IIII", raw[4:20]) == (1, 2, 8, 2)
    data = np.frombuffer(raw[20:], dtype="<f8")
    assert data.size == 8 * 8 * 2
    # cell (i1=1, i2=0) follows cell (0, 0); components of a cell are adjacent
    np.testing.assert_array_equal(data[:6], [0, -0, 1, -1, 2, -2])
    assert data[2 * 8] == 100.0
    g2, back = read_snapshot(path)
    assert g2 == g
    np.testing.assert_array_equal(back, field)


def test_snapshot_scalar_and_bad_magic(tmp_path):
    g = PeriodicGrid(1, 16)
    write_snapshot(tmp_path / "s.bin", g, np.arange(16.0))
    _, back = read_snapshot(tmp_path / "s.bin")
    assert back.shape == (1, 16)
    (tmp_path / "bad.bin").write_bytes(b"XXXX" + bytes(16))
    with pytest.raises(ValueError, match="not an NSFC"):
        read_snapshot(tmp_path / "bad.bin")
