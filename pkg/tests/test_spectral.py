import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spfc import Grid, GridMismatchError, PreconditionError, SpectralOps
from spfc.spectral import ops_for, signed_modes

from conftest import nyquist_free, smooth_field


def test_grid_validation():
    with pytest.raises(PreconditionError):
        Grid(1, 8)
    with pytest.raises(PreconditionError):
        Grid(2, 3)
    with pytest.raises(PreconditionError):
        Grid(2, 8, -1.0)
    g = Grid(2, 8, 2.0)
    assert g.h == 0.25 and g.size == 64 and g.volume == 4.0 and g.cell_volume == 0.0625


def test_storage_order():
    g = Grid(2, 4, 1.0)
    x, y = g.coords()
    assert x[1, 0] == 0.25 and y[1, 0] == 0.0
    assert y[0, 1] == 0.25


def test_shape_mismatch():
    ops = ops_for(Grid(2, 8))
    with pytest.raises(GridMismatchError):
        ops.laplacian(np.zeros((8, 9)))


def test_signed_modes():
    assert list(signed_modes(4)) == [0, 1, -2, -1]
    assert list(signed_modes(5)) == [0, 1, 2, -2, -1]


def test_cached_arrays_are_read_only():
    ops = SpectralOps(Grid(2, 8))
    with pytest.raises(ValueError):
        ops.lam[0, 0] = 1.0


@pytest.mark.parametrize("n", [8, 9])
@pytest.mark.parametrize("length", [1.0, 2 * math.pi, 100.0])
def test_single_mode_derivatives(n, length):
    g = Grid(2, n, length)
    ops = ops_for(g)
    x, y = g.coords()
    k1, k2 = 2 * np.pi * 2 / length, 2 * np.pi * 3 / length
    f = np.sin(k1 * x) * np.cos(k2 * y)
    gx, gy = ops.grad(f)
    np.testing.assert_allclose(gx, k1 * np.cos(k1 * x) * np.cos(k2 * y), atol=1e-12 * k1)
    np.testing.assert_allclose(gy, -k2 * np.sin(k1 * x) * np.sin(k2 * y), atol=1e-12 * k2)
    lam = k1**2 + k2**2
    np.testing.assert_allclose(ops.laplacian(f), -lam * f, atol=1e-12 * lam)
    np.testing.assert_allclose(ops.biharmonic(f), lam**2 * f, atol=1e-12 * lam**2)
    np.testing.assert_allclose(ops.triharmonic(f), -(lam**3) * f, atol=1e-12 * lam**3)
    np.testing.assert_allclose(ops.neg_laplacian_pow(f, 1.5), lam**1.5 * f, atol=1e-12 * lam**1.5)


def test_nyquist_convention():
    g = Grid(2, 8, 1.0)
    ops = ops_for(g)
    x, _ = g.coords()
    f = np.cos(np.pi * 8 * x)  # alternating +-1 along x
    assert np.abs(ops.grad(f)).max() < 1e-12
    kn = np.pi * 8
    np.testing.assert_allclose(ops.laplacian(f), -(kn**2) * f, rtol=1e-12)
    np.testing.assert_allclose(ops.biharmonic(f), kn**4 * f, rtol=1e-12)


def test_3d_operators():
    g = Grid(3, 6, 2 * math.pi)
    ops = ops_for(g)
    x, y, z = g.coords()
    f = np.sin(x) * np.cos(2 * y) * np.sin(z)
    gz = ops.grad(f)[2]
    np.testing.assert_allclose(gz, np.sin(x) * np.cos(2 * y) * np.cos(z), atol=1e-12)
    np.testing.assert_allclose(ops.laplacian(f), -6.0 * f, atol=1e-12)


def test_parseval(grid, rng):
    ops = ops_for(grid)
    f = rng.standard_normal(grid.shape)
    g = rng.standard_normal(grid.shape)
    assert ops.spectral_norm_sq(ops.fft(f)) == pytest.approx(ops.inner(f, f), rel=1e-12)
    assert ops.spectral_inner(ops.fft(f), ops.fft(g)) == pytest.approx(ops.inner(f, g), rel=1e-10, abs=1e-12)


def test_grad_antisymmetric(grid, rng):
    ops = ops_for(grid)
    f = rng.standard_normal(grid.shape)
    g = rng.standard_normal(grid.shape)
    for df, dg in zip(ops.grad(f), ops.grad(g)):
        assert ops.inner(df, g) == pytest.approx(-ops.inner(f, dg), abs=1e-11)


def test_summation_by_parts_without_nyquist(grid, rng):
    # even-n Nyquist modes are seen by Delta_N but not by grad_N
    ops = ops_for(grid)
    f = nyquist_free(grid, rng.standard_normal(grid.shape))
    g = rng.standard_normal(grid.shape)
    lhs = ops.inner(ops.laplacian(f), g)
    rhs = -sum(ops.inner(a, b) for a, b in zip(ops.grad(f), ops.grad(g)))
    assert lhs == pytest.approx(rhs, rel=1e-11)
    np.testing.assert_allclose(ops.div(ops.grad(f)), ops.laplacian(f), atol=1e-11)


def test_div_component_count():
    ops = ops_for(Grid(2, 8))
    with pytest.raises(GridMismatchError):
        ops.div([np.zeros((8, 8))] * 3)


def test_inverse_laplacian(grid, rng):
    ops = ops_for(grid)
    f = rng.standard_normal(grid.shape)
    f -= f.mean()
    u = ops.inv_neg_laplacian(f)
    assert abs(u.mean()) < 1e-14
    np.testing.assert_allclose(-ops.laplacian(u), f, atol=1e-12)
    with pytest.raises(PreconditionError):
        ops.inv_neg_laplacian(f + 1.0)


def test_an_inverse_round_trip(grid, rng):
    ops = ops_for(grid)
    f = rng.standard_normal(grid.shape)
    for A in (0.0, 2.0):
        u = ops.apply_AN_inverse(f, 0.5, 0.1, A)
        np.testing.assert_allclose(ops.apply_AN(u, 0.5, 0.1, A), f, atol=1e-12)
    assert ops.an_symbol(0.5, 10.0).min() == 1.5


def test_an_inverse_preconditions():
    ops = ops_for(Grid(2, 8))
    f = np.zeros((8, 8))
    for kw in ({"a": 0.5, "dt": 0.0}, {"a": 0.0, "dt": 0.1}, {"a": 0.5, "dt": 0.1, "stabilization": -1.0}):
        with pytest.raises(PreconditionError):
            ops.apply_AN_inverse(f, **kw)
    with pytest.raises(PreconditionError):
        ops.apply_LN_sqrt(f, 0.0)
    with pytest.raises(PreconditionError):
        ops.neg_laplacian_pow(f, 0.0)
    with pytest.raises(PreconditionError):
        ops.norm_lp(f, 0.5)


def test_ln_sqrt_squares_to_ln(rng):
    g = Grid(2, 9, 2 * math.pi)
    ops = ops_for(g)
    f = rng.standard_normal(g.shape)
    np.testing.assert_allclose(ops.apply_LN_sqrt(ops.apply_LN_sqrt(f, 0.3), 0.3), ops.apply_LN(f, 0.3), atol=1e-10)


def test_norms_of_single_mode():
    g = Grid(2, 16, 2 * math.pi)
    ops = ops_for(g)
    x, y = g.coords()
    f = np.sin(x) * np.sin(2 * y)
    l2sq = g.volume / 4
    lam = 5.0
    assert ops.norm_l2(f) ** 2 == pytest.approx(l2sq, rel=1e-12)
    assert ops.norm_lp(f, 2) == pytest.approx(ops.norm_l2(f), rel=1e-12)
    assert ops.norm_linf(f) == pytest.approx(1.0, rel=1e-12)
    assert ops.norm_hminus1(f) ** 2 == pytest.approx(l2sq / lam, rel=1e-12)
    assert ops.norm_h1(f) ** 2 == pytest.approx(l2sq * (1 + lam), rel=1e-12)
    assert ops.norm_h2(f) ** 2 == pytest.approx(l2sq * (1 + lam + lam**2), rel=1e-12)
    assert ops.norm_grad_laplacian(f) ** 2 == pytest.approx(l2sq * lam**3, rel=1e-12)


def test_operators_kill_constants(grid):
    ops = ops_for(grid)
    c = np.full(grid.shape, 0.7)
    assert np.abs(ops.grad(c)).max() < 1e-14
    assert np.abs(ops.laplacian(c)).max() < 1e-14
    assert np.abs(ops.biharmonic(c)).max() < 1e-14


@settings(max_examples=30, deadline=None)
@given(
    seed=st.integers(0, 2**32 - 1),
    n=st.sampled_from([6, 7, 8, 11]),
    alpha=st.floats(-3, 3),
    shift=st.tuples(st.integers(0, 10), st.integers(0, 10)),
)
def test_linearity_and_translation_invariance(seed, n, alpha, shift):
    g = Grid(2, n, 2 * math.pi)
    ops = ops_for(g)
    rng = np.random.default_rng(seed)
    f = rng.standard_normal(g.shape)
    h = rng.standard_normal(g.shape)
    np.testing.assert_allclose(
        ops.laplacian(alpha * f + h), alpha * ops.laplacian(f) + ops.laplacian(h), atol=1e-10
    )
    rolled = np.roll(f, shift, axis=(0, 1))
    np.testing.assert_allclose(ops.biharmonic(rolled), np.roll(ops.biharmonic(f), shift, axis=(0, 1)), atol=1e-9)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.sampled_from([6, 7, 8]))
def test_norm_hierarchy(seed, n):
    g = Grid(2, n, 2 * math.pi)
    ops = ops_for(g)
    f = np.random.default_rng(seed).standard_normal(g.shape)
    l2 = ops.norm_l2(f)
    assert 0 <= l2 <= ops.norm_h1(f) <= ops.norm_h2(f)
    assert ops.norm_linf(f) * math.sqrt(g.volume) >= l2 * (1 - 1e-12)


def test_smooth_field_helper(rng):
    g = Grid(2, 16, 2 * math.pi)
    f = smooth_field(g, rng)
    assert f.shape == g.shape and np.abs(f).max() > 0
