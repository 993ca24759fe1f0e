import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spfc import Grid, ModelParams, PreconditionError
from spfc.energy import (
    energy_e1,
    energy_modified,
    energy_sav,
    energy_total,
    full_mu,
    nonlinear_mu,
)
from spfc.spectral import ops_for

from conftest import nyquist_free


def quadrature_e1_of_sine(m=4001):
    """Midpoint rule for E_1 of phi = sin(2 pi x)/(sqrt(2) pi) on the unit square.

    |grad phi|^2 = 2 cos^2(2 pi x); the y-integral is trivially 1.
    """
    x = (np.arange(m) + 0.5) / m
    s = 2.0 * np.cos(2 * np.pi * x) ** 2
    return float(np.mean(0.25 * s**2 - s + 2.0))


def test_e1_of_sine_matches_quadrature():
    ref = quadrature_e1_of_sine()
    assert ref == pytest.approx(11 / 8, rel=1e-12)
    g = Grid(2, 16, 1.0)
    x, _ = g.coords()
    phi = np.sin(2 * np.pi * x) / (math.sqrt(2) * math.pi)
    assert energy_e1(ops_for(g), phi) == pytest.approx(ref, rel=1e-12)


def test_constant_field():
    g = Grid(2, 8, 3.0)
    ops = ops_for(g)
    phi = np.full(g.shape, 0.4)
    assert energy_e1(ops, phi) == pytest.approx(2 * g.volume, rel=1e-14)
    assert np.abs(nonlinear_mu(ops, phi)).max() < 1e-14
    assert energy_total(ops, phi, 0.5) == pytest.approx(0.5 * 0.5 * 0.16 * g.volume, rel=1e-12)
    np.testing.assert_allclose(full_mu(ops, phi, 0.5), 0.5 * phi, atol=1e-14)


def test_params_validation():
    g = Grid(2, 8)
    for a in (0.0, -0.1, 1.5):
        with pytest.raises(PreconditionError):
            ModelParams(g, a)
    with pytest.raises(PreconditionError):
        ModelParams(g, 0.5, stabilization=-1.0)


def test_total_energy_split():
    g = Grid(2, 9, 2 * math.pi)
    ops = ops_for(g)
    rng = np.random.default_rng(3)
    phi = rng.standard_normal(g.shape)
    a = 0.7
    quad = 0.5 * ops.inner(phi, ops.apply_LN(phi, a))
    assert energy_total(ops, phi, a) == pytest.approx(energy_e1(ops, phi) - 2 * g.volume + quad, rel=1e-10)
    r = math.sqrt(energy_e1(ops, phi))
    assert energy_sav(ops, phi, r, a) == pytest.approx(energy_total(ops, phi, a) + 2 * g.volume, rel=1e-10)
    assert energy_modified(ops, phi, phi, r, r, a) == pytest.approx(quad + r * r, rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), scale=st.floats(1e-3, 10.0), n=st.sampled_from([5, 8, 12]))
def test_e1_lower_bound(seed, scale, n):
    g = Grid(2, n, 2 * math.pi)
    phi = scale * np.random.default_rng(seed).standard_normal(g.shape)
    assert energy_e1(ops_for(g), phi) >= g.volume


def _directional_errors(func, grad, phi, psi, ops, eps_list):
    exact = ops.inner(grad(phi), psi)
    return [abs((func(phi + e * psi) - func(phi - e * psi)) / (2 * e) - exact) for e in eps_list]


@pytest.mark.parametrize("n,dim", [(9, 2), (8, 2), (5, 3)])
def test_nonlinear_mu_is_gradient_of_e1(n, dim):
    g = Grid(dim, n, 2 * math.pi)
    ops = ops_for(g)
    rng = np.random.default_rng(11)
    phi = nyquist_free(g, 0.5 * rng.standard_normal(g.shape))
    psi = nyquist_free(g, rng.standard_normal(g.shape))
    e3, e4 = _directional_errors(
        lambda f: energy_e1(ops, f), lambda f: nonlinear_mu(ops, f), phi, psi, ops, [1e-3, 1e-4]
    )
    # central differences of a quartic: the error is exactly c * eps^2
    assert e3 < 1e-4 * abs(ops.inner(nonlinear_mu(ops, phi), psi)) + 1e-8
    assert e4 < e3 / 50


def test_full_mu_is_gradient_of_total_energy():
    g = Grid(2, 11, 2 * math.pi)
    ops = ops_for(g)
    rng = np.random.default_rng(5)
    phi = 0.5 * rng.standard_normal(g.shape)
    psi = rng.standard_normal(g.shape)
    e3, e4 = _directional_errors(
        lambda f: energy_total(ops, f, 0.5), lambda f: full_mu(ops, f, 0.5), phi, psi, ops, [1e-3, 1e-4]
    )
    assert e4 < e3 / 50


def test_nonlinear_mu_even_grid_uses_same_convention():
    # On even n the Nyquist part of 2 Delta phi differs from the derivative of
    # -||grad phi||^2, so the gradient identity only holds Nyquist-free.
    g = Grid(2, 8, 2 * math.pi)
    ops = ops_for(g)
    x, _ = g.coords()
    nyq = np.cos(4 * x)
    assert np.abs(ops.grad(nyq)).max() < 1e-12
    np.testing.assert_allclose(nonlinear_mu(ops, nyq), -32.0 * nyq, atol=1e-12)
