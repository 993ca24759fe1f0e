import math

import numpy as np
import pytest

from spfc import Grid, ModelParams
from spfc.spectral import ops_for


def smooth_field(grid, rng, modes=3, amplitude=0.3):
    """Random trigonometric polynomial with |mode| <= modes (Nyquist-free for n > 2*modes)."""
    coords = grid.coords()
    k0 = 2 * np.pi / grid.length
    f = np.zeros(grid.shape)
    for _ in range(4):
        ks = rng.integers(-modes, modes + 1, size=grid.dim)
        phase = k0 * sum(k * x for k, x in zip(ks, coords))
        f += rng.standard_normal() * np.cos(phase) + rng.standard_normal() * np.sin(phase)
    return amplitude * f / 4


def nyquist_free(grid, f):
    """Drop the Nyquist modes of an even grid."""
    ops = ops_for(grid)
    if grid.n % 2:
        return f
    mask = np.ones(ops.spectral_shape)
    for k in ops.wavenumbers:
        mask = mask * (np.abs(k) < np.pi * grid.n / grid.length - 1e-9)
    return ops.multiply(f, mask)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture(params=[(2, 8), (2, 9), (2, 16), (3, 6)], ids=lambda p: f"d{p[0]}n{p[1]}")
def grid(request):
    dim, n = request.param
    return Grid(dim, n, 2 * math.pi)


@pytest.fixture
def params2d():
    return ModelParams(Grid(2, 16, 2 * math.pi), a=0.5)
