"""Fourier collocation operators, inner products and norms on periodic grids.

All operators are diagonal in Fourier space. A field ``f`` with coefficients
``f_hat = fftn(f) / n**dim`` is expanded as ``sum f_hat[l] exp(i k_l . x)``
with ``k_l = 2*pi*l/L`` and signed integer modes ``l`` in numpy's ``fftfreq``
order. For even ``n`` the Nyquist mode ``l = -n/2`` carries ``k = pi*n/L`` in
every even-order symbol (``lambda = |k|**2``) while its first-derivative
multiplier is zero, which keeps first derivatives real and antisymmetric.

Transforms are real-to-complex (``rfftn``) over all axes, so the last axis of
every spectral array has length ``n//2 + 1``.
"""

from __future__ import annotations

from functools import lru_cache
from typing import Sequence

import numpy as np

from .errors import GridMismatchError, PreconditionError
from .grid import Grid

# Relative tolerance on the mean for operators that need mean-zero input.
ZERO_MEAN_RTOL = 1e-10


def signed_modes(n: int) -> np.ndarray:
    """Signed integer mode numbers in FFT order (Nyquist is ``-n/2`` for even n)."""
    return np.fft.fftfreq(n, d=1.0 / n).round().astype(int)


class SpectralOps:
    """Precomputed wavenumber and symbol arrays for one :class:`Grid`.

    The cache is treated as immutable: arrays are flagged read-only, so one
    instance can be shared between threads and simulations.
    """

    def __init__(self, grid: Grid) -> None:
        self.grid = grid
        n, dim = grid.n, grid.dim
        scale = 2.0 * np.pi / grid.length

        full = signed_modes(n) * scale
        half = np.arange(n // 2 + 1) * scale
        self.wavenumbers: tuple[np.ndarray, ...] = tuple(
            _axis_view(half if ax == dim - 1 else full, ax, dim) for ax in range(dim)
        )
        self.spectral_shape = (n,) * (dim - 1) + (n // 2 + 1,)

        lam = np.zeros(self.spectral_shape)
        for k in self.wavenumbers:
            lam = lam + k**2
        self.lam = lam
        self.lam2 = lam**2
        self._axes = tuple(range(dim))

        masks = []
        for ax, k in enumerate(self.wavenumbers):
            kd = np.array(k, dtype=float)
            if n % 2 == 0:
                # Nyquist sits at index n//2 on both the full and the half axis.
                idx = [slice(None)] * dim
                idx[ax] = n // 2
                kd[tuple(idx)] = 0.0
            masks.append(1j * kd)
        self.deriv_mask: tuple[np.ndarray, ...] = tuple(masks)

        # rfft stores one of each conjugate pair on the last axis.
        w = np.full(n // 2 + 1, 2.0)
        w[0] = 1.0
        if n % 2 == 0:
            w[-1] = 1.0
        self.parseval_weights = _axis_view(w, dim - 1, dim)

        for arr in (self.lam, self.lam2, self.parseval_weights, *self.wavenumbers, *self.deriv_mask):
            arr.flags.writeable = False

    # ------------------------------------------------------------------
    # transforms

    def fft(self, f: np.ndarray) -> np.ndarray:
        return np.fft.rfftn(f, axes=self._axes)

    def ifft(self, f_hat: np.ndarray) -> np.ndarray:
        return np.fft.irfftn(f_hat, s=self.grid.shape, axes=self._axes)

    def coefficients(self, f: np.ndarray) -> np.ndarray:
        """Discrete Fourier coefficients ``f_hat`` (rfft layout, normalised)."""
        return self.fft(self.grid.check(f)) / self.grid.size

    def multiply(self, f: np.ndarray, symbol: np.ndarray | complex) -> np.ndarray:
        """Apply the Fourier multiplier ``symbol`` to ``f``."""
        return self.ifft(symbol * self.fft(self.grid.check(f)))

    def spectral_inner(self, f_hat: np.ndarray, g_hat: np.ndarray) -> float:
        """``<f, g>`` evaluated from unnormalised rfft arrays of ``f`` and ``g``."""
        prod = (np.conj(f_hat) * g_hat).real * self.parseval_weights
        return float(prod.sum()) * self.grid.volume / self.grid.size**2

    def spectral_norm_sq(self, f_hat: np.ndarray) -> float:
        prod = (f_hat.real**2 + f_hat.imag**2) * self.parseval_weights
        return float(prod.sum()) * self.grid.volume / self.grid.size**2

    # ------------------------------------------------------------------
    # differential operators

    def grad(self, f: np.ndarray) -> np.ndarray:
        """Collocation gradient, shape ``(dim, *grid.shape)``."""
        f_hat = self.fft(self.grid.check(f))
        return np.stack([self.ifft(m * f_hat) for m in self.deriv_mask])

    def div(self, v: Sequence[np.ndarray]) -> np.ndarray:
        if len(v) != self.grid.dim:
            raise GridMismatchError(f"expected {self.grid.dim} components, got {len(v)}")
        acc = np.zeros(self.spectral_shape, dtype=complex)
        for m, comp in zip(self.deriv_mask, v):
            acc += m * self.fft(self.grid.check(comp))
        return self.ifft(acc)

    def laplacian(self, f: np.ndarray) -> np.ndarray:
        return self.multiply(f, -self.lam)

    def neg_laplacian_pow(self, f: np.ndarray, gamma: float) -> np.ndarray:
        """``(-Delta_N)**gamma`` for ``gamma > 0``."""
        if not gamma > 0:
            raise PreconditionError(f"gamma must be positive, got {gamma}")
        return self.multiply(f, self.lam**gamma)

    def biharmonic(self, f: np.ndarray) -> np.ndarray:
        """``Delta_N**2 f``."""
        return self.multiply(f, self.lam2)

    def triharmonic(self, f: np.ndarray) -> np.ndarray:
        """``Delta_N**3 f``."""
        return self.multiply(f, -self.lam * self.lam2)

    def _require_mean_zero(self, f: np.ndarray) -> None:
        m = self.mean(f)
        if abs(m) > ZERO_MEAN_RTOL * self.norm_l2(f):
            raise PreconditionError(f"field must have zero mean, mean = {m:.3e}")

    def inverse_lambda(self, power: float = 1.0) -> np.ndarray:
        """``lambda**-power`` with the zero mode set to 0."""
        out = np.zeros(self.spectral_shape)
        nz = self.lam > 0
        out[nz] = self.lam[nz] ** (-power)
        return out

    def inv_neg_laplacian(self, f: np.ndarray) -> np.ndarray:
        """``(-Delta_N)**-1`` on mean-zero fields; output has zero mean."""
        f = self.grid.check(f)
        self._require_mean_zero(f)
        return self.multiply(f, self.inverse_lambda())

    def apply_LN(self, f: np.ndarray, a: float) -> np.ndarray:
        """``(a I + Delta_N**2) f``."""
        return self.multiply(f, a + self.lam2)

    def apply_LN_sqrt(self, f: np.ndarray, a: float) -> np.ndarray:
        if not a > 0:
            raise PreconditionError(f"a must be positive, got {a}")
        return self.multiply(f, np.sqrt(a + self.lam2))

    def an_symbol(self, a: float, dt: float, stabilization: float = 0.0) -> np.ndarray:
        """Eigenvalues of ``3/2 I - dt Delta_N L_N`` (plus the optional stabilizer).

        With ``stabilization = A`` the implicit operator also carries
        ``A dt**2 Delta_N**2``. All entries are ``>= 3/2``.
        """
        lam, lam2 = self.lam, self.lam2
        return 1.5 + dt * lam * (a + lam2) + stabilization * dt**2 * lam2

    def apply_AN(self, f: np.ndarray, a: float, dt: float, stabilization: float = 0.0) -> np.ndarray:
        return self.multiply(f, self.an_symbol(a, dt, stabilization))

    def apply_AN_inverse(
        self, f: np.ndarray, a: float, dt: float, stabilization: float = 0.0
    ) -> np.ndarray:
        if not dt > 0:
            raise PreconditionError(f"dt must be positive, got {dt}")
        if not a > 0:
            raise PreconditionError(f"a must be positive, got {a}")
        if stabilization < 0:
            raise PreconditionError(f"stabilization must be >= 0, got {stabilization}")
        return self.multiply(f, 1.0 / self.an_symbol(a, dt, stabilization))

    # ------------------------------------------------------------------
    # inner products and norms (all carry the h**dim volume weight)

    def mean(self, f: np.ndarray) -> float:
        return float(np.mean(f))

    def inner(self, f: np.ndarray, g: np.ndarray) -> float:
        return self.grid.cell_volume * float(np.sum(np.multiply(f, g)))

    def norm_l2(self, f: np.ndarray) -> float:
        return float(np.sqrt(self.inner(f, f)))

    def norm_lp(self, f: np.ndarray, p: float) -> float:
        if not p >= 1:
            raise PreconditionError(f"p must be >= 1, got {p}")
        return float((self.grid.cell_volume * np.sum(np.abs(f) ** p)) ** (1.0 / p))

    def norm_linf(self, f: np.ndarray) -> float:
        return float(np.max(np.abs(f)))

    def norm_hminus1(self, f: np.ndarray) -> float:
        f = self.grid.check(f)
        self._require_mean_zero(f)
        return np.sqrt(self.spectral_norm_sq(self.inverse_lambda(0.5) * self.fft(f)))

    def norm_h1(self, f: np.ndarray) -> float:
        g = self.grad(f)
        return float(np.sqrt(self.inner(f, f) + sum(self.inner(c, c) for c in g)))

    def norm_h2(self, f: np.ndarray) -> float:
        lap = self.laplacian(f)
        return float(np.sqrt(self.norm_h1(f) ** 2 + self.inner(lap, lap)))

    def norm_grad_laplacian(self, f: np.ndarray) -> float:
        """``||grad_N Delta_N f||_2``, the H^3-type diagnostic."""
        g = self.grad(self.laplacian(f))
        return float(np.sqrt(sum(self.inner(c, c) for c in g)))


def _axis_view(v: np.ndarray, axis: int, dim: int) -> np.ndarray:
    shape = [1] * dim
    shape[axis] = -1
    return np.asarray(v, dtype=float).reshape(shape)


@lru_cache(maxsize=32)
def ops_for(grid: Grid) -> SpectralOps:
    """Shared :class:`SpectralOps` instance for ``grid``."""
    return SpectralOps(grid)
