"""Spectral operators on the periodic square.

Fields live on an N x N uniform grid over [0, L)^2.  Transforms use the
mean-preserving normalization: the forward FFT divides by N^2, so the (0, 0)
coefficient of a field equals its spatial mean.  Dealiasing follows the 2/3
rule: a mode with integer wavenumbers (k1, k2) survives iff
3 * max(|k1|, |k2|) <= N, which keeps quadratic products of surviving modes
alias-free on the grid.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft as _fft

REAL = "real"
SPECTRAL = "spectral"


def fft_workers() -> int:
    """Worker count for FFT calls, capped by the OLDB2D_THREADS env var."""
    raw = os.environ.get("OLDB2D_THREADS", "")
    try:
        cap = int(raw)
    except ValueError:
        return 1
    return max(1, cap)


def to_spectral(values: np.ndarray) -> np.ndarray:
    """Forward FFT over the last two axes (batches over leading axes)."""
    return _fft.fft2(values, norm="forward", axes=(-2, -1), workers=fft_workers())


def to_real(coeffs: np.ndarray) -> np.ndarray:
    """Backward FFT over the last two axes; returns the real part."""
    return _fft.ifft2(coeffs, norm="forward", axes=(-2, -1), workers=fft_workers()).real


def rfft2(values: np.ndarray) -> np.ndarray:
    return _fft.rfft2(values, norm="forward", axes=(-2, -1), workers=fft_workers())


def irfft2(coeffs: np.ndarray, n: int) -> np.ndarray:
    return _fft.irfft2(coeffs, s=(n, n), norm="forward", axes=(-2, -1), workers=fft_workers())


@dataclass(frozen=True, eq=False)
class SpectralGrid:
    """Uniform N x N periodic grid on [0, L)^2 with wavenumber tables.

    Index convention: array element [i, j] sits at (x_i, y_j), so the first
    array axis is the x-direction (derivative index 1) and the second is y
    (index 2).  `kx`, `ky` carry the physical wavenumbers 2*pi/L * integer;
    `ikx`, `iky` are the derivative multipliers with the Nyquist frequency
    zeroed so that derivatives of real fields stay real.
    """

    n: int
    length: float
    kx: np.ndarray
    ky: np.ndarray
    k_sq: np.ndarray
    inv_k_sq: np.ndarray  # 1/|k|^2 with the (0,0) entry set to zero
    ikx: np.ndarray
    iky: np.ndarray
    kx_d: np.ndarray      # derivative wavenumbers: kx with the Nyquist row zeroed
    ky_d: np.ndarray
    inv_k_sq_d: np.ndarray
    dealias_mask: np.ndarray

    @property
    def spacing(self) -> float:
        return self.length / self.n

    @property
    def area(self) -> float:
        return self.length ** 2

    def nodes(self):
        """Coordinate arrays (x, y) with x[i, j] = i*L/N, y[i, j] = j*L/N."""
        x = np.arange(self.n) * self.spacing
        return np.meshgrid(x, x, indexing="ij")

    # Half-spectrum (rfft2) tables used by the time-stepping kernel.

    @cached_property
    def _half(self):
        nh = self.n // 2 + 1
        sl = (slice(None), slice(0, nh))
        weights = np.full((self.n, nh), 2.0)
        weights[:, 0] = 1.0
        if self.n % 2 == 0:
            weights[:, nh - 1] = 1.0
        return {
            "kx": self.kx_d[sl],
            "ky": self.ky_d[sl],
            "k_sq": self.k_sq[sl],
            "inv_k_sq": self.inv_k_sq_d[sl],
            "ikx": self.ikx[sl],
            "iky": self.iky[sl],
            "mask": self.dealias_mask[sl],
            "weights": weights,
        }


def same_grid(g1: SpectralGrid, g2: SpectralGrid) -> bool:
    return g1 is g2 or (g1.n == g2.n and g1.length == g2.length)


def make_grid(n: int, length: float) -> SpectralGrid:
    """Build a grid with wavenumber tables and the 2/3-rule dealias mask."""
    if int(n) != n:
        raise ValueError("n must be an integer")
    n = int(n)
    if n < 8:
        raise ValueError("n must be at least 8")
    if n % 2 != 0:
        raise ValueError("n must be even")
    length = float(length)
    if not np.isfinite(length) or length <= 0.0:
        raise ValueError("length must be positive")

    kint = np.rint(np.fft.fftfreq(n, 1.0 / n)).astype(np.int64)
    kxi, kyi = np.meshgrid(kint, kint, indexing="ij")
    scale = 2.0 * np.pi / length
    kx = scale * kxi
    ky = scale * kyi
    k_sq = kx * kx + ky * ky
    inv_k_sq = np.zeros_like(k_sq)
    nz = k_sq > 0.0
    inv_k_sq[nz] = 1.0 / k_sq[nz]

    # Odd-order derivative multipliers must vanish at the Nyquist frequency.
    kx_d = np.where(kxi == -(n // 2), 0.0, kx)
    ky_d = np.where(kyi == -(n // 2), 0.0, ky)
    ikx = 1j * kx_d
    iky = 1j * ky_d
    k_sq_d = kx_d * kx_d + ky_d * ky_d
    inv_k_sq_d = np.zeros_like(k_sq_d)
    nzd = k_sq_d > 0.0
    inv_k_sq_d[nzd] = 1.0 / k_sq_d[nzd]

    mask = (3 * np.abs(kxi) <= n) & (3 * np.abs(kyi) <= n)
    return SpectralGrid(n, length, kx, ky, k_sq, inv_k_sq, ikx, iky,
                        kx_d, ky_d, inv_k_sq_d, mask)


@dataclass(frozen=True)
class ScalarField:
    """A scalar field with either real-space values or spectral coefficients."""

    grid: SpectralGrid
    data: np.ndarray
    space: str = REAL

    def __post_init__(self):
        _check_data(self.grid, self.data, self.space, comps=0)

    def as_real(self) -> "ScalarField":
        if self.space == REAL:
            return self
        return ScalarField(self.grid, to_real(self.data), REAL)

    def as_spectral(self) -> "ScalarField":
        if self.space == SPECTRAL:
            return self
        return ScalarField(self.grid, to_spectral(self.data), SPECTRAL)

    @property
    def values(self) -> np.ndarray:
        return self.as_real().data

    @property
    def coeffs(self) -> np.ndarray:
        return self.as_spectral().data


@dataclass(frozen=True)
class VectorField:
    """A two-component field; data has shape (2, n, n)."""

    grid: SpectralGrid
    data: np.ndarray
    space: str = REAL

    def __post_init__(self):
        _check_data(self.grid, self.data, self.space, comps=2)

    def as_real(self) -> "VectorField":
        if self.space == REAL:
            return self
        return VectorField(self.grid, to_real(self.data), REAL)

    def as_spectral(self) -> "VectorField":
        if self.space == SPECTRAL:
            return self
        return VectorField(self.grid, to_spectral(self.data), SPECTRAL)

    @property
    def values(self) -> np.ndarray:
        return self.as_real().data

    @property
    def coeffs(self) -> np.ndarray:
        return self.as_spectral().data

    def component(self, i: int) -> ScalarField:
        return ScalarField(self.grid, self.data[i], self.space)


def _check_data(grid, data, space, comps):
    shape = (grid.n, grid.n) if comps == 0 else (comps, grid.n, grid.n)
    if data.shape != shape:
        raise ValueError(f"field data has shape {data.shape}, expected {shape}")
    if space == REAL:
        if np.iscomplexobj(data):
            raise ValueError("real-space field data must be a real array")
    elif space == SPECTRAL:
        if not np.iscomplexobj(data):
            raise ValueError("spectral field data must be a complex array")
    else:
        raise ValueError(f"unknown representation tag {space!r}")


def scalar_field(grid, data, space=REAL) -> ScalarField:
    data = np.asarray(data, dtype=complex if space == SPECTRAL else float)
    if data.ndim == 0:
        data = np.full((grid.n, grid.n), data)
    return ScalarField(grid, data, space)


def vector_field(grid, data, space=REAL) -> VectorField:
    data = np.asarray(data, dtype=complex if space == SPECTRAL else float)
    return VectorField(grid, data, space)


def zero_scalar(grid) -> ScalarField:
    return ScalarField(grid, np.zeros((grid.n, grid.n)), REAL)


def zero_vector(grid) -> VectorField:
    return VectorField(grid, np.zeros((2, grid.n, grid.n)), REAL)


def hermitian_defect(f: ScalarField | VectorField) -> float:
    """Max deviation of the spectral coefficients from conj-symmetry."""
    c = f.coeffs
    rev = np.roll(np.flip(c, axis=(-2, -1)), 1, axis=(-2, -1))
    return float(np.max(np.abs(c - np.conj(rev))))


def _same_space_out(f, coeffs, cls):
    out = cls(f.grid, coeffs, SPECTRAL)
    return out.as_real() if f.space == REAL else out


def ddx(f: ScalarField, axis: int) -> ScalarField:
    """Spectral derivative along axis 1 (x) or 2 (y).

    Exact for band-limited fields; the Nyquist mode is zeroed (it is masked
    by the dealias rule anyway).
    """
    if axis not in (1, 2):
        raise ValueError("axis must be 1 or 2")
    mult = f.grid.ikx if axis == 1 else f.grid.iky
    return _same_space_out(f, mult * f.coeffs, ScalarField)


def laplacian(f: ScalarField) -> ScalarField:
    return _same_space_out(f, -f.grid.k_sq * f.coeffs, ScalarField)


def dealias(f):
    """Zero every masked mode; survivors are untouched."""
    cls = VectorField if isinstance(f, VectorField) else ScalarField
    return _same_space_out(f, f.grid.dealias_mask * f.coeffs, cls)


def leray_project(v: VectorField) -> VectorField:
    """Per-mode projection onto divergence-free fields; mode (0,0) unchanged.

    Uses the derivative wavenumbers (Nyquist zeroed), so the result is
    divergence-free in the same convention `divergence` measures and the
    projection of a real field stays real.
    """
    g = v.grid
    vh = v.coeffs
    kdotv = (g.kx_d * vh[0] + g.ky_d * vh[1]) * g.inv_k_sq_d
    out = np.stack([vh[0] - g.kx_d * kdotv, vh[1] - g.ky_d * kdotv])
    return _same_space_out(v, out, VectorField)


def divergence(v: VectorField) -> ScalarField:
    g = v.grid
    vh = v.coeffs
    return _same_space_out(v, g.ikx * vh[0] + g.iky * vh[1], ScalarField)


def curl(v: VectorField) -> ScalarField:
    """Scalar curl d1 u2 - d2 u1."""
    g = v.grid
    vh = v.coeffs
    return _same_space_out(v, g.ikx * vh[1] - g.iky * vh[0], ScalarField)


def heat_semigroup(f, diffusivity: float, damping: float, t: float):
    """Apply exp(-(diffusivity*|k|^2 + damping) * t) per mode."""
    if t < 0.0:
        raise ValueError("t must be nonnegative")
    if diffusivity < 0.0 or damping < 0.0:
        raise ValueError("diffusivity and damping must be nonnegative")
    mult = np.exp(-(diffusivity * f.grid.k_sq + damping) * t)
    cls = VectorField if isinstance(f, VectorField) else ScalarField
    return _same_space_out(f, mult * f.coeffs, cls)


def _require_zero_mean(coeffs, what):
    norm = np.sqrt(np.sum(np.abs(coeffs) ** 2))
    if np.abs(coeffs[..., 0, 0]).max() > 1e-10 * max(norm, 1e-300):
        raise ValueError(f"{what} must have zero mean")


def invert_laplacian(f: ScalarField) -> ScalarField:
    """Solve laplacian(g) = f for zero-mean f; g gets the zero-mean gauge."""
    fh = f.coeffs
    _require_zero_mean(fh, "invert_laplacian input")
    return _same_space_out(f, -f.grid.inv_k_sq * fh, ScalarField)


def velocity_from_vorticity(omega: ScalarField) -> VectorField:
    """Divergence-free velocity whose scalar curl is the given vorticity."""
    g = omega.grid
    wh = omega.coeffs
    _require_zero_mean(wh, "vorticity")
    psih = -g.inv_k_sq * wh  # streamfunction, laplacian(psi) = omega
    out = np.stack([-g.iky * psih, g.ikx * psih])
    cls_out = VectorField(g, out, SPECTRAL)
    return cls_out.as_real() if omega.space == REAL else cls_out


def field_mean(f: ScalarField) -> float:
    if f.space == REAL:
        return float(np.mean(f.data))
    return float(f.data[0, 0].real)


def field_integral(f: ScalarField) -> float:
    return field_mean(f) * f.grid.area
