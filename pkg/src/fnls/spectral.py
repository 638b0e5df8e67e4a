"""Fourier-multiplier operators on the periodic lattice.

Transform convention: the forward transform carries h^N and the inverse
carries (dk/2pi)^N, so discrete sums are literal quadratures of continuum
integrals and Parseval reads

    h^N sum |f|^2  ==  (dk/2pi)^N sum |F|^2.

With x_j = -L + j h and k_m = pi m / L the forward coefficients pick up the
alternating phase (-1)^(m1+...+mN) relative to a raw FFT; diagonal multiplier
operators are phase-free and act on raw FFT data directly.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import InvalidExponent, InvalidOrder
from .grid import Field, Grid


def _alternating_phase(grid: Grid) -> np.ndarray:
    cache = grid._cache()
    if "altphase" not in cache:
        M = grid.points_per_dim
        sign1d = np.where(np.arange(M) % 2 == 0, 1.0, -1.0)
        phase = sign1d
        for _ in range(grid.dim - 1):
            phase = np.multiply.outer(phase, sign1d)
        phase.flags.writeable = False
        cache["altphase"] = phase
    return cache["altphase"]


def transform_forward(f: Field) -> np.ndarray:
    """Spectral coefficients F(k) ~ integral f(x) exp(-i k.x) dx.

    Layout matches numpy fftn (axis_freqs order per axis).
    """
    grid = f.grid
    return grid.cell_volume * _alternating_phase(grid) * np.fft.fftn(f.values)


def transform_inverse(coeffs: np.ndarray, grid: Grid) -> Field:
    """Inverse of transform_forward."""
    vals = np.fft.ifftn(_alternating_phase(grid) * coeffs) / grid.cell_volume
    return Field(grid, vals)


def spectral_mass(coeffs: np.ndarray, grid: Grid) -> float:
    """(dk/2pi)^N sum |F|^2, the spectral side of Parseval."""
    w = (grid.freq_step / (2.0 * math.pi)) ** grid.dim
    return float(w * np.vdot(coeffs, coeffs).real)


def fractional_laplacian(f: Field, s: float) -> Field:
    """(-Delta)^s f via the multiplier |k|^(2s); s = 1 gives the classical Laplacian."""
    if not (0.0 < s <= 1.0):
        raise InvalidOrder(f"fractional order must lie in (0, 1], got {s}")
    grid = f.grid
    mult = grid.kpow_mesh(2.0 * s)
    return Field(grid, np.fft.ifftn(mult * np.fft.fftn(f.values)))


def hs_seminorm_sq(f: Field, s: float) -> float:
    """Squared homogeneous seminorm (2pi)^-N integral |k|^(2s) |F|^2 dk."""
    if not (0.0 < s <= 1.0):
        raise InvalidOrder(f"fractional order must lie in (0, 1], got {s}")
    grid = f.grid
    fhat = np.fft.fftn(f.values)
    mult = grid.kpow_mesh(2.0 * s)
    w = grid.cell_volume / grid.total_points
    return float(w * np.sum(mult * (fhat.real**2 + fhat.imag**2)))


def _gradient_multipliers(grid: Grid) -> list[np.ndarray]:
    cache = grid._cache()
    if "ikgrad" not in cache:
        M = grid.points_per_dim
        k = grid.axis_freqs.copy()
        k[M // 2] = 0.0  # odd multiplier: zero the unpaired Nyquist mode
        mults = []
        for axis in range(grid.dim):
            shape = [1] * grid.dim
            shape[axis] = M
            mults.append((1j * k).reshape(shape))
        cache["ikgrad"] = mults
    return cache["ikgrad"]


def gradient(f: Field) -> list[Field]:
    """Spectral partial derivatives, one Field per axis."""
    grid = f.grid
    fhat = np.fft.fftn(f.values)
    return [
        Field(grid, np.fft.ifftn(mult * fhat)) for mult in _gradient_multipliers(grid)
    ]


def riesz_symbol_constant(dim: int, gamma: float) -> float:
    """Constant in FT(|x|^-gamma) = const * |k|^(gamma - N)."""
    return (
        math.pi ** (dim / 2.0)
        * 2.0 ** (dim - gamma)
        * math.gamma((dim - gamma) / 2.0)
        / math.gamma(gamma / 2.0)
    )


def riesz_convolve(f_abs2: Field, gamma: float) -> Field:
    """Riesz potential |x|^-gamma * f on the box.

    The kernel symbol is sampled on the frequency lattice with the zero mode
    set to 0 (the kernel has no integrable DC component on R^N); accuracy
    improves as the field localizes relative to the box.
    """
    grid = f_abs2.grid
    if not (0.0 < gamma < grid.dim):
        raise InvalidExponent(f"gamma must lie in (0, N) = (0, {grid.dim}), got {gamma}")
    const = riesz_symbol_constant(grid.dim, gamma)
    symbol = const * grid.kpow_mesh(gamma - grid.dim)
    out = np.fft.ifftn(symbol * np.fft.fftn(f_abs2.values))
    return Field(grid, out.real.astype(np.complex128))


def dilate_values(values: np.ndarray, grid: Grid, scale: float) -> np.ndarray:
    """Samples of u(scale * x) by trigonometric interpolation.

    The single Nyquist coefficient is split evenly between +-M/2 so real
    input stays real off-lattice; scale = 1 reproduces the input exactly.
    Evaluation factorizes into one dense M x (M+1) matrix per axis.
    """
    M = grid.points_per_dim
    coeffs = np.fft.fftn(values)
    k = grid.axis_freqs
    k_ext = np.concatenate([k, [-k[M // 2]]])
    x = grid.axis_points
    # E[j, m] = exp(i k_m (scale x_j + L)) / M maps modes to samples at scale*x
    E = np.exp(1j * np.outer(scale * x + grid.half_extent, k_ext)) / M
    # points with scale*x outside the box would wrap periodic copies in;
    # a localized field is ~0 there, so those samples are zeroed instead
    L = grid.half_extent
    valid = (scale * x >= -L) & (scale * x < L)
    if not valid.all():
        E[~valid, :] = 0.0
    for axis in range(grid.dim):
        moved = np.moveaxis(coeffs, axis, -1)
        ext = np.empty(moved.shape[:-1] + (M + 1,), dtype=np.complex128)
        ext[..., :M] = moved
        ext[..., M // 2] *= 0.5
        ext[..., M] = ext[..., M // 2]
        coeffs = np.moveaxis(ext @ E.T, -1, axis)
    return coeffs


def resample_to(f: Field, target: Grid) -> Field:
    """Transfer a field to a finer/coarser grid with the same box by mode embedding."""
    src = f.grid
    if src.dim != target.dim or src.half_extent != target.half_extent:
        raise InvalidOrder("resample_to requires matching dimension and half extent")
    Ms, Mt = src.points_per_dim, target.points_per_dim
    coeffs = np.fft.fftn(f.values) / src.total_points
    out = np.zeros(target.shape, dtype=np.complex128)
    half = min(Ms, Mt) // 2
    idx_src = np.r_[0:half, Ms - half : Ms]
    idx_tgt = np.r_[0:half, Mt - half : Mt]
    src_sel = np.ix_(*(idx_src,) * src.dim)
    tgt_sel = np.ix_(*(idx_tgt,) * src.dim)
    out[tgt_sel] = coeffs[src_sel]
    return Field(target, np.fft.ifftn(out) * target.total_points)
