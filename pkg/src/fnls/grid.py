"""Periodic truncation of R^N: grids, complex fields, and model parameters.

The continuum is replaced by the box [-L, L)^N sampled on a uniform lattice
with M points per axis, so every integral becomes an h^N-weighted lattice sum
and every Fourier integral a scaled FFT.  L is a convergence parameter, not a
physical box.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInit, GridMismatch, InvalidGrid, InvalidModel, NonFinite

# Total point count must stay indexable and FFT-able on this platform.
_MAX_TOTAL_POINTS = 2**31


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on [-L, L)^N.

    Attributes:
        dim: spatial dimension N >= 1.
        half_extent: L > 0, the box is [-L, L) per axis.
        points_per_dim: M, even and >= 8.
    """

    dim: int
    half_extent: float
    points_per_dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise InvalidGrid(f"dim must be >= 1, got {self.dim}")
        if not self.half_extent > 0:
            raise InvalidGrid(f"half_extent must be positive, got {self.half_extent}")
        M = self.points_per_dim
        if M < 8 or M % 2 != 0:
            raise InvalidGrid(f"points_per_dim must be even and >= 8, got {M}")
        if M**self.dim > _MAX_TOTAL_POINTS:
            raise InvalidGrid(
                f"total point count {M}^{self.dim} exceeds the addressable range"
            )

    @property
    def spacing(self) -> float:
        """Lattice spacing h = 2L/M."""
        return 2.0 * self.half_extent / self.points_per_dim

    @property
    def total_points(self) -> int:
        return self.points_per_dim**self.dim

    @property
    def shape(self) -> tuple:
        return (self.points_per_dim,) * self.dim

    @property
    def cell_volume(self) -> float:
        """Quadrature weight h^N of one lattice cell."""
        return self.spacing**self.dim

    @property
    def freq_step(self) -> float:
        """Wavenumber spacing pi/L."""
        return math.pi / self.half_extent

    @property
    def axis_points(self) -> np.ndarray:
        """Sample coordinates -L + j*h along one axis."""
        return self._axis_points()

    @property
    def axis_freqs(self) -> np.ndarray:
        """Wavenumbers pi*m/L for m in [-M/2, M/2), in FFT order."""
        return self._axis_freqs()

    # Mesh caches live outside the frozen dataclass fields.
    def _cache(self) -> dict:
        cache = self.__dict__.get("_mesh_cache")
        if cache is None:
            object.__setattr__(self, "_mesh_cache", {})
            cache = self.__dict__["_mesh_cache"]
        return cache

    def _axis_points(self) -> np.ndarray:
        cache = self._cache()
        if "x" not in cache:
            M = self.points_per_dim
            x = -self.half_extent + self.spacing * np.arange(M)
            x.flags.writeable = False
            cache["x"] = x
        return cache["x"]

    def _axis_freqs(self) -> np.ndarray:
        cache = self._cache()
        if "k" not in cache:
            M = self.points_per_dim
            k = 2.0 * math.pi * np.fft.fftfreq(M, d=self.spacing)
            k.flags.writeable = False
            cache["k"] = k
        return cache["k"]

    def coordinate_mesh(self) -> list[np.ndarray]:
        """Coordinate arrays X_1..X_N, each of shape grid.shape."""
        cache = self._cache()
        if "xmesh" not in cache:
            mesh = np.meshgrid(*(self.axis_points,) * self.dim, indexing="ij")
            for m in mesh:
                m.flags.writeable = False
            cache["xmesh"] = mesh
        return cache["xmesh"]

    def radius_mesh(self) -> np.ndarray:
        """|x| on the lattice."""
        cache = self._cache()
        if "r" not in cache:
            r = np.sqrt(sum(m**2 for m in self.coordinate_mesh()))
            r.flags.writeable = False
            cache["r"] = r
        return cache["r"]

    def ksq_mesh(self) -> np.ndarray:
        """|k|^2 on the frequency lattice (FFT order)."""
        cache = self._cache()
        if "k2" not in cache:
            axes = np.meshgrid(*(self.axis_freqs,) * self.dim, indexing="ij")
            k2 = sum(a**2 for a in axes)
            k2.flags.writeable = False
            cache["k2"] = k2
        return cache["k2"]

    def kpow_mesh(self, exponent: float) -> np.ndarray:
        """|k|^exponent with the zero mode set to 0 (FFT order)."""
        cache = self._cache()
        key = ("kpow", exponent)
        if key not in cache:
            k2 = self.ksq_mesh()
            with np.errstate(divide="ignore"):
                kp = np.where(k2 > 0.0, k2 ** (exponent / 2.0), 0.0)
            kp.flags.writeable = False
            cache[key] = kp
        return cache[key]


def make_grid(dim: int, half_extent: float, points_per_dim: int) -> Grid:
    """Build a periodic grid, validating the invariants."""
    return Grid(dim=int(dim), half_extent=float(half_extent), points_per_dim=int(points_per_dim))


class Field:
    """Complex-valued function sampled on a Grid.  Immutable.

    Transformations return new Fields; the value buffer is read-only and
    safe to share between threads.
    """

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values: np.ndarray):
        values = np.ascontiguousarray(values, dtype=np.complex128)
        if values.shape != grid.shape:
            raise GridMismatch(
                f"value shape {values.shape} does not match grid shape {grid.shape}"
            )
        if not np.all(np.isfinite(values.view(np.float64))):
            raise NonFinite("field contains NaN or Inf")
        values.flags.writeable = False
        object.__setattr__(self, "grid", grid)
        object.__setattr__(self, "values", values)

    def __setattr__(self, name, value):
        raise AttributeError("Field is immutable")

    def mass(self) -> float:
        """h^N * sum |u|^2, the discrete squared L^2 norm."""
        v = self.values
        return float(self.grid.cell_volume * np.vdot(v, v).real)

    def l2_norm(self) -> float:
        return math.sqrt(self.mass())

    def is_zero(self, tol: float = 0.0) -> bool:
        return self.mass() <= tol

    def require_same_grid(self, other: "Field") -> None:
        if self.grid != other.grid:
            raise GridMismatch("fields live on different grids")

    def __add__(self, other: "Field") -> "Field":
        self.require_same_grid(other)
        return Field(self.grid, self.values + other.values)

    def __sub__(self, other: "Field") -> "Field":
        self.require_same_grid(other)
        return Field(self.grid, self.values - other.values)

    def __mul__(self, scalar: complex) -> "Field":
        return Field(self.grid, self.values * scalar)

    __rmul__ = __mul__

    def normalized_to_mass(self, c: float) -> "Field":
        """Scale onto the L^2 sphere of mass c."""
        m = self.mass()
        if m <= 0.0 or not math.isfinite(m):
            raise DegenerateInit("cannot normalize a zero-mass field")
        return Field(self.grid, self.values * math.sqrt(c / m))


def inner_real(f: Field, g: Field) -> float:
    """Real L^2 pairing Re h^N sum conj(f) g."""
    f.require_same_grid(g)
    return float(f.grid.cell_volume * np.vdot(f.values, g.values).real)


KIND_POWER = "power"
KIND_HARTREE = "hartree"


@dataclass(frozen=True)
class ModelParams:
    """Model data: dimension, fractional order, nonlinearity, mass level.

    kind is "power" (f(u) = |u|^p u) or "hartree" (f(u) = (|x|^-gamma * |u|^2) u);
    exponent holds p or gamma accordingly.  The mass-supercritical window is
    enforced at construction unless validate=False (validation-only escapes,
    e.g. the classical s=1 soliton check).
    """

    dim: int
    s: float
    kind: str
    exponent: float
    c: float
    validate: bool = True

    def __post_init__(self):
        if self.kind not in (KIND_POWER, KIND_HARTREE):
            raise InvalidModel(f"unknown nonlinearity kind {self.kind!r}")
        if not self.c > 0:
            raise InvalidModel(f"mass level c must be positive, got {self.c}")
        if not self.validate:
            if not (0.0 < self.s <= 1.0):
                raise InvalidModel(f"s must lie in (0, 1], got {self.s}")
            return
        N, s = self.dim, self.s
        if not (0.0 < s < 1.0):
            raise InvalidModel(f"s must lie in (0, 1), got {s}")
        if self.kind == KIND_POWER:
            p = self.exponent
            lower = 4.0 * s / N
            if not p > lower:
                raise InvalidModel(
                    f"power p = {p} violates the mass-supercritical window: need p > 4s/N = {lower}"
                )
            if N > 2.0 * s:
                upper = 4.0 * s / (N - 2.0 * s)
                if not p < upper:
                    raise InvalidModel(
                        f"power p = {p} violates p < 4s/(N-2s) = {upper}"
                    )
            else:
                warnings.warn(
                    "N <= 2s: upper exponent bound treated as +inf", stacklevel=2
                )
        else:
            g = self.exponent
            upper = min(float(N), 4.0 * s)
            if not (2.0 * s < g < upper):
                raise InvalidModel(
                    f"Hartree gamma = {g} outside (2s, min(N, 4s)) = ({2.0 * s}, {upper})"
                )

    @classmethod
    def power(cls, dim: int, s: float, p: float, c: float, validate: bool = True) -> "ModelParams":
        return cls(dim=dim, s=s, kind=KIND_POWER, exponent=p, c=c, validate=validate)

    @classmethod
    def hartree(cls, dim: int, s: float, gamma: float, c: float, validate: bool = True) -> "ModelParams":
        return cls(dim=dim, s=s, kind=KIND_HARTREE, exponent=gamma, c=c, validate=validate)

    @property
    def is_power(self) -> bool:
        return self.kind == KIND_POWER

    @property
    def p(self) -> float:
        if not self.is_power:
            raise InvalidModel("p requested from a Hartree model")
        return self.exponent

    @property
    def gamma(self) -> float:
        if self.is_power:
            raise InvalidModel("gamma requested from a power model")
        return self.exponent

    def with_mass(self, c: float) -> "ModelParams":
        return ModelParams(self.dim, self.s, self.kind, self.exponent, c, self.validate)

    def require_dynamics(self) -> None:
        """Extra window for the time-dependent problem (radial local theory)."""
        N = self.dim
        if N < 2:
            raise InvalidModel("dynamics requires N >= 2")
        if self.s < N / (2.0 * N - 1.0):
            raise InvalidModel(
                f"dynamics requires s >= N/(2N-1) = {N / (2.0 * N - 1.0)}, got s = {self.s}"
            )


def gaussian(grid: Grid, width: float = 1.0, amplitude: float = 1.0) -> Field:
    """Centered radial Gaussian amplitude * exp(-|x|^2 / (2 width^2))."""
    r2 = sum(m**2 for m in grid.coordinate_mesh())
    return Field(grid, amplitude * np.exp(-r2 / (2.0 * width**2)).astype(np.complex128))


def plane_wave(grid: Grid, mode: tuple, amplitude: complex = 1.0) -> Field:
    """amplitude * exp(i k.x) for a lattice wavevector k = pi*mode/L."""
    if len(mode) != grid.dim:
        raise GridMismatch(f"mode has {len(mode)} components for dim {grid.dim}")
    phase = np.zeros(grid.shape)
    mesh = grid.coordinate_mesh()
    for m_int, X in zip(mode, mesh):
        phase = phase + (math.pi * m_int / grid.half_extent) * X
    return Field(grid, amplitude * np.exp(1j * phase))


def random_smooth(grid: Grid, seed: int, corr_length: float = 2.0, amplitude: float = 1.0) -> Field:
    """Seeded random field with a Gaussian spectral envelope (deterministic)."""
    rng = np.random.default_rng(seed)
    shape = grid.shape
    coeffs = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    k2 = grid.ksq_mesh()
    envelope = np.exp(-0.5 * corr_length**2 * k2)
    vals = np.fft.ifftn(coeffs * envelope)
    # localize in the box so lattice sums approximate whole-space integrals
    r2 = sum(m**2 for m in grid.coordinate_mesh())
    bump = np.exp(-r2 / (2.0 * (grid.half_extent / 3.0) ** 2))
    vals = vals * bump
    norm = np.sqrt(grid.cell_volume * np.vdot(vals, vals).real)
    if norm == 0.0:
        raise DegenerateInit("random field collapsed to zero")
    return Field(grid, amplitude * vals / norm)
