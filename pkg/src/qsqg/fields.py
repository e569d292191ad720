"""Grid, field, and trajectory containers for the discrete 2-torus.

Conventions, fixed once for the whole package:

* physical domain [0, L)^2 sampled on an N x N row-major lattice
  (axis 0 is x1, axis 1 is x2);
* frequency lattice xi = (2 pi / L) k with integer k in [-N/2, N/2)^2,
  stored in FFT layout;
* forward transform  fhat(xi) = sum_x f(x) exp(-i xi . x) (L/N)^2,
  so the partial derivative along axis j acts as multiplication by i xi_j.

Operators that are homogeneous or singular at xi = 0 send the mean to zero,
and the norm estimators remove the mean on ingestion; constants are invisible
to every seminorm in this package.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Callable

import numpy as np

from .errors import GridMismatchError, SymmetryError

FILE_MAGIC = b"QSF1"

# |mean| above this (relative to the field scale) fails a mean-zero precondition
MEAN_TOL = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """Uniform N x N grid on the torus [0, L)^2.

    ``dealias_fraction`` is the kept fraction of the one-sided spectrum when a
    pointwise product is dealiased (2/3 rule by default).
    """

    side_points: int
    domain_length: float
    dealias_fraction: float = 2.0 / 3.0

    def __post_init__(self):
        n = self.side_points
        if not isinstance(n, (int, np.integer)) or n < 8 or n % 2:
            raise ValueError(f"side_points must be an even integer >= 8, got {n!r}")
        if not self.domain_length > 0:
            raise ValueError("domain_length must be positive")
        if not 0 < self.dealias_fraction <= 1:
            raise ValueError("dealias_fraction must lie in (0, 1]")

    @property
    def n(self) -> int:
        return self.side_points

    @property
    def length(self) -> float:
        return self.domain_length

    @property
    def spacing(self) -> float:
        return self.domain_length / self.side_points

    @property
    def cell_area(self) -> float:
        return self.spacing ** 2

    @cached_property
    def coords(self) -> np.ndarray:
        """1-d physical coordinates, 0 <= x < L."""
        c = np.arange(self.n) * self.spacing
        c.setflags(write=False)
        return c

    @cached_property
    def signed_coords(self) -> np.ndarray:
        """Coordinates wrapped to the symmetric representative [-L/2, L/2)."""
        L = self.length
        c = (self.coords + L / 2) % L - L / 2
        c.setflags(write=False)
        return c

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Integer mode numbers k in FFT layout (0, 1, ..., -N/2, ..., -1)."""
        k = np.fft.fftfreq(self.n, d=1.0 / self.n)
        k.setflags(write=False)
        return k

    @cached_property
    def xi(self) -> tuple[np.ndarray, np.ndarray]:
        """2-d frequency arrays (xi1, xi2), FFT layout, axis 0 = xi1."""
        base = (2 * np.pi / self.length) * self.wavenumbers
        x1, x2 = np.meshgrid(base, base, indexing="ij")
        x1.setflags(write=False)
        x2.setflags(write=False)
        return x1, x2

    @cached_property
    def xi_squared(self) -> np.ndarray:
        x1, x2 = self.xi
        s = x1 * x1 + x2 * x2
        s.setflags(write=False)
        return s

    @cached_property
    def xi_norm(self) -> np.ndarray:
        s = np.sqrt(self.xi_squared)
        s.setflags(write=False)
        return s

    @cached_property
    def negation_index(self) -> np.ndarray:
        """Permutation sending mode k to -k mod N along one axis."""
        p = (-np.arange(self.n)) % self.n
        p.setflags(write=False)
        return p

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """Boolean keep-mask: |k_j| <= dealias_fraction * N/2 on both axes."""
        cut = self.dealias_fraction * self.n / 2
        k = np.abs(self.wavenumbers)
        keep1, keep2 = np.meshgrid(k <= cut, k <= cut, indexing="ij")
        m = keep1 & keep2
        m.setflags(write=False)
        return m

    def conjugate_flip(self, arr: np.ndarray) -> np.ndarray:
        """conj(arr) sampled at -k mod N, the reality partner of arr."""
        p = self.negation_index
        return np.conj(arr[np.ix_(p, p)])

    def hermitian_part(self, symbol: np.ndarray) -> np.ndarray:
        """Project a lattice symbol onto the conjugate-symmetric part.

        Leaves genuinely Hermitian symbols untouched and zeroes the unpaired
        odd content on the Nyquist rows, which is what keeps multiplier
        output real on an even grid.
        """
        return 0.5 * (symbol + self.conjugate_flip(symbol))


@dataclass(frozen=True)
class SpaceParams:
    """Admissible smoothness/dissipation pair (alpha, beta).

    Requires alpha > 0, max(alpha, 1/2) < beta < 1 and alpha + beta >= 1.
    """

    alpha: float
    beta: float

    def __post_init__(self):
        a, b = self.alpha, self.beta
        if not a > 0:
            raise ValueError(f"alpha must be positive, got {a}")
        if not max(a, 0.5) < b < 1:
            raise ValueError(
                f"beta must satisfy max(alpha, 1/2) < beta < 1, got alpha={a}, beta={b}"
            )
        if a + b - 1 < 0:
            raise ValueError(f"need alpha + beta >= 1, got alpha={a}, beta={b}")


@dataclass(frozen=True)
class MultiplierSymbol:
    """A Fourier multiplier m(xi) plus its value on the zero mode.

    ``evaluator`` maps frequency arrays (xi1, xi2) to complex values and must
    be finite on every nonzero lattice frequency; the zero mode is always
    taken from ``zero_mode_value`` instead, so evaluators may be singular at 0.
    """

    evaluator: Callable[[np.ndarray, np.ndarray], "np.ndarray | complex"]
    zero_mode_value: complex = 0.0


def _frozen_array(values, shape) -> np.ndarray:
    v = np.array(values, dtype=float)
    if v.shape != shape:
        raise ValueError(f"expected array of shape {shape}, got {v.shape}")
    if not np.isfinite(v).all():
        raise ValueError("field values must be finite")
    v.setflags(write=False)
    return v


@dataclass(frozen=True, eq=False)
class RealField:
    """Immutable real scalar field sampled on a GridSpec lattice."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        object.__setattr__(self, "values", _frozen_array(self.values, (n, n)))

    # -- small arithmetic helpers (same grid enforced) -------------------
    def _check(self, other: "RealField") -> None:
        if self.grid != other.grid:
            raise GridMismatchError("fields live on different grids")

    def __add__(self, other: "RealField") -> "RealField":
        self._check(other)
        return RealField(self.grid, self.values + other.values)

    def __sub__(self, other: "RealField") -> "RealField":
        self._check(other)
        return RealField(self.grid, self.values - other.values)

    def __neg__(self) -> "RealField":
        return RealField(self.grid, -self.values)

    def __mul__(self, scalar: float) -> "RealField":
        return RealField(self.grid, self.values * float(scalar))

    __rmul__ = __mul__

    def mean(self) -> float:
        return float(self.values.mean())

    def max_abs(self) -> float:
        return float(np.abs(self.values).max())

    def require_mean_zero(self, what: str) -> None:
        if abs(self.mean()) > MEAN_TOL * max(1.0, self.max_abs()):
            raise ValueError(f"{what} requires a mean-zero field "
                             f"(mean = {self.mean():.3e})")

    @classmethod
    def zero(cls, grid: GridSpec) -> "RealField":
        return cls(grid, np.zeros((grid.n, grid.n)))


def field_from_function(grid: GridSpec, fn) -> RealField:
    """Sample fn(x1, x2) on the lattice (meshgrid arrays, axis 0 = x1)."""
    x1, x2 = np.meshgrid(grid.coords, grid.coords, indexing="ij")
    return RealField(grid, np.asarray(fn(x1, x2), dtype=float))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients of a real field.

    Coefficients follow the package transform convention (forward sum times
    (L/N)^2) in FFT layout, and must be conjugate-symmetric so the physical
    field is real.
    """

    grid: GridSpec
    coefficients: np.ndarray

    def __post_init__(self):
        n = self.grid.n
        c = np.array(self.coefficients, dtype=complex)
        if c.shape != (n, n):
            raise ValueError(f"expected coefficients of shape {(n, n)}, got {c.shape}")
        if not np.isfinite(c.view(float)).all():
            raise ValueError("coefficients must be finite")
        scale = max(1.0, float(np.abs(c).max()))
        defect = float(np.abs(c - self.grid.conjugate_flip(c)).max())
        if defect > 1e-9 * scale:
            raise SymmetryError(
                f"coefficients break conjugate symmetry (defect {defect:.3e})"
            )
        c.setflags(write=False)
        object.__setattr__(self, "coefficients", c)


def to_spectral(f: RealField) -> SpectralField:
    return SpectralField(f.grid, np.fft.fft2(f.values) * f.grid.cell_area)


def to_physical(s: SpectralField) -> RealField:
    values = np.fft.ifft2(s.coefficients / s.grid.cell_area).real
    return RealField(s.grid, values)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Snapshots of a field at strictly increasing positive times."""

    times: np.ndarray
    snapshots: tuple[RealField, ...]

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "snapshots", tuple(self.snapshots))
        if t.ndim != 1 or len(t) != len(self.snapshots) or len(t) == 0:
            raise ValueError("times and snapshots must be matching non-empty sequences")
        if not (t[0] > 0 and np.all(np.diff(t) > 0)):
            raise ValueError("times must be strictly increasing and positive")
        g = self.snapshots[0].grid
        for s in self.snapshots[1:]:
            if s.grid != g:
                raise GridMismatchError("trajectory snapshots live on different grids")
        t.setflags(write=False)

    @property
    def grid(self) -> GridSpec:
        return self.snapshots[0].grid

    def __len__(self) -> int:
        return len(self.snapshots)

    def _check(self, other: "Trajectory") -> None:
        if self.grid != other.grid:
            raise GridMismatchError("trajectories live on different grids")
        if len(self) != len(other) or not np.allclose(self.times, other.times):
            raise ValueError("trajectories have different time grids")

    def __add__(self, other: "Trajectory") -> "Trajectory":
        self._check(other)
        return Trajectory(self.times, tuple(a + b for a, b in zip(self.snapshots, other.snapshots)))

    def __sub__(self, other: "Trajectory") -> "Trajectory":
        self._check(other)
        return Trajectory(self.times, tuple(a - b for a, b in zip(self.snapshots, other.snapshots)))

    def scaled(self, factor: float) -> "Trajectory":
        return Trajectory(self.times, tuple(s * factor for s in self.snapshots))


# -- field file format -----------------------------------------------------
#
# bytes 0..3   magic "QSF1"
# bytes 4..7   little-endian uint32 N
# bytes 8..15  little-endian float64 L
# then         N*N little-endian float64 physical values, row-major


def write_field(f: RealField, path: "str | Path") -> None:
    path = Path(path)
    with open(path, "wb") as fh:
        fh.write(FILE_MAGIC)
        fh.write(struct.pack("<I", f.grid.n))
        fh.write(struct.pack("<d", f.grid.length))
        fh.write(np.ascontiguousarray(f.values, dtype="<f8").tobytes())


def read_field(path: "str | Path", dealias_fraction: float = 2.0 / 3.0) -> RealField:
    path = Path(path)
    raw = path.read_bytes()
    if raw[:4] != FILE_MAGIC:
        raise ValueError(f"{path} is not a field file (bad magic {raw[:4]!r})")
    n = struct.unpack("<I", raw[4:8])[0]
    length = struct.unpack("<d", raw[8:16])[0]
    expected = 16 + 8 * n * n
    if len(raw) != expected:
        raise ValueError(f"{path}: expected {expected} bytes for N={n}, got {len(raw)}")
    values = np.frombuffer(raw, dtype="<f8", offset=16).reshape(n, n)
    return RealField(GridSpec(int(n), float(length), dealias_fraction), values.astype(float))
