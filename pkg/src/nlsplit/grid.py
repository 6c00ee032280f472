"""Periodic spectral grid, unitary Fourier transforms and field norms.

The computational domain is the torus ``[-L, L)^d`` sampled with ``N`` points
per axis.  Frequency coefficients are *centred*: the forward transform is

    F_m = M^{-1/2} sum_j f(x_j) exp(-i xi_m . x_j),   M = N^d,

with ``x_j = -L + j h``.  Because the sample points start at ``-L`` rather than
0, this differs from ``numpy.fft.fftn`` by a sign ``(-1)^m`` per axis.  The
payoff is that a real, even spectrum produces a real field that is even about
``x = 0`` (grid index ``N/2``), which is what the radial constructions need.
"""

from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Literal

import numpy as np
import scipy.fft as sfft

Space = Literal["physical", "frequency"]

_MAGIC = b"NLSF"
_VERSION = 1


class DomainTruncationWarning(UserWarning):
    """Solution mass is reaching the edge of the periodic box."""


@dataclass(frozen=True, eq=False)
class SpectralGrid:
    dim: int
    n_per_axis: int
    half_width: float
    # per-axis wavenumbers in ascending order, pi*m/L for m in [-N/2, N/2)
    wavenumbers: tuple[np.ndarray, ...] = field(repr=False)

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_per_axis,) * self.dim

    @property
    def total_points(self) -> int:
        return self.n_per_axis**self.dim

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n_per_axis

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def frequency_cell(self) -> float:
        """Lattice cell ``(pi/L)^d`` of the frequency Riemann sum."""
        return (np.pi / self.half_width) ** self.dim

    @property
    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.n_per_axis)

    def coordinates(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*([self.axis] * self.dim), indexing="ij"))

    def radius(self) -> np.ndarray:
        return np.sqrt(sum(c**2 for c in self.coordinates()))

    @cached_property
    def _lattice(self) -> tuple[tuple[np.ndarray, ...], np.ndarray]:
        freqs = tuple(np.meshgrid(*self.wavenumbers, indexing="ij"))
        return freqs, np.sqrt(sum(k**2 for k in freqs))

    def frequencies(self) -> tuple[np.ndarray, ...]:
        """Wavenumber arrays broadcast to the full frequency lattice."""
        return self._lattice[0]

    def frequency_magnitude(self) -> np.ndarray:
        return self._lattice[1]

    @property
    def max_frequency(self) -> float:
        return float(np.sqrt(self.dim) * np.pi * self.n_per_axis / (2 * self.half_width))

    def same_as(self, other: "SpectralGrid") -> bool:
        return (
            self is other
            or (
                self.dim == other.dim
                and self.n_per_axis == other.n_per_axis
                and self.half_width == other.half_width
            )
        )


def make_grid(dim: int, n_per_axis: int, half_width: float) -> SpectralGrid:
    if dim not in (1, 2, 3):
        raise ValueError(f"dim must be 1, 2 or 3, got {dim}")
    n = int(n_per_axis)
    if n != n_per_axis or n < 8 or n & (n - 1):
        raise ValueError(f"n_per_axis must be a power of two >= 8, got {n_per_axis}")
    if not half_width > 0:
        raise ValueError(f"half_width must be positive, got {half_width}")
    m = np.arange(-n // 2, n // 2)
    ks = np.pi * m / float(half_width)
    ks.setflags(write=False)
    return SpectralGrid(dim, n, float(half_width), tuple([ks] * dim))


@dataclass(frozen=True, eq=False)
class ComplexField:
    """Complex samples on a grid, either point values or centred coefficients.

    ``values`` has shape ``grid.shape``; frequency-space values are stored in
    ascending wavenumber order (matching ``grid.wavenumbers``).
    """

    grid: SpectralGrid
    values: np.ndarray
    space: Space = "physical"

    def __post_init__(self):
        if self.space not in ("physical", "frequency"):
            raise ValueError(f"unknown space tag {self.space!r}")
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.size != self.grid.total_points:
            raise ValueError(
                f"expected {self.grid.total_points} values, got {vals.size}"
            )
        object.__setattr__(self, "values", vals.reshape(self.grid.shape))

    def with_values(self, values: np.ndarray) -> "ComplexField":
        return ComplexField(self.grid, values, self.space)

    def __mul__(self, c: complex) -> "ComplexField":
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def __add__(self, other: "ComplexField") -> "ComplexField":
        _check_compatible(self, other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "ComplexField") -> "ComplexField":
        _check_compatible(self, other)
        return self.with_values(self.values - other.values)


def _check_compatible(a: ComplexField, b: ComplexField) -> None:
    if not a.grid.same_as(b.grid):
        raise ValueError("fields live on different grids")
    if a.space != b.space:
        raise ValueError(f"cannot combine {a.space} and {b.space} fields")


def _centering_sign(grid: SpectralGrid) -> np.ndarray:
    n = grid.n_per_axis
    s = np.where(np.arange(-n // 2, n // 2) % 2 == 0, 1.0, -1.0)
    out = s
    for _ in range(grid.dim - 1):
        out = np.multiply.outer(out, s)
    return out


def to_frequency(values: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    """Raw-array forward transform; see module docstring for the convention."""
    axes = tuple(range(grid.dim))
    c = sfft.fftn(values, axes=axes, norm="ortho")
    return sfft.fftshift(c, axes=axes) * _centering_sign(grid)


def to_physical(coeffs: np.ndarray, grid: SpectralGrid) -> np.ndarray:
    axes = tuple(range(grid.dim))
    c = sfft.ifftshift(coeffs * _centering_sign(grid), axes=axes)
    return sfft.ifftn(c, axes=axes, norm="ortho")


def forward_transform(f: ComplexField) -> ComplexField:
    if f.space != "physical":
        raise ValueError("forward_transform expects a physical-space field")
    return ComplexField(f.grid, to_frequency(f.values, f.grid), "frequency")


def inverse_transform(f: ComplexField) -> ComplexField:
    if f.space != "frequency":
        raise ValueError("inverse_transform expects a frequency-space field")
    return ComplexField(f.grid, to_physical(f.values, f.grid), "physical")


def as_physical(f: ComplexField) -> ComplexField:
    return f if f.space == "physical" else inverse_transform(f)


def as_frequency(f: ComplexField) -> ComplexField:
    return f if f.space == "frequency" else forward_transform(f)


# -- norms ------------------------------------------------------------------

@dataclass(frozen=True)
class NormKind:
    name: Literal["L2", "Lr", "Hs", "HlogS"]
    param: float = 2.0


def L2() -> NormKind:
    return NormKind("L2")


def Lr(r: float) -> NormKind:
    return NormKind("Lr", float(r))


def Hs(s: float) -> NormKind:
    return NormKind("Hs", float(s))


def HlogS(s: float) -> NormKind:
    return NormKind("HlogS", float(s))


def lr_norm_array(values: np.ndarray, r: float, cell_volume: float) -> float:
    a = np.abs(values)
    if np.isinf(r):
        return float(a.max()) if a.size else 0.0
    if r == 2:
        return float(np.sqrt(cell_volume * np.vdot(a, a).real))
    return float((cell_volume * np.sum(a**r)) ** (1.0 / r))


def norm(f: ComplexField, kind: NormKind | str = "L2") -> float:
    """Discrete norm of ``f``.

    Physical norms are Riemann sums with cell ``h^d``.  Sobolev-type norms
    weight the unitary coefficients with the same cell volume, which equals
    the ``(pi/L)^d`` frequency Riemann sum of the continuous transform and
    makes ``Hs(0)`` coincide with ``L2``.
    """
    if isinstance(kind, str):
        kind = NormKind(kind)
    grid = f.grid
    if kind.name == "L2":
        # Parseval: the unitary transform keeps the sum of squares
        return lr_norm_array(f.values, 2.0, grid.cell_volume)
    if kind.name == "Lr":
        r = kind.param
        if r < 1:
            raise ValueError(f"Lr needs r >= 1, got {r}")
        return lr_norm_array(as_physical(f).values, r, grid.cell_volume)
    s = kind.param
    if s < 0:
        raise ValueError(f"{kind.name} needs s >= 0, got {s}")
    c = as_frequency(f).values
    xi = grid.frequency_magnitude()
    if kind.name == "Hs":
        w = (1.0 + xi**2) ** s
    elif kind.name == "HlogS":
        w = np.log(2.0 + xi) ** (2 * s)
    else:
        raise ValueError(f"unknown norm kind {kind.name!r}")
    return float(np.sqrt(grid.cell_volume * np.sum(w * np.abs(c) ** 2)))


def boundary_mass_fraction(f: ComplexField, shell: float = 0.05) -> float:
    """Fraction of L2 mass within ``shell * L`` of the box faces."""
    u = as_physical(f)
    grid = u.grid
    edge = (1.0 - shell) * grid.half_width
    mask = np.zeros(grid.shape, dtype=bool)
    for c in grid.coordinates():
        mask |= np.abs(c) >= edge
    dens = np.abs(u.values) ** 2
    total = dens.sum()
    return float(dens[mask].sum() / total) if total > 0 else 0.0


def check_boundary_mass(f: ComplexField, tol: float = 1e-8) -> float:
    frac = boundary_mass_fraction(f)
    if frac > tol:
        warnings.warn(
            f"boundary-shell mass fraction {frac:.2e} exceeds {tol:.0e}; "
            "the periodic box may be too small",
            DomainTruncationWarning,
            stacklevel=3,
        )
    return frac


# -- binary field dump --------------------------------------------------------

_HEADER = struct.Struct("<4sIBQdB")


def dump_field(f: ComplexField, path) -> None:
    grid = f.grid
    head = _HEADER.pack(
        _MAGIC,
        _VERSION,
        grid.dim,
        grid.n_per_axis,
        grid.half_width,
        0 if f.space == "physical" else 1,
    )
    body = np.empty(f.values.size * 2, dtype="<f8")
    flat = np.ascontiguousarray(f.values).ravel()
    body[0::2] = flat.real
    body[1::2] = flat.imag
    with open(path, "wb") as fh:
        fh.write(head)
        fh.write(body.tobytes())


def load_field(path) -> ComplexField:
    with open(path, "rb") as fh:
        raw = fh.read()
    if len(raw) < _HEADER.size:
        raise ValueError("truncated field dump")
    magic, version, dim, n, half_width, tag = _HEADER.unpack_from(raw)
    if magic != _MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise ValueError(f"unsupported field dump version {version}")
    if tag not in (0, 1):
        raise ValueError(f"bad space tag {tag}")
    grid = make_grid(dim, n, half_width)
    body = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size)
    if body.size != 2 * grid.total_points:
        raise ValueError("field dump payload does not match header")
    vals = body[0::2] + 1j * body[1::2]
    return ComplexField(grid, vals, "physical" if tag == 0 else "frequency")
