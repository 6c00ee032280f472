"""Exact sub-flows of the split NLS problem and the smooth frequency filter.

``linear_flow`` is ``e^{it Delta}`` (symbol ``exp(-i t |xi|^2)``),
``nonlinear_flow`` solves ``i u_t = lambda |u|^p u`` pointwise, and
``apply_filter`` multiplies coefficients by ``chi(sqrt(s) |xi|)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import (
    ComplexField,
    SpectralGrid,
    as_frequency,
    as_physical,
    to_frequency,
    to_physical,
)


def _g(t: np.ndarray) -> np.ndarray:
    pos = t > 0
    out = np.zeros_like(t)
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def chi(r):
    """Radial cut-off: 1 on [0, 1], 0 on [2, inf), C-infinity in between.

    The transition is the mollifier bridge ``g(2-r) / (g(2-r) + g(r-1))`` with
    ``g(t) = exp(-1/t)`` for ``t > 0``.  Accepts scalars or arrays.
    """
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr < 0):
        raise ValueError("chi is defined for r >= 0")
    a = _g(np.atleast_1d(2.0 - r_arr))
    b = _g(np.atleast_1d(r_arr - 1.0))
    denom = a + b
    out = np.where(denom > 0, a / np.where(denom > 0, denom, 1.0), 0.0)
    r1 = np.atleast_1d(r_arr)
    out = np.where(r1 <= 1.0, 1.0, np.where(r1 >= 2.0, 0.0, out))
    if r_arr.ndim == 0:
        return float(out[0])
    return out.reshape(r_arr.shape)


@dataclass(frozen=True, eq=False)
class FilterKernel:
    grid: SpectralGrid
    scale: float
    weights: np.ndarray = field(repr=False)

    @property
    def is_all_pass(self) -> bool:
        return bool(np.all(self.weights == 1.0))


def make_filter(grid: SpectralGrid, scale: float) -> FilterKernel:
    if not scale > 0:
        raise ValueError(f"filter scale must be positive, got {scale}")
    w = chi(np.sqrt(scale) * grid.frequency_magnitude())
    w.setflags(write=False)
    return FilterKernel(grid, float(scale), w)


def _require_same_grid(f: ComplexField, grid: SpectralGrid) -> None:
    if not f.grid.same_as(grid):
        raise ValueError("field and kernel live on different grids")


def apply_multiplier(f: ComplexField, symbol: np.ndarray) -> ComplexField:
    """Multiply the coefficients of ``f`` by ``symbol``; keeps the space tag."""
    if f.space == "frequency":
        return f.with_values(f.values * symbol)
    vals = to_physical(to_frequency(f.values, f.grid) * symbol, f.grid)
    return f.with_values(vals)


def apply_filter(f: ComplexField, k: FilterKernel) -> ComplexField:
    _require_same_grid(f, k.grid)
    return apply_multiplier(f, k.weights)


def linear_symbol(grid: SpectralGrid, t: float) -> np.ndarray:
    return np.exp(-1j * t * grid.frequency_magnitude() ** 2)


def linear_flow(f: ComplexField, t: float) -> ComplexField:
    if t == 0:
        return f
    return apply_multiplier(f, linear_symbol(f.grid, t))


def nonlinear_phase(u: np.ndarray, t: float, lam: float, p: float) -> np.ndarray:
    """``exp(-i t lam |u|^p) u`` on a raw array."""
    if t == 0:
        return u
    return np.exp(-1j * (t * lam) * np.abs(u) ** p) * u


def nonlinear_flow(f: ComplexField, t: float, lam: float, p: float) -> ComplexField:
    if f.space != "physical":
        raise ValueError("nonlinear_flow acts pointwise on physical-space fields")
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    return f.with_values(nonlinear_phase(f.values, t, lam, p))


def fractional_laplacian(f: ComplexField, sigma: float) -> ComplexField:
    """``(-Delta)^{sigma/2}`` as the multiplier ``|xi|^sigma``."""
    return apply_multiplier(f, f.grid.frequency_magnitude() ** sigma)


__all__ = [
    "FilterKernel",
    "apply_filter",
    "apply_multiplier",
    "as_frequency",
    "as_physical",
    "chi",
    "fractional_laplacian",
    "linear_flow",
    "linear_symbol",
    "make_filter",
    "nonlinear_flow",
    "nonlinear_phase",
]
