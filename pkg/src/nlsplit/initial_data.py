"""Initial data: Gaussians, plane waves, random H^s-rough data and phi_alpha."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Literal

import numpy as np

from .grid import ComplexField, SpectralGrid, norm, to_physical


def gaussian(grid: SpectralGrid, width: float = 1.0, amplitude: complex = 1.0) -> ComplexField:
    if not width > 0:
        raise ValueError(f"width must be positive, got {width}")
    r2 = grid.radius() ** 2
    return ComplexField(grid, amplitude * np.exp(-r2 / width**2))


def _mode_vector(grid: SpectralGrid, mode) -> np.ndarray:
    k = np.atleast_1d(np.asarray(mode, dtype=float))
    if k.size == 1 and grid.dim > 1:
        k = np.concatenate([k, np.zeros(grid.dim - 1)])
    if k.size != grid.dim:
        raise ValueError(f"mode must have {grid.dim} components")
    # k must be on the lattice pi*m/L with m in [-N/2, N/2)
    m = k * grid.half_width / np.pi
    if np.any(np.abs(m - np.round(m)) > 1e-9):
        raise ValueError(f"mode {mode} is not on the grid's wavenumber lattice")
    n = grid.n_per_axis
    if np.any(np.round(m) < -n // 2) or np.any(np.round(m) >= n // 2):
        raise ValueError(f"mode {mode} is outside the representable band")
    return k


def plane_wave(grid: SpectralGrid, mode, amplitude: float = 1.0) -> ComplexField:
    k = _mode_vector(grid, mode)
    phase = sum(kj * xj for kj, xj in zip(k, grid.coordinates()))
    return ComplexField(grid, amplitude * np.exp(1j * phase))


def exact_plane_wave(
    grid: SpectralGrid, mode, amplitude: float, lam: float, p: float, t: float
) -> ComplexField:
    """Exact NLS solution ``A exp(i(k.x - (|k|^2 + lam A^p) t))``.

    ``|u| = A`` is constant, so ``lam |u|^p u`` is a constant-rate phase and
    substituting into ``i u_t + Delta u = lam |u|^p u`` balances term by term.
    """
    k = _mode_vector(grid, mode)
    A = float(amplitude)
    if not A > 0:
        raise ValueError("amplitude must be positive")
    omega = float(k @ k) + lam * A**p
    phase = sum(kj * xj for kj, xj in zip(k, grid.coordinates()))
    return ComplexField(grid, A * np.exp(1j * (phase - omega * t)))


def _partner_index(grid: SpectralGrid) -> np.ndarray:
    """Flat index of the lattice point ``-xi`` for each point ``xi``.

    Centred ordering puts m at position m + N/2; -m wraps modulo N so the
    Nyquist row pairs with itself.
    """
    n = grid.n_per_axis
    pos = np.arange(n)
    neg = (n - pos) % n
    idx = np.arange(grid.total_points).reshape(grid.shape)
    for ax in range(grid.dim):
        idx = np.take(idx, neg, axis=ax)
    return idx.ravel()


def _normalize_from_spectrum(grid: SpectralGrid, coeffs: np.ndarray, normalization: float) -> ComplexField:
    if not normalization > 0:
        raise ValueError("normalization must be positive")
    field = ComplexField(grid, coeffs, "frequency")
    c = coeffs * (normalization / norm(field))
    return ComplexField(grid, c, "frequency")


def hs_rough_spectrum(grid: SpectralGrid, s: float) -> np.ndarray:
    """Modulus ``(1+|xi|)^-(s+d/2) / log(2+|xi|)`` on the lattice (unnormalised)."""
    if s < 0:
        raise ValueError("s must be >= 0")
    xi = grid.frequency_magnitude()
    return (1.0 + xi) ** (-(s + grid.dim / 2)) / np.log(2.0 + xi)


def hs_rough_coefficients(grid: SpectralGrid, s: float, seed: int, normalization: float = 1.0) -> ComplexField:
    amp = hs_rough_spectrum(grid, s)
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.0, 2 * np.pi, size=grid.total_points)
    # conjugate symmetry: c(-xi) = conj c(xi); self-paired points stay real
    partner = _partner_index(grid)
    own = np.arange(grid.total_points)
    theta = np.where(own < partner, theta, np.where(own > partner, -theta[partner], 0.0))
    coeffs = amp * np.exp(1j * theta.reshape(grid.shape))
    return _normalize_from_spectrum(grid, coeffs, normalization)


def hs_rough(grid: SpectralGrid, s: float, seed: int = 0, normalization: float = 1.0) -> ComplexField:
    """Real random datum in H^s but not in H^(s+delta), uniformly in refinement."""
    spec = hs_rough_coefficients(grid, s, seed, normalization)
    vals = to_physical(spec.values, grid)
    return ComplexField(grid, vals.real)


def phi_alpha_spectrum(grid: SpectralGrid, alpha: float) -> np.ndarray:
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    xi = grid.frequency_magnitude()
    d = grid.dim
    return (1.0 + xi) ** (-d / 2) * np.log(2.0 + xi) ** (-(1.0 + alpha) / 2)


def phi_alpha_coefficients(grid: SpectralGrid, alpha: float, normalization: float = 1.0) -> ComplexField:
    return _normalize_from_spectrum(grid, phi_alpha_spectrum(grid, alpha).astype(complex), normalization)


def phi_alpha(grid: SpectralGrid, alpha: float, normalization: float = 1.0) -> ComplexField:
    """Radial L2 datum with positive spectrum ``C (1+|xi|)^(-d/2) log(2+|xi|)^(-(1+alpha)/2)``.

    ``C`` is fixed by the requested L2 norm on this grid.
    """
    spec = phi_alpha_coefficients(grid, alpha, normalization)
    return ComplexField(grid, to_physical(spec.values, grid).real)


@dataclass(frozen=True)
class DataSpec:
    kind: Literal["gaussian", "plane_wave", "hs_rough", "phi_alpha"]
    width: float = 1.0
    amplitude: float = 1.0
    mode: tuple[float, ...] = (0.0,)
    s: float = 0.0
    seed: int = 0
    normalization: float = 1.0
    alpha: float = 1.0

    def __post_init__(self):
        if self.kind not in ("gaussian", "plane_wave", "hs_rough", "phi_alpha"):
            raise ValueError(f"unknown data kind {self.kind!r}")
        if not self.width > 0:
            raise ValueError("width must be positive")
        if self.s < 0:
            raise ValueError("s must be >= 0")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if not self.normalization > 0:
            raise ValueError("normalization must be positive")
        object.__setattr__(self, "mode", tuple(float(m) for m in np.atleast_1d(self.mode)))

    def realize(self, grid: SpectralGrid) -> ComplexField:
        if self.kind == "gaussian":
            return gaussian(grid, self.width, self.amplitude)
        if self.kind == "plane_wave":
            return plane_wave(grid, self.mode, self.amplitude)
        if self.kind == "hs_rough":
            return hs_rough(grid, self.s, self.seed, self.normalization)
        return phi_alpha(grid, self.alpha, self.normalization)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mode"] = list(self.mode)
        return d
