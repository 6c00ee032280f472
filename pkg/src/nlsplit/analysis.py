"""Error measurement, Strichartz bookkeeping and inequality verifiers."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from numbers import Rational
from typing import Sequence

import numpy as np
import scipy.fft as sfft
from scipy.stats import qmc

from .flows import apply_filter, make_filter
from .grid import ComplexField, SpectralGrid, lr_norm_array, norm
from .integrators import Trajectory

INF = math.inf
CSV_HEADER = "# nls-csv v1"
CSV_COLUMNS = ("tau", "error", "oracle_gap", "mass_drift", "fitted_order")


# -- admissible pairs ---------------------------------------------------------

def _exact(x) -> bool:
    return isinstance(x, (int, Rational)) or x == INF


def _inv(x) -> Fraction | float:
    if x == INF:
        return Fraction(0)
    if isinstance(x, (int, Rational)):
        return Fraction(1) / Fraction(x)
    return 1.0 / x


def _eq(a, b) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a == b
    return math.isclose(float(a), float(b), rel_tol=1e-12, abs_tol=1e-14)


def _le(a, b) -> bool:
    if isinstance(a, Fraction) and isinstance(b, Fraction):
        return a <= b
    return float(a) <= float(b) + 1e-12 * max(1.0, abs(float(b)))


@dataclass(frozen=True)
class AdmissiblePair:
    q: Fraction | float
    r: Fraction | float
    dim: int

    def as_floats(self) -> tuple[float, float]:
        return float(self.q), float(self.r)


def admissible_check(q, r, d: int) -> bool:
    """Schroedinger admissibility: 2/q + d/r = d/2, 2 <= q, r <= inf, (q,r,d) != (2,inf,2).

    Integers, ``Fraction`` and ``inf`` are compared exactly; floats to 1e-12.
    """
    if not (q >= 2 and r >= 2):
        return False
    if q == 2 and r == INF and d == 2:
        return False
    lhs = 2 * _inv(q) + d * _inv(r)
    return _eq(lhs, Fraction(d, 2))


def radial_range_check(q, r, d: int) -> bool:
    """Extended radial range 2/q + (2d-1)/r <= (2d-1)/2, q >= 2, minus the open endpoint."""
    if d < 2:
        raise ValueError("the radial range is stated for d >= 2")
    if not (q >= 2 and r >= 1):
        return False
    endpoint_r = Fraction(4 * d - 2, 2 * d - 3)
    if _eq(q, 2) and r != INF and _eq(r, endpoint_r):
        return False
    lhs = 2 * _inv(q) + (2 * d - 1) * _inv(r)
    return _le(lhs, Fraction(2 * d - 1, 2))


def _as_rational(p):
    return Fraction(p) if isinstance(p, (int, float, Rational)) else p


def _check_subcritical(d: int, p) -> Fraction:
    pf = _as_rational(p)
    if not 0 < pf < Fraction(4, d):
        raise ValueError(f"need 0 < p < 4/d, got p={p}, d={d}")
    return pf


def q0r0(d: int, p) -> AdmissiblePair:
    """1/r0 = 1/(p+2), 1/q0 = dp/(4(p+2))."""
    pf = _check_subcritical(d, p)
    return AdmissiblePair(4 * (pf + 2) / (d * pf), pf + 2, d)


def q1r1(d: int, p) -> AdmissiblePair:
    """1/r1 = (p+1)/(2(2p+1)), 1/q1 = dp/(4(2p+1))."""
    pf = _check_subcritical(d, p)
    return AdmissiblePair(4 * (2 * pf + 1) / (d * pf), 2 * (2 * pf + 1) / (pf + 1), d)


# -- discrete space-time norms ----------------------------------------------------

def discrete_strichartz_norm(
    traj: Trajectory,
    q: float,
    r: float,
    interval: tuple[float, float] | None = None,
    *,
    closed: bool = False,
) -> float:
    """``(tau * sum_{n tau in I} ||u(n tau)||_{L^r}^q)^(1/q)``, or the sup for q = inf.

    ``I`` is half-open ``[a, b)`` unless ``closed``; ``None`` means all of
    ``[0, T]``.  Every multiple of tau in ``I`` must have a snapshot.
    """
    tau = traj.config.tau
    if interval is None:
        a, b, closed = 0.0, traj.config.T, True
    else:
        a, b = interval
    eps = 1e-9 * max(1.0, abs(b))
    lo = math.ceil(a / tau - 1e-9)
    hi = math.floor(b / tau + 1e-9)
    if not closed and hi * tau > b - eps:
        hi -= 1
    steps = range(lo, hi + 1)
    vals = []
    for n in steps:
        i = traj.index_of(n * tau)
        if i is None:
            raise ValueError(f"missing snapshot at t={n * tau}")
        vals.append(lr_norm_array(traj.fields[i].values, r, traj.grid.cell_volume))
    if not vals:
        return 0.0
    v = np.array(vals)
    if q == INF:
        return float(v.max())
    return float((tau * np.sum(v**q)) ** (1.0 / q))


# -- errors and order fits ---------------------------------------------------------

def measure_error(traj: Trajectory, reference: Trajectory) -> float:
    """Largest L2 gap over the snapshot times the two trajectories share."""
    if not traj.grid.same_as(reference.grid):
        raise ValueError("trajectories live on different grids")
    worst = None
    for t, f in traj.snapshots:
        j = reference.index_of(t)
        if j is None:
            continue
        gap = norm(f - reference.fields[j])
        worst = gap if worst is None else max(worst, gap)
    if worst is None:
        raise ValueError("trajectories share no snapshot times")
    return float(worst)


@dataclass
class OrderFit:
    order: float
    residual: float
    excluded: list[float] = field(default_factory=list)

    def __iter__(self):
        # unpacks as (order, residual)
        return iter((self.order, self.residual))


def _ls_slope(x: np.ndarray, y: np.ndarray) -> tuple[float, float]:
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    res = y - A @ coef
    return float(coef[0]), float(np.sqrt(np.mean(res**2)))


def fit_order(taus: Sequence[float], errors: Sequence[float], *, max_residual: float = 0.1) -> OrderFit:
    """Least-squares slope of ln(error) against ln(tau), with RMS log residual.

    If the residual exceeds ``max_residual`` the coarsest step is dropped once
    (pre-asymptotic contamination) and the exclusion recorded.
    """
    t = np.asarray(taus, dtype=float)
    e = np.asarray(errors, dtype=float)
    if t.size < 2 or t.size != e.size:
        raise ValueError("need at least two (tau, error) pairs")
    if np.any(e <= 0):
        raise ValueError("errors must be positive for a log-log fit")
    order, res = _ls_slope(np.log(t), np.log(e))
    excluded: list[float] = []
    if res > max_residual and t.size >= 4:
        i = int(np.argmax(t))
        excluded.append(float(t[i]))
        keep = np.arange(t.size) != i
        order, res = _ls_slope(np.log(t[keep]), np.log(e[keep]))
    return OrderFit(order, res, excluded)


def log_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Slope of ln(y) against ln(x)."""
    return _ls_slope(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)))[0]


@dataclass
class ConvergenceReport:
    scheme: str
    data_spec: dict
    taus: list[float]
    errors: list[float]
    fitted_order: float
    fit_residual: float
    oracle_self_gaps: list[float]
    mass_drifts: list[float] = field(default_factory=list)
    excluded: list[float] = field(default_factory=list)
    oracle_flagged: list[bool] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if any(b >= a for a, b in zip(self.taus, self.taus[1:])):
            raise ValueError("taus must be strictly decreasing")

    @classmethod
    def from_sweep(cls, scheme, data_spec, taus, errors, gaps, drifts=(), flagged=(), meta=None):
        fit = fit_order(taus, errors)
        return cls(
            scheme,
            dict(data_spec),
            [float(t) for t in taus],
            [float(e) for e in errors],
            fit.order,
            fit.residual,
            [float(g) for g in gaps],
            [float(m) for m in drifts],
            fit.excluded,
            [bool(f) for f in flagged],
            dict(meta or {}),
        )

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(CSV_HEADER + "\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        n = len(self.taus)
        for i in range(n):
            drift = self.mass_drifts[i] if i < len(self.mass_drifts) else ""
            last = repr(self.fitted_order) if i == n - 1 else ""
            w.writerow([repr(self.taus[i]), repr(self.errors[i]), repr(self.oracle_self_gaps[i]),
                        repr(drift) if drift != "" else "", last])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "ConvergenceReport":
        return cls(**json.loads(text))


def read_convergence_csv(text: str) -> list[dict]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != CSV_HEADER:
        raise ValueError("missing nls-csv v1 header")
    rows = list(csv.DictReader(lines[1:]))
    out = []
    for row in rows:
        out.append({k: (float(v) if v not in ("", None) else None) for k, v in row.items()})
    return out


# -- mass ---------------------------------------------------------------------

def mass_drift(traj: Trajectory) -> float:
    """Relative mass deviation from t=0.

    Filtered runs only count growth above the running minimum, since the
    filter is allowed to remove mass.
    """
    m = traj.masses() ** 2
    if m.size == 0:
        raise ValueError("trajectory has no snapshots")
    m0 = m[0]
    if m0 == 0:
        return 0.0
    if traj.config.scheme == "filtered_lie":
        envelope = np.minimum.accumulate(m)
        return float(np.max(m - envelope) / m0)
    return float(np.max(np.abs(m - m0)) / m0)


# -- bound evaluator -------------------------------------------------------------

def filter_tail(phi: ComplexField, scale: float) -> float:
    """``||phi - P(scale) phi||_{L2}``."""
    return norm(phi - apply_filter(phi, make_filter(phi.grid, scale)))


def is_lattice_radial(phi: ComplexField, tol: float = 1e-10) -> bool:
    """Invariance under the reflections and axis swaps of the lattice about x=0."""
    from .grid import as_physical

    u = as_physical(phi).values
    scale = max(np.abs(u).max(), 1e-300)
    n = u.shape[0]
    # index N/2 is x=0; reflecting x -> -x maps j to N - j (index 0 is its own image)
    refl = (n - np.arange(n)) % n
    for ax in range(u.ndim):
        if np.abs(np.take(u, refl, axis=ax) - u).max() > tol * scale:
            return False
    if u.ndim > 1:
        for a in range(u.ndim):
            for b in range(a + 1, u.ndim):
                if np.abs(np.swapaxes(u, a, b) - u).max() > tol * scale:
                    return False
    return True


def theorem2_bound(
    phi: ComplexField,
    tau: float,
    tilde_tau: float,
    T: float,
    d: int,
    p: float,
    constants: tuple[float, float] = (1.0, 1.0),
) -> float:
    """Shape of the radial error bound with user-supplied constants ``(C, C_exp)``.

    C exp(C T m^(4p/(4-dp))) * ( ||phi - P(tilde_tau) phi||
                                 + tilde_tau^((4-dp)/8) T m^C_exp
                                 + (tau/tilde_tau)^(1/2) (m + m^(p+1)) ),  m = ||phi||_2.
    """
    if not 0 < tau <= tilde_tau < 1:
        raise ValueError("need 0 < tau <= tilde_tau < 1")
    if d != phi.grid.dim:
        raise ValueError("d does not match the datum's grid")
    if d not in (2, 3):
        raise ValueError("the radial bound is stated for 2 <= d <= 3")
    if not 0 < p < 4 / d:
        raise ValueError("need 0 < p < 4/d")
    if T <= 0:
        raise ValueError("T must be positive")
    if not is_lattice_radial(phi):
        raise ValueError("datum is not radial")
    C, c_exp = constants
    m = norm(phi)
    growth = C * math.exp(C * T * m ** (4 * p / (4 - d * p)))
    tail = filter_tail(phi, tilde_tau)
    smooth = tilde_tau ** ((4 - d * p) / 8) * T * m**c_exp
    ratio = math.sqrt(tau / tilde_tau) * (m + m ** (p + 1))
    return growth * (tail + smooth + ratio)


# -- pointwise mean-value inequalities ---------------------------------------------

def difference_quotient(v, tau, lam, p):
    """``(N(tau) - I)/tau`` applied pointwise, as the literal expression."""
    v = np.asarray(v, dtype=complex)
    return (np.exp(-1j * tau * lam * np.abs(v) ** p) - 1.0) / tau * v


@dataclass
class MVTResult:
    p: float
    c_lipschitz: float
    c_consistency: float
    c_lipschitz_doubled: float
    c_consistency_doubled: float
    passed: bool


def _mvt_constants(p, tau, v, w, lam):
    gv = difference_quotient(v, tau, lam, p)
    gw = difference_quotient(w, tau, lam, p)
    av, aw = np.abs(v), np.abs(w)
    den1 = np.abs(v - w) * (av**p + aw**p)
    ok1 = den1 > 0
    c1 = float(np.max(np.abs(gv - gw)[ok1] / den1[ok1])) if ok1.any() else 0.0
    # N(tau) v ~ v - i tau lam |v|^p v, so the quotient tends to -i lam |v|^p v
    lhs2 = np.abs(gv + 1j * lam * av**p * v)
    den2 = tau * av ** (2 * p + 1)
    ok2 = den2 > 0
    c2 = float(np.max(lhs2[ok2] / den2[ok2])) if ok2.any() else 0.0
    return c1, c2


def mvt_cloud(n: int, seed: int = 0, radius: float = 10.0):
    """Deterministic scrambled-Sobol samples ``(tau, v, w, lam)``.

    Half the points pair independent ``v, w`` in the disc of ``radius``; the
    other half put ``w`` near ``v`` (relative offset log-uniform in
    [1e-4, 2]), where the Lipschitz supremum is attained.
    """
    half = n // 2
    a = qmc.Sobol(d=6, scramble=True, seed=seed).random(half)
    b = qmc.Sobol(d=6, scramble=True, seed=seed + 1).random(n - half)
    tau = np.concatenate([a[:, 0], b[:, 0]])
    tau = np.clip(tau, 1e-12, 1 - 1e-12)
    v = radius * np.sqrt(np.concatenate([a[:, 1], b[:, 1]])) * np.exp(
        2j * np.pi * np.concatenate([a[:, 2], b[:, 2]])
    )
    lam = np.where(np.concatenate([a[:, 5], b[:, 5]]) < 0.5, -1.0, 1.0)
    w_far = radius * np.sqrt(a[:, 3]) * np.exp(2j * np.pi * a[:, 4])
    rel = 10.0 ** (-4 + b[:, 3] * np.log10(2e4))
    w_near = v[half:] + rel * np.abs(v[half:]) * np.exp(2j * np.pi * b[:, 4])
    return tau, v, np.concatenate([w_far, w_near]), lam


def verify_mvt(
    p: float,
    tau_samples=None,
    complex_samples=None,
    *,
    n: int = 2**14,
    seed: int = 0,
    stability: float = 0.10,
) -> MVTResult:
    """Smallest constants satisfying both mean-value bounds over a sample cloud.

    The default cloud has ``n`` points; stability compares against the cloud
    of ``2n`` points built the same way.  Explicit samples may be given as
    ``tau_samples`` (shape (m,)) and ``complex_samples`` (shape (m, 2) of v, w);
    they are checked for both signs of lambda and doubled by reflection w -> -w.
    """
    if not p > 0:
        raise ValueError("p must be positive")
    if tau_samples is not None:
        tau = np.asarray(tau_samples, float)
        vw = np.asarray(complex_samples, complex)
        if np.any((tau <= 0) | (tau >= 1)):
            raise ValueError("tau samples must lie in (0, 1)")
        t2 = np.concatenate([tau, tau])
        v2 = np.concatenate([vw[:, 0], vw[:, 0]])
        w2 = np.concatenate([vw[:, 1], vw[:, 1]])
        l2 = np.concatenate([np.ones_like(tau), -np.ones_like(tau)])
        c1, c2 = _mvt_constants(p, t2, v2, w2, l2)
        d1, d2 = _mvt_constants(
            p,
            np.concatenate([t2, t2]),
            np.concatenate([v2, v2]),
            np.concatenate([w2, -w2]),
            np.concatenate([l2, l2]),
        )
    else:
        c1, c2 = _mvt_constants(p, *mvt_cloud(n, seed))
        d1, d2 = _mvt_constants(p, *mvt_cloud(2 * n, seed))
    finite = all(np.isfinite(c) for c in (c1, c2, d1, d2))
    stable = finite and all(
        abs(b - a) <= stability * a for a, b in ((c1, d1), (c2, d2)) if a > 0
    )
    return MVTResult(float(p), c1, c2, d1, d2, bool(finite and stable))


# -- multiplier (Bernstein-type) inequalities ---------------------------------------

def random_wave_packets(grid: SpectralGrid, scale: float, count: int, rng, *, packets: int = 3,
                        kmax: float = 2.0, spread: float = 1.0) -> np.ndarray:
    """``count`` random sums of Gaussian wave packets at length scale ``sqrt(scale)``.

    Returns an array of shape ``(count,) + grid.shape``.  Every parameter is
    drawn in units of ``ell = sqrt(scale)``, so the ensemble is dilation
    covariant in ``scale`` up to lattice effects.
    """
    ell = math.sqrt(scale)
    d = grid.dim
    coords = np.stack(grid.coordinates())  # (d, ...)
    out = np.zeros((count,) + grid.shape, dtype=complex)
    for i in range(count):
        for _ in range(packets):
            centre = rng.uniform(-spread, spread, size=d) * ell
            k = rng.normal(size=d)
            k *= rng.uniform(0, kmax) / max(np.linalg.norm(k), 1e-12)
            amp = rng.normal() + 1j * rng.normal()
            shift = coords - centre.reshape((d,) + (1,) * d)
            r2 = np.sum(shift**2, axis=0) / ell**2
            phase = np.tensordot(k, shift, axes=1) / ell
            out[i] += amp * np.exp(-0.5 * r2 + 1j * phase)
    return out


@dataclass
class BernsteinCheck:
    name: str
    params: dict
    scales: list[float]
    constants: list[float]
    frozen: float
    passed: bool

    @property
    def spread(self) -> float:
        c = np.array(self.constants)
        return float(c.max() / c.min()) if c.min() > 0 else math.inf


def _batched_multiply(values: np.ndarray, symbol_fft: np.ndarray, d: int) -> np.ndarray:
    axes = tuple(range(-d, 0))
    return sfft.ifftn(sfft.fftn(values, axes=axes) * symbol_fft, axes=axes)


def _batched_lr(values: np.ndarray, r: float, cell: float, d: int) -> np.ndarray:
    a = np.abs(values).reshape(values.shape[0], -1)
    if r == INF:
        return a.max(axis=1)
    return (cell * np.sum(a**r, axis=1)) ** (1.0 / r)


def bernstein_suite(
    grid: SpectralGrid,
    scales: Sequence[float],
    *,
    n_fields: int = 200,
    seed: int = 0,
    rs: Sequence[float] = (2, 4, INF),
    qs: Sequence[float] = (2, 4),
    sigmas: Sequence[float] = (1, 2),
    factor: float = 2.0,
    batch: int = 50,
    packet_kwargs: dict | None = None,
) -> list[BernsteinCheck]:
    """Check the four filter multiplier inequalities over a sweep of scales.

    For each inequality the constant is the largest ratio over ``n_fields``
    random wave packets at each scale.  It is frozen at ``scales[0]``; the check
    passes when every other scale's constant lies within ``factor`` of it.
    """
    d = grid.dim
    xi = grid.frequency_magnitude()
    cell = grid.cell_volume
    ratios: dict[tuple, list[float]] = {}

    for si, s in enumerate(scales):
        rng = np.random.default_rng([seed, si])
        w = sfft.ifftshift(make_filter(grid, s).weights)
        lap = {sg: sfft.ifftshift(xi**sg) for sg in sigmas}
        best: dict[tuple, float] = {}
        done = 0
        while done < n_fields:
            m = min(batch, n_fields - done)
            phi = random_wave_packets(grid, s, m, rng, **(packet_kwargs or {}))
            done += m
            pphi = _batched_multiply(phi, w, d)
            rem = phi - pphi
            nphi = {r: _batched_lr(phi, r, cell, d) for r in set(rs) | set(qs)}
            npp = {r: _batched_lr(pphi, r, cell, d) for r in rs}
            nrem = {r: _batched_lr(rem, r, cell, d) for r in rs}
            for sg in sigmas:
                lphi = _batched_multiply(phi, lap[sg], d)
                lpphi = _batched_multiply(phi, lap[sg] * w, d)
                for r in rs:
                    key = ("remainder", sg, r)
                    val = nrem[r] / (s ** (sg / 2) * _batched_lr(lphi, r, cell, d))
                    best[key] = max(best.get(key, 0.0), float(val.max()))
                    key = ("derivative", sg, r)
                    val = _batched_lr(lpphi, r, cell, d) / (s ** (-sg / 2) * nphi[r])
                    best[key] = max(best.get(key, 0.0), float(val.max()))
            for r in rs:
                key = ("bounded", r)
                best[key] = max(best.get(key, 0.0), float((npp[r] / nphi[r]).max()))
                for q in qs:
                    if q > r:
                        continue
                    key = ("bernstein", q, r)
                    expo = (d / 2) * (_inv(r) - _inv(q))
                    val = npp[r] / (s ** float(expo) * nphi[q])
                    best[key] = max(best.get(key, 0.0), float(val.max()))
        for key, v in best.items():
            ratios.setdefault(key, []).append(v)

    checks = []
    for key, consts in ratios.items():
        name = key[0]
        if name in ("remainder", "derivative"):
            params = {"sigma": key[1], "r": key[2]}
        elif name == "bounded":
            params = {"r": key[1]}
        else:
            params = {"q": key[1], "r": key[2]}
        frozen = consts[0]
        ok = frozen > 0 and all(frozen / factor <= c <= frozen * factor for c in consts)
        checks.append(BernsteinCheck(name, params, list(map(float, scales)), consts, frozen, bool(ok)))
    return checks
