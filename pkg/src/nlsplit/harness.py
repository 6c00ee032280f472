"""Experiment configuration and the simulate / converge / verify workflows.

Configs are flat ``key = value`` text with dotted namespaces; see the README
for the full list of keys.  The ``cmd_*`` functions return a process exit code:

    0 success, 2 invalid config or unwritable output, 3 non-finite values,
    4 too many sweep points with an untrustworthy reference.
"""

from __future__ import annotations

import ast
import json
import logging
import math
import operator
import tempfile
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence


from . import analysis
from .analysis import ConvergenceReport, mass_drift, measure_error
from .grid import ComplexField, SpectralGrid, make_grid, norm
from .initial_data import DataSpec, exact_plane_wave, gaussian, plane_wave
from .integrators import (
    SCHEMES,
    FilterRule,
    NumericGuardError,
    OracleWarning,
    SplitConfig,
    duhamel_residual,
    evolve,
    export_trajectory,
    reference_solution,
    snapshot_grid,
)

log = logging.getLogger(__name__)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_ORACLE = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


# -- config text ------------------------------------------------------------------

_BINOPS = {
    ast.Add: operator.add,
    ast.Sub: operator.sub,
    ast.Mult: operator.mul,
    ast.Div: operator.truediv,
    ast.Pow: operator.pow,
}


def _eval_number(text: str) -> float:
    """Numbers with optional arithmetic on ``pi``, e.g. ``16``, ``pi/8``, ``2**-10``."""
    try:
        return float(text)
    except ValueError:
        pass

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)):
            return float(node.value)
        if isinstance(node, ast.Name) and node.id == "pi":
            return math.pi
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            a, b = ev(node.left), ev(node.right)
            if isinstance(node.op, ast.Pow) and abs(b) > 1024:
                raise ConfigError(f"exponent too large in {text!r}")
            try:
                return _BINOPS[type(node.op)](a, b)
            except (ArithmeticError, ValueError) as exc:
                raise ConfigError(f"cannot evaluate {text!r}: {exc}") from exc
        if isinstance(node, ast.UnaryOp) and isinstance(node.op, (ast.USub, ast.UAdd)):
            v = ev(node.operand)
            return -v if isinstance(node.op, ast.USub) else v
        raise ConfigError(f"cannot parse number {text!r}")

    try:
        return ev(ast.parse(text.strip(), mode="eval"))
    except SyntaxError as exc:
        raise ConfigError(f"cannot parse number {text!r}") from exc


def parse_config_text(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        out[key] = value
    return out


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def _list(text: str) -> list[str]:
    return [s.strip() for s in text.split(",") if s.strip()]


@dataclass
class ExperimentConfig:
    dim: int = 1
    n: int = 512
    half_width: float = 16.0
    data: DataSpec = field(default_factory=lambda: DataSpec("gaussian"))
    scheme: str = "strang"
    schemes: tuple[str, ...] = ("lie", "strang", "filtered_lie")
    lam: float = 1.0
    p: float = 2.0
    tau: float = 1e-2
    T: float = 1.0
    filter_rule: FilterRule = FilterRule()
    tilde_tau: float | None = None
    snapshots: str = "all"
    nonlinear: bool = True
    sweep_start: float = 2.0**-4
    sweep_factor: float = 0.5
    sweep_count: int = 7
    taus: tuple[float, ...] | None = None
    ref_levels: int = 4
    ref_ceiling: float | None = None
    synthetic_order: float | None = None
    workers: int = 2
    output_dir: str | None = None
    seed: int | None = None
    source: dict = field(default_factory=dict)

    @classmethod
    def from_mapping(cls, kv: dict[str, str]) -> "ExperimentConfig":
        kv = dict(kv)
        known = set()

        def take(key, conv=str, default=None):
            known.add(key)
            if key not in kv:
                return default
            try:
                return conv(kv[key])
            except ConfigError:
                raise
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key}: {exc}") from exc

        num = _eval_number
        cfg = cls(source=dict(kv))
        cfg.dim = take("grid.dim", int, cfg.dim)
        cfg.n = take("grid.n", int, cfg.n)
        cfg.half_width = take("grid.half_width", num, cfg.half_width)
        seed = take("seed", int, None)
        try:
            data = DataSpec(
                kind=take("data.kind", str, "gaussian"),
                width=take("data.width", num, 1.0),
                amplitude=take("data.amplitude", num, 1.0),
                mode=tuple(take("data.mode", lambda t: [num(x) for x in _list(t)], [0.0])),
                s=take("data.s", num, 0.0),
                seed=seed if seed is not None else take("data.seed", int, 0),
                normalization=take("data.normalization", num, 1.0),
                alpha=take("data.alpha", num, 1.0),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        take("data.seed")
        cfg.data = data
        cfg.seed = seed
        cfg.scheme = take("split.scheme", str, cfg.scheme)
        cfg.lam = take("split.lambda", num, cfg.lam)
        cfg.p = take("split.p", num, cfg.p)
        cfg.tau = take("split.tau", num, cfg.tau)
        cfg.T = take("split.T", num, cfg.T)
        cfg.filter_rule = take("split.filter", FilterRule.parse, cfg.filter_rule)
        cfg.tilde_tau = take("split.tilde_tau", num, None)
        cfg.snapshots = take("split.snapshots", str, cfg.snapshots)
        cfg.nonlinear = take("split.nonlinear", _bool, True)
        cfg.schemes = tuple(take("converge.schemes", _list, list(cfg.schemes)))
        cfg.synthetic_order = take("converge.synthetic", num, None)
        cfg.workers = take("converge.workers", int, cfg.workers)
        cfg.sweep_start = take("sweep.start", num, cfg.sweep_start)
        cfg.sweep_factor = take("sweep.factor", num, cfg.sweep_factor)
        cfg.sweep_count = take("sweep.count", int, cfg.sweep_count)
        taus = take("taus", lambda t: [num(x) for x in _list(t)], None)
        taus = take("sweep.taus", lambda t: [num(x) for x in _list(t)], taus)
        cfg.taus = tuple(taus) if taus else None
        cfg.ref_levels = take("reference.levels", int, cfg.ref_levels)
        cfg.ref_ceiling = take("reference.ceiling", num, None)
        cfg.output_dir = take("output.dir", str, None)
        unknown = sorted(set(kv) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_mapping(parse_config_text(text))

    def validate(self) -> None:
        try:
            self.grid()
            self.split_config(self.tau)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        for s in self.schemes:
            if s not in SCHEMES:
                raise ConfigError(f"unknown scheme {s!r}")
        taus = self.sweep()
        if any(b >= a for a, b in zip(taus, taus[1:])):
            raise ConfigError("tau sweep must be strictly decreasing")
        if self.ref_levels < 2:
            raise ConfigError("reference.levels must be >= 2")
        if self.workers < 1:
            raise ConfigError("converge.workers must be >= 1")

    def grid(self) -> SpectralGrid:
        return make_grid(self.dim, self.n, self.half_width)

    def sweep(self) -> list[float]:
        if self.taus:
            return [float(t) for t in self.taus]
        if not 0 < self.sweep_factor < 1:
            raise ConfigError("sweep.factor must lie in (0, 1)")
        return [self.sweep_start * self.sweep_factor**k for k in range(self.sweep_count)]

    def snapshot_times(self, tau: float, T: float) -> tuple[float, ...] | None:
        spec = self.snapshots.strip()
        if spec == "all":
            return None
        if spec == "final":
            return (0.0, T) if T > 0 else (0.0,)
        if spec.startswith("every:"):
            return snapshot_grid(T, _eval_number(spec[6:]))
        return tuple(_eval_number(x) for x in _list(spec))

    def split_config(self, tau: float, scheme: str | None = None, snapshots=...) -> SplitConfig:
        base = SplitConfig(scheme or self.scheme, self.lam, self.p, tau, self.T,
                           self.filter_rule, None, self.tilde_tau, self.nonlinear)
        times = self.snapshot_times(tau, base.T) if snapshots is ... else snapshots
        return replace(base, snapshot_times=times)

    def is_rough(self) -> bool:
        return self.data.kind in ("hs_rough", "phi_alpha")

    def ceiling(self) -> float:
        if self.ref_ceiling is not None:
            return self.ref_ceiling
        return 1e-4 if self.is_rough() else 1e-8


# -- convergence sweeps ----------------------------------------------------------

def run_convergence(
    phi: ComplexField,
    taus: Sequence[float],
    *,
    schemes: Sequence[str] = ("lie",),
    lam: float = 1.0,
    p: float = 2.0,
    T: float = 1.0,
    filter_rule: FilterRule | str = "tau",
    ref_levels: int = 3,
    ceiling: float = 1e-8,
    workers: int = 1,
    data_spec: dict | None = None,
    reference=None,
) -> dict[str, ConvergenceReport]:
    """Errors of each scheme against one shared fine-Strang reference.

    Errors are the max L2 gap over multiples of the coarsest step, the time
    lattice every run in the sweep shares.  A point is flagged when the
    reference failed its ceiling or the error is not at least 10x the
    reference self-gap.
    """
    taus = [float(t) for t in taus]
    if any(b >= a for a, b in zip(taus, taus[1:])):
        raise ValueError("taus must be strictly decreasing")
    times = snapshot_grid(T, taus[0])
    rule = FilterRule.parse(filter_rule)
    if reference is None:
        base = SplitConfig("strang", lam, p, taus[-1], T, snapshot_times=times)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", OracleWarning)
            reference = reference_solution(phi, base, ref_levels, ceiling=ceiling)
    gap = float(reference.oracle_gap or 0.0)

    def cell(args):
        scheme, tau = args
        cfg = SplitConfig(scheme, lam, p, tau, T, rule, snapshot_times=times)
        traj = evolve(phi, cfg, boundary_tol=None)
        return measure_error(traj, reference), mass_drift(traj)

    cells = [(s, t) for s in schemes for t in taus]
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        results = list(pool.map(cell, cells))

    reports = {}
    for s in schemes:
        rows = [r for (sc, _), r in zip(cells, results) if sc == s]
        errs = [e for e, _ in rows]
        flagged = [bool(reference.oracle_flagged or e < 10 * gap) for e in errs]
        reports[s] = ConvergenceReport.from_sweep(
            s,
            data_spec or {},
            taus,
            errs,
            [gap] * len(taus),
            [m for _, m in rows],
            flagged,
            meta={
                "lambda": lam,
                "p": p,
                "T": T,
                "filter_rule": str(rule),
                "reference_tau": reference.config.tau,
                "reference_flagged": reference.oracle_flagged,
                "grid": {
                    "dim": phi.grid.dim,
                    "n_per_axis": phi.grid.n_per_axis,
                    "half_width": phi.grid.half_width,
                },
            },
        )
    return reports


def synthetic_report(taus: Sequence[float], order: float, constant: float = 1.0) -> ConvergenceReport:
    """Harness self-test: errors injected exactly proportional to tau^order."""
    errs = [constant * t**order for t in taus]
    return ConvergenceReport.from_sweep("synthetic", {"kind": "synthetic", "order": order},
                                        taus, errs, [0.0] * len(taus), [0.0] * len(taus))


# -- commands ----------------------------------------------------------------------

def _prepare_outdir(path) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
        with tempfile.NamedTemporaryFile(dir=out):
            pass
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from exc
    return out


def _load(config) -> ExperimentConfig:
    if isinstance(config, ExperimentConfig):
        return config
    if isinstance(config, dict):
        return ExperimentConfig.from_mapping(config)
    return ExperimentConfig.from_file(config)


def cmd_simulate(config, out=None, seed: int | None = None) -> int:
    try:
        cfg = _load(config)
        if seed is not None:
            cfg.data = replace(cfg.data, seed=seed)
        outdir = _prepare_outdir(out or cfg.output_dir or "nls-out")
        grid = cfg.grid()
        phi = cfg.data.realize(grid)
        split = cfg.split_config(cfg.tau)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except ValueError as exc:
        log.error("invalid config: %s", exc)
        return EXIT_CONFIG
    try:
        traj = evolve(phi, split)
    except NumericGuardError as exc:
        log.error("%s", exc)
        return EXIT_NUMERIC
    extra = {"data": cfg.data.to_dict(), "mass_drift": mass_drift(traj)}
    if cfg.data.kind == "plane_wave" and cfg.nonlinear:
        exact = exact_plane_wave(grid, cfg.data.mode, cfg.data.amplitude, cfg.lam, cfg.p, traj.times[-1])
        extra["plane_wave_error"] = norm(traj.final - exact)
    if split.T_requested is not None:
        extra["T_requested"] = split.T_requested
    export_trajectory(traj, outdir, extra)
    return EXIT_OK


def cmd_converge(config, out=None, schemes: Sequence[str] | None = None, seed: int | None = None) -> int:
    try:
        cfg = _load(config)
        if seed is not None:
            cfg.data = replace(cfg.data, seed=seed)
        if schemes:
            bad = [s for s in schemes if s not in SCHEMES]
            if bad:
                raise ConfigError(f"unknown schemes {bad}")
            cfg.schemes = tuple(schemes)
        taus = cfg.sweep()
        if len(taus) < 4:
            raise ConfigError("a convergence sweep needs at least 4 step sizes")
        for t in taus:
            k = cfg.T / t
            if abs(k - round(k)) > 1e-9 * max(1.0, k):
                raise ConfigError(f"tau={t} does not divide T={cfg.T}")
        outdir = _prepare_outdir(out or cfg.output_dir or "nls-out")
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG

    if cfg.synthetic_order is not None:
        reports = {"synthetic": synthetic_report(taus, cfg.synthetic_order)}
    else:
        phi = cfg.data.realize(cfg.grid())
        try:
            reports = run_convergence(
                phi,
                taus,
                schemes=cfg.schemes,
                lam=cfg.lam,
                p=cfg.p,
                T=cfg.T,
                filter_rule=cfg.filter_rule,
                ref_levels=cfg.ref_levels,
                ceiling=cfg.ceiling(),
                workers=cfg.workers,
                data_spec=cfg.data.to_dict(),
            )
        except NumericGuardError as exc:
            log.error("%s", exc)
            return EXIT_NUMERIC

    code = EXIT_OK
    for name, rep in reports.items():
        rep.meta["config"] = cfg.source
        (outdir / f"converge_{name}.csv").write_text(rep.to_csv())
        (outdir / f"converge_{name}.json").write_text(rep.to_json())
        if sum(rep.oracle_flagged) > len(rep.taus) / 2:
            log.error("%s: %d of %d sweep points have an untrustworthy reference",
                      name, sum(rep.oracle_flagged), len(rep.taus))
            code = EXIT_ORACLE
    return code


# -- verify suites -----------------------------------------------------------------

VERIFY_SUITES = ("mass", "duhamel", "bernstein", "mvt", "plane_wave", "pairs")


def _check(name, passed, value, threshold=None, **extra):
    out = {"check": name, "passed": bool(passed), "value": value}
    if threshold is not None:
        out["threshold"] = threshold
    out.update(extra)
    return out


def verify_mass() -> list[dict]:
    grid = make_grid(1, 256, 16.0)
    phi = gaussian(grid)
    out = []
    for scheme in ("lie", "strang"):
        cfg = SplitConfig(scheme, 1, 2, 1e-4, 1.0, snapshot_times=snapshot_grid(1.0, 0.05))
        drift = mass_drift(evolve(phi, cfg, boundary_tol=None))
        out.append(_check(f"mass/{scheme}/1e4-steps", drift <= 1e-12, drift, 1e-12))
    cfg = SplitConfig("filtered_lie", 1, 2, 1e-3, 1.0)
    drift = mass_drift(evolve(phi, cfg, boundary_tol=None))
    out.append(_check("mass/filtered_lie/non-increasing", drift <= 1e-13, drift, 1e-13))
    return out


def verify_duhamel() -> list[dict]:
    grid = make_grid(1, 256, 16.0)
    phi = gaussian(grid, 1.0, 1.5)
    cfg = SplitConfig("filtered_lie", 1, 2, 1 / 64, 1.0)
    res = duhamel_residual(evolve(phi, cfg, boundary_tol=None))
    return [_check("duhamel/64-steps", res <= 1e-10, res, 1e-10)]


def verify_plane_wave() -> list[dict]:
    grid = make_grid(1, 64, math.pi)
    phi = plane_wave(grid, 2, 1.0)
    exact = exact_plane_wave(grid, 2, 1.0, 1, 2, 1.0)
    out = []
    for scheme in SCHEMES:
        cfg = SplitConfig(scheme, 1, 2, 1e-2, 1.0, snapshot_times=(0.0, 1.0))
        err = norm(evolve(phi, cfg).final - exact)
        out.append(_check(f"plane_wave/{scheme}", err <= 1e-10, err, 1e-10))
    return out


def pair_samples(count: int = 100) -> list[tuple[int, float]]:
    """(d, p) samples with d in {1,2,3} and p spread over (0, 4/d)."""
    out = []
    for d, k in zip((1, 2, 3), (34, 33, 33)):
        for j in range(k):
            out.append((d, (4.0 / d) * (j + 0.5) / k))
    return out[:count]


def verify_pairs() -> list[dict]:
    from fractions import Fraction

    bad = []
    for d, p in pair_samples():
        for fn in (analysis.q0r0, analysis.q1r1):
            pair = fn(d, p)
            if not analysis.admissible_check(pair.q, pair.r, d):
                bad.append((fn.__name__, d, p))
    out = [_check("pairs/admissible", not bad, len(bad), 0)]
    radial_ok = True
    for d in (2, 3):
        end = Fraction(4 * d - 2, 2 * d - 3)
        radial_ok &= not analysis.radial_range_check(2, end, d)
        # strict interior points and the admissible line are accepted
        radial_ok &= analysis.radial_range_check(4, Fraction(4 * d - 2, 2 * d - 3) + 1, d)
        radial_ok &= analysis.radial_range_check(analysis.INF, 2, d)
    out.append(_check("pairs/radial_range", radial_ok, radial_ok))
    return out


def verify_mvt(ps: Sequence[float] = (0.5, 1.0, 2.0, 3.0)) -> list[dict]:
    out = []
    for p in ps:
        r = analysis.verify_mvt(p)
        out.append(_check(f"mvt/p={p:g}", r.passed, [r.c_lipschitz, r.c_consistency],
                          doubled=[r.c_lipschitz_doubled, r.c_consistency_doubled]))
    return out


BERNSTEIN_CONFIGS = (
    # (dim, N, L, scales, packet options)
    (1, 4096, 8.0, (1e-3, 3e-3, 1e-2, 3e-2, 1e-1), {"kmax": 3.0, "spread": 2.0}),
    (2, 256, 5.5, (1e-2, 3e-2, 1e-1, 3e-1, 1.0), {"kmax": 2.0, "spread": 1.0}),
)


def verify_bernstein(n_fields: int = 200, configs=BERNSTEIN_CONFIGS) -> list[dict]:
    out = []
    for dim, n, L, scales, opts in configs:
        grid = make_grid(dim, n, L)
        for chk in analysis.bernstein_suite(grid, scales, n_fields=n_fields, packet_kwargs=opts):
            label = ",".join(f"{k}={v}" for k, v in chk.params.items())
            out.append(_check(f"bernstein/d={dim}/{chk.name}({label})", chk.passed,
                              chk.constants, 2.0, frozen=chk.frozen, spread=chk.spread))
    return out


_SUITE_FUNCS = {
    "mass": verify_mass,
    "duhamel": verify_duhamel,
    "bernstein": verify_bernstein,
    "mvt": verify_mvt,
    "plane_wave": verify_plane_wave,
    "pairs": verify_pairs,
}


def run_verify(suites: Sequence[str]) -> list[dict]:
    unknown = [s for s in suites if s not in _SUITE_FUNCS]
    if unknown:
        raise ConfigError(f"unknown verify suites: {', '.join(unknown)}")
    results = []
    for s in suites:
        for r in _SUITE_FUNCS[s]():
            r["suite"] = s
            results.append(r)
    return results


def cmd_verify(suites: Sequence[str], stream=None) -> int:
    import sys

    stream = stream or sys.stdout
    try:
        results = run_verify(suites)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    json.dump({"results": results, "passed": all(r["passed"] for r in results)},
              stream, indent=2, default=float)
    stream.write("\n")
    return EXIT_OK if all(r["passed"] for r in results) else 1
