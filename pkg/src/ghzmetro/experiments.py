"""Run configurations, figure sweeps, CSV output and plot-script emission.

Everything here is plain plumbing around the library: a validated
:class:`RunConfig`, one function per mode, and deterministic file output
(rows are sorted before writing, floats are written with ``repr``).
"""
from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .errors import ConfigurationError, DomainError, InternalConsistencyError, SensitivityError
from .estimation import (GHZ_PROJECTION, QFI_BOUND, SCHEMES, _objective_batch, fit_scaling,
                         optimize_time, quantum_crb, quantum_fisher, uncertainty_ghz)
from .evolution import NoiseParams, evolve, survival_with_derivative
from .oracle import dense_evolve, dense_qfi, dense_survival
from .overlaps import Angles

__all__ = [
    "CSV_HEADER",
    "MODES",
    "WORKERS_ENV",
    "Curve",
    "RunConfig",
    "fig2_curves",
    "fig3_curves",
    "run_curve",
    "run_figure",
    "oracle_configs",
    "oracle_sweep",
    "write_csv",
    "read_csv",
    "emit_plotdata",
    "run",
]

CSV_HEADER = ("n", "theta", "phi", "Omega", "gamma", "gamma0", "tau_c", "gamma_prime",
              "T", "scheme", "t_opt", "P", "dP_dtheta", "delta_theta")
MODES = ("evolve", "sweep", "optimize", "qfi", "oracle-check", "fig2", "fig3")
WORKERS_ENV = "GHZMETRO_WORKERS"

DEPHASING_GRID = (8, 16, 32, 64, 128)
QFI_GRID = (4, 8, 16, 32, 64)
FIG3_GRID = (8, 16, 32, 64, 128)

# oracle-check tolerances
ORACLE_TOL = {"P": 1e-8, "purity": 1e-8, "F_Q": 1e-6}


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    return "" if not math.isfinite(x) else repr(x)


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one CLI invocation."""

    mode: str
    n: tuple = ()
    theta: float = 1.0
    phi: float = 0.0
    Omega: float = 0.0
    gamma: float | None = None
    gamma0: float | None = None
    tau_c: float | None = None
    gamma_prime: float = 0.0
    T: float = 1.0
    t: float | None = None
    t_grid: tuple | None = None
    scheme: str = GHZ_PROJECTION
    output: str | None = None
    seed: int = 0
    seeds: int = 20
    workers: int | None = None

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigurationError(f"mode={self.mode!r}: expected one of {', '.join(MODES)}")
        ns = tuple(int(v) for v in self.n)
        if any(v != w for v, w in zip(ns, self.n)):
            raise ConfigurationError(f"n={list(self.n)}: qubit counts must be integers")
        if any(v < 1 for v in ns):
            raise ConfigurationError(f"n={list(ns)}: qubit counts must be >= 1")
        if any(b <= a for a, b in zip(ns, ns[1:])):
            raise ConfigurationError(f"n={list(ns)}: n-list must be strictly increasing")
        object.__setattr__(self, "n", ns)
        if self.gamma is not None and (self.gamma0 is not None or self.tau_c is not None):
            raise ConfigurationError("gamma and gamma0/tau_c both given: choose one collective model")
        if (self.gamma0 is None) != (self.tau_c is None):
            raise ConfigurationError("gamma0 and tau_c must be given together")
        if not (0 <= self.theta <= math.pi):
            raise ConfigurationError(f"theta={self.theta}: must lie in [0, pi]")
        if not self.T > 0:
            raise ConfigurationError(f"T={self.T}: total time must be > 0")
        if self.scheme not in SCHEMES:
            raise ConfigurationError(f"scheme={self.scheme!r}: expected one of {', '.join(SCHEMES)}")
        if self.t is not None and not (0 < self.t <= self.T):
            raise ConfigurationError(f"t={self.t}: need 0 < t <= T={self.T}")
        if self.t_grid is not None:
            lo, hi, count = self.t_grid
            if not (0 < lo < hi) or int(count) < 2:
                raise ConfigurationError(f"t_grid={self.t_grid}: need 0 < lo < hi and count >= 2")
        if self.seeds < 1:
            raise ConfigurationError(f"seeds={self.seeds}: need at least one")
        if self.workers is not None and self.workers < 1:
            raise ConfigurationError(f"workers={self.workers}: need at least one")
        if self.mode in ("evolve", "sweep", "optimize", "qfi") and not self.n:
            raise ConfigurationError(f"n: mode {self.mode!r} needs at least one qubit count")
        if self.mode in ("evolve", "qfi") and self.t is None:
            raise ConfigurationError(f"t: mode {self.mode!r} needs an evolution time")
        if self.mode == "sweep" and self.t_grid is None:
            raise ConfigurationError("t_grid: mode 'sweep' needs lo,hi,count")
        try:
            self.params()
        except DomainError as exc:
            raise ConfigurationError(str(exc)) from exc

    def params(self) -> NoiseParams:
        return NoiseParams(self.Omega, self.gamma or 0.0, self.gamma_prime, self.gamma0, self.tau_c)

    def angles(self) -> Angles:
        return Angles(self.theta, self.phi)

    def worker_count(self) -> int:
        if self.workers is not None:
            return self.workers
        raw = os.environ.get(WORKERS_ENV, "1")
        try:
            value = int(raw)
        except ValueError:
            raise ConfigurationError(f"{WORKERS_ENV}={raw!r}: expected a positive integer") from None
        if value < 1:
            raise ConfigurationError(f"{WORKERS_ENV}={raw!r}: expected a positive integer")
        return value


@dataclass(frozen=True)
class Curve:
    """One line of a scaling figure."""

    name: str
    params: NoiseParams
    scheme: str
    grid: tuple


def fig2_curves() -> list[Curve]:
    return [
        Curve("collective_O0_g1_gp0", NoiseParams(0, 1, 0), GHZ_PROJECTION, DEPHASING_GRID),
        Curve("collective_O0_g1_gp1", NoiseParams(0, 1, 1), GHZ_PROJECTION, DEPHASING_GRID),
        Curve("field_O1_g0_gp0", NoiseParams(1, 0, 0), QFI_BOUND, QFI_GRID),
        Curve("field_O1_g0_gp1", NoiseParams(1, 0, 1), QFI_BOUND, QFI_GRID),
    ]


def fig3_curves() -> list[Curve]:
    return [
        Curve("field_O1_gp1", NoiseParams(1, 0, 1), QFI_BOUND, FIG3_GRID),
        Curve("lorentz_tc0.01_gp1", NoiseParams(0, 0, 1, gamma0=1, tau_c=0.01), GHZ_PROJECTION, FIG3_GRID),
        Curve("lorentz_tc0.001_gp1", NoiseParams(0, 0, 1, gamma0=1, tau_c=0.001), GHZ_PROJECTION, FIG3_GRID),
    ]


def _row(n, angles, params, T, scheme, t, P, dP, delta) -> dict:
    values = (n, angles.theta, angles.phi, params.Omega,
              None if params.lorentzian else params.gamma, params.gamma0, params.tau_c,
              params.gamma_prime, T, scheme, t, P, dP, delta)
    return dict(zip(CSV_HEADER, values))


def _optimize_job(job):
    name, n, angles, params, T, scheme = job
    t_star, res = optimize_time(n, angles, params, T, scheme)
    return name, _row(n, angles, params, T, scheme, t_star, res.P, res.dPdtheta, res.delta_theta)


def _map(func, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [func(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, jobs))


def run_curve(curve: Curve, angles, T: float = 1.0, workers: int = 1) -> list[dict]:
    """Optimized uncertainty at each ``n`` of ``curve.grid``, sorted by ``n``."""
    angles = angles if isinstance(angles, Angles) else Angles(*np.atleast_1d(angles))
    jobs = [(curve.name, n, angles, curve.params, T, curve.scheme) for n in curve.grid]
    rows = [row for _, row in _map(_optimize_job, jobs, workers)]
    return sorted(rows, key=lambda r: r["n"])


def run_figure(curves, angles, T: float = 1.0, workers: int = 1) -> dict:
    """All curves of a figure, as ``{name: rows}``.

    Jobs of every curve share one pool; rows come back sorted by
    ``(curve, n)`` so the worker count never changes the output.
    """
    jobs = [(c.name, n, angles, c.params, T, c.scheme) for c in curves for n in c.grid]
    out = {c.name: [] for c in curves}
    for name, row in _map(_optimize_job, jobs, workers):
        out[name].append(row)
    return {name: sorted(rows, key=lambda r: r["n"]) for name, rows in sorted(out.items())}


def local_slopes(rows) -> np.ndarray:
    """Slopes of ``ln delta_theta`` against ``ln n`` between neighbouring points."""
    n = np.array([r["n"] for r in rows], dtype=float)
    d = np.array([r["delta_theta"] for r in rows], dtype=float)
    return np.diff(np.log(d)) / np.diff(np.log(n))


def write_csv(rows, path=None) -> str:
    """Write rows under :data:`CSV_HEADER`; returns the text as well."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for row in rows:
        writer.writerow([_fmt(row[k]) for k in CSV_HEADER])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def read_csv(path) -> list[dict]:
    """Parse a CSV written by :func:`write_csv`; raises ConfigurationError if malformed."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"csv={path}: {exc.strerror}") from None
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ConfigurationError(f"csv={path}: file is empty")
    reader = csv.reader(lines)
    header = tuple(next(reader))
    if header != CSV_HEADER:
        raise ConfigurationError(f"csv={path}: header does not match {','.join(CSV_HEADER)}")
    rows = []
    for lineno, fields in enumerate(reader, start=2):
        if len(fields) != len(CSV_HEADER):
            raise ConfigurationError(f"csv={path}: line {lineno} has {len(fields)} fields")
        row = {}
        for key, raw in zip(CSV_HEADER, fields):
            if key == "scheme":
                row[key] = raw
            elif key == "n":
                try:
                    row[key] = int(raw)
                except ValueError:
                    raise ConfigurationError(f"csv={path}: line {lineno}: n={raw!r} is not an integer") from None
            else:
                try:
                    row[key] = float(raw) if raw else None
                except ValueError:
                    raise ConfigurationError(f"csv={path}: line {lineno}: {key}={raw!r} is not a number") from None
        rows.append(row)
    if not rows:
        raise ConfigurationError(f"csv={path}: no data rows")
    return rows


def _curve_key(row) -> tuple:
    return tuple(row[k] for k in ("scheme", "theta", "phi", "Omega", "gamma", "gamma0", "tau_c", "gamma_prime", "T"))


def _curve_label(row) -> str:
    if row["gamma0"] is not None:
        coll = f"gamma0={row['gamma0']:g} tau_c={row['tau_c']:g}"
    else:
        coll = f"gamma={row['gamma'] or 0:g}"
    return f"{row['scheme']} Omega={row['Omega']:g} {coll} gamma'={row['gamma_prime']:g}"


def emit_plotdata(csv_paths, data_name: str = "plot.dat") -> tuple[str, str]:
    """Gnuplot data blocks and a log-log script with HL and SQL guides.

    Rows from all files are grouped into curves by their parameters; each
    curve becomes one data block (``index`` in gnuplot).  The guide lines
    ``A/n`` and ``B/sqrt(n)`` pass through the first point of the first
    curve.  Output depends only on the CSV contents.
    """
    rows = [row for path in csv_paths for row in read_csv(path)]
    bad = [r for r in rows if r["delta_theta"] is None or r["delta_theta"] <= 0]
    if bad:
        raise ConfigurationError(f"delta_theta: missing or nonpositive for n={bad[0]['n']}")
    curves = {}
    for row in rows:
        curves.setdefault(_curve_key(row), []).append(row)
    keys = sorted(curves, key=lambda k: tuple("" if v is None else str(v) for v in k))
    blocks, labels = [], []
    for key in keys:
        pts = sorted(curves[key], key=lambda r: r["n"])
        labels.append(_curve_label(pts[0]))
        lines = [f"# {labels[-1]}"] + [f"{r['n']} {r['delta_theta']!r}" for r in pts]
        blocks.append("\n".join(lines))
    data = "\n\n\n".join(blocks) + "\n"

    first = sorted(curves[keys[0]], key=lambda r: r["n"])[0]
    hl = first["delta_theta"] * first["n"]
    sql = first["delta_theta"] * math.sqrt(first["n"])
    plots = [f'"{data_name}" index {i} using 1:2 with linespoints title "{lab}"'
             for i, lab in enumerate(labels)]
    plots.append('hl(x) with lines lt -1 title "HL (1/n)"')
    plots.append('sql(x) with lines dt 2 lt -1 title "SQL (1/sqrt(n))"')
    script = "\n".join([
        "set logscale xy",
        'set xlabel "n"',
        'set ylabel "minimized uncertainty"',
        "set key bottom left",
        f"A = {hl!r}",
        f"B = {sql!r}",
        "hl(x) = A / x",
        "sql(x) = B / sqrt(x)",
        "plot " + ", \\\n     ".join(plots),
        "",
    ])
    return data, script


# ---------------------------------------------------------------------------
# oracle cross-check


def _solve_time(params: NoiseParams, n: int, exponent: float) -> float:
    """Time at which ``2 (Gamma(t) n^2 + gamma' n t)`` reaches ``exponent``."""
    def excess(t):
        return 2 * (float(params.accumulated_dephasing(t)) * n * n + params.gamma_prime * n * t) - exponent

    if params.collective_scale == 0 and params.gamma_prime == 0:
        return exponent / max(abs(params.Omega) * n, 1e-3)
    hi = 1.0
    while excess(hi) < 0:
        hi *= 2
    return brentq(excess, 0.0, hi, xtol=1e-14, rtol=1e-12)


def oracle_configs(n: int, count: int, seed: int) -> list[tuple]:
    """Random ``(theta, params, t)`` for the dense comparison.

    theta in [0.1, pi - 0.1], rates in [0, 2], and ``t`` set so that the
    GHZ-coherence decay exponent lies in [0.01, 5].  Every third
    configuration uses Lorentzian collective dephasing.
    """
    rng = np.random.default_rng([seed, n])
    out = []
    for i in range(count):
        theta = rng.uniform(0.1, math.pi - 0.1)
        omega, rate, gp = rng.uniform(0, 2, size=3)
        if i % 3 == 2:
            params = NoiseParams(omega, 0.0, gp, gamma0=rate, tau_c=rng.uniform(0.05, 2))
        else:
            params = NoiseParams(omega, rate, gp)
        exponent = math.exp(rng.uniform(math.log(0.01), math.log(5)))
        out.append((theta, params, _solve_time(params, n, exponent)))
    return out


def oracle_sweep(ns=(1, 2, 3, 4), count: int = 20, seed: int = 0) -> dict:
    """Compare block and dense results; returns per-quantity maximum deviations.

    ``P`` and ``purity`` deviations are absolute, ``F_Q`` relative.
    """
    worst = {"P": 0.0, "purity": 0.0, "F_Q": 0.0}
    for n in ns:
        for theta, params, t in oracle_configs(n, count, seed):
            angles = Angles(theta, 0.0)
            block = evolve(n, angles, params, t)
            dense = dense_evolve(n, angles, params, t)
            P_block = float(survival_with_derivative(n, angles, params, [t])[0][0])
            worst["P"] = max(worst["P"], abs(P_block - dense_survival(dense)))
            purity = float(np.vdot(dense.rho, dense.rho).real)
            worst["purity"] = max(worst["purity"], abs(block.purity() - purity))
            F_block = quantum_fisher(n, theta, params, t)
            F_dense = dense_qfi(n, theta, params, t)
            worst["F_Q"] = max(worst["F_Q"], abs(F_block - F_dense) / F_dense)
    return worst


# ---------------------------------------------------------------------------
# modes


def _rows_evolve(cfg: RunConfig) -> list[dict]:
    params, angles = cfg.params(), cfg.angles()
    rows = []
    for n in cfg.n:
        P, dP = survival_with_derivative(n, angles, params, [cfg.t])
        try:
            delta = uncertainty_ghz(n, angles, params, cfg.t, cfg.T).delta_theta
        except SensitivityError:
            delta = None
        rows.append(_row(n, angles, params, cfg.T, GHZ_PROJECTION, cfg.t, P[0], dP[0], delta))
    return rows


def _rows_sweep(cfg: RunConfig) -> list[dict]:
    params, angles = cfg.params(), cfg.angles()
    lo, hi, count = cfg.t_grid
    times = np.geomspace(lo, hi, int(count))
    if times[-1] > cfg.T:
        raise ConfigurationError(f"t_grid: upper end {hi} exceeds T={cfg.T}")
    rows = []
    for n in cfg.n:
        P, dP = survival_with_derivative(n, angles, params, times)
        values = _objective_batch(n, angles, params, cfg.T, cfg.scheme, times)
        rows += [_row(n, angles, params, cfg.T, cfg.scheme, t, p, d, v)
                 for t, p, d, v in zip(times, P, dP, values)]
    return rows


def _rows_optimize(cfg: RunConfig) -> list[dict]:
    curve = Curve("cli", cfg.params(), cfg.scheme, cfg.n)
    return run_curve(curve, cfg.angles(), cfg.T, cfg.worker_count())


def _rows_qfi(cfg: RunConfig) -> list[dict]:
    params, angles = cfg.params(), cfg.angles()
    rows = []
    for n in cfg.n:
        F = quantum_fisher(n, angles.theta, params, cfg.t, phi=angles.phi)
        P, dP = survival_with_derivative(n, angles, params, [cfg.t])
        rows.append(_row(n, angles, params, cfg.T, QFI_BOUND, cfg.t, P[0], dP[0],
                         quantum_crb(F, cfg.T / cfg.t)))
    return rows


def _write_figure(name: str, curves, cfg: RunConfig, out_dir: Path) -> str:
    if cfg.n:
        curves = [replace(c, grid=cfg.n) for c in curves]
    results = run_figure(curves, cfg.angles(), cfg.T, cfg.worker_count())
    out_dir.mkdir(parents=True, exist_ok=True)
    lines = [f"# {name}: theta={cfg.theta!r} phi={cfg.phi!r} T={cfg.T!r}",
             "# curve slope intercept rms_residual local_slopes"]
    paths = []
    for cname, rows in results.items():
        path = out_dir / f"{cname}.csv"
        write_csv(rows, path)
        paths.append(path)
        if len(rows) >= 3:
            slope, icpt, resid = fit_scaling([(r["n"], r["delta_theta"]) for r in rows])
            local = " ".join(f"{s:.6f}" for s in local_slopes(rows))
            lines.append(f"{cname} {slope:.6f} {icpt:.6f} {resid:.3e} {local}")
        else:
            lines.append(f"{cname} - - - (fewer than three points)")
    summary = "\n".join(lines) + "\n"
    (out_dir / "slopes.txt").write_text(summary)
    data, script = emit_plotdata(paths)
    (out_dir / "plot.dat").write_text(data)
    (out_dir / "plot.gp").write_text(script)
    return summary


def run(cfg: RunConfig) -> str:
    """Execute ``cfg``; writes output files and returns a text summary."""
    if cfg.mode == "oracle-check":
        ns = cfg.n or (1, 2, 3, 4)
        worst = oracle_sweep(ns, cfg.seeds, cfg.seed)
        lines = [f"oracle-check n={list(ns)} seeds={cfg.seeds} seed={cfg.seed}"]
        lines += [f"max |{k} deviation| = {v:.3e} (tol {ORACLE_TOL[k]:g})" for k, v in worst.items()]
        report = "\n".join(lines) + "\n"
        if cfg.output:
            Path(cfg.output).write_text(report)
        failed = [k for k, v in worst.items() if not v <= ORACLE_TOL[k]]
        if failed:
            raise InternalConsistencyError(f"oracle deviation above tolerance for {', '.join(failed)}\n{report}")
        return report
    if cfg.mode in ("fig2", "fig3"):
        curves = fig2_curves() if cfg.mode == "fig2" else fig3_curves()
        return _write_figure(cfg.mode, curves, cfg, Path(cfg.output or cfg.mode))
    builder = {"evolve": _rows_evolve, "sweep": _rows_sweep,
               "optimize": _rows_optimize, "qfi": _rows_qfi}[cfg.mode]
    text = write_csv(builder(cfg), cfg.output)
    return "" if cfg.output else text

