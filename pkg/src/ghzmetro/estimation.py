"""Fisher information, Cramer-Rao bounds and evolution-time optimization."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .collective import irrep_table, spin_operators
from .errors import (ConfigurationError, DegenerateMeasurementError, DomainError,
                     InternalConsistencyError, NoInformationError, SensitivityError,
                     UnsupportedConfigurationError)
from .evolution import (NoiseParams, _block_slice, _check_time, _delta_m, collective_weight,
                        sector_weight_chunks, survival_with_derivative)
from .overlaps import Angles, _as_angles, ghz_overlaps

__all__ = [
    "GHZ_PROJECTION",
    "QFI_BOUND",
    "ProtocolBudget",
    "UncertaintyResult",
    "survival_derivative",
    "classical_fisher_ghz",
    "uncertainty_ghz",
    "quantum_fisher",
    "quantum_crb",
    "time_grid",
    "golden_section",
    "optimize_time",
    "fit_scaling",
]

GHZ_PROJECTION = "ghz-projection"
QFI_BOUND = "qfi-bound"
SCHEMES = (GHZ_PROJECTION, QFI_BOUND)

SENSITIVITY_FLOOR = 1e-14
EIGEN_FLOOR = 1e-12
NEGATIVE_EIGEN_SLACK = 1e-10
GRID_POINTS = 400
_TINY = 1e-300


@dataclass(frozen=True)
class ProtocolBudget:
    """Total time ``T_total`` spent on ``M = T_total / t_evolve`` repetitions."""

    T_total: float
    t_evolve: float

    def __post_init__(self):
        if not (0 < self.t_evolve <= self.T_total):
            raise DomainError(f"t={self.t_evolve}: need 0 < t <= T={self.T_total}")

    @property
    def M(self) -> float:
        return self.T_total / self.t_evolve


@dataclass(frozen=True)
class UncertaintyResult:
    t: float
    P: float
    dPdtheta: float
    delta_theta: float
    scheme: str = GHZ_PROJECTION
    F_Q: float | None = None
    scan: tuple | None = field(default=None, repr=False, compare=False)


def survival_derivative(n: int, angles, params: NoiseParams, t):
    """Analytic ``dP/dtheta`` of the GHZ survival probability."""
    _, dP = survival_with_derivative(n, angles, params, t)
    return float(dP[0]) if np.ndim(t) == 0 else dP


def classical_fisher_ghz(P: float, dPdtheta: float) -> float:
    """Fisher information ``|dP|^2 / (P (1-P))`` of the two-outcome GHZ projection."""
    if P in (0.0, 1.0):
        raise DegenerateMeasurementError(f"P={P}: measurement outcome is deterministic")
    if not 0 < P < 1:
        raise DomainError(f"P={P}: probability must lie in (0, 1)")
    return dPdtheta * dPdtheta / (P * (1 - P))


def _ghz_objective(P, dP, t, T_total):
    """``sqrt(P(1-P)) / |dP| / sqrt(T/t)``, ``inf`` where undefined."""
    P, dP, t = np.asarray(P), np.asarray(dP), np.asarray(t)
    ok = (np.abs(dP) >= SENSITIVITY_FLOOR) & (P > 0) & (P < 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = np.sqrt(P * (1 - P)) / np.abs(dP) / np.sqrt(T_total / t)
    return np.where(ok, val, np.inf)


def uncertainty_ghz(n: int, angles, params: NoiseParams, t: float, T_total: float) -> UncertaintyResult:
    """Cramer-Rao bound for the GHZ projection repeated ``T_total / t`` times."""
    angles = _as_angles(angles)
    budget = ProtocolBudget(T_total, t)
    P, dP = survival_with_derivative(n, angles, params, [t])
    P, dP = float(P[0]), float(dP[0])
    if abs(dP) < SENSITIVITY_FLOOR:
        raise SensitivityError(f"theta={angles.theta:g}: estimation insensitive (|dP/dtheta|={abs(dP):.3g})")
    fisher = classical_fisher_ghz(P, dP)
    return UncertaintyResult(t=t, P=P, dPdtheta=dP, delta_theta=1 / math.sqrt(budget.M * fisher))


def _block_qfi(c: np.ndarray, dc: np.ndarray, jy: np.ndarray) -> np.ndarray:
    """QFI contribution of one sector for a stack of blocks ``(T, d, d)``."""
    c = (c + np.swapaxes(c, -1, -2).conj()) / 2
    dc = (dc + np.swapaxes(dc, -1, -2).conj()) / 2
    gen = dc - 1j * (jy @ c - c @ jy)
    lam, vec = np.linalg.eigh(c)
    if lam.min() < -NEGATIVE_EIGEN_SLACK:
        raise InternalConsistencyError(f"block eigenvalue {lam.min():.3g} is negative")
    lam = np.clip(lam, 0.0, None)
    rotated = np.swapaxes(vec, -1, -2).conj() @ gen @ vec
    denom = lam[:, :, None] + lam[:, None, :]
    floor = EIGEN_FLOOR * np.clip(np.trace(c, axis1=-2, axis2=-1).real, 0.0, None)
    mask = denom > floor[:, None, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(mask, 2 * np.abs(rotated) ** 2 / np.where(mask, denom, 1.0), 0.0)
    return terms.sum(axis=(-2, -1))


def quantum_fisher(n: int, theta: float, params: NoiseParams, t, phi: float = 0.0, chunk: int = 16):
    """Quantum Fisher information of the evolved state with respect to theta.

    Works sector by sector.  In the frame rotated back to the GHZ axis the
    state is block diagonal, and the theta-dependence of the frame adds
    ``-i [J_y, c_j]`` to each block derivative.  The multiplicity of a sector
    cancels against its ``1/d_j`` weight, so the plain coefficient blocks are
    used.  Accepts scalar or array ``t``; times are processed in chunks.
    """
    if phi != 0:
        raise UnsupportedConfigurationError(f"phi={phi}: quantum Fisher information is implemented for phi = 0")
    angles = Angles(theta, 0.0)
    times = _check_time(np.atleast_1d(np.asarray(t, dtype=float)))
    ov = ghz_overlaps(n, angles)
    rho, drho = ov.rho(), ov.drho()
    dm = _delta_m(n)
    two_js = irrep_table(n).two_j
    if params.gamma_prime == 0:
        two_js = two_js[-1:]
        weights = (np.ones((min(chunk, len(times) - lo), 1, n + 1, n + 1))
                   for lo in range(0, len(times), chunk))
    else:
        weights = sector_weight_chunks(n, params.gamma_prime * times, chunk)
    out = np.zeros(len(times))
    for lo, w in zip(range(0, len(times), chunk), weights):
        cw = collective_weight(dm[None], times[lo: lo + chunk, None, None], params)[:, None]
        coeff, dcoeff = rho * cw * w, drho * cw * w
        for s, tj in enumerate(two_js):
            sl = _block_slice(n, int(tj))
            # reverse to descending m to match J_y
            c = coeff[:, s, sl, sl][:, ::-1, ::-1]
            dc = dcoeff[:, s, sl, sl][:, ::-1, ::-1]
            out[lo: lo + chunk] += _block_qfi(c, dc, spin_operators(tj / 2).Jy)
    return float(out[0]) if np.ndim(t) == 0 else out


def quantum_crb(F_Q: float, M: float) -> float:
    """Quantum Cramer-Rao bound ``1 / sqrt(M F_Q)``."""
    if not M >= 1:
        raise DomainError(f"M={M}: need at least one repetition")
    if not F_Q > 0:
        raise NoInformationError(f"F_Q={F_Q}: state carries no information about theta")
    return 1 / math.sqrt(M * F_Q)


def time_grid(n: int, params: NoiseParams, T_total: float, points: int = GRID_POINTS) -> np.ndarray:
    """Logarithmic grid ``[1e-6 / (n^2 r_max), min(T, 10 / r_min)]``."""
    rates = [r for r in params.rates() if r > 0]
    if not rates:
        raise ConfigurationError("Omega, gamma/gamma0 and gamma_prime are all zero: nothing encodes theta")
    if not T_total > 0:
        raise ConfigurationError(f"T={T_total}: total time must be > 0")
    lo = 1e-6 / (n * n * max(rates) + _TINY)
    hi = min(T_total, 10 / min(rates) + _TINY)
    return np.geomspace(lo, hi, points)


def golden_section(f, lo: float, hi: float, rel_tol: float = 1e-6, max_iter: int = 200):
    """Minimize ``f`` on ``[lo, hi]`` (``0 < lo < hi``) by golden-section search
    in ``log t``.  Returns ``(x, f(x))``."""
    ratio = (math.sqrt(5) - 1) / 2
    a, b = math.log(lo), math.log(hi)
    x1, x2 = b - ratio * (b - a), a + ratio * (b - a)
    f1, f2 = f(math.exp(x1)), f(math.exp(x2))
    for _ in range(max_iter):
        if math.expm1(b - a) <= rel_tol:
            break
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - ratio * (b - a)
            f1 = f(math.exp(x1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + ratio * (b - a)
            f2 = f(math.exp(x2))
    return (math.exp(x1), f1) if f1 <= f2 else (math.exp(x2), f2)


def _objective_batch(n, angles, params, T_total, scheme, times):
    """Uncertainty at each time for the chosen scheme (``inf`` where undefined)."""
    if scheme == GHZ_PROJECTION:
        P, dP = survival_with_derivative(n, angles, params, times)
        return _ghz_objective(P, dP, times, T_total)
    F = quantum_fisher(n, angles.theta, params, times, phi=angles.phi)
    with np.errstate(divide="ignore"):
        return np.where(F > 0, 1 / np.sqrt(T_total / times * np.where(F > 0, F, 1.0)), np.inf)


def optimize_time(n: int, angles, params: NoiseParams, T_total: float = 1.0,
                  scheme: str = GHZ_PROJECTION, points: int = GRID_POINTS):
    """Evolution time minimizing the uncertainty bound.

    A logarithmic scan locates the global coarse minimum; golden-section
    search then refines it between the neighbouring grid points.  Returns
    ``(t_star, UncertaintyResult)``; the result keeps the scan as
    ``(times, values)`` in ``scan``.
    """
    if scheme not in SCHEMES:
        raise ConfigurationError(f"scheme={scheme!r}: expected one of {SCHEMES}")
    angles = _as_angles(angles)
    grid = time_grid(n, params, T_total, points)
    values = _objective_batch(n, angles, params, T_total, scheme, grid)
    if not np.isfinite(values).any():
        if scheme == GHZ_PROJECTION:
            raise SensitivityError(f"theta={angles.theta:g}: estimation insensitive at every evolution time")
        raise NoInformationError(f"theta={angles.theta:g}: quantum Fisher information vanishes at every time")
    best = int(np.argmin(values))
    lo, hi = grid[max(best - 1, 0)], grid[min(best + 1, len(grid) - 1)]

    def objective(t):
        return float(_objective_batch(n, angles, params, T_total, scheme, np.array([t]))[0])

    t_star, f_star = golden_section(objective, lo, hi)
    if not f_star <= values[best]:
        t_star, f_star = float(grid[best]), float(values[best])

    P, dP = survival_with_derivative(n, angles, params, [t_star])
    F_Q = None
    if scheme == QFI_BOUND:
        F_Q = float(quantum_fisher(n, angles.theta, params, t_star, phi=angles.phi))
    result = UncertaintyResult(t=t_star, P=float(P[0]), dPdtheta=float(dP[0]), delta_theta=f_star,
                               scheme=scheme, F_Q=F_Q, scan=(grid, values))
    return t_star, result


def fit_scaling(points) -> tuple[float, float, float]:
    """Least-squares line through ``(ln n, ln delta_theta)``.

    Returns ``(slope, intercept, rms_residual)``.
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or len(arr) < 3:
        raise DomainError("need at least three (n, delta_theta) pairs")
    if np.any(arr <= 0) or not np.all(np.isfinite(arr)):
        raise DomainError("n and delta_theta must be positive and finite")
    x, y = np.log(arr[:, 0]), np.log(arr[:, 1])
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    return float(slope), float(intercept), float(np.sqrt(np.mean(resid ** 2)))
