"""Overlaps of the n-qubit GHZ state with the symmetric Dicke basis of a
tilted axis.

With ``h = theta/2`` and ``mu = m + n/2`` the number of spins up along the
tilted axis, the amplitude is::

    v_m = sqrt(C(n, mu) / 2) * [cos(h)**mu * (-sin(h))**(n-mu)
                                + exp(-i n phi) * sin(h)**mu * cos(h)**(n-mu)]

which is the half-angle form of the familiar ``sqrt(1 +- cos(theta))``
expression.  Both terms can under- or overflow for large ``n`` even when
``v_m`` itself is an ordinary number, so every term is assembled as a
(log-magnitude, phase) pair and the terms are combined with a complex
log-sum-exp.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .collective import irrep_table
from .errors import DomainError

__all__ = ["Angles", "GhzOverlaps", "ghz_overlaps", "ghz_overlap_derivative", "b_moments"]


@dataclass(frozen=True)
class Angles:
    """Polar angle ``theta`` (the estimation target) and azimuth ``phi``."""

    theta: float
    phi: float = 0.0

    def __post_init__(self):
        theta = float(self.theta)
        if not (0.0 <= theta <= math.pi) or math.isnan(theta):
            raise DomainError(f"theta={self.theta}: must lie in [0, pi]")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "phi", float(self.phi) % (2 * math.pi))


def _as_angles(angles) -> Angles:
    if isinstance(angles, Angles):
        return angles
    if np.isscalar(angles):
        return Angles(angles)
    return Angles(*angles)


def _log_power(log_base: float, k: np.ndarray) -> np.ndarray:
    """``k * log_base`` with the convention ``0 * log(0) = 0``."""
    with np.errstate(invalid="ignore"):
        out = k * log_base
    return np.where(k == 0, 0.0, out)


def _combine(logs: np.ndarray, phases: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Sum ``exp(logs + i*phases)`` along the last axis in log space."""
    top = np.max(logs, axis=-1, keepdims=True)
    finite = np.isfinite(top)
    shift = np.where(finite, top, 0.0)
    with np.errstate(invalid="ignore"):
        acc = np.sum(np.exp(logs - shift) * np.exp(1j * phases), axis=-1)
    with np.errstate(divide="ignore"):
        log_abs = np.log(np.abs(acc)) + shift[..., 0]
    log_abs = np.where(finite[..., 0], log_abs, -np.inf)
    return log_abs, np.angle(acc)


@dataclass(frozen=True)
class GhzOverlaps:
    """Amplitudes ``v[mu] = <n/2, m | GHZ>`` and their theta-derivatives.

    Arrays are indexed by ``mu = m + n/2`` (ascending ``m``).  Amplitudes are
    held as ``(log|.|, arg)`` pairs; the ``v``/``dv`` properties convert them
    to complex numbers, which is always safe because ``|v| <= 1``.
    """

    n: int
    angles: Angles
    log_abs_v: np.ndarray
    phase_v: np.ndarray
    log_abs_dv: np.ndarray
    phase_dv: np.ndarray

    @property
    def m(self) -> np.ndarray:
        return np.arange(self.n + 1) - self.n / 2

    @property
    def v(self) -> np.ndarray:
        return np.exp(self.log_abs_v + 1j * self.phase_v)

    @property
    def dv(self) -> np.ndarray:
        return np.exp(self.log_abs_dv + 1j * self.phase_dv)

    @property
    def B(self) -> np.ndarray:
        return np.exp(2 * self.log_abs_v)

    @property
    def dB(self) -> np.ndarray:
        """theta-derivative of ``B``: ``2 Re(conj(v) dv)``."""
        return 2 * np.exp(self.log_abs_v + self.log_abs_dv) * np.cos(self.phase_dv - self.phase_v)

    def rho(self) -> np.ndarray:
        """Rank-one matrix ``rho[mu, mu'] = v[mu] * conj(v[mu'])``."""
        v = self.v
        return np.outer(v, v.conj())

    def drho(self) -> np.ndarray:
        v, dv = self.v, self.dv
        return np.outer(dv, v.conj()) + np.outer(v, dv.conj())


def _terms(n: int, angles: Angles):
    """Per-mu (log|.|, phase) of the two amplitude terms and four derivative
    terms.  Shapes are ``(n+1, 2)`` and ``(n+1, 4)``."""
    h = angles.theta / 2
    with np.errstate(divide="ignore"):
        lc, ls = np.log([math.cos(h), math.sin(h)]).clip(-np.inf, 0.0)
    mu = np.arange(n + 1)
    nu = n - mu
    log_pref = 0.5 * irrep_table(n).log_binom - 0.5 * math.log(2)
    sign_first = np.where(nu % 2, math.pi, 0.0)  # (-1)**(n-mu)
    twist = -n * angles.phi

    v_logs = np.stack([
        log_pref + _log_power(lc, mu) + _log_power(ls, nu),
        log_pref + _log_power(ls, mu) + _log_power(lc, nu),
    ], axis=-1)
    v_phases = np.stack([sign_first, np.full(n + 1, twist)], axis=-1)

    # d/dtheta = (1/2) d/dh; each factor contributes one term of the product rule
    with np.errstate(divide="ignore"):
        lmu, lnu = np.log(mu.astype(float)), np.log(nu.astype(float))
    half = math.log(0.5)
    dv_logs = np.stack([
        # first term, derivative of cos(h)**mu: -mu cos^(mu-1) sin^(nu+1)
        log_pref + half + lmu + _log_power(lc, np.maximum(mu - 1, 0)) + _log_power(ls, nu + 1),
        # first term, derivative of (-sin h)**nu: nu cos^(mu+1) sin^(nu-1)
        log_pref + half + lnu + _log_power(lc, mu + 1) + _log_power(ls, np.maximum(nu - 1, 0)),
        # second term, derivative of sin(h)**mu: mu sin^(mu-1) cos^(nu+1)
        log_pref + half + lmu + _log_power(ls, np.maximum(mu - 1, 0)) + _log_power(lc, nu + 1),
        # second term, derivative of cos(h)**nu: -nu sin^(mu+1) cos^(nu-1)
        log_pref + half + lnu + _log_power(ls, mu + 1) + _log_power(lc, np.maximum(nu - 1, 0)),
    ], axis=-1)
    dv_phases = np.stack([
        sign_first + math.pi,
        sign_first,
        np.full(n + 1, twist),
        np.full(n + 1, twist + math.pi),
    ], axis=-1)
    return v_logs, v_phases, dv_logs, dv_phases


def ghz_overlaps(n: int, angles) -> GhzOverlaps:
    """GHZ amplitudes on the tilted-axis symmetric basis, with derivatives.

    Parameters
    ----------
    n : int
        Number of qubits.
    angles : Angles or float or (theta, phi)
        Orientation of the tilted axis relative to the GHZ axis.
    """
    if n < 1:
        raise DomainError(f"n={n}: need at least one qubit")
    angles = _as_angles(angles)
    v_logs, v_phases, dv_logs, dv_phases = _terms(n, angles)
    log_abs_v, phase_v = _combine(v_logs, v_phases)
    log_abs_dv, phase_dv = _combine(dv_logs, dv_phases)
    return GhzOverlaps(n=n, angles=angles, log_abs_v=log_abs_v, phase_v=phase_v,
                       log_abs_dv=log_abs_dv, phase_dv=phase_dv)


def ghz_overlap_derivative(n: int, angles) -> np.ndarray:
    """``d v[mu] / d theta`` as complex numbers (analytic, valid at the
    endpoints ``theta = 0, pi``)."""
    return ghz_overlaps(n, angles).dv


def b_moments(overlaps: GhzOverlaps) -> tuple[float, float, float]:
    """Return ``(sum B, sum m B, sum m^2 B)``."""
    B, m = overlaps.B, overlaps.m
    return math.fsum(B), math.fsum(m * B), math.fsum(m * m * B)
