"""Brute-force reference simulation on the full 2**n dimensional space.

Nothing here uses the sector decomposition: operators are built as explicit
Kronecker products in the GHZ (z) frame and the master equation is solved
by exponentiating the vectorized generator or by step integration.  The
module exists to check the exact block solution, so it favours
transparency over speed and is capped at five qubits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import expm

from .errors import CapacityError, DomainError, StepSizeError, UnsupportedConfigurationError
from .evolution import NoiseParams, _check_time
from .overlaps import Angles, _as_angles

__all__ = [
    "MAX_QUBITS",
    "MAX_QFI_QUBITS",
    "DenseState",
    "ghz_vector",
    "tilted_pauli",
    "dense_evolve",
    "dense_survival",
    "dense_qfi",
    "pure_state_qfi",
    "dense_observables",
    "averaged_matrix_units",
]

MAX_QUBITS = 5
MAX_QFI_QUBITS = 4

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


@dataclass(frozen=True)
class DenseState:
    n: int
    rho: np.ndarray
    t: float


def _check_n(n: int, cap: int = MAX_QUBITS) -> None:
    if n < 1:
        raise DomainError(f"n={n}: need at least one qubit")
    if n > cap:
        raise CapacityError(f"n={n}: dense oracle is limited to {cap} qubits")


def ghz_vector(n: int) -> np.ndarray:
    psi = np.zeros(2 ** n, dtype=complex)
    psi[0] = psi[-1] = 1 / math.sqrt(2)
    return psi


def tilted_pauli(angles) -> np.ndarray:
    a = _as_angles(angles)
    st = math.sin(a.theta)
    return math.cos(a.theta) * SZ + st * math.cos(a.phi) * SX + st * math.sin(a.phi) * SY


def _local(op: np.ndarray, i: int, n: int) -> np.ndarray:
    eye = np.eye(2, dtype=complex)
    return reduce(np.kron, [op if k == i else eye for k in range(n)])


def _generators(n: int, angles: Angles, params: NoiseParams):
    """Vectorized (row-major) generators ``(static, collective)`` where the
    collective part carries unit rate."""
    sz = tilted_pauli(angles)
    locals_ = [_local(sz, i, n) for i in range(n)]
    L = sum(locals_)
    eye = np.eye(2 ** n)
    # vec(A X B) = kron(A, B.T) vec(X) for row-major vec
    static = -1j * params.Omega * (np.kron(L, eye) - np.kron(eye, L.T))
    static = static + params.gamma_prime * sum(np.kron(s, s.T) - np.kron(eye, eye) for s in locals_)
    L2 = L @ L
    collective = np.kron(L, L.T) - 0.5 * (np.kron(L2, eye) + np.kron(eye, L2.T))
    return static, collective


def dense_evolve(n: int, angles, params: NoiseParams, t: float, method: str = "auto") -> DenseState:
    """Solve the master equation from the GHZ state on the full space.

    ``method="expm"`` exponentiates the generator (Markovian collective
    dephasing only), ``"ode"`` integrates with an adaptive 8th-order
    Runge-Kutta scheme at tolerance 1e-12.  ``"auto"`` picks ``expm`` when
    the collective rate is constant.
    """
    _check_n(n)
    angles = _as_angles(angles)
    t = float(_check_time(t))
    if method == "auto":
        method = "ode" if params.lorentzian else "expm"
    static, collective = _generators(n, angles, params)
    psi = ghz_vector(n)
    rho0 = np.outer(psi, psi.conj()).reshape(-1)
    dim = 2 ** n

    if method == "expm":
        if params.lorentzian:
            raise UnsupportedConfigurationError("time-dependent collective rate needs method='ode'")
        vec = expm(t * (static + params.gamma * collective)) @ rho0
    elif method == "ode":
        def rhs(s, y):
            return static @ y + float(params.collective_rate(s)) * (collective @ y)

        if t == 0:
            vec = rho0
        else:
            sol = solve_ivp(rhs, (0.0, t), rho0, method="DOP853", rtol=1e-12, atol=1e-12)
            if not sol.success:
                raise StepSizeError(f"integration failed: {sol.message}")
            vec = sol.y[:, -1]
    else:
        raise DomainError(f"method={method!r}: expected 'expm', 'ode' or 'auto'")
    rho = vec.reshape(dim, dim)
    return DenseState(n=n, rho=(rho + rho.conj().T) / 2, t=t)


def dense_survival(state: DenseState) -> float:
    psi = ghz_vector(state.n)
    return float(np.vdot(psi, state.rho @ psi).real)


def _sld_fisher(rho: np.ndarray, drho: np.ndarray, floor: float = 1e-12) -> float:
    lam, vec = np.linalg.eigh(rho)
    lam = np.clip(lam, 0.0, None)
    rotated = vec.conj().T @ drho @ vec
    denom = lam[:, None] + lam[None, :]
    mask = denom > floor
    return float(np.sum(2 * np.abs(rotated[mask]) ** 2 / denom[mask]))


def dense_qfi(n: int, theta: float, params: NoiseParams, t: float, h: float = 1e-5, phi: float = 0.0) -> float:
    """QFI from a central-difference derivative of the dense state.

    The derivative is taken at steps ``h`` and ``h/2`` and Richardson
    extrapolated; the two raw estimates must agree to 1e-5 relative.
    """
    _check_n(n, MAX_QFI_QUBITS)
    if phi != 0:
        raise UnsupportedConfigurationError(f"phi={phi}: dense QFI is implemented for phi = 0")
    if not (h <= theta <= math.pi - h):
        raise DomainError(f"theta={theta}: central differences need theta in [h, pi - h]")

    def rho_at(th):
        return dense_evolve(n, Angles(th, 0.0), params, t).rho

    coarse = (rho_at(theta + h) - rho_at(theta - h)) / (2 * h)
    fine = (rho_at(theta + h / 2) - rho_at(theta - h / 2)) / h
    scale = max(np.abs(fine).max(), 1e-300)
    gap = np.abs(fine - coarse).max()
    if gap > 1e-5 * scale and gap > 1e-9:
        raise StepSizeError(f"finite-difference estimates disagree by {gap / scale:.2g} (relative)")
    drho = (4 * fine - coarse) / 3
    return _sld_fisher(rho_at(theta), (drho + drho.conj().T) / 2)


def pure_state_qfi(n: int, theta: float, Omega: float, t: float, h: float = 1e-5) -> float:
    """QFI ``4 (<d psi|d psi> - |<psi|d psi>|^2)`` for field-only evolution."""
    _check_n(n, MAX_QFI_QUBITS)

    def psi_at(th):
        sz = tilted_pauli(Angles(th, 0.0))
        L = sum(_local(sz, i, n) for i in range(n))
        return expm(-1j * Omega * t * L) @ ghz_vector(n)

    psi = psi_at(theta)
    dpsi = (psi_at(theta + h) - psi_at(theta - h)) / (2 * h)
    dpsi_half = (psi_at(theta + h / 2) - psi_at(theta - h / 2)) / h
    dpsi = (4 * dpsi_half - dpsi) / 3
    overlap = np.vdot(psi, dpsi)
    return float(4 * (np.vdot(dpsi, dpsi).real - abs(overlap) ** 2))


def dense_observables(state: DenseState, angles) -> tuple[float, float, float]:
    """Purity, ``<L>`` and ``<L^2>`` with ``L = sum_i`` (Pauli along the tilted axis)."""
    sz = tilted_pauli(angles)
    L = sum(_local(sz, i, state.n) for i in range(state.n))
    rho = state.rho
    purity = float(np.vdot(rho, rho).real)
    return purity, float(np.trace(L @ rho).real), float(np.trace(L @ L @ rho).real)


def averaged_matrix_units(n: int) -> dict:
    """Multiplicity-averaged units ``avg|j,m><j,m'|`` in the z frame.

    Built without choosing multiplicity vectors: ``P_{j,m'}`` (projector on
    total spin j and projection m') is carried to ``m`` by normalized powers
    of the raising operator, then divided by ``d_j``.  Keys are
    ``(two_j, two_m, two_mp)``.
    """
    _check_n(n, 6)
    Jz = sum(_local(SZ, i, n) for i in range(n)).real / 2
    Jp = sum(_local((SX + 1j * SY) / 2, i, n) for i in range(n)).real
    J2 = Jz @ Jz + (Jp @ Jp.T + Jp.T @ Jp) / 2
    w, V = np.linalg.eigh(J2)
    mz = np.diag(Jz)
    units = {}
    for tj in range(n % 2, n + 1, 2):
        j = tj / 2
        cols = V[:, np.abs(w - j * (j + 1)) < 1e-6]
        proj = cols @ cols.T
        d = cols.shape[1] // (tj + 1)
        for tmp in range(-tj, tj + 1, 2):
            base = proj * (np.abs(mz - tmp / 2) < 1e-9)[None, :]
            x, m = base, tmp / 2
            for tm in range(tmp, tj + 1, 2):
                if tm > tmp:
                    x = Jp @ x / math.sqrt(j * (j + 1) - m * (m + 1))
                    m += 1
                units[(tj, tm, tmp)] = x / d
                units[(tj, tmp, tm)] = x.T / d
    return units
