"""Exact propagation of a GHZ state under a field, collective dephasing and
independent dephasing, all along the tilted axis.

The evolved state is kept in block form: one matrix ``c_j`` per total-spin
sector, holding the coefficients of the multiplicity-averaged matrix units
``avg|j,m><j,m'|`` in the tilted frame.  Two facts make this exact:

* field and collective dephasing act diagonally on each matrix unit, with
  factor ``exp(-2i Omega dm t - 2 Gamma(t) dm^2)``;
* independent dephasing commutes with both and mixes neighbouring sectors
  through a tridiagonal map ``M = sum_i sz_i (.) sz_i`` whose coefficients
  are given by :func:`ghzmetro.collective.mixing_arrays`.

Independent dephasing for a time ``t`` equals ``exp(gamma' t (M - n))``.
Expanding the product of single-qubit channels gives the binomial form
``sum_k alpha^(n-k) beta^k A^(k)`` with ``A^(k)`` generated by a three-term
recurrence; :class:`AKRow` runs that recurrence in exact rational arithmetic.
The recurrence loses accuracy geometrically in floating point, so the
production propagator uses the equivalent Poisson series
``sum_l Pois(l; n gamma' t) (M/n)^l``, whose terms are bounded by one.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.stats import poisson

from .collective import (as_two_j, irrep_table, mixing_arrays,
                         mixing_coefficients_exact)
from .errors import DomainError, InternalConsistencyError
from .overlaps import GhzOverlaps, _as_angles, ghz_overlaps

__all__ = [
    "NoiseParams",
    "BlockState",
    "AKRow",
    "ak_stream",
    "collective_weight",
    "sector_weights",
    "sector_weights_recurrence",
    "evolve",
    "evolve_many",
    "iter_evolve",
    "iter_sector_weights",
    "sector_weight_chunks",
    "survival_probability",
    "survival_with_derivative",
    "short_time_probability",
    "POISSON_TAIL",
]

POISSON_TAIL = 1e-16
PROBABILITY_SLACK = 1e-8


@dataclass(frozen=True)
class NoiseParams:
    """Field strength and dephasing rates.

    Collective dephasing is Markovian with rate ``gamma`` unless ``gamma0``
    and ``tau_c`` are given, in which case the Lorentzian-bath accumulated
    exponent ``Gamma(t) = gamma0 tau_c (exp(-t/tau_c) - 1 + t/tau_c)`` is used.
    """

    Omega: float = 0.0
    gamma: float = 0.0
    gamma_prime: float = 0.0
    gamma0: float | None = None
    tau_c: float | None = None

    def __post_init__(self):
        for name in ("Omega", "gamma", "gamma_prime"):
            value = getattr(self, name)
            if not math.isfinite(value):
                raise DomainError(f"{name}={value}: must be finite")
        if self.gamma < 0 or self.gamma_prime < 0:
            raise DomainError(f"gamma={self.gamma}, gamma_prime={self.gamma_prime}: rates must be >= 0")
        if (self.gamma0 is None) != (self.tau_c is None):
            raise DomainError("gamma0 and tau_c must be given together")
        if self.gamma0 is not None:
            if self.gamma != 0:
                raise DomainError("give either gamma or (gamma0, tau_c), not both")
            if self.gamma0 < 0:
                raise DomainError(f"gamma0={self.gamma0}: rate must be >= 0")
            if not self.tau_c > 0:
                raise DomainError(f"tau_c={self.tau_c}: correlation time must be > 0")

    @property
    def lorentzian(self) -> bool:
        return self.gamma0 is not None

    @property
    def collective_scale(self) -> float:
        return self.gamma0 if self.lorentzian else self.gamma

    def accumulated_dephasing(self, t):
        """Accumulated collective exponent ``Gamma(t)`` (``gamma t`` if Markovian)."""
        t = np.asarray(t, dtype=float)
        if not self.lorentzian:
            return self.gamma * t
        x = t / self.tau_c
        # exp(-x) - 1 + x cancels badly for small x
        series = x * x * (0.5 - x * (1 / 6 - x * (1 / 24 - x / 120)))
        exact = np.expm1(-x) + x
        return self.gamma0 * self.tau_c * np.where(x < 1e-3, series, exact)

    def collective_rate(self, t):
        """Instantaneous collective rate ``dGamma/dt``."""
        t = np.asarray(t, dtype=float)
        if not self.lorentzian:
            return self.gamma * np.ones_like(t)
        return -self.gamma0 * np.expm1(-t / self.tau_c)

    def rates(self) -> list[float]:
        return [abs(self.Omega), self.collective_scale, self.gamma_prime]

    def rescaled(self, s: float) -> "NoiseParams":
        """Parameters for time measured in units ``s`` times larger."""
        if self.lorentzian:
            return NoiseParams(self.Omega / s, 0.0, self.gamma_prime / s, self.gamma0 / s, self.tau_c * s)
        return NoiseParams(self.Omega / s, self.gamma / s, self.gamma_prime / s)


def _check_time(t) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    if np.any(~np.isfinite(t)) or np.any(t < 0):
        raise DomainError(f"t={t}: evolution time must be finite and >= 0")
    return t


def collective_weight(delta_m, t, params: NoiseParams):
    """Field and collective-dephasing factor ``exp(-2i Omega dm t - 2 Gamma(t) dm^2)``.

    Broadcasts over ``delta_m`` and ``t``.
    """
    t = _check_time(t)
    dm = np.asarray(delta_m, dtype=float)
    return np.exp(-2j * params.Omega * dm * t - 2 * params.accumulated_dephasing(t) * dm * dm)


# ---------------------------------------------------------------------------
# k-resolved coefficients (exact recurrence)


class AKRow:
    """Stream of ``A^(k)_{j,m,m'}`` for ``k = 0..n`` at fixed ``(m, m')``.

    ``A^(k)_j`` is the weight of ``avg|j,m><j,m'|`` in the sum over all
    k-subsets ``S`` of ``sz_S avg|n/2,m><n/2,m'| sz_S``.  Iterating yields one
    float vector over sectors (ascending j) per ``k``.

    The recurrence is run on ``A_j / prod_{l>j} R_l`` with
    ``R_l = sqrt((l^2-m^2)(l^2-m'^2))``, which turns every coefficient into
    a rational number, so the iteration is exact.
    """

    def __init__(self, n: int, m, mp):
        two_m, two_mp = as_two_j(m), as_two_j(mp)
        if abs(two_m) > n or abs(two_mp) > n or (two_m - n) % 2 or (two_mp - n) % 2:
            raise DomainError(f"m={two_m / 2}, m'={two_mp / 2}: not projections of n={n} spins")
        self.n, self.two_m, self.two_mp = n, two_m, two_mp
        table = irrep_table(n)
        self.two_j = table.two_j
        low = max(abs(two_m), abs(two_mp))
        self._first = int(np.searchsorted(table.two_j, low))
        m2, mp2 = Fraction(two_m, 2) ** 2, Fraction(two_mp, 2) ** 2
        self._a, self._b, self._c, root_sq = [], [], [], []
        for t in table.two_j:
            a, b, c = mixing_coefficients_exact(n, int(t), two_m, two_mp)
            jj = Fraction(int(t), 2)
            self._a.append(a)
            self._b.append(b)
            self._c.append(c)
            root_sq.append((jj * jj - m2) * (jj * jj - mp2))
        self._root_sq = root_sq
        # prod_{l > j} R_l, zero below the lowest admissible sector
        log_scale = np.zeros(len(table.two_j))
        for s in range(len(table.two_j) - 2, -1, -1):
            r = float(root_sq[s + 1])
            log_scale[s] = log_scale[s + 1] + (0.5 * math.log(r) if r > 0 else -math.inf)
        self._scale = np.exp(log_scale)
        self._scale[: self._first] = 0.0

    def exact(self):
        """Yield the rescaled rational vectors ``A_j / prod_{l>j} R_l``."""
        n, first = self.n, self._first
        top = len(self.two_j) - 1
        prev = [Fraction(0)] * len(self.two_j)
        cur = [Fraction(0)] * len(self.two_j)
        cur[top] = Fraction(1)
        yield cur
        for k in range(n):
            nxt = [Fraction(0)] * len(self.two_j)
            for s in range(first, top + 1):
                acc = 4 * self._a[s] * cur[s]
                if s < top:
                    acc += 4 * self._b[s + 1] * cur[s + 1]
                if s > first:
                    acc += 4 * self._c[s - 1] * self._root_sq[s] * cur[s - 1]
                acc -= (n - k + 1) * prev[s]
                nxt[s] = acc / (k + 1)
            prev, cur = cur, nxt
            yield cur

    def __iter__(self):
        for row in self.exact():
            yield np.array([float(x) for x in row]) * self._scale

    def top_sector(self) -> np.ndarray:
        """``A^(k)_{n/2,m,m'}`` for ``k = 0..n``."""
        return np.array([float(row[-1]) for row in self.exact()])


def ak_stream(n: int, m, mp) -> AKRow:
    return AKRow(n, m, mp)


def sector_weights_recurrence(n: int, tau: float) -> np.ndarray:
    """``sum_k alpha^(n-k) beta^k A^(k)`` from the exact recurrence.

    ``tau = gamma' t``.  Returns shape ``(n_sectors, n+1, n+1)``.  Costs
    ``O(n^4)`` rational operations; intended for cross-checks at small ``n``.
    """
    beta = -0.5 * math.expm1(-2 * tau)
    alpha = 1.0 - beta
    weights = [alpha ** (n - k) * beta ** k for k in range(n + 1)]
    out = np.zeros((len(irrep_table(n).two_j), n + 1, n + 1))
    for mu in range(n + 1):
        for mup in range(mu, n + 1):
            row = AKRow(n, Fraction(2 * mu - n, 2), Fraction(2 * mup - n, 2))
            acc = sum(w * a for w, a in zip(weights, row))
            out[:, mu, mup] = out[:, mup, mu] = acc
    return out


# ---------------------------------------------------------------------------
# Poisson-series propagator


def _poisson_length(lam: float) -> int:
    if lam <= 0:
        return 1
    q = poisson.isf(POISSON_TAIL, lam)
    if not np.isfinite(q):
        q = lam + 40 * math.sqrt(lam) + 40
    return int(q) + 2


def _poisson_table(lam: np.ndarray, length: int) -> np.ndarray:
    return poisson.pmf(np.arange(length)[None, :], np.asarray(lam, dtype=float)[:, None])


class _DephasingMap:
    """``(M/n)`` applied to stacks of sector vectors for every ``(m, m')``."""

    def __init__(self, n: int):
        a, b, c = mixing_arrays(n)
        self.n = n
        self.a, self.b, self.c = 4 * a / n, 4 * b / n, 4 * c / n
        self.shape = a.shape

    def start(self) -> np.ndarray:
        u = np.zeros(self.shape)
        u[-1] = 1.0
        return u

    def __call__(self, u: np.ndarray) -> np.ndarray:
        out = self.a * u
        out[:-1] += self.b[1:] * u[1:]
        out[1:] += self.c[:-1] * u[:-1]
        return out


class _TopStream:
    """Cached ``j = n/2`` rows of ``(M/n)^l e_top``; independent of rates."""

    def __init__(self, n: int):
        self._map = _DephasingMap(n)
        self._u = self._map.start()
        self.rows = [self._u[-1].copy()]

    def get(self, length: int) -> np.ndarray:
        while len(self.rows) < length:
            self._u = self._map(self._u)
            self.rows.append(self._u[-1].copy())
        return np.asarray(self.rows[:length])


@lru_cache(maxsize=8)
def _top_stream(n: int) -> _TopStream:
    return _TopStream(n)


def sector_weight_chunks(n: int, tau, chunk: int = 16, block: int = 16):
    """Yield :func:`sector_weights` for consecutive chunks of ``tau``.

    Memory stays at ``O((chunk + block) n^3)``.  The series length of each
    chunk follows its largest ``tau``, and ``block`` powers of the mixing
    map are folded in with one matrix product.
    """
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    if np.any(taus < 0):
        raise DomainError("tau must be >= 0")
    dmap = _DephasingMap(n)
    size = int(np.prod(dmap.shape))
    for lo in range(0, len(taus), chunk):
        part = taus[lo: lo + chunk]
        length = _poisson_length(n * part.max())
        pois = _poisson_table(n * part, length)
        acc = np.zeros((len(part), size))
        powers = np.empty((min(block, length), size))
        u = dmap.start()
        for start in range(0, length, block):
            stop = min(start + block, length)
            for ell in range(start, stop):
                powers[ell - start] = u.reshape(-1)
                if ell + 1 < length:
                    u = dmap(u)
            acc += pois[:, start:stop] @ powers[: stop - start]
        yield acc.reshape((len(part),) + dmap.shape)


def iter_sector_weights(n: int, tau, chunk: int = 16):
    """Yield :func:`sector_weights` one ``tau`` at a time."""
    for part in sector_weight_chunks(n, tau, chunk):
        yield from part


def sector_weights(n: int, tau, chunk: int = 16) -> np.ndarray:
    """``exp(tau (M - n))`` applied to the top sector, for every ``(m, m')``.

    This equals ``sum_k alpha^(n-k) beta^k A^(k)`` with ``tau = gamma' t``.
    Returns shape ``(len(tau), n_sectors, n+1, n+1)`` for array ``tau`` or
    ``(n_sectors, n+1, n+1)`` for a scalar.
    """
    out = np.array(list(iter_sector_weights(n, tau, chunk)))
    return out[0] if np.ndim(tau) == 0 else out


def top_sector_weights(n: int, tau) -> np.ndarray:
    """Only the ``j = n/2`` slice of :func:`sector_weights`, shape ``(T, n+1, n+1)``."""
    taus = np.atleast_1d(np.asarray(tau, dtype=float))
    length = _poisson_length(n * taus.max())
    rows = _top_stream(n).get(length)
    pois = _poisson_table(n * taus, length)
    return np.tensordot(pois, rows, axes=1)


# ---------------------------------------------------------------------------
# Block states


@dataclass(frozen=True)
class BlockState:
    """Evolved density operator as one coefficient matrix per sector.

    ``blocks[two_j]`` is the ``(2j+1) x (2j+1)`` matrix ``c_j`` in
    descending-``m`` order; the full state is
    ``sum_j sum_{m,m'} c_j[m,m'] avg|j,m><j,m'|`` in the tilted frame.
    """

    n: int
    t: float
    blocks: dict = field(repr=False)

    def trace(self) -> float:
        return float(sum(np.trace(c).real for c in self.blocks.values()))

    def sector_traces(self) -> dict:
        return {tj: float(np.trace(c).real) for tj, c in self.blocks.items()}

    def purity(self) -> float:
        d = irrep_table(self.n).d
        j0 = self.n % 2
        return float(sum(np.vdot(c, c).real / d[(tj - j0) // 2] for tj, c in self.blocks.items()))

    def moments(self) -> tuple[float, float]:
        """``<L>`` and ``<L^2>`` for ``L = sum_i sz_i`` along the tilted axis."""
        first = second = 0.0
        for tj, c in self.blocks.items():
            m = np.arange(tj, -tj - 1, -2) / 2
            diag = np.diag(c).real
            first += float(np.sum(2 * m * diag))
            second += float(np.sum(4 * m * m * diag))
        return first, second

    def hermiticity_error(self) -> float:
        return max(float(np.abs(c - c.conj().T).max()) for c in self.blocks.values())

    def min_eigenvalue(self) -> float:
        return min(float(np.linalg.eigvalsh((c + c.conj().T) / 2).min()) for c in self.blocks.values())


def _block_slice(n: int, two_j: int) -> slice:
    lo = (n - two_j) // 2
    return slice(lo, lo + two_j + 1)


def _split_blocks(n: int, full: np.ndarray, two_js) -> dict:
    """Cut ``full[s, mu, mu']`` into descending-m sector blocks."""
    out = {}
    for s, tj in enumerate(two_js):
        sl = _block_slice(n, int(tj))
        out[int(tj)] = full[s, sl, sl][::-1, ::-1].copy()
    return out


def _delta_m(n: int) -> np.ndarray:
    mu = np.arange(n + 1)
    return (mu[:, None] - mu[None, :]).astype(float)


def iter_evolve(n: int, angles, params: NoiseParams, times, overlaps: GhzOverlaps | None = None,
                derivative: bool = False):
    """Yield block states at several times from a single pass of the sector stream.

    With ``derivative=True`` each item is ``(state, dstate)`` where
    ``dstate`` holds the theta-derivatives of the coefficient blocks.
    """
    angles = _as_angles(angles)
    times = _check_time(np.atleast_1d(times))
    ov = overlaps if overlaps is not None else ghz_overlaps(n, angles)
    rho = ov.rho()
    drho = ov.drho() if derivative else None
    table = irrep_table(n)
    dm = _delta_m(n)
    if params.gamma_prime == 0:
        weights = itertools.repeat(np.ones((1, n + 1, n + 1)))
        two_js = table.two_j[-1:]
    else:
        weights = iter_sector_weights(n, params.gamma_prime * times)
        two_js = table.two_j
    for t, w in zip(times, weights):
        cw = collective_weight(dm, t, params)
        state = BlockState(n, float(t), _split_blocks(n, (rho * cw)[None] * w, two_js))
        if derivative:
            yield state, BlockState(n, float(t), _split_blocks(n, (drho * cw)[None] * w, two_js))
        else:
            yield state


def evolve_many(n: int, angles, params: NoiseParams, times, overlaps: GhzOverlaps | None = None,
                derivative: bool = False) -> list:
    """List form of :func:`iter_evolve`."""
    return list(iter_evolve(n, angles, params, times, overlaps, derivative))


def evolve(n: int, angles, params: NoiseParams, t) -> BlockState:
    """Exact state at time ``t`` starting from the GHZ state.

    When ``gamma_prime == 0`` only the top sector is populated and the
    sector stream is skipped.
    """
    t = float(_check_time(t))
    return evolve_many(n, angles, params, [t])[0]


# ---------------------------------------------------------------------------
# Survival probability


def _difference_profile(matrix: np.ndarray) -> np.ndarray:
    """Sum ``matrix[..., mu, mu']`` along diagonals ``mu - mu' = const``.

    Output index ``delta + n`` for ``delta = -n..n``.
    """
    n = matrix.shape[-1] - 1
    return np.stack([np.trace(matrix, offset=-delta, axis1=-2, axis2=-1)
                     for delta in range(-n, n + 1)], axis=-1)


def survival_with_derivative(n: int, angles, params: NoiseParams, times, overlaps: GhzOverlaps | None = None):
    """Return ``(P, dP/dtheta)`` arrays for a batch of times.

    Uses ``P = sum_{m,m'} w(m-m', t) W_top(t)[m,m'] B_m B_m'``.  The top-sector
    stream is shared between calls, and grouping by ``m - m'`` leaves only
    ``O(n)`` work per time.  Values are checked for a vanishing imaginary part
    and for lying in [0, 1] up to rounding, then clamped.
    """
    angles = _as_angles(angles)
    times = _check_time(np.atleast_1d(times))
    ov = overlaps if overlaps is not None else ghz_overlaps(n, angles)
    B, dB = ov.B, ov.dB
    bb = np.outer(B, B)
    dbb = np.outer(dB, B) + np.outer(B, dB)

    taus = params.gamma_prime * times
    length = _poisson_length(n * taus.max())
    rows = _top_stream(n).get(length)
    profile = _difference_profile(rows * bb[None])
    dprofile = _difference_profile(rows * dbb[None])
    pois = _poisson_table(n * taus, length)
    deltas = np.arange(-n, n + 1)
    cw = collective_weight(deltas[None, :], times[:, None], params)
    P = np.sum(cw * (pois @ profile), axis=-1)
    dP = np.sum(cw * (pois @ dprofile), axis=-1)

    worst = max(np.abs(P.imag).max(), np.abs(dP.imag).max())
    if worst > PROBABILITY_SLACK:
        raise InternalConsistencyError(f"survival probability has imaginary part {worst:.3g}")
    P = P.real
    if P.min() < -PROBABILITY_SLACK or P.max() > 1 + PROBABILITY_SLACK:
        raise InternalConsistencyError(f"survival probability {P.min():.3g}..{P.max():.3g} outside [0, 1]")
    return np.clip(P, 0.0, 1.0), dP.real


def survival_probability(n: int, angles, params: NoiseParams, t):
    """Probability of finding the evolved state in the GHZ state."""
    P, _ = survival_with_derivative(n, angles, params, t)
    return float(P[0]) if np.ndim(t) == 0 else P


def short_time_probability(n: int, theta: float, gamma_eff: float, gamma_prime: float, t: float) -> float:
    """First-order-in-t survival probability (valid for ``n >= 3``; error is
    quadratic in ``n^2 gamma t`` and ``n gamma' t``)."""
    c2 = math.cos(theta) ** 2
    return 1 - gamma_eff * t * (n * n * c2 + n * (1 - c2)) - gamma_prime * t * n
