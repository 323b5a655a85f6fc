"""Collective angular momentum of n spin-1/2 particles.

The 2**n dimensional space of n qubits splits into total-spin sectors j,
each appearing with multiplicity ``d_j``.  Sector labels are half-integers
for odd ``n``; internally they are carried as the integer ``two_j = 2*j`` so
that they can be used as array indices and dictionary keys without float
round-off.  Projections ``m`` are handled the same way (``two_m``) or through
the shifted integer ``mu = m + n/2`` which runs over ``0..n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .errors import DomainError

__all__ = [
    "IrrepTable",
    "SpinJOperators",
    "degeneracy",
    "log_degeneracy",
    "multiplicity_tail",
    "mixing_coefficients",
    "mixing_coefficients_exact",
    "mixing_arrays",
    "irrep_table",
    "spin_operators",
    "as_two_j",
]


def as_two_j(x) -> int:
    """Return ``2*x`` as an int, rejecting values that are not half-integers."""
    if isinstance(x, (float, np.floating)):
        two = round(2 * float(x))
        if abs(two - 2 * float(x)) > 1e-9:
            raise DomainError(f"{x!r} is not an integer or half-integer")
        return int(two)
    two = Fraction(x) * 2
    if two.denominator != 1:
        raise DomainError(f"{x!r} is not an integer or half-integer")
    return int(two)


def _check_sector(n: int, two_j: int, allow_above: bool = False) -> None:
    if n < 1:
        raise DomainError(f"n={n}: need at least one qubit")
    if (two_j - n) % 2:
        raise DomainError(f"j={two_j / 2}: parity does not match n={n}")
    upper = n + 2 if allow_above else n
    if two_j < n % 2 or two_j > upper:
        raise DomainError(f"j={two_j / 2} outside [{(n % 2) / 2}, {upper / 2}] for n={n}")


def _degeneracy_two_j(n: int, two_j: int) -> int:
    # d_j = C(n, n/2-j) - C(n, n/2-j-1)
    k = (n - two_j) // 2
    return math.comb(n, k) - (math.comb(n, k - 1) if k > 0 else 0)


def degeneracy(n: int, j) -> int:
    """Number of times the spin-j irrep occurs in n spin-1/2 particles.

    Computed exactly with Python integers for every ``n``; use
    :func:`log_degeneracy` when only the magnitude is needed.

    >>> degeneracy(4, 1)
    3
    """
    two_j = as_two_j(j)
    _check_sector(n, two_j)
    return _degeneracy_two_j(n, two_j)


def log_degeneracy(n: int, j) -> float:
    """Natural log of ``degeneracy(n, j)`` from log-factorials."""
    two_j = as_two_j(j)
    _check_sector(n, two_j)
    jj = two_j / 2
    return (math.log(2 * jj + 1) + gammaln(n + 1)
            - gammaln(n / 2 + jj + 2) - gammaln(n / 2 - jj + 1))


def multiplicity_tail(n: int, j) -> int:
    """Tail sum ``alpha_j = sum_{j' >= j} d_{j'}``; zero for ``j = n/2 + 1``."""
    two_j = as_two_j(j)
    _check_sector(n, two_j, allow_above=True)
    return sum(_degeneracy_two_j(n, t) for t in range(two_j, n + 1, 2))


@dataclass(frozen=True)
class IrrepTable:
    """Degeneracies and tail sums for all sectors of ``n`` qubits.

    Arrays are ordered by ascending j; entry ``s`` corresponds to
    ``two_j[s] = n % 2 + 2*s`` and the top sector ``j = n/2`` is last.
    """

    n: int
    two_j: np.ndarray
    d: tuple
    alpha: tuple
    log_d: np.ndarray
    log_alpha: np.ndarray
    log_binom: np.ndarray
    # alpha_{j+1} / d_j and alpha_j / d_j as correctly rounded floats
    tail_above_ratio: np.ndarray = field(repr=False)
    tail_ratio: np.ndarray = field(repr=False)

    @property
    def j_min(self) -> float:
        return (self.n % 2) / 2

    @property
    def n_sectors(self) -> int:
        return len(self.d)

    def index(self, j) -> int:
        two_j = as_two_j(j)
        _check_sector(self.n, two_j)
        return (two_j - self.n % 2) // 2


@lru_cache(maxsize=64)
def irrep_table(n: int) -> IrrepTable:
    if n < 1:
        raise DomainError(f"n={n}: need at least one qubit")
    two_j = np.arange(n % 2, n + 1, 2)
    d = tuple(_degeneracy_two_j(n, int(t)) for t in two_j)
    alpha = []
    acc = 0
    for dj in reversed(d):
        acc += dj
        alpha.append(acc)
    alpha = tuple(reversed(alpha))
    alpha_above = alpha[1:] + (0,)
    arrays = dict(
        two_j=two_j,
        log_d=np.array([math.log(x) for x in d]),
        log_alpha=np.array([math.log(x) for x in alpha]),
        log_binom=gammaln(n + 1) - gammaln(np.arange(n + 1) + 1) - gammaln(n - np.arange(n + 1) + 1),
        tail_above_ratio=np.array([float(Fraction(a, dj)) for a, dj in zip(alpha_above, d)]),
        tail_ratio=np.array([float(Fraction(a, dj)) for a, dj in zip(alpha, d)]),
    )
    for arr in arrays.values():
        arr.setflags(write=False)
    return IrrepTable(n=n, d=d, alpha=alpha, **arrays)


def mixing_coefficients_exact(n: int, two_j: int, two_m: int, two_mp: int):
    """Exact pieces of the dephasing-mixing coefficients.

    Returns ``(a, b_over_root, c_over_root)`` as Fractions, where
    ``b = b_over_root * sqrt((j^2-m^2)(j^2-m'^2))`` and
    ``c = c_over_root * sqrt(((j+1)^2-m^2)((j+1)^2-m'^2))``.
    """
    j = Fraction(two_j, 2)
    m = Fraction(two_m, 2)
    mp = Fraction(two_mp, 2)
    d = _degeneracy_two_j(n, two_j)
    tail = sum(_degeneracy_two_j(n, t) for t in range(two_j, n + 1, 2))
    tail_above = tail - d
    if two_j == 0:
        a = Fraction(0)
    else:
        a = m * mp / (2 * j) * (1 + (2 * j + 1) * Fraction(tail_above) / ((j + 1) * d))
    b = Fraction(0) if two_j == n % 2 else Fraction(tail) / (2 * j * d)
    c = Fraction(0) if two_j == n else Fraction(tail_above) / (2 * (j + 1) * d)
    return a, b, c


def mixing_coefficients(n: int, j, m, mp) -> tuple[float, float, float]:
    """Coefficients ``(a, b, c)`` of the single-qubit dephasing sum.

    For the averaged matrix unit ``X_j = avg |j,m><j,m'|``::

        sum_i sz_i X_j sz_i = 4 (a X_j + b X_{j-1} + c X_{j+1})

    ``b`` vanishes at the lowest sector and ``c`` at ``j = n/2``.
    """
    two_j, two_m, two_mp = as_two_j(j), as_two_j(m), as_two_j(mp)
    _check_sector(n, two_j)
    if abs(two_m) > two_j or abs(two_mp) > two_j or (two_m - two_j) % 2 or (two_mp - two_j) % 2:
        raise DomainError(f"m={two_m / 2}, m'={two_mp / 2} not valid projections for j={two_j / 2}")
    a, b_r, c_r = mixing_coefficients_exact(n, two_j, two_m, two_mp)
    jj, mm, mmp = Fraction(two_j, 2), Fraction(two_m, 2), Fraction(two_mp, 2)
    root_b = math.sqrt((jj * jj - mm * mm) * (jj * jj - mmp * mmp))
    root_c = math.sqrt(((jj + 1) ** 2 - mm * mm) * ((jj + 1) ** 2 - mmp * mmp))
    return float(a), float(b_r) * root_b, float(c_r) * root_c


@lru_cache(maxsize=16)
def mixing_arrays(n: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized ``(a, b, c)`` over sectors and all projection pairs.

    Each array has shape ``(n_sectors, n+1, n+1)`` indexed by
    ``[s, mu, mu']`` with ``m = mu - n/2``.  Entries with ``|m| > j`` or
    ``|m'| > j`` are zero.
    """
    table = irrep_table(n)
    j = (table.two_j / 2)[:, None, None]
    m = (np.arange(n + 1) - n / 2)[None, :, None]
    mp = (np.arange(n + 1) - n / 2)[None, None, :]
    valid = (np.abs(m) <= j) & (np.abs(mp) <= j)
    above = table.tail_above_ratio[:, None, None]
    tail = table.tail_ratio[:, None, None]
    jsafe = np.where(j > 0, j, 1.0)

    a = np.where(j > 0, m * mp / (2 * jsafe) * (1 + (2 * j + 1) * above / (j + 1)), 0.0)
    root_b = np.sqrt(np.clip(j * j - m * m, 0, None) * np.clip(j * j - mp * mp, 0, None))
    b = root_b * tail / (2 * jsafe)
    b[0] = 0.0
    root_c = np.sqrt(np.clip((j + 1) ** 2 - m * m, 0, None) * np.clip((j + 1) ** 2 - mp * mp, 0, None))
    c = root_c * above / (2 * (j + 1))
    a, b, c = (np.where(valid, x, 0.0) for x in (a, b, c))
    for arr in (a, b, c):
        arr.setflags(write=False)
    return a, b, c


@dataclass(frozen=True)
class SpinJOperators:
    """Dense spin-j matrices in the ``m = j, j-1, ..., -j`` (descending) basis."""

    j: float
    Jz: np.ndarray
    Jplus: np.ndarray
    Jminus: np.ndarray
    Jy: np.ndarray

    @property
    def Jx(self) -> np.ndarray:
        return (self.Jplus + self.Jminus) / 2


@lru_cache(maxsize=256)
def _spin_operators(two_j: int) -> SpinJOperators:
    j = two_j / 2
    m = np.arange(two_j, -two_j - 1, -2) / 2
    jz = np.diag(m).astype(complex)
    # <m+1|J+|m> lies on the superdiagonal in descending order
    jp = np.diag(np.sqrt(j * (j + 1) - m[1:] * (m[1:] + 1)), k=1).astype(complex)
    jm = jp.conj().T
    jy = (jp - jm) / 2j
    for arr in (jz, jp, jm, jy):
        arr.setflags(write=False)
    return SpinJOperators(j=j, Jz=jz, Jplus=jp, Jminus=jm, Jy=jy)


def spin_operators(j) -> SpinJOperators:
    """Spin-j operators; ``J+`` raises ``m`` by one with the usual positive
    matrix elements ``sqrt(j(j+1) - m(m+1))``."""
    two_j = as_two_j(j)
    if two_j < 0:
        raise DomainError(f"j={j}: spin must be non-negative")
    return _spin_operators(two_j)
