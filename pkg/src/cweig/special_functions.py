"""Bessel functions of the first kind, their zeros, and the Dirichlet spectrum of the unit disk.

Evaluation uses the ascending power series for small arguments and Miller's
backward recurrence (normalised with the Neumann sum
``J_0 + 2 * sum_k J_2k = 1``) elsewhere.  Zeros are bracketed with the
interlacing property ``j_{m-1,p} < j_{m,p} < j_{m-1,p+1}`` and polished with a
safeguarded Newton iteration.

Conventions
-----------
``bessel_j_prime(0, 0)`` returns ``0`` (``J_0'(0) = -J_1(0) = 0``); negative
arguments raise ``ValueError``.  Negative orders are not accepted; callers use
``J_{-n} = (-1)^n J_n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "DiskEigen",
    "bessel_j",
    "bessel_j_prime",
    "bessel_j_table",
    "bessel_ratio",
    "bessel_zero",
    "disk_spectrum",
    "disk_eigen_at",
]

# Above this the series loses too many digits to cancellation.
SERIES_MAX_X = 8.0
# Documented overflow bound for the scalar routines.
MAX_X = 1.0e4
_RESCALE = 1.0e150


def _series(n: int, x: float) -> float:
    half = 0.5 * x
    term = 1.0
    for k in range(1, n + 1):
        term *= half / k
        if term == 0.0:
            return 0.0
    total = term
    q = -half * half
    k = 0
    while True:
        k += 1
        term *= q / (k * (k + n))
        total += term
        if abs(term) <= 1e-17 * abs(total):
            break
    return total


def _miller_start(n_max: int, x_max: float) -> int:
    top = max(n_max, x_max)
    start = int(top + 25 + 2.5 * math.sqrt(top)) + 2
    return start + (start % 2)


def _miller_scalar(n: int, x: float) -> float:
    start = _miller_start(n, x)
    inv = 2.0 / x
    j_next, j_cur = 0.0, 1e-300
    norm = 0.0
    val = 0.0
    for k in range(start, 0, -1):
        j_next, j_cur = j_cur, k * inv * j_cur - j_next
        if k - 1 == n:
            val = j_cur
        if k > 1 and (k - 1) % 2 == 0:
            norm += 2.0 * j_cur
        if abs(j_cur) > _RESCALE:
            j_cur /= _RESCALE
            j_next /= _RESCALE
            norm /= _RESCALE
            val /= _RESCALE
    return val / (norm + j_cur)


def bessel_j_table(n_max: int, x) -> np.ndarray:
    """All orders ``J_0 .. J_{n_max}`` at the points ``x``.

    Returns an array of shape ``(n_max + 1,) + np.shape(x)``.  Vectorised
    Miller recurrence; accurate to a few ulps of ``max(|J_n|)`` for every
    order.  ``x`` must be non-negative.
    """
    x = np.asarray(x, dtype=float)
    if np.any(x < 0):
        raise ValueError("Bessel argument must be non-negative")
    shape = x.shape
    xf = x.ravel()
    out = np.zeros((n_max + 1, xf.size))
    if xf.size == 0:
        return out.reshape((n_max + 1,) + shape)
    zero = xf == 0.0
    xs = np.where(zero, 1.0, xf)
    start = _miller_start(n_max, float(xs.max()))
    j_next = np.zeros_like(xs)  # J_{k+1}
    j_cur = np.full_like(xs, 1e-300)  # J_k
    norm = np.zeros_like(xs)
    inv = 2.0 / xs
    for k in range(start, 0, -1):
        j_prev = k * inv * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        if k - 1 <= n_max:
            out[k - 1] = j_cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2.0 * j_cur
        big = np.abs(j_cur) > _RESCALE
        if np.any(big):
            s = np.where(big, 1.0 / _RESCALE, 1.0)
            j_cur *= s
            j_next *= s
            norm *= s
            out[: n_max + 1] *= s
    norm += j_cur  # J_0 term
    out /= norm
    out[:, zero] = 0.0
    out[0, zero] = 1.0
    return out.reshape((n_max + 1,) + shape)


def bessel_j(n: int, x: float) -> float:
    """``J_n(x)`` for integer ``n >= 0`` and ``0 <= x <= MAX_X``."""
    if n < 0:
        raise ValueError("order must be non-negative; use J_{-n} = (-1)^n J_n")
    x = float(x)
    if x < 0:
        raise ValueError("Bessel argument must be non-negative")
    if x > MAX_X:
        raise OverflowError(f"argument {x} beyond supported bound {MAX_X}")
    if x == 0.0:
        return 1.0 if n == 0 else 0.0
    if x <= SERIES_MAX_X:
        return _series(n, x)
    return _miller_scalar(n, x)


def bessel_j_prime(n: int, x: float) -> float:
    """``J_n'(x) = (J_{n-1}(x) - J_{n+1}(x)) / 2``."""
    if n < 0:
        raise ValueError("order must be non-negative")
    if x < 0:
        raise ValueError("Bessel argument must be non-negative")
    if n == 0:
        return -bessel_j(1, x)
    return 0.5 * (bessel_j(n - 1, x) - bessel_j(n + 1, x))


def bessel_ratio(n: int, x: float, pole_tol: float = 1e-12) -> float:
    """``J_n'(x) / J_n(x)`` for any integer ``n`` (the ratio is even in ``n``).

    Raises ``PoleError`` when ``|J_n(x)|`` is below ``pole_tol`` times the
    size of its neighbours ``J_{n-1}, J_{n+1}``; high orders at small ``x``
    are tiny but far from any zero, so an absolute threshold would misfire.
    """
    from .errors import PoleError

    n = abs(int(n))
    jn = bessel_j(n, x)
    jm = bessel_j(n - 1, x) if n > 0 else -bessel_j(1, x)
    jp = bessel_j(n + 1, x)
    if abs(jn) <= pole_tol * max(abs(jm), abs(jp)):
        raise PoleError(f"J_{n}({x}) = {jn:.3e} is at a zero")
    return 0.5 * (jm - jp) / jn


def _polish(m: int, lo: float, hi: float) -> float:
    """Root of J_m in the sign-change bracket [lo, hi]."""
    flo = bessel_j(m, lo)
    fhi = bessel_j(m, hi)
    if flo == 0.0:
        return lo
    if fhi == 0.0:
        return hi
    if flo * fhi > 0:
        raise ArithmeticError(f"no sign change of J_{m} on [{lo}, {hi}]")
    x = 0.5 * (lo + hi)
    for _ in range(200):
        fx = bessel_j(m, x)
        if fx == 0.0:
            return x
        if (fx > 0) == (flo > 0):
            lo, flo = x, fx
        else:
            hi = x
        d = bessel_j_prime(m, x)
        step = fx / d if d != 0 else math.inf
        xn = x - step
        if not (lo < xn < hi):
            xn = 0.5 * (lo + hi)
        if abs(xn - x) <= 1e-15 * x or hi - lo <= 4e-16 * x:
            return xn
        x = xn
    return x


@lru_cache(maxsize=None)
def bessel_zero(m: int, p: int) -> float:
    """The ``p``-th positive zero ``j_{m,p}`` of ``J_m`` (``m <= 60``, ``p <= 30`` documented)."""
    if m < 0 or p < 1:
        raise ValueError("need m >= 0 and p >= 1")
    if m == 0:
        beta = (p - 0.25) * math.pi
        # McMahon: j_{0,p} = beta + 1/(8 beta) - ..., zeros are ~pi apart.
        guess = beta + 1.0 / (8.0 * beta)
        return _polish(0, guess - 0.3, guess + 0.3)
    return _polish(m, bessel_zero(m - 1, p), bessel_zero(m - 1, p + 1))


@dataclass(frozen=True)
class DiskEigen:
    """Dirichlet eigenvalue ``j_{m,p}^2`` of the unit disk."""

    m: int
    p: int
    j: float
    h_indices: tuple[int, ...]

    @property
    def lam(self) -> float:
        return self.j * self.j

    @property
    def multiplicity(self) -> int:
        return 1 if self.m == 0 else 2

    @property
    def h(self) -> int:
        return self.h_indices[0]

    @property
    def is_double(self) -> bool:
        return self.m > 0


def _pairs_below(bound: float) -> list[tuple[float, int, int]]:
    pairs = []
    m = 0
    while bessel_zero(m, 1) < bound:
        p = 1
        while True:
            j = bessel_zero(m, p)
            if j >= bound:
                break
            pairs.append((j, m, p))
            p += 1
        m += 1
    pairs.sort()
    return pairs


@lru_cache(maxsize=8)
def _spectrum(h_max: int) -> tuple[DiskEigen, ...]:
    # Weyl: N(j^2) ~ j^2/4 for the unit disk; grow the bound until covered.
    bound = 2.0 * math.sqrt(h_max) + 6.0
    while True:
        pairs = _pairs_below(bound)
        count = sum(1 if m == 0 else 2 for _, m, _ in pairs)
        if count >= h_max + 2:
            break
        bound += 4.0
    out = []
    h = 1
    for j, m, p in pairs:
        if h > h_max:
            break
        mult = 1 if m == 0 else 2
        out.append(DiskEigen(m, p, j, tuple(range(h, h + mult))))
        h += mult
    return tuple(out)


def disk_spectrum(h_max: int) -> list[DiskEigen]:
    """Disk eigenvalues sorted by ``j`` covering indices ``1..h_max``.

    A double eigenvalue occupies two consecutive indices; if ``h_max`` is the
    first index of a pair the whole pair is returned.
    """
    if h_max < 1:
        raise ValueError("h_max must be >= 1")
    return list(_spectrum(int(h_max)))


def disk_eigen_at(h: int) -> DiskEigen:
    """The disk eigenvalue occupying index ``h``."""
    for e in disk_spectrum(h):
        if h in e.h_indices:
            return e
    raise AssertionError("unreachable")
