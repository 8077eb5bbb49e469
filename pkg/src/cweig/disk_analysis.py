"""Second-order shape analysis of Dirichlet eigenvalues of the unit disk under width-preserving deformations.

A width-preserving deformation adds ``phi`` to the support function, where
``phi`` only has odd harmonics.  In exponential form
``phi = sum_n c_n e^{i n theta}`` with ``c_n = (a_n - i b_n) / 2`` and
``c_{-n} = conj(c_n)``; ``c_1`` is fixed to zero (translations).

For a simple eigenvalue ``j_{0,p}^2`` the second derivative is diagonal in
the harmonics.  For a double eigenvalue ``j_{m,p}^2`` the pair splits as
``L1 -/+ |L2|`` where ``L1`` collects the squared moduli and ``L2`` the mixed
products ``c_{m-l} c_{m+l}``.

:func:`classify_disk` decides, for every index ``h``, whether the disk is a
weak local minimiser of ``lambda_h`` among bodies of the same constant width.
Every decision is backed either by an explicit deformation that makes the
second derivative negative, or by a lower bound on the quadratic form whose
coefficients are scanned up to a horizon and closed with a monotone-tail
certificate (``J_n(x) > 0`` whenever ``n >= x``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping

import numpy as np

from .errors import PoleError, UncertifiedTail
from .special_functions import (
    DiskEigen,
    bessel_j,
    bessel_ratio,
    bessel_zero,
    disk_spectrum,
)

SCAN_HORIZON = 40
POLE_TOL = 1e-12

WEAK_MIN = "weak-local-min"
NOT_WEAK_MIN = "not-weak-local-min"


# --------------------------------------------------------------------------
# deformations


@dataclass(frozen=True)
class DeformationCoeffs:
    """Odd-harmonic perturbation ``phi`` of the support function.

    ``entries`` maps odd ``k >= 3`` to the complex coefficient ``c_k``; the
    negative frequencies are the conjugates.
    """

    entries: Mapping[int, complex] = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for k, c in dict(self.entries).items():
            k = int(k)
            if k < 3 or k % 2 == 0:
                raise ValueError(f"harmonic {k} is not an admissible odd index >= 3")
            if c != 0:
                clean[k] = complex(c)
        object.__setattr__(self, "entries", clean)

    @classmethod
    def from_cos_sin(cls, coeffs: Mapping[int, tuple[float, float]]) -> "DeformationCoeffs":
        """From real pairs ``(a_k, b_k)`` of ``a cos k theta + b sin k theta``."""
        return cls({k: complex(a, -b) / 2.0 for k, (a, b) in coeffs.items()})

    def cos_sin(self) -> dict[int, tuple[float, float]]:
        return {k: (2.0 * c.real, -2.0 * c.imag) for k, c in self.entries.items()}

    def c(self, n: int) -> complex:
        """Coefficient of ``e^{i n theta}`` for any integer ``n``."""
        if n >= 0:
            return self.entries.get(n, 0j)
        return self.entries.get(-n, 0j).conjugate()

    def __call__(self, theta):
        theta = np.asarray(theta, dtype=float)
        out = np.zeros(theta.shape)
        for k, (a, b) in self.cos_sin().items():
            out = out + a * np.cos(k * theta) + b * np.sin(k * theta)
        return out

    def scaled(self, s: float) -> "DeformationCoeffs":
        return DeformationCoeffs({k: s * c for k, c in self.entries.items()})

    def sq_norm(self) -> float:
        """``sum_n |c_n|^2`` over both signs of ``n`` (``= ||phi||^2 / 2 pi``)."""
        return 2.0 * sum(abs(c) ** 2 for c in self.entries.values())

    @property
    def is_zero(self) -> bool:
        return not self.entries

    @property
    def max_k(self) -> int:
        return max(self.entries, default=1)


def unit_mode(k: int, c: complex = 1.0) -> DeformationCoeffs:
    return DeformationCoeffs({k: c})


# --------------------------------------------------------------------------
# coefficient families


@lru_cache(maxsize=None)
def _ratio(n: int, m: int, p: int) -> float:
    """``J_n'(j_{m,p}) / J_n(j_{m,p})``; even in ``n``."""
    return bessel_ratio(abs(n), bessel_zero(m, p), POLE_TOL)


def p_simple(N: int, x: float) -> float:
    """``P_N(x) = 1 + N^2 + 2 x J_N'(x) / J_N(x)``."""
    return 1.0 + N * N + 2.0 * x * bessel_ratio(N, x, POLE_TOL)


def p_simple_recursive(N: int, x: float) -> float:
    """``P_N(x)`` from ``P_1`` via ``P_{n+1} = n^2 + 4 x^2 / ((n+1)^2 - P_n)``."""
    val = p_simple(1, x)
    for n in range(1, N):
        val = n * n + 4.0 * x * x / ((n + 1) ** 2 - val)
    return val


def second_derivative_simple(p: int, phi: DeformationCoeffs) -> float:
    """``lambda''`` of the simple eigenvalue ``j_{0,p}^2`` along ``phi``."""
    j = bessel_zero(0, p)
    total = 0.0
    for k, (a, b) in phi.cos_sin().items():
        total += p_simple(k, j) * (a * a + b * b)
    return j * j * total


def coeff_p1(k: int, p: int) -> float:
    """``P_{1,p}(k)``."""
    j = bessel_zero(1, p)
    return 8 * k * k + 8 * k + 4 + 2 * j * (_ratio(2 * k, 1, p) + _ratio(2 * k + 2, 1, p))


def coeff_q1(k: int, p: int) -> float:
    """``Q_{1,p}(k)``."""
    j = bessel_zero(1, p)
    return 4 * k * k + 2 * j * _ratio(2 * k, 1, p)


def coeff_pm(m: int, p: int, k: int) -> float:
    """``P_{m,p}(k)``, weight of ``|c_{2k+1}|^2`` in the non-mixed part."""
    j = bessel_zero(m, p)
    n = 2 * k + 1
    return 8 * k * k + 8 * k + 4 + 2 * j * (_ratio(n + m, m, p) + _ratio(n - m, m, p))


def coeff_rm(m: int, p: int, ell: int) -> float:
    """``R_{m,p}(l)``, weight of ``c_{m-l} c_{m+l}`` in the mixed part (``l != +-m``)."""
    if abs(ell) == m:
        raise PoleError(f"R_{{m,p}} undefined at l = +-m (m={m})")
    j = bessel_zero(m, p)
    return ell * ell - m * m + 1 + 2 * j * _ratio(ell, m, p)


def lemma_thresholds(m: int) -> tuple[float, float, float]:
    """``(alpha_m, beta_m, gamma_m)`` bounding the sign of ``P_{m,p}(1)``."""
    alpha = 2.0 * (m * m - 4) * (m * m - 1) / (2 * m * m + 1)
    return alpha, 4.0 * (m - 2) * (m - 1), 4.0 * (m + 2) * (m + 1)


def coeff_pm1_closed(m: int, p: int) -> float:
    """Closed form of ``P_{m,p}(1)`` as a rational function of ``j_{m,p}^2``."""
    y2 = bessel_zero(m, p) ** 2
    return 64.0 * (2 * (m * m - 4) * (m * m - 1) - y2 * (2 * m * m + 1)) / (
        (4 * (m + 2) * (m + 1) - y2) * (4 * (m - 2) * (m - 1) - y2)
    )


# --------------------------------------------------------------------------
# second derivatives at the disk


def _mixed_sum(m: int, p: int, phi: DeformationCoeffs) -> complex:
    """``sum_l R_{m,p}(l) c_{m-l} c_{m+l}`` (finite for finite ``phi``)."""
    K = phi.max_k
    total = 0j
    for ell in range(-(K + m), K + m + 1):
        if abs(ell) == m:
            continue
        cl = phi.c(m - ell)
        if cl == 0:
            continue
        cr = phi.c(m + ell)
        if cr == 0:
            continue
        total += coeff_rm(m, p, ell) * cl * cr
    return total


def second_derivative_double(m: int, p: int, phi: DeformationCoeffs) -> tuple[float, float]:
    """``(L1, |L2|)`` for the double eigenvalue ``j_{m,p}^2`` (``m >= 1``).

    Along ``phi`` the ordered pair has second derivatives ``L1 - |L2|``
    (lower index ``h``) and ``L1 + |L2|`` (upper index ``h + 1``).
    """
    if m < 1:
        raise ValueError("double eigenvalues need m >= 1")
    j2 = bessel_zero(m, p) ** 2
    l1 = sum(
        coeff_pm(m, p, (k - 1) // 2) * abs(c) ** 2 for k, c in phi.entries.items()
    )
    l2 = _mixed_sum(m, p, phi)
    return 2.0 * j2 * l1, 2.0 * j2 * abs(l2)


def second_derivative_m1(p: int, phi: DeformationCoeffs) -> tuple[float, float]:
    """``(L1, |L2|)`` for ``j_{1,p}^2`` from the ``P_{1,p}``/``Q_{1,p}`` expansion.

    Independent route to :func:`second_derivative_double` at ``m = 1``.
    """
    j2 = bessel_zero(1, p) ** 2
    l1 = sum(coeff_p1((k - 1) // 2, p) * abs(c) ** 2 for k, c in phi.entries.items())
    l2 = 0j
    for k in range(1, (phi.max_k + 1) // 2 + 1):
        l2 += coeff_q1(k, p) * phi.c(1 + 2 * k) * phi.c(1 - 2 * k)
    return 2.0 * j2 * l1, 2.0 * j2 * abs(2.0 * l2)


def second_derivative_at(eigen: DiskEigen, h: int, phi: DeformationCoeffs) -> float:
    """``lambda_h''`` at the disk along ``phi`` for the index ``h`` of ``eigen``."""
    if eigen.m == 0:
        return second_derivative_simple(eigen.p, phi)
    l1, l2 = second_derivative_double(eigen.m, eigen.p, phi)
    return l1 - l2 if h == eigen.h_indices[0] else l1 + l2


def first_derivative_disk(eigen: DiskEigen, phi: DeformationCoeffs, n_nodes: int = 512):
    """Hadamard first derivative at the disk, by trapezoidal quadrature.

    Returns a float for ``m = 0`` and the 2x2 matrix of the pair otherwise.
    """
    th = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    w = 2.0 * np.pi / n_nodes
    vn = phi(th)
    j2 = eigen.j ** 2
    if eigen.m == 0:
        # |grad u|^2 = j^2 / pi on the unit circle for the normalised radial mode
        return float(-w * np.sum(j2 / np.pi * vn))
    m = eigen.m
    g1 = np.sqrt(2.0 / np.pi) * eigen.j * np.cos(m * th)
    g2 = np.sqrt(2.0 / np.pi) * eigen.j * np.sin(m * th)
    G = np.stack([g1, g2])
    return -w * (G * vn) @ G.T


# --------------------------------------------------------------------------
# classification


@dataclass(frozen=True)
class Verdict:
    h: int
    eigen: DiskEigen
    status: str
    witness: str
    case_tag: str
    direction: DeformationCoeffs | None = None

    @property
    def is_weak_min(self) -> bool:
        return self.status == WEAK_MIN


def wlm2_case(m: int, p: int) -> str:
    """Case label of the double-eigenvalue analysis for ``(m, p)``."""
    if m == 0:
        return "simple"
    if m == 1:
        return "m=1"
    if (m, p) in {(2, 1), (3, 1), (4, 1), (5, 1), (5, 2), (6, 2)}:
        return "case 1"
    if m == 3:
        return "case 3"
    if (m, p) == (6, 1):
        return "case 4"
    if (m, p) in {(7, 1), (7, 2)}:
        return "case 7"
    if m == 8:
        return "case 5"
    if m >= 9:
        return "case 6"
    return "case 2"


def _tol(*vals: float) -> float:
    return 1e-8 * (1.0 + max(abs(v) for v in vals))


@dataclass
class _Scan:
    """Coefficient tables of one double eigenvalue up to the scan horizon."""

    m: int
    p: int
    K: int

    def __post_init__(self):
        m, p, K = self.m, self.p, self.K
        self.x = bessel_zero(m, p)
        self.P = {k: coeff_pm(m, p, k) for k in range(1, K + 1)}
        top = 2 * K + 1 + 3 * m + 2
        self.R = {}
        for n in range(0, top + 1):
            if (n + m) % 2 == 1 and n != m:
                self.R[n] = coeff_rm(m, p, n)

    def r(self, ell: int) -> float:
        return self.R[abs(ell)]

    def young_weights(self, upper: bool) -> dict[int, float]:
        """Coefficients ``w_k`` with ``L1 -/+ |L2| >= 2 j^2 sum_k w_k |c_{2k+1}|^2``.

        Mixed terms pairing with ``c_{+-1}`` vanish under the translation gauge.
        """
        m = self.m
        w = dict(self.P)

        def ok(n: int) -> bool:
            n = abs(n)
            return n >= 3 and n % 2 == 1

        # l = 0 couples c_m with itself
        if m % 2 == 1 and ok(m):
            k0 = (m - 1) // 2
            if k0 in w:
                w[k0] += abs(self.r(0)) if upper else -abs(self.r(0))
        for ell in range(1, 2 * self.K + 2 * m + 3):
            if ell == m or (ell + m) % 2 == 0:
                continue
            i, j = abs(m - ell), m + ell
            if not (ok(i) and ok(j)):
                continue
            rv = abs(self.r(ell))
            for n in (i, j):
                k = (n - 1) // 2
                if k in w:
                    w[k] -= rv
        return w

    def r_tail_certified(self) -> bool:
        """``R`` is non-negative and increasing for every ``|l|`` past the horizon."""
        top = max(self.R)
        # differences are 4(N+1) J_{N+1}^2 / (J_{N+2} J_N) > 0 once N >= x
        start = [n for n in self.R if n >= self.x and n >= 2 * self.K + 1 - self.m - 2]
        if not start:
            return False
        n0 = min(start)
        return all(self.R[n] >= 0 for n in self.R if n0 <= n <= top)

    def p_tail_certified(self) -> bool:
        return 2 * self.K + 1 - self.m >= self.x and self.P[self.K] >= 0

    def lower_form(self) -> np.ndarray:
        """Real symmetric matrix of ``L1 + Re(L2)`` (``q = 1``) on modes ``k = 1..K``.

        Variables are ``(Re c_{2k+1}, Im c_{2k+1})`` for ``k = 1..K``; the
        normalisation drops the common factor ``2 j^2``.
        """
        m, K = self.m, self.K
        n_var = 2 * K
        A = np.zeros((n_var, n_var))

        def vec(n: int) -> np.ndarray | None:
            an = abs(n)
            if an < 3 or an % 2 == 0 or (an - 1) // 2 > K:
                return None
            k = (an - 1) // 2
            u = np.zeros(n_var, dtype=complex)
            u[2 * (k - 1)] = 1.0
            u[2 * (k - 1) + 1] = 1j if n > 0 else -1j
            return u

        for k in range(1, K + 1):
            A[2 * (k - 1), 2 * (k - 1)] += self.P[k]
            A[2 * (k - 1) + 1, 2 * (k - 1) + 1] += self.P[k]
        for ell in range(-(2 * K + 1 + m), 2 * K + 2 + m):
            if abs(ell) == m or (ell + m) % 2 == 0:
                continue
            ui, uj = vec(m - ell), vec(m + ell)
            if ui is None or uj is None:
                continue
            B = self.r(ell) * np.outer(ui, uj)
            A += 0.5 * (B + B.T).real
        return A


def _mode_phi(n: int) -> DeformationCoeffs:
    return unit_mode(n, 1.0)


def _vector_to_phi(v: np.ndarray) -> DeformationCoeffs:
    entries = {}
    for k in range(1, len(v) // 2 + 1):
        c = complex(v[2 * (k - 1)], v[2 * (k - 1) + 1])
        if abs(c) > 1e-14:
            entries[2 * k + 1] = c
    return DeformationCoeffs(entries)


def _classify_simple(eigen: DiskEigen, K: int) -> Verdict:
    x = eigen.j
    P = {k: p_simple(2 * k + 1, x) for k in range(1, K + 1)}
    tag = "simple"
    for k, v in P.items():
        if v < -_tol(v):
            return Verdict(
                eigen.h, eigen, NOT_WEAK_MIN, f"P_{2 * k + 1}(j_0,{eigen.p}) = {v:.6g} < 0", tag,
                _mode_phi(2 * k + 1),
            )
    # P_{N+2} - P_N = 4(N+1) J_{N+1}^2 / (J_{N+2} J_N) > 0 once N >= x
    if 2 * K + 1 < x:
        raise UncertifiedTail(f"horizon too short for j_0,{eigen.p}")
    return Verdict(eigen.h, eigen, WEAK_MIN, "P_{2k+1} >= 0 for all k >= 1", tag)


def _classify_double(eigen: DiskEigen, K: int) -> list[Verdict]:
    m, p = eigen.m, eigen.p
    h_lo, h_hi = eigen.h_indices
    tag = wlm2_case(m, p)
    s = _Scan(m, p, K)
    name = f"_{m},{p}"

    # a single off-diagonal mode with P(k) < 0 lowers both eigenvalues
    for k, v in s.P.items():
        if 2 * k + 1 != m and v < -_tol(v):
            w = f"P{name}({k}) = {v:.6g} < 0 at k={k}"
            phi = _mode_phi(2 * k + 1)
            return [
                Verdict(h_lo, eigen, NOT_WEAK_MIN, w, tag, phi),
                Verdict(h_hi, eigen, NOT_WEAK_MIN, w, tag, phi),
            ]

    lower = upper = None
    if m % 2 == 1 and m >= 3:
        k0 = (m - 1) // 2
        pk, r0 = s.P[k0], s.r(0)
        phi = _mode_phi(m)
        if pk + abs(r0) < -_tol(pk, r0):
            w = f"P{name}({k0}) + |R{name}(0)| = {pk + abs(r0):.6g} < 0"
            return [
                Verdict(h_lo, eigen, NOT_WEAK_MIN, w, tag, phi),
                Verdict(h_hi, eigen, NOT_WEAK_MIN, w, tag, phi),
            ]
        if pk - abs(r0) < -_tol(pk, r0):
            lower = Verdict(
                h_lo, eigen, NOT_WEAK_MIN, f"P{name}({k0}) - |R{name}(0)| = {pk - abs(r0):.6g} < 0",
                tag, phi,
            )

    r_tail = s.r_tail_certified()
    if lower is None:
        wl = s.young_weights(upper=False)
        if r_tail and all(v >= -_tol(v, s.P[k]) for k, v in wl.items()):
            lower = Verdict(h_lo, eigen, WEAK_MIN, "Young bound: L1 - |L2| >= 0", tag)
        else:
            A = s.lower_form()
            evals, evecs = np.linalg.eigh(A)
            if evals[0] < -_tol(evals[0]):
                phi = _vector_to_phi(evecs[:, 0])
                lower = Verdict(
                    h_lo, eigen, NOT_WEAK_MIN,
                    f"L1 + Re L2 has negative eigenvalue {evals[0]:.6g} (modes {sorted(phi.entries)})",
                    tag, phi,
                )

    if lower is not None and lower.is_weak_min:
        upper = Verdict(h_hi, eigen, WEAK_MIN, "L1 + |L2| >= L1 - |L2| >= 0", tag)
    else:
        wu = s.young_weights(upper=True)
        if all(v >= -_tol(v, s.P[k]) for v, k in ((v, k) for k, v in wu.items())) and r_tail:
            upper = Verdict(h_hi, eigen, WEAK_MIN, "Young bound: L1 + |L2| >= 0", tag)
        elif all(v >= -_tol(v) for v in s.P.values()) and s.p_tail_certified():
            upper = Verdict(h_hi, eigen, WEAK_MIN, f"P{name}(k) >= 0 for all k, so L1 >= 0", tag)

    if lower is None or upper is None:
        raise UncertifiedTail(f"could not decide the sign for (m, p) = ({m}, {p})")
    return [lower, upper]


def classify_eigen(eigen: DiskEigen, horizon: int = SCAN_HORIZON) -> list[Verdict]:
    """Verdicts for every index occupied by ``eigen``."""
    if eigen.m == 0:
        return [_classify_simple(eigen, horizon)]
    return _classify_double(eigen, horizon)


def classify_disk(h_max: int = 50, horizon: int = SCAN_HORIZON) -> list[Verdict]:
    """One verdict per index ``h = 1..h_max``."""
    if not 1 <= h_max <= 50:
        raise ValueError("h_max must be in 1..50")
    out = []
    for eigen in disk_spectrum(h_max):
        out.extend(classify_eigen(eigen, horizon))
    return [v for v in out if v.h <= h_max]


def weak_min_indices(h_max: int = 50) -> list[int]:
    return [v.h for v in classify_disk(h_max) if v.is_weak_min]
