"""Dirichlet eigenvalues of smooth star-shaped domains by the method of particular solutions.

Trial functions are Fourier-Bessel modes ``J_m(k r) cos(m phi)``,
``J_m(k r) sin(m phi)`` about the origin, which for the shapes of this package
is the Steiner point.  At a trial ``lambda = k^2`` the basis is sampled on the
boundary nodes and on interior points, orthonormalised (QR), and the smallest
singular value ``sigma(lambda)`` of the boundary block measures how well a
function with unit interior size can vanish on the boundary.  Eigenvalues are
the zeros of ``sigma``, located by a sweep followed by Brent refinement.

Eigenfunctions are normalised with the Rellich identity
``int (d_n u)^2 (x . n) ds = 2 lambda int u^2`` so only boundary data is needed;
on a support-function grid ``x . n = f`` and ``ds = R dtheta``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg as la
from scipy.optimize import minimize_scalar

from .errors import IllConditioned, MissedEigenvalue
from .geometry import BoundaryGrid, SupportShape, area_perimeter, inradius, sample_boundary
from .special_functions import bessel_j_table, bessel_zero

SIMPLE = "simple"
DOUBLE = "double"




@dataclass(frozen=True)
class SolverOptions:
    basis_size: int = 60  # Bessel orders 0..basis_size, 2*basis_size+1 functions
    n_collocation: int = 256  # raised to 4*basis_size if smaller
    n_boundary: int = 512  # trace grid
    n_interior: int | None = None  # default 2*basis_size
    interior_radius: float = 0.5  # fraction of the inradius
    rtol: float = 1e-12  # refinement tolerance on lambda (relative)
    gap_tol: float = 1e-5  # relative gap below which two eigenvalues count as double
    residual_tol: float = 1e-2  # largest sigma accepted at an eigenvalue
    sweep_factor: float = 0.4
    seed: int = 1234

    def __post_init__(self):
        if self.basis_size < 20:
            raise ValueError("basis_size must be >= 20")

    @property
    def n_coll(self) -> int:
        return max(self.n_collocation, 4 * self.basis_size)

    @property
    def n_int(self) -> int:
        return self.n_interior if self.n_interior is not None else 2 * self.basis_size


@dataclass
class EigenResult:
    lam: float
    h: int
    multiplicity: str
    trace: np.ndarray  # (n_eig, n_boundary): d_n u of L2-normalised eigenfunctions in the cluster
    residual: float
    grid: BoundaryGrid = field(repr=False)
    coeffs: np.ndarray = field(repr=False, default=None)
    cluster: tuple[int, ...] = ()  # indices sharing this (near-)double eigenvalue

    @property
    def is_simple(self) -> bool:
        return self.multiplicity == SIMPLE

    def rellich(self) -> np.ndarray:
        """``int (d_n u)^2 (x . n) ds`` per eigenfunction; equals ``2 lam`` when normalised."""
        return (self.trace**2) @ (self.grid.support * self.grid.weights)


def _trig_rows(M: int, phi: np.ndarray) -> np.ndarray:
    """Rows ``1, cos phi, sin phi, cos 2phi, ...`` (``2M+1`` rows)."""
    t = np.empty((2 * M + 1, len(phi)))
    t[0] = 1.0
    mphi = np.multiply.outer(np.arange(1, M + 1), phi)
    t[1::2] = np.cos(mphi)
    t[2::2] = np.sin(mphi)
    return t


class ParticularSolutions:
    """Fourier-Bessel particular-solution system for one shape."""

    def __init__(self, shape: SupportShape, opts: SolverOptions | None = None,
                 grid: BoundaryGrid | None = None):
        self.shape = shape
        self.opts = opts = opts or SolverOptions()
        M = opts.basis_size
        self.orders = np.concatenate([[0], np.repeat(np.arange(1, M + 1), 2)])
        coll = grid if grid is not None else sample_boundary(shape, opts.n_coll)
        if coll.size < 4 * M:
            raise ValueError(f"collocation grid needs >= {4 * M} nodes")
        self.grid = sample_boundary(shape, opts.n_boundary)
        rng = np.random.default_rng(opts.seed)
        n_int = opts.n_int
        rad = opts.interior_radius * inradius(shape) * np.sqrt(rng.random(n_int))
        ang = 2.0 * np.pi * rng.random(n_int)
        pts = np.vstack([coll.points, np.stack([rad * np.cos(ang), rad * np.sin(ang)], 1)])
        self.n_b = coll.size
        self.r = np.hypot(pts[:, 0], pts[:, 1])
        self.trig = _trig_rows(M, np.arctan2(pts[:, 1], pts[:, 0])).T
        # trace grid: polar data and normal components of r-hat, phi-hat
        P = self.grid.points
        self.r_t = np.hypot(P[:, 0], P[:, 1])
        ph = np.arctan2(P[:, 1], P[:, 0])
        self.trig_t = _trig_rows(M, ph)
        n = self.grid.normals
        self.n_r = n[:, 0] * np.cos(ph) + n[:, 1] * np.sin(ph)
        self.n_phi = -n[:, 0] * np.sin(ph) + n[:, 1] * np.cos(ph)

    @property
    def n_basis(self) -> int:
        return len(self.orders)

    def _factor(self, lam: float):
        if not lam > 0:
            raise ValueError("trial eigenvalue must be positive")
        J = bessel_j_table(self.opts.basis_size, math.sqrt(lam) * self.r)
        A = J[self.orders].T * self.trig
        # column scaling does not change the spanned subspace
        scale = np.sqrt(np.einsum("ij,ij->j", A, A))
        scale[scale == 0] = 1.0
        A /= scale
        Q, R, piv = la.qr(A, mode="economic", pivoting=True, overwrite_a=True, check_finite=False)
        d = np.abs(np.diag(R))
        rank = int((d > d[0] * 1e-13).sum())
        if rank < self.n_basis // 2:
            raise IllConditioned(f"rank {rank} of {self.n_basis} at lambda={lam:.6g}")
        return Q[:, :rank], R[:rank, :rank], piv[:rank], scale

    def sigmas(self, lam: float, count: int = 2) -> np.ndarray:
        """Smallest ``count`` singular values of the boundary block, ascending."""
        Q = self._factor(lam)[0]
        s = la.svd(Q[: self.n_b], compute_uv=False, check_finite=False)
        return s[::-1][:count]

    def sigma(self, lam: float) -> float:
        return float(self.sigmas(lam, 1)[0])

    def modes(self, lam: float, count: int = 1):
        """Basis coefficients of the ``count`` best boundary-vanishing functions, and their sigmas."""
        Q, R, piv, scale = self._factor(lam)
        _, s, Vt = la.svd(Q[: self.n_b], full_matrices=False, check_finite=False)
        Y = la.solve_triangular(R, Vt[::-1][:count].T)
        coeffs = np.zeros((self.n_basis, count))
        coeffs[piv] = Y
        coeffs /= scale[:, None]
        return coeffs.T, s[::-1][:count]

    def evaluate(self, lam: float, coeffs: np.ndarray, pts: np.ndarray) -> np.ndarray:
        """Values at points ``(n, 2)`` of the expansions with coefficient rows ``coeffs``."""
        pts = np.asarray(pts, dtype=float)
        J = bessel_j_table(self.opts.basis_size, math.sqrt(lam) * np.hypot(pts[:, 0], pts[:, 1]))
        B = J[self.orders] * _trig_rows(self.opts.basis_size, np.arctan2(pts[:, 1], pts[:, 0]))
        return np.atleast_2d(coeffs) @ B

    def normal_derivative(self, lam: float, coeffs: np.ndarray) -> np.ndarray:
        """``d_n u`` on the trace grid for each coefficient row."""
        k = math.sqrt(lam)
        M = self.opts.basis_size
        r = self.r_t
        J = bessel_j_table(M + 1, k * r)
        Jp = np.empty((M + 1, len(r)))
        Jp[0] = -J[1]
        Jp[1:] = 0.5 * (J[:-2] - J[2:])
        t = self.trig_t
        dt = np.zeros_like(t)  # d/dphi of the trig rows
        dt[1::2] = -self.orders[1::2, None] * t[2::2]
        dt[2::2] = self.orders[2::2, None] * t[1::2]
        G = (k * Jp[self.orders] * t) * self.n_r + (J[self.orders] * dt / r) * self.n_phi
        return np.atleast_2d(coeffs) @ G

    def interior_norm(self, lam: float, coeffs: np.ndarray, n_radial: int = 40) -> np.ndarray:
        """``int_Omega u^2`` by quadrature on the star-shaped map ``(s, theta) -> s M(theta)``.

        The Jacobian is ``s f(theta) R(theta)``; Gauss-Legendre in ``s``, trapezoid in ``theta``.
        """
        g = self.grid
        x, w = np.polynomial.legendre.leggauss(n_radial)
        s = 0.5 * (x + 1.0)
        w = 0.5 * w
        pts = (s[:, None, None] * g.points[None, :, :]).reshape(-1, 2)
        u = self.evaluate(lam, coeffs, pts).reshape(-1, n_radial, g.size)
        jac = (w * s)[:, None] * (g.support * g.weights)[None, :]
        return np.einsum("eij,ij->e", u * u, jac)


@dataclass
class _Located:
    lam: float
    sigma: float
    degenerate: bool = False  # two eigenfunctions at one numerically identical lambda


class DirichletSolver:
    """Sweep-and-refine eigenvalue search on one shape."""

    def __init__(self, shape: SupportShape, opts: SolverOptions | None = None):
        self.shape = shape
        self.opts = opts or SolverOptions()
        self.ps = ParticularSolutions(shape, self.opts)
        self.scale = (2.0 / shape.width) ** 2
        self._disk = None

    # sweep step from the gaps of the disk spectrum of the same width
    def step(self, lam: float) -> float:
        if self._disk is None or lam > self._disk[-3]:
            h = 60 if self._disk is None else 2 * len(self._disk)
            from .special_functions import disk_spectrum
            self._disk = np.array([e.lam for e in disk_spectrum(h)]) * self.scale
        e = self._disk
        i = int(np.clip(np.searchsorted(e, lam), 1, len(e) - 2))
        gap = min(e[i] - e[i - 1], e[i + 1] - e[i])
        return float(np.clip(self.opts.sweep_factor * gap, 0.1 * self.scale, 1.0 * self.scale))

    def _refine(self, lo: float, hi: float, mid: float | None = None) -> tuple[float, float]:
        """Minimise ``sigma^2`` (smooth near a simple zero of sigma) on ``[lo, hi]``."""
        f = lambda t: self.ps.sigma(t) ** 2  # noqa: E731
        if mid is not None:
            fm = f(mid)
            if fm < f(lo) and fm < f(hi):
                res = minimize_scalar(f, bracket=(lo, mid, hi), method="brent",
                                      options={"xtol": self.opts.rtol})
                if lo < res.x < hi:
                    return float(res.x), math.sqrt(max(res.fun, 0.0))
        res = minimize_scalar(f, bounds=(lo, hi), method="bounded",
                              options={"xatol": self.opts.rtol * hi})
        return float(res.x), math.sqrt(max(res.fun, 0.0))

    def _resolve(self, lo: float, mid: float, hi: float) -> list[_Located]:
        """Eigenvalue(s) behind a local minimum of sigma at ``mid``."""
        step = 0.5 * (hi - lo)
        lam, sa = self._refine(lo, hi, mid)
        if sa > self.opts.residual_tol:
            return []
        s2 = self.ps.sigmas(lam, 2)[1]
        eta = 0.05 * step
        slope = 0.5 * (self.ps.sigma(lam + eta) + self.ps.sigma(lam - eta)) / eta
        d_est = s2 / slope
        if d_est < 0.1 * self.opts.gap_tol * lam or s2 < 3.0 * sa:
            # second function as good as the first: a pair below the resolution
            return [_Located(lam, sa, degenerate=True)]
        if d_est > 2.0 * step:
            return [_Located(lam, sa)]
        # a second eigenvalue may hide in the same dip, on the side where the
        # second singular value falls; accept it only when sigma rises clearly
        # between the two minima
        up, down = (self.ps.sigmas(lam + t * d_est, 2)[1] for t in (1.0, -1.0))
        side = 1.0 if up < down else -1.0
        a, b = sorted((lam + 0.3 * side * d_est, lam + 3.0 * side * d_est))
        lb, sb = self._refine(a, b, lam + side * d_est)
        delta = 0.05 * abs(lb - lam)
        lb, sb = min((lb, sb), self._refine(lb - delta, lb + delta, lb), key=lambda x: x[1])
        if sb <= self.opts.residual_tol and abs(lb - lam) >= 0.1 * d_est:
            if self.ps.sigma(0.5 * (lam + lb)) > 2.0 * max(sa, sb):
                return [_Located(lam, sa), _Located(lb, sb)]
        return [_Located(lam, sa, degenerate=s2 < 10.0 * sa)]

    def near(self, centre: float, width: float, tries: int = 4) -> list[_Located]:
        """Eigenvalue(s) behind the sigma dip nearest ``centre``; empty if none is bracketed.

        Each failed try moves toward the lower side and triples ``width``.
        """
        for _ in range(tries):
            lo, hi = centre - width, centre + width
            s_lo, s_mid, s_hi = (self.ps.sigma(t) for t in (lo, centre, hi))
            if s_mid < s_lo and s_mid < s_hi:
                return self._resolve(lo, centre, hi)
            centre = lo if s_lo < s_hi else hi
            width *= 3.0
        return []

    def scan(self, lo: float, hi: float, pad: bool = False) -> list[_Located]:
        """Eigenvalues in ``(lo, hi)`` found by sweeping sigma.

        With ``pad`` the sweep starts and ends one step outside the interval so
        that eigenvalues next to the ends are not lost; only those inside are kept.
        """
        lams = [lo - self.step(lo)] if pad else [lo]
        end = hi + self.step(hi) if pad else hi
        while lams[-1] < end:
            lams.append(lams[-1] + self.step(lams[-1]))
        sig = [self.ps.sigma(t) for t in lams]
        found: list[_Located] = []
        for i in range(1, len(lams) - 1):
            if sig[i] <= sig[i - 1] and sig[i] < sig[i + 1]:
                for loc in self._resolve(lams[i - 1], lams[i], lams[i + 1]):
                    _merge(found, loc)
        found.sort(key=lambda L: L.lam)
        if pad:
            found = [L for L in found if lo <= L.lam <= hi]
        return found

    def weyl(self, lam: float) -> float:
        area, perim = area_perimeter(self.shape)
        return (area * lam - perim * math.sqrt(lam)) / (4.0 * math.pi)

    def locate(self, h_max: int) -> list[_Located]:
        """Located eigenvalues covering indices ``1..h_max`` (pairs kept whole)."""
        lo = 0.9 * bessel_zero(0, 1) ** 2 * self.scale  # lambda_1 >= disk value for constant width
        area, _ = area_perimeter(self.shape)
        hi = lo + 4.0 * math.pi * (h_max + 2) / area * 1.3 + 4.0 * self.scale
        found: list[_Located] = []
        while True:
            for loc in self.scan(lo, hi):
                _merge(found, loc)
            found.sort(key=lambda L: L.lam)
            n = sum(2 if L.degenerate else 1 for L in found)
            if n >= h_max + 1 or (n >= h_max and found[-1].lam < hi - 2.0 * self.step(hi)):
                break
            if hi > 4.0 * (lo + 4.0 * math.pi * (h_max + 2) / area):
                raise MissedEigenvalue(f"only {n} eigenvalues below {hi:.4g}")
            lo, hi = hi - 3.0 * self.step(hi), hi * 1.25
        count = sum(2 if L.degenerate else 1 for L in found)
        expected = self.weyl(hi)
        if abs(count - expected) > max(4.0, 0.25 * expected):
            raise MissedEigenvalue(f"{count} eigenvalues below {hi:.4g}, Weyl estimate {expected:.1f}")
        return found

    def results(self, found: list[_Located], h_max: int) -> list[EigenResult]:
        flat = []
        for L in found:
            flat.extend([L, L] if L.degenerate else [L])
        flat = flat[: h_max + 1] if len(flat) > h_max else flat
        out = []
        i = 0
        tol = self.opts.gap_tol
        while i < len(flat) and i < h_max:
            L = flat[i]
            if L.degenerate:
                group = [i, i + 1]
            elif i + 1 < len(flat) and flat[i + 1].lam - L.lam < tol * flat[i + 1].lam:
                group = [i, i + 1]
            else:
                group = [i]
            traces, coeffs = self._cluster_traces([flat[g] for g in group])
            for g in group:
                if g >= h_max:
                    break
                out.append(EigenResult(
                    lam=flat[g].lam, h=g + 1,
                    multiplicity=DOUBLE if len(group) == 2 else SIMPLE,
                    trace=traces, residual=flat[g].sigma, grid=self.ps.grid,
                    coeffs=coeffs, cluster=tuple(x + 1 for x in group)))
            i = group[-1] + 1
        return out

    def _cluster_traces(self, members: list[_Located]):
        if members[0].degenerate:
            lam = members[0].lam
            C, _ = self.ps.modes(lam, 2)
            T = self.ps.normal_derivative(lam, C)
            return _rellich_orthonormalise(T, C, lam, self.ps.grid)
        Ts, Cs = [], []
        for L in members:
            C, _ = self.ps.modes(L.lam, 1)
            T, C = _rellich_orthonormalise(self.ps.normal_derivative(L.lam, C), C, L.lam, self.ps.grid)
            Ts.append(T)
            Cs.append(C)
        return np.vstack(Ts), np.vstack(Cs)


def _merge(found: list[_Located], loc: _Located) -> None:
    for i, L in enumerate(found):
        if abs(L.lam - loc.lam) <= 1e-9 * loc.lam:
            if loc.degenerate and not L.degenerate:
                found[i] = loc
            return
    found.append(loc)


def _rellich_orthonormalise(T: np.ndarray, C: np.ndarray, lam: float, grid: BoundaryGrid):
    """Rescale (and for pairs, orthonormalise) so that ``int u_i u_j = delta_ij``.

    Within one eigenspace ``int d_n u d_n v (x . n) ds = 2 lam int u v``.
    """
    w = grid.support * grid.weights
    G = (T * w) @ T.T / (2.0 * lam)
    evals, evecs = np.linalg.eigh(G)
    if evals.min() <= 0:
        raise IllConditioned("degenerate eigenfunction traces")
    S = evecs @ np.diag(evals**-0.5) @ evecs.T
    return S @ T, S @ C


# public operations ----------------------------------------------------------------


def sigma(shape: SupportShape, lam: float, basis_size: int = 60,
          grid: BoundaryGrid | None = None) -> float:
    """Smallest subspace-angle singular value at trial eigenvalue ``lam``."""
    opts = SolverOptions(basis_size=basis_size)
    return ParticularSolutions(shape, opts, grid=grid).sigma(lam)


def eigenvalues(shape: SupportShape, h_max: int, opts: SolverOptions | None = None) -> list[EigenResult]:
    """The first ``h_max`` Dirichlet eigenvalues, with traces and multiplicity flags."""
    if h_max < 1:
        raise ValueError("h_max must be >= 1")
    solver = DirichletSolver(shape, opts)
    return solver.results(solver.locate(h_max), h_max)


def normal_trace(shape: SupportShape, eig: EigenResult) -> np.ndarray:
    """Normal derivatives of the L2-normalised eigenfunction(s) of ``eig`` on its grid."""
    return eig.trace
