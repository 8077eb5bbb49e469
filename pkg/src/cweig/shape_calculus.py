"""Hadamard shape gradients in support-function coordinates and their finite-difference checks.

Adding ``eps * cos(k theta)`` to the support function moves the boundary
point with normal angle ``theta`` by ``eps * cos(k theta)`` along the normal,
so for a simple eigenvalue

    d lambda / d a_k = - int_0^{2 pi} (d_n u)^2 cos(k theta) R(theta) d theta

(and ``sin`` for ``b_k``).  The integral is evaluated with the trapezoid rule
on the solver's uniform angle grid.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .disk_analysis import (
    DeformationCoeffs,
    second_derivative_double,
    second_derivative_simple,
)
from .eigensolver import DirichletSolver, EigenResult, SolverOptions, eigenvalues
from .errors import InfeasibleShape, MultiplicityError
from .geometry import DEFAULT_NMAX, SupportShape, feasibility_margin, odd_harmonics
from .special_functions import disk_eigen_at, disk_spectrum


@dataclass(frozen=True)
class GradientVector:
    """``(d lambda / d a_k, d lambda / d b_k)`` for odd ``k >= 3``."""

    ks: np.ndarray
    da: np.ndarray
    db: np.ndarray

    def to_vector(self) -> np.ndarray:
        """Layout ``[a_3, a_5, ..., b_3, b_5, ...]`` matching ``SupportShape.to_vector``."""
        return np.concatenate([self.da, self.db])

    def max_abs(self) -> float:
        return float(np.abs(self.to_vector()).max()) if self.ks.size else 0.0

    def norm(self) -> float:
        return float(np.linalg.norm(self.to_vector()))

    def entry(self, k: int) -> tuple[float, float]:
        i = int(np.searchsorted(self.ks, k))
        if i >= len(self.ks) or self.ks[i] != k:
            raise KeyError(k)
        return float(self.da[i]), float(self.db[i])


def _density(eig: EigenResult) -> np.ndarray:
    """``(d_n u)^2 R dtheta`` at the grid nodes, one row per eigenfunction."""
    return eig.trace**2 * eig.grid.weights


def _project(density: np.ndarray, thetas: np.ndarray, n_max: int) -> GradientVector:
    ks = odd_harmonics(n_max)
    kt = np.multiply.outer(thetas, ks)
    return GradientVector(ks, -density @ np.cos(kt), -density @ np.sin(kt))


def gradient(shape: SupportShape, h: int, eig: EigenResult, grid=None,
             n_max: int = DEFAULT_NMAX) -> GradientVector:
    """Gradient of a simple ``lambda_h`` with respect to the odd support coefficients."""
    if not eig.is_simple:
        raise MultiplicityError(f"lambda_{h} belongs to cluster {eig.cluster}; it is not differentiable")
    if eig.h != h:
        raise ValueError(f"eigen result is for index {eig.h}, not {h}")
    grid = grid if grid is not None else eig.grid
    return _project(_density(eig)[0], grid.thetas, n_max)


def cluster_mean_gradient(eig: EigenResult, n_max: int = DEFAULT_NMAX) -> GradientVector:
    """Gradient of the mean of the eigenvalues in ``eig``'s cluster.

    For a resolved pair this is the average of the two gradients; for an exact
    double it is half the trace of the derivative matrix, which is what the
    mean of the splitting branches sees.
    """
    d = _density(eig)
    return _project(d.mean(axis=0), eig.grid.thetas, n_max)


def optimality_residual(shape: SupportShape, eig: EigenResult) -> float | np.ndarray:
    """Relative L2 size of the odd-harmonic part of ``g = (d_n u)^2 R``.

    ``g(theta) = g(theta + pi)`` (no odd harmonics) is the first-order
    optimality condition for a regular minimiser.  Pairs return one value
    per eigenfunction.
    """
    g = eig.trace**2 * eig.grid.radii
    G = np.fft.rfft(g, axis=-1)
    power = np.abs(G) ** 2
    power[..., 1:] *= 2.0  # both signs of each nonzero frequency
    if g.shape[-1] % 2 == 0:
        power[..., -1] /= 2.0
    odd = power[..., 1::2].sum(axis=-1)
    res = np.sqrt(odd / power.sum(axis=-1))
    return float(res[0]) if res.shape[0] == 1 else res


# --------------------------------------------------------------------------
# finite differences


def _track(solver: DirichletSolver, lam0: float) -> float:
    """Eigenvalue of ``solver``'s shape nearest ``lam0`` (small perturbations only)."""
    w = 1e-3 * lam0
    lam, s = solver._refine(lam0 - w, lam0 + w, lam0)
    if s > solver.opts.residual_tol or abs(lam - lam0) >= w:
        found = solver.scan(lam0 - 10 * w, lam0 + 10 * w)
        if not found:
            raise RuntimeError(f"lost eigenvalue near {lam0}")
        lam = min(found, key=lambda L: abs(L.lam - lam0)).lam
    return lam


def fd_gradient(shape: SupportShape, h: int, ks, step: float = 1e-5,
                opts: SolverOptions | None = None, lam0: float | None = None) -> GradientVector:
    """Central-difference gradient of ``lambda_h`` for the listed odd harmonics."""
    if lam0 is None:
        lam0 = eigenvalues(shape, h, opts)[h - 1].lam
    ks = np.asarray(sorted(int(k) for k in ks))
    da, db = np.zeros(len(ks)), np.zeros(len(ks))
    for i, k in enumerate(ks):
        for out, (x, y) in ((da, (1.0, 0.0)), (db, (0.0, 1.0))):
            plus = _track(DirichletSolver(shape.perturbed([k], [x], [y], step), opts), lam0)
            minus = _track(DirichletSolver(shape.perturbed([k], [x], [y], -step), opts), lam0)
            out[i] = (plus - minus) / (2.0 * step)
    return GradientVector(ks, da, db)


@dataclass(frozen=True)
class HessianCheck:
    """Analytic and finite-difference second derivatives at the disk.

    ``numeric = (lambda(+eps) + lambda(-eps) - 2 lambda(0)) / eps^2`` per index
    carries an ``O(eps^2)`` truncation error; ``extrapolated`` removes it by
    Richardson extrapolation with ``eps/2``.  ``noise`` bounds the solver
    error's contribution to ``numeric``.
    """

    indices: tuple[int, ...]
    analytic: tuple[float, ...]
    numeric: tuple[float, ...]
    noise: float
    extrapolated: tuple[float, ...] | None = None

    def __iter__(self):
        yield self.analytic
        yield self.numeric

    def signs_agree(self, factor: float = 3.0) -> bool:
        for a, n in zip(self.analytic, self.numeric):
            if abs(a) > factor * self.noise and np.sign(a) != np.sign(n):
                return False
        return True


def _index_of(m: int, p: int) -> tuple[int, ...]:
    h = 1
    while True:
        for e in disk_spectrum(h):
            if e.m == m and e.p == p:
                return e.h_indices
        h *= 2


def hessian_check(m: int, p: int, phi: DeformationCoeffs, eps: float = 1e-2,
                  opts: SolverOptions | None = None, richardson: bool = True) -> HessianCheck:
    """Compare the analytic second derivative of ``j_{m,p}^2`` along ``phi`` with the solver."""
    if not 1e-3 <= eps <= 5e-2:
        raise ValueError("eps must lie in [1e-3, 5e-2]")
    idx = _index_of(m, p)
    if m == 0:
        analytic = (second_derivative_simple(p, phi),)
    else:
        l1, l2 = second_derivative_double(m, p, phi)
        analytic = (l1 - l2, l1 + l2)
    if phi.is_zero:
        zero = tuple(0.0 for _ in idx)
        return HessianCheck(idx, zero, zero, 0.0, zero)
    numeric, noise = _second_difference(m, p, idx, phi, eps, opts)
    extrapolated = None
    if richardson:
        half, _ = _second_difference(m, p, idx, phi, 0.5 * eps, opts)
        extrapolated = tuple((4.0 * b - a) / 3.0 for a, b in zip(numeric, half))
    return HessianCheck(idx, tuple(analytic), numeric, noise, extrapolated)


def _second_difference(m, p, idx, phi, eps, opts):
    disk_e = disk_eigen_at(idx[0])
    cs = phi.cos_sin()
    ks = list(cs)
    da = [cs[k][0] for k in ks]
    db = [cs[k][1] for k in ks]
    disk = SupportShape.disk(2.0)
    shapes = [disk.perturbed(ks, da, db, s * eps) for s in (1.0, -1.0)]
    for sh in shapes:
        if feasibility_margin(sh) <= 0:
            raise InfeasibleShape("deformation leaves the convex class at this eps")
    h_top = idx[-1]
    runs = [eigenvalues(sh, h_top, opts) for sh in shapes]
    numeric, err = [], 0.0
    lam0 = disk_e.lam
    for h in idx:
        vp, vm = runs[0][h - 1], runs[1][h - 1]
        numeric.append((vp.lam + vm.lam - 2.0 * lam0) / eps**2)
        err = max(err, _solver_error(vp), _solver_error(vm))
    return tuple(numeric), 4.0 * err / eps**2


def _solver_error(res: EigenResult) -> float:
    # sigma grows like ~0.1 |lambda - lambda*| near an eigenvalue; floor at refinement tolerance
    return 10.0 * res.residual + 1e-11 * res.lam
