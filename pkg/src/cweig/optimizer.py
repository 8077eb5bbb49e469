"""Minimisation of ``lambda_h`` over planar bodies of constant width 2.

Variables are the odd support coefficients ``x = [a_3.., b_3..]`` up to
``n_max``, so constant width holds by construction.  Convexity is imposed at
``M`` angles, ``R_i = 1 + (G x)_i >= margin``, through a log barrier whose
weight halves between cycles.  Within a cycle the step solves a quasi-Newton
model: damped limited-memory BFGS for ``lambda_h`` plus the exact barrier
Hessian, so iterates slide along the constraint wall instead of stalling at
it.  Backtracking and a fraction-to-boundary cap keep every iterate feasible.

Between iterates ``lambda_{h-1}, lambda_h, lambda_{h+1}`` are refined from
their previous values; a short sweep window is the fallback, and a full sweep
from the bottom of the spectrum re-anchors the index at each cycle and
whenever the counts look wrong.
"""
from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .eigensolver import (
    DOUBLE,
    SIMPLE,
    DirichletSolver,
    SolverOptions,
    _Located,
    _merge,
    eigenvalues,
)
from .errors import InfeasibleShape, SolverFailure
from .geometry import (
    DEFAULT_MARGIN,
    DEFAULT_NMAX,
    SupportShape,
    convexity_matrix,
    feasibility_margin,
    odd_harmonics,
)
from .shape_calculus import optimality_residual
from .special_functions import disk_eigen_at

log = logging.getLogger(__name__)

NO_IMPROVEMENT = "NoImprovement"


@dataclass(frozen=True)
class OptimizationConfig:
    h: int
    n_max: int = DEFAULT_NMAX
    m_constraints: int = 800
    restarts: int = 8
    max_iter: int = 300  # inner iterations, shared by all barrier cycles
    margin: float = DEFAULT_MARGIN
    seed: int = 0
    init_scale: float = 0.1
    init_margin: float = 0.1
    mu0: float = 1e-2
    cycles: int = 12  # barrier halvings: final mu = mu0 / 2**11
    grad_tol: float = 1e-6
    step_tol: float = 1e-10
    obj_tol: float = 1e-8  # relative; roughly the noise level of the tracked eigenvalues
    cluster_gap: float = 1e-4
    memory: int = 10
    max_step: float = 0.05  # coefficient-space step cap
    improve_tol: float = 1e-3
    workers: int = 1
    solver: SolverOptions = field(default_factory=SolverOptions)

    def __post_init__(self):
        if self.h < 1:
            raise ValueError("h must be >= 1")
        if self.n_max < 3:
            raise ValueError("n_max must be >= 3")
        if self.m_constraints < 8 * self.n_max:
            raise ValueError("m_constraints must be >= 8 * n_max")
        if self.restarts < 1 or self.max_iter < 1 or self.cycles < 1:
            raise ValueError("restarts, max_iter and cycles must be positive")
        if not self.margin > 0:
            raise ValueError("margin must be positive")


@dataclass
class GapReport:
    lam: tuple[float, float, float]  # lambda_{h-1}, lambda_h, lambda_{h+1} (nan if absent)
    gap_below: float
    gap_above: float
    label_below: str
    label_above: str

    @property
    def h_simple(self) -> bool:
        return self.label_below == SIMPLE and self.label_above == SIMPLE


@dataclass
class OptimizationResult:
    h: int
    shape: SupportShape  # emitted shape (the disk when nothing beat it)
    lambda_h: float
    disk_lambda: float
    improved: bool
    best_shape: SupportShape
    best_lambda: float  # best over all restarts, fresh solve
    multiplicity: GapReport
    residual: float | np.ndarray
    log: list[dict]
    restart_values: list[float]
    note: str = ""


# --------------------------------------------------------------------------
# initialisation


def _shrink_to_margin(shape_of, target: float, m: int) -> float:
    """Largest ``t`` in ``[0, 1]`` with ``feasibility_margin(shape_of(t)) >= target``."""
    if feasibility_margin(shape_of(1.0), m) >= target:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(50):
        mid = 0.5 * (lo + hi)
        if feasibility_margin(shape_of(mid), m) >= target:
            lo = mid
        else:
            hi = mid
    return lo


def random_feasible_init(config: OptimizationConfig, restart: int = 0) -> SupportShape:
    """Random odd coefficients ``~ init_scale / k^2``, shrunk toward the disk until feasible."""
    rng = np.random.default_rng([config.seed, restart])
    ks = odd_harmonics(config.n_max)
    scale = config.init_scale / ks.astype(float) ** 2
    x = np.concatenate([rng.standard_normal(len(ks)) * scale, rng.standard_normal(len(ks)) * scale])
    target = max(config.margin, config.init_margin)
    t = _shrink_to_margin(lambda s: SupportShape.from_vector(s * x, config.n_max),
                          target, config.m_constraints)
    return SupportShape.from_vector(t * x, config.n_max)


# --------------------------------------------------------------------------
# eigenvalue tracking


def _flatten(found: list[_Located]) -> list[_Located]:
    flat = []
    for L in found:
        flat.extend([L, L] if L.degenerate else [L])
    return flat


class _Tracker:
    """Follows ``lambda_{h-1}, lambda_h, lambda_{h+1}`` along a sequence of nearby shapes."""

    def __init__(self, h: int, opts: SolverOptions):
        self.h = h
        self.opts = opts
        self.ref: list[float] | None = None
        self.pending: list[float] | None = None
        self.full_solves = 0

    def _full(self, solver: DirichletSolver):
        self.full_solves += 1
        flat = _flatten(solver.locate(self.h + 3))
        self.pending = [L.lam for L in flat]
        return flat

    def commit(self) -> None:
        """Adopt the values of the last evaluation as the reference for the next ones."""
        if self.pending is not None:
            self.ref = self.pending

    def _window(self):
        ref, h = self.ref, self.h
        a = ref[max(h - 2, 0)]
        below = [v for v in ref if v < a * (1.0 - 1e-3)]
        lo = a - 0.4 * (a - below[-1]) if below else 0.8 * a
        c = ref[h]
        above = [v for v in ref if v > c * (1.0 + 1e-3)]
        hi = c + 0.4 * (above[0] - c) if above else 1.1 * c
        first = sum(1 for v in ref if v < lo)
        count = sum(1 for v in ref if lo <= v <= hi)
        return lo, hi, first, count

    def _predict(self, solver: DirichletSolver):
        """Refine each tracked eigenvalue from its previous value; ``None`` if anything looks off."""
        ref = self.ref
        first, last = self.h - 2, self.h  # 0-based, widened to whole clusters
        while first > 0 and ref[first] - ref[first - 1] < 1e-3 * ref[first]:
            first -= 1
        while last + 2 < len(ref) and ref[last + 1] - ref[last] < 1e-3 * ref[last]:
            last += 1
        if last + 1 >= len(ref):
            return None
        targets = ref[first:last + 1]
        found: list[_Located] = []
        for c in sorted(set(targets)):
            if found and abs(c - found[-1].lam) < 1e-3 * c:
                continue
            # keep the search window clear of the next distinct eigenvalue
            gap = min(abs(v - c) for v in ref if abs(v - c) >= 1e-3 * c)
            for L in solver.near(c, min(2e-3 * c, 0.15 * gap), tries=2):
                _merge(found, L)
        found.sort(key=lambda L: L.lam)
        flat = _flatten(found)
        if len(flat) != len(targets):
            return None
        # each value must stay within half the gap from its reference to the next distinct one
        for L, r in zip(flat, targets):
            below = [v for v in ref if v < r * (1.0 - 1e-3)]
            above = [v for v in ref if v > r * (1.0 + 1e-3)]
            lo = below[-1] if below else 0.0
            hi = above[0] if above else math.inf
            if not r - 0.5 * (r - lo) < L.lam < r + 0.5 * (hi - r):
                return None
        return first, flat

    def evaluate(self, shape: SupportShape):
        """``(solver, entries)`` where ``entries[i]`` is the located eigenvalue of index ``i + 1``
        for the indices around ``h`` (others ``None``)."""
        solver = DirichletSolver(shape, self.opts)
        n = self.h + 1
        if self.ref is None or len(self.ref) < n + 1:
            return solver, self._full(solver)[:n]
        tracked = self._predict(solver) if self.h >= 2 else None
        if tracked is not None:
            first, inside = tracked
        else:
            lo, hi, first, count = self._window()
            inside = _flatten(solver.scan(lo, hi, pad=True))
            if len(inside) != count or first + count < n:
                return solver, self._full(solver)[:n]
        ref = list(self.ref)
        for i, L in enumerate(inside):
            ref[first + i] = L.lam
        self.pending = sorted(ref)
        return solver, ([None] * first + inside)[:n]


# --------------------------------------------------------------------------
# objective


class _Problem:
    def __init__(self, config: OptimizationConfig):
        self.cfg = config
        self.ks = odd_harmonics(config.n_max)
        self.G = convexity_matrix(config.n_max, config.m_constraints)
        kk = self.ks.astype(float)
        self.D = np.concatenate([kk, kk])  # z = D x balances the eigenvalue Hessian across harmonics
        self.tracker = _Tracker(config.h, config.solver)
        self.mu = config.mu0

    def shape(self, z: np.ndarray) -> SupportShape:
        return SupportShape.from_vector(z / self.D, self.cfg.n_max)

    def radii(self, z: np.ndarray) -> np.ndarray:
        return 1.0 + self.G @ (z / self.D)

    def group(self, flat) -> tuple[int, ...]:
        """Indices averaged in the objective: ``(h-1, h)`` when they are closer than ``cluster_gap``.

        Only the cluster below matters.  As the upper member, ``lambda_h`` is the larger
        of two branches and both must go down together.  As the lower member it is the
        smaller one and splitting the pair lowers it, which averaging would prevent.
        """
        h = self.cfg.h
        lam = flat[h - 1].lam
        if h >= 2 and flat[h - 2] is not None and lam - flat[h - 2].lam < self.cfg.cluster_gap * lam:
            return (h - 1, h)
        return (h,)

    def evaluate(self, z: np.ndarray, group: tuple[int, ...] | None = None):
        """Barrier objective, its gradient in ``z``, and the eigen data; ``None`` outside the domain."""
        R = self.radii(z)
        slack = R - self.cfg.margin
        if slack.min() <= 0:
            return None
        shape = self.shape(z)
        try:
            solver, flat = self.tracker.evaluate(shape)
        except InfeasibleShape:
            # convex at the constraint nodes but not between them
            return None
        if group is None:
            group = self.group(flat)
        members = []
        for j in group:
            L = flat[j - 1]
            if all(L is not M for M in members):
                members.append(L)
        T = np.vstack([solver._cluster_traces([L])[0] for L in members])
        grid = solver.ps.grid
        dens = (T**2 * grid.weights).mean(axis=0)
        kt = np.multiply.outer(grid.thetas, self.ks)
        g_eig = -np.concatenate([dens @ np.cos(kt), dens @ np.sin(kt)])
        lam_obj = float(np.mean([flat[j - 1].lam for j in group]))
        barrier = -self.mu * float(np.sum(np.log(slack)))
        g_bar = -self.mu * (self.G.T @ (1.0 / slack))
        f = lam_obj + barrier
        g_lam = g_eig / self.D
        return f, g_lam + g_bar / self.D, flat, group, float(R.min()), g_lam

    def barrier_hessian(self, z: np.ndarray) -> np.ndarray:
        Gz = self.G / self.D
        slack = self.radii(z) - self.cfg.margin
        return self.mu * (Gz.T * slack**-2.0) @ Gz


def _damped_bfgs(S, Y, gamma: float, n: int) -> np.ndarray:
    """Dense BFGS model of the eigenvalue Hessian from the stored pairs (Powell damping)."""
    B = gamma * np.eye(n)
    for s, y in zip(S, Y):
        Bs = B @ s
        sBs = float(s @ Bs)
        sy = float(s @ y)
        if sy < 0.2 * sBs:
            t = 0.8 * sBs / (sBs - sy)
            y = t * y + (1.0 - t) * Bs
            sy = float(s @ y)
        B += np.outer(y, y) / sy - np.outer(Bs, Bs) / sBs
    return B


def _run(config: OptimizationConfig, restart: int):
    """One restart; returns ``(shape, lambda_h, log)`` with ``lambda_h`` from a fresh solve."""
    prob = _Problem(config)
    x0 = random_feasible_init(config, restart)
    z = x0.to_vector(config.n_max) * prob.D
    n = len(z)
    h = config.h
    out = prob.evaluate(z)
    if out is None:
        raise SolverFailure("initial shape infeasible")
    f, g, flat, group, rmin, g_lam = out
    prob.tracker.commit()
    best = (flat[h - 1].lam, z.copy())
    entries = []
    it_total = 0
    cycles = min(config.cycles, config.max_iter)
    per_cycle = config.max_iter // cycles
    for cycle in range(cycles):
        if cycle > 0:
            prob.mu *= 0.5
            prob.tracker.ref = None  # re-anchor the index
            f, g, flat, group, rmin, g_lam = prob.evaluate(z)
            prob.tracker.commit()
        S, Y = [], []
        stall = 0
        for _ in range(per_cycle):
            new_group = prob.group(flat)
            if new_group != group:
                S, Y = [], []  # different objective
                f, g, flat, group, rmin, g_lam = prob.evaluate(z, new_group)
                prob.tracker.commit()
            # quasi-Newton model for lambda, exact Hessian for the barrier
            if S:
                sy = float(S[-1] @ Y[-1])
                gamma = float(Y[-1] @ Y[-1]) / sy if sy > 0 else 1.0
            else:
                gamma = float(np.linalg.norm(g)) / 0.05
            H = _damped_bfgs(S, Y, gamma, n) + prob.barrier_hessian(z)
            d = -np.linalg.solve(H, g)
            slope = float(g @ d)
            if slope >= 0:
                S, Y = [], []
                continue
            # small steps keep the eigenvalue tracker reliable
            d *= min(1.0, config.max_step / float(np.linalg.norm(d / prob.D)))
            slope = float(g @ d)
            Gd = prob.G @ (d / prob.D)
            slack = prob.radii(z) - config.margin
            neg = Gd < 0
            amax = 0.95 * float(np.min(slack[neg] / -Gd[neg])) if np.any(neg) else np.inf
            alpha = min(1.0, amax)
            accepted = None
            for _ls in range(20):
                trial = prob.evaluate(z + alpha * d, group)
                if trial is not None and trial[0] <= f + 1e-4 * alpha * slope:
                    accepted = trial
                    break
                alpha *= 0.5
            if accepted is None:
                if S:
                    S, Y = [], []
                    continue
                break
            prob.tracker.commit()
            step = alpha * d
            f_new, g_new, flat, _, rmin, g_lam_new = accepted
            S.append(step)
            Y.append(g_lam_new - g_lam)
            if len(S) > config.memory:
                S.pop(0)
                Y.pop(0)
            df = f - f_new
            z = z + step
            f, g, g_lam = f_new, g_new, g_lam_new
            it_total += 1
            lam_h = flat[h - 1].lam
            if lam_h < best[0]:
                best = (lam_h, z.copy())
            entries.append({"restart": restart, "cycle": cycle, "iter": it_total,
                            "lambda_h": lam_h, "objective": f, "grad_norm": float(np.linalg.norm(g)),
                            "margin": rmin, "mu": prob.mu, "group": "+".join(map(str, group))})
            if np.linalg.norm(g) <= config.grad_tol or np.linalg.norm(step / prob.D) <= config.step_tol:
                break
            stall = stall + 1 if abs(df) <= config.obj_tol * abs(f) else 0
            if stall >= 3:
                break
    # a tracker slip can fake a low value: confirm with fresh solves
    fresh = []
    for zc in (best[1], z) if not np.array_equal(best[1], z) else (z,):
        shape = prob.shape(zc)
        fresh.append((eigenvalues(shape, h, config.solver)[h - 1].lam, shape))
    lam, shape = min(fresh, key=lambda t: t[0])
    return shape, lam, entries


def _run_safe(args):
    config, r = args
    try:
        return _run(config, r)
    except Exception as exc:  # noqa: BLE001 - a failed restart is reported, not fatal
        log.warning("restart %d failed: %s", r, exc)
        return None


def multiplicity_report(result_or_shape, h: int | None = None, gap_tol: float = 1e-5,
                        opts: SolverOptions | None = None) -> GapReport:
    """Relative gaps of ``lambda_h`` to its neighbours with simple/double labels."""
    if isinstance(result_or_shape, OptimizationResult):
        shape, h = result_or_shape.shape, result_or_shape.h
    else:
        shape = result_or_shape
    res = eigenvalues(shape, h + 1, opts)
    lam_h = res[h - 1].lam
    below = res[h - 2].lam if h >= 2 else float("nan")
    above = res[h].lam
    gb = (lam_h - below) / lam_h if h >= 2 else float("inf")
    ga = (above - lam_h) / lam_h
    return GapReport((below, lam_h, above), gb, ga,
                     DOUBLE if gb < gap_tol else SIMPLE, DOUBLE if ga < gap_tol else SIMPLE)


def minimize(config: OptimizationConfig) -> OptimizationResult:
    """Best of ``config.restarts`` barrier L-BFGS runs from random feasible shapes."""
    t0 = time.time()
    jobs = [(config, r) for r in range(config.restarts)]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            runs = list(pool.map(_run_safe, jobs))
    else:
        runs = [_run_safe(j) for j in jobs]
    ok = [r for r in runs if r is not None]
    if not ok:
        raise SolverFailure("all restarts failed")
    h = config.h
    disk_lam = disk_eigen_at(h).lam
    fresh = [(lam, shape) for shape, lam, _ in ok]
    values = [v for v, _ in fresh]
    best_lam, best_shape = min(fresh, key=lambda t: t[0])
    improved = best_lam < disk_lam - config.improve_tol
    shape = best_shape if improved else SupportShape.disk()
    lam = best_lam if improved else disk_lam
    report = multiplicity_report(shape, h)
    res_eig = eigenvalues(shape, h)[h - 1]
    residual = optimality_residual(shape, res_eig)
    entries = [e for _, _, es in ok for e in es]
    log.info("h=%d best %.6f (disk %.6f) in %.1fs", h, best_lam, disk_lam, time.time() - t0)
    return OptimizationResult(
        h=h, shape=shape, lambda_h=lam, disk_lambda=disk_lam, improved=improved,
        best_shape=best_shape, best_lambda=best_lam, multiplicity=report, residual=residual,
        log=entries, restart_values=values, note="" if improved else NO_IMPROVEMENT)
