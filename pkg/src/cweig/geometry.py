"""Planar bodies of constant width described by the Fourier series of their support function.

A shape of width ``D`` has support function

    f(theta) = D/2 + sum_{k odd, k >= 3} a_k cos(k theta) + b_k sin(k theta)

Only odd harmonics are stored, so ``f(theta) + f(theta + pi) = D`` holds by
construction.  The ``k = 1`` harmonic is a translation and is never stored.
The boundary point with outer normal ``(cos theta, sin theta)`` is
``M(theta) = f n + f' tau`` and the radius of curvature is ``R = f'' + f``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import InfeasibleShape

DEFAULT_WIDTH = 2.0
DEFAULT_NMAX = 40
DEFAULT_MARGIN = 1e-3


def odd_harmonics(n_max: int) -> np.ndarray:
    """Odd harmonic indices ``3, 5, ..., <= n_max``."""
    return np.arange(3, n_max + 1, 2, dtype=int)


@dataclass(frozen=True)
class SupportShape:
    """Immutable constant-width shape.

    ``ks`` holds the stored odd harmonics (ascending, all ``>= 3``), ``a`` and
    ``b`` the cosine and sine coefficients of ``f - width/2``.
    """

    width: float = DEFAULT_WIDTH
    ks: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    a: np.ndarray = field(default_factory=lambda: np.zeros(0))
    b: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        ks = np.asarray(self.ks, dtype=int).ravel()
        a = np.asarray(self.a, dtype=float).ravel()
        b = np.asarray(self.b, dtype=float).ravel()
        if not (ks.shape == a.shape == b.shape):
            raise ValueError("ks, a, b must have equal length")
        if np.any(ks % 2 == 0):
            raise ValueError("even harmonics would break constant width")
        if np.any(ks < 3):
            raise ValueError("harmonics must be odd and >= 3 (k = 1 is a translation)")
        if len(np.unique(ks)) != len(ks):
            raise ValueError("duplicate harmonic")
        if not self.width > 0:
            raise ValueError("width must be positive")
        order = np.argsort(ks)
        for name, arr in (("ks", ks[order]), ("a", a[order]), ("b", b[order])):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "width", float(self.width))

    # construction -------------------------------------------------------

    @classmethod
    def disk(cls, width: float = DEFAULT_WIDTH) -> "SupportShape":
        return cls(width=width)

    @classmethod
    def from_dict(
        cls, coeffs: Mapping[int, tuple[float, float]], width: float = DEFAULT_WIDTH
    ) -> "SupportShape":
        ks = sorted(coeffs)
        return cls(
            width=width,
            ks=np.array(ks, dtype=int),
            a=np.array([coeffs[k][0] for k in ks], dtype=float),
            b=np.array([coeffs[k][1] for k in ks], dtype=float),
        )

    @classmethod
    def from_vector(
        cls, x: Iterable[float], n_max: int = DEFAULT_NMAX, width: float = DEFAULT_WIDTH
    ) -> "SupportShape":
        """Inverse of :meth:`to_vector` (``x = [a_3, a_5, ..., b_3, b_5, ...]``)."""
        ks = odd_harmonics(n_max)
        x = np.asarray(x, dtype=float)
        if x.shape != (2 * len(ks),):
            raise ValueError(f"expected {2 * len(ks)} coefficients for n_max={n_max}")
        return cls(width=width, ks=ks, a=x[: len(ks)], b=x[len(ks):])

    def to_vector(self, n_max: int | None = None) -> np.ndarray:
        """Dense ``[a_3.., b_3..]`` vector over all odd harmonics ``<= n_max``."""
        if n_max is None:
            n_max = self.n_max
        ks = odd_harmonics(n_max)
        if self.ks.size and self.ks.max() > n_max:
            raise ValueError("shape has harmonics above n_max")
        a = np.zeros(len(ks))
        b = np.zeros(len(ks))
        idx = (self.ks - 3) // 2
        a[idx] = self.a
        b[idx] = self.b
        return np.concatenate([a, b])

    def coeffs(self) -> dict[int, tuple[float, float]]:
        return {int(k): (float(a), float(b)) for k, a, b in zip(self.ks, self.a, self.b)}

    @property
    def n_max(self) -> int:
        return int(self.ks.max()) if self.ks.size else 1

    @property
    def is_disk(self) -> bool:
        return not np.any(self.a) and not np.any(self.b)

    def scaled(self, s: float) -> "SupportShape":
        """Homothety by factor ``s`` (width becomes ``s * width``)."""
        return SupportShape(self.width * s, self.ks, self.a * s, self.b * s)

    def rotated(self, alpha: float) -> "SupportShape":
        """Rotation by ``alpha``: ``f_new(theta) = f(theta - alpha)``."""
        c = np.cos(self.ks * alpha)
        s = np.sin(self.ks * alpha)
        return SupportShape(self.width, self.ks, self.a * c - self.b * s, self.a * s + self.b * c)

    def perturbed(self, ks, da, db, eps: float = 1.0) -> "SupportShape":
        """Shape with support function ``f + eps * phi`` (``phi`` given by odd harmonics)."""
        merged = self.coeffs()
        for k, x, y in zip(np.atleast_1d(ks), np.atleast_1d(da), np.atleast_1d(db)):
            k = int(k)
            a0, b0 = merged.get(k, (0.0, 0.0))
            merged[k] = (a0 + eps * x, b0 + eps * y)
        return SupportShape.from_dict(merged, self.width)


@dataclass(frozen=True)
class BoundaryGrid:
    """Uniform-in-angle sampling of a shape's boundary."""

    thetas: np.ndarray
    points: np.ndarray  # (M, 2)
    radii: np.ndarray  # R = f'' + f
    normals: np.ndarray  # (M, 2)
    tangents: np.ndarray  # (M, 2)
    support: np.ndarray  # f, equal to x . n at each node

    @property
    def size(self) -> int:
        return len(self.thetas)

    @property
    def dtheta(self) -> float:
        return 2.0 * np.pi / self.size

    @property
    def weights(self) -> np.ndarray:
        """Trapezoidal arclength weights ``R(theta_i) * dtheta``."""
        return self.radii * self.dtheta


def eval_support(shape: SupportShape, theta):
    """``(f, f', f'')`` at ``theta`` (scalar or array)."""
    theta = np.asarray(theta, dtype=float)
    f = np.full(theta.shape, 0.5 * shape.width)
    fp = np.zeros(theta.shape)
    fpp = np.zeros(theta.shape)
    if shape.ks.size:
        kt = np.multiply.outer(theta, shape.ks)
        c = np.cos(kt)
        s = np.sin(kt)
        f = f + c @ shape.a + s @ shape.b
        fp = s @ (-shape.ks * shape.a) + c @ (shape.ks * shape.b)
        k2 = shape.ks.astype(float) ** 2
        fpp = -(c @ (k2 * shape.a) + s @ (k2 * shape.b))
    if f.ndim == 0:
        return float(f), float(fp), float(fpp)
    return f, fp, fpp


def curvature_radius(shape: SupportShape, theta):
    f, _, fpp = eval_support(shape, theta)
    return f + fpp


def boundary_point(shape: SupportShape, theta):
    """``M(theta) = (f cos - f' sin, f sin + f' cos)``; outer normal is ``(cos, sin)``."""
    f, fp, _ = eval_support(shape, theta)
    c, s = np.cos(theta), np.sin(theta)
    return np.stack([f * c - fp * s, f * s + fp * c], axis=-1)


def uniform_thetas(M: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(M) / M


def sample_boundary(shape: SupportShape, M: int = 512, check: bool = True) -> BoundaryGrid:
    if M < 64:
        raise ValueError("need at least 64 boundary nodes")
    th = uniform_thetas(M)
    f, fp, fpp = eval_support(shape, th)
    radii = f + fpp
    if check and radii.min() <= 0:
        raise InfeasibleShape(f"curvature radius {radii.min():.3e} <= 0")
    c, s = np.cos(th), np.sin(th)
    normals = np.stack([c, s], axis=1)
    tangents = np.stack([-s, c], axis=1)
    points = f[:, None] * normals + fp[:, None] * tangents
    return BoundaryGrid(th, points, radii, normals, tangents, f)


def feasibility_margin(shape: SupportShape, M: int = 800) -> float:
    """Minimum of ``f'' + f`` over the uniform grid of ``M`` angles."""
    if M < 64:
        raise ValueError("need at least 64 nodes")
    return float(curvature_radius(shape, uniform_thetas(M)).min())


def is_feasible(shape: SupportShape, margin: float = DEFAULT_MARGIN, M: int = 800) -> bool:
    return feasibility_margin(shape, M) >= margin


def convexity_matrix(n_max: int, M: int) -> np.ndarray:
    """Rows ``(1 - k^2) [cos k theta_i, sin k theta_i]`` so that ``R_i = width/2 + G @ x``."""
    ks = odd_harmonics(n_max)
    kt = np.multiply.outer(uniform_thetas(M), ks)
    w = 1.0 - ks.astype(float) ** 2
    return np.hstack([np.cos(kt) * w, np.sin(kt) * w])


def area_perimeter(shape: SupportShape) -> tuple[float, float]:
    """Area ``1/2 int (f^2 - f'^2)`` and perimeter ``int R``.

    Both integrands are trigonometric polynomials, so the trapezoid rule on
    more than ``2 n_max`` nodes is exact.
    """
    M = max(256, 4 * shape.n_max + 8)
    th = uniform_thetas(M)
    f, fp, fpp = eval_support(shape, th)
    radii = f + fpp
    if radii.min() <= 0:
        raise InfeasibleShape(f"curvature radius {radii.min():.3e} <= 0")
    d = 2.0 * np.pi / M
    area = 0.5 * d * float(np.sum(f * f - fp * fp))
    perimeter = d * float(np.sum(radii))
    return area, perimeter


def inradius(shape: SupportShape, M: int = 1024) -> float:
    """Distance from the origin (the Steiner point) to the boundary."""
    f, _, _ = eval_support(shape, uniform_thetas(M))
    return float(f.min())
