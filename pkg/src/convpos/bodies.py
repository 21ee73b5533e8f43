"""Convex bodies and their geometric oracles.

Four representations are supported: H-polytopes, V-polytopes, ellipsoids
``S B_2 + c`` and ℓp balls with ``p`` in {1, 2, 4, ∞}.  Affine images of the
smooth ℓ4 ball are kept as :class:`AffineImage`.  All oracles accept a single
vector or a stack of row vectors.
"""

from __future__ import annotations

import itertools
import json
import math
from abc import ABC, abstractmethod
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy.optimize import brentq, linprog
from scipy.spatial import ConvexHull, HalfspaceIntersection
from scipy.spatial import QhullError
from scipy.special import gammaln

from . import _kernels
from .errors import BodySpecError, SingularMatrixError, UnsupportedBodyError
from .linalg import AffineMap, check_spd, spd_sqrt, sym
from .nets import DEFAULT_NET_SIZE, direction_net, net_resolution

__all__ = [
    "Body",
    "Polytope",
    "HPolytope",
    "VPolytope",
    "Ellipsoid",
    "LpBall",
    "AffineImage",
    "cube",
    "cross_polytope",
    "ball",
    "as_polytope",
    "is_polytope",
    "support",
    "gauge",
    "apply_affine",
    "polar_dual",
    "contains",
    "containment_report",
    "hausdorff_distance",
    "parse_body",
    "load_body",
    "body_to_spec",
    "dump_body",
    "volume",
    "scaled",
    "translated",
]

GEOM_TOL = 1e-9


def _unique_rows(X: NDArray, tol: float) -> NDArray:
    """Greedy deduplication of rows closer than ``tol``."""
    keep: list[int] = []
    for i in range(X.shape[0]):
        if keep:
            d = np.abs(X[keep] - X[i]).max(axis=1)
            if d.min() <= tol:
                continue
        keep.append(i)
    return X[keep]


def _closed_under_negation(X: NDArray, tol: float) -> bool:
    if X.shape[0] == 0:
        return False
    for row in X:
        if np.abs(X + row).max(axis=1).min() > tol:
            return False
    return True


def _ball_volume(n: int) -> float:
    return math.exp(0.5 * n * math.log(math.pi) - gammaln(0.5 * n + 1.0))


class Body(ABC):
    """A convex body in ``R^n``.

    Bodies are immutable.  Oracles that depend on the origin being interior
    (``gauge``, polarity) raise ``ValueError`` when it is not.
    """

    dim: int

    @abstractmethod
    def support(self, u: ArrayLike) -> NDArray | float:
        """Support function ``h(u) = max <u, x>`` over the body."""

    @abstractmethod
    def support_point(self, u: ArrayLike) -> NDArray:
        """A maximizer of ``<u, x>`` over the body."""

    @abstractmethod
    def gauge(self, x: ArrayLike) -> NDArray | float:
        """Minkowski functional ``min {r > 0 : x in r B}``."""

    @abstractmethod
    def contains_points(self, X: ArrayLike, tol: float = 0.0) -> NDArray:
        """Boolean membership mask for the rows of ``X``."""

    @property
    @abstractmethod
    def symmetric(self) -> bool:
        """True when the representation is verified centrally symmetric."""

    @abstractmethod
    def volume(self) -> float:
        """Lebesgue measure of the body."""

    def gauge_gradient(self, x: ArrayLike) -> NDArray:
        """Gradient of the gauge at ``x`` (a point of the polar boundary when ``x != 0``)."""
        raise UnsupportedBodyError(f"gauge gradient not available for {type(self).__name__}")

    def bounding_box(self) -> tuple[NDArray, NDArray]:
        eye = np.eye(self.dim)
        return -np.asarray(self.support(-eye)), np.asarray(self.support(eye))

    def diameter_bound(self) -> float:
        lo, hi = self.bounding_box()
        return float(np.linalg.norm(hi - lo))

    def _origin_interior(self) -> bool:
        return bool(np.all(np.asarray(self.support(direction_net(self.dim, 256))) > 0.0))


def _as_rows(u: ArrayLike, n: int) -> tuple[NDArray, bool]:
    u = np.asarray(u, dtype=float)
    single = u.ndim == 1
    U = u.reshape(1, -1) if single else u
    if U.shape[1] != n:
        raise ValueError(f"expected vectors of dimension {n}, got {U.shape[1]}")
    return U, single


def _out(values: NDArray, single: bool):
    return float(values[0]) if single else values


def _out_rows(values: NDArray, single: bool) -> NDArray:
    return values[0] if single else values


# ------------------------------------------------------------------ polytopes


class Polytope(Body):
    """Common machinery for H- and V-polytopes: both representations cached."""

    @property
    @abstractmethod
    def vertices(self) -> NDArray:
        """Extreme points, shape (k, n)."""

    @property
    @abstractmethod
    def normals(self) -> NDArray:
        """Facet normals of an irredundant H-representation, shape (m, n)."""

    @property
    @abstractmethod
    def offsets(self) -> NDArray:
        """Facet offsets matching :attr:`normals`."""

    @cached_property
    def scale(self) -> float:
        return float(max(np.abs(self.vertices).max(), 1e-300))

    @cached_property
    def unit_halfspaces(self) -> tuple[NDArray, NDArray]:
        """Irredundant facets with unit normals, deduplicated."""
        A, b = self.normals, self.offsets
        nrm = np.linalg.norm(A, axis=1)
        A, b = A / nrm[:, None], b / nrm
        V = self.vertices
        # keep halfspaces that hold with equality on at least n vertices
        slack = b[:, None] - A @ V.T
        tight = (np.abs(slack) <= GEOM_TOL * max(1.0, self.scale)).sum(axis=1)
        keep = tight >= self.dim if self.dim > 1 else tight >= 1
        A, b = A[keep], b[keep]
        H = _unique_rows(np.column_stack([A, b]), 1e-10 * max(1.0, self.scale))
        return H[:, :-1].copy(), H[:, -1].copy()

    @cached_property
    def facets(self) -> list[NDArray]:
        """Vertex index lists of each unit facet."""
        A, b = self.unit_halfspaces
        V = self.vertices
        tol = GEOM_TOL * max(1.0, self.scale)
        return [np.where(np.abs(V @ a - bb) <= tol)[0] for a, bb in zip(A, b)]

    def support(self, u):
        U, single = _as_rows(u, self.dim)
        return _out((U @ self.vertices.T).max(axis=1), single)

    def support_point(self, u):
        U, single = _as_rows(u, self.dim)
        return _out_rows(self.vertices[np.argmax(U @ self.vertices.T, axis=1)], single)

    def _require_origin(self):
        A, b = self.unit_halfspaces
        if np.any(b <= 0.0):
            raise ValueError("origin is not interior to the polytope")

    def gauge(self, x):
        self._require_origin()
        X, single = _as_rows(x, self.dim)
        A, b = self.unit_halfspaces
        return _out(np.maximum((X @ (A / b[:, None]).T).max(axis=1), 0.0), single)

    def gauge_gradient(self, x):
        self._require_origin()
        X, single = _as_rows(x, self.dim)
        A, b = self.unit_halfspaces
        Y = A / b[:, None]
        return _out_rows(Y[np.argmax(X @ Y.T, axis=1)], single)

    def contains_points(self, X, tol=0.0):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        A, b = self.unit_halfspaces
        return _kernels.halfspace_mask(X, A, b + tol)

    @cached_property
    def symmetric(self) -> bool:
        return _closed_under_negation(self.vertices, 1e-9 * max(1.0, self.scale))

    def volume(self) -> float:
        if self.dim == 1:
            return float(self.vertices.max() - self.vertices.min())
        return float(ConvexHull(self.vertices).volume)


def _chebyshev_center(A: NDArray, b: NDArray) -> tuple[NDArray, float]:
    """Center and radius of the largest ball in ``{A x <= b}`` (radius <= 0 if empty)."""
    n = A.shape[1]
    nrm = np.linalg.norm(A, axis=1)
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = linprog(
        c,
        A_ub=np.column_stack([A, nrm]),
        b_ub=b,
        bounds=[(None, None)] * n + [(None, 1e6)],
        method="highs",
    )
    if res.status != 0:
        return np.zeros(n), -1.0
    return res.x[:n], float(res.x[-1])


def vertices_from_halfspaces(A: NDArray, b: NDArray, interior: NDArray | None = None) -> NDArray:
    """Vertex enumeration of a bounded ``{A x <= b}`` with nonempty interior."""
    n = A.shape[1]
    if n == 1:
        a = A[:, 0]
        hi = np.min(b[a > 0] / a[a > 0])
        lo = np.max(b[a < 0] / a[a < 0])
        return np.array([[lo], [hi]])
    if interior is None:
        if np.all(b > 0):
            interior = np.zeros(n)
        else:
            interior, r = _chebyshev_center(A, b)
            if r <= 0:
                raise ValueError("halfspace system has empty interior")
    hs = HalfspaceIntersection(np.column_stack([A, -b]), interior)
    V = hs.intersections
    V = V[np.all(np.isfinite(V), axis=1)]
    scale = max(1.0, np.abs(V).max())
    V = _unique_rows(V, 1e-10 * scale)
    # keep extreme points only
    try:
        hull = ConvexHull(V)
        V = V[np.sort(hull.vertices)]
    except QhullError:
        pass
    return V


def halfspaces_from_vertices(V: NDArray) -> tuple[NDArray, NDArray]:
    """Facet normals (unit) and offsets of the hull of ``V``."""
    n = V.shape[1]
    if n == 1:
        return np.array([[1.0], [-1.0]]), np.array([V.max(), -V.min()])
    hull = ConvexHull(V)
    eq = hull.equations
    H = _unique_rows(eq, 1e-10 * max(1.0, np.abs(V).max()))
    return H[:, :-1].copy(), -H[:, -1].copy()


class HPolytope(Polytope):
    """``{x : <a_j, x> <= b_j}``."""

    def __init__(self, normals: ArrayLike, offsets: ArrayLike):
        A = np.atleast_2d(np.asarray(normals, dtype=float))
        b = np.asarray(offsets, dtype=float).ravel()
        if A.shape[0] != b.shape[0]:
            raise ValueError("normals and offsets disagree in count")
        self._A = A
        self._b = b
        self.dim = A.shape[1]

    def __repr__(self) -> str:
        return f"HPolytope(dim={self.dim}, facets={self._A.shape[0]})"

    @property
    def raw_normals(self) -> NDArray:
        return self._A

    @property
    def raw_offsets(self) -> NDArray:
        return self._b

    @cached_property
    def vertices(self) -> NDArray:
        return vertices_from_halfspaces(self._A, self._b)

    @property
    def normals(self) -> NDArray:
        return self._A

    @property
    def offsets(self) -> NDArray:
        return self._b


class VPolytope(Polytope):
    """Convex hull of finitely many points."""

    def __init__(self, vertices: ArrayLike):
        V = np.atleast_2d(np.asarray(vertices, dtype=float))
        self._points = V
        self.dim = V.shape[1]

    def __repr__(self) -> str:
        return f"VPolytope(dim={self.dim}, points={self._points.shape[0]})"

    @property
    def points(self) -> NDArray:
        return self._points

    @cached_property
    def vertices(self) -> NDArray:
        V = self._points
        if self.dim == 1:
            return np.array([[V.min()], [V.max()]])
        try:
            hull = ConvexHull(V)
        except QhullError as exc:
            raise ValueError("points do not span a full-dimensional hull") from exc
        return V[np.sort(hull.vertices)]

    @cached_property
    def _hrep(self) -> tuple[NDArray, NDArray]:
        return halfspaces_from_vertices(self.vertices)

    @property
    def normals(self) -> NDArray:
        return self._hrep[0]

    @property
    def offsets(self) -> NDArray:
        return self._hrep[1]


# ------------------------------------------------------------------ smooth bodies


class SmoothBody(Body):
    """Bodies described by a smooth level function ``F <= 1``."""

    @abstractmethod
    def level(self, x: NDArray) -> tuple[float, NDArray, NDArray]:
        """Value, gradient and Hessian of the level function at one point."""

    def gauge_gradient(self, x):
        X, single = _as_rows(x, self.dim)
        g = np.atleast_1d(self.gauge(X))
        out = np.empty_like(X)
        for i, (row, gi) in enumerate(zip(X, g)):
            p = row / gi
            _, grad, _ = self.level(p)
            out[i] = grad / (grad @ p)
        return _out_rows(out, single)


class Ellipsoid(SmoothBody):
    """``S B_2 + c`` with ``S`` symmetric positive-definite."""

    def __init__(self, shape: ArrayLike, center: ArrayLike | None = None):
        S = np.asarray(shape, dtype=float)
        check_spd(S, "ellipsoid shape")
        self.shape = sym(S)
        self.dim = S.shape[0]
        self.center = np.zeros(self.dim) if center is None else np.asarray(center, dtype=float).ravel()
        if self.center.shape != (self.dim,):
            raise ValueError("center dimension does not match shape")
        self._inv = np.linalg.inv(self.shape)
        self._inv2 = sym(self._inv @ self._inv)

    def __repr__(self) -> str:
        return f"Ellipsoid(dim={self.dim})"

    def support(self, u):
        U, single = _as_rows(u, self.dim)
        return _out(np.linalg.norm(U @ self.shape, axis=1) + U @ self.center, single)

    def support_point(self, u):
        U, single = _as_rows(u, self.dim)
        W = U @ self.shape
        W = W / np.linalg.norm(W, axis=1, keepdims=True)
        return _out_rows(W @ self.shape + self.center, single)

    def gauge(self, x):
        X, single = _as_rows(x, self.dim)
        a = X @ self._inv
        bvec = self._inv @ self.center
        bb = bvec @ bvec
        if bb >= 1.0:
            raise ValueError("origin is not interior to the ellipsoid")
        ab = a @ bvec
        aa = np.einsum("ij,ij->i", a, a)
        r = (-ab + np.sqrt(ab * ab + (1.0 - bb) * aa)) / (1.0 - bb)
        return _out(r, single)

    def level(self, x):
        d = x - self.center
        g = self._inv2 @ d
        return float(d @ g), 2.0 * g, 2.0 * self._inv2

    def contains_points(self, X, tol=0.0):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        d = (X - self.center) @ self._inv
        return np.einsum("ij,ij->i", d, d) <= (1.0 + tol) ** 2

    @property
    def symmetric(self) -> bool:
        return bool(np.all(self.center == 0.0))

    def volume(self) -> float:
        return float(np.linalg.det(self.shape) * _ball_volume(self.dim))


class LpBall(SmoothBody):
    """``radius · B_p^n``.

    Body files admit ``p`` in {1, 2, 4, inf}; any ``p >= 1`` is accepted here
    so that polars (``p -> p / (p - 1)``) stay in the family.
    """

    ALLOWED = (1.0, 2.0, 4.0, math.inf)

    def __init__(self, p: float, n: int, radius: float = 1.0):
        p = math.inf if (isinstance(p, str) and p.lower() in ("inf", "infinity")) else float(p)
        if not p >= 1.0:
            raise ValueError(f"p must be at least 1; got {p}")
        if int(n) < 1:
            raise ValueError("dimension must be at least 1")
        if not radius > 0:
            raise ValueError("radius must be positive")
        self.p = p
        self.dim = int(n)
        self.radius = float(radius)

    def __repr__(self) -> str:
        return f"LpBall(p={self.p}, n={self.dim}, radius={self.radius})"

    @property
    def dual_exponent(self) -> float:
        if self.p == 1.0:
            return math.inf
        if self.p == math.inf:
            return 1.0
        return self.p / (self.p - 1.0)

    def support(self, u):
        U, single = _as_rows(u, self.dim)
        return _out(self.radius * np.linalg.norm(U, ord=self.dual_exponent, axis=1), single)

    def support_point(self, u):
        U, single = _as_rows(u, self.dim)
        out = np.zeros_like(U)
        if self.p == 1.0:
            idx = np.argmax(np.abs(U), axis=1)
            out[np.arange(U.shape[0]), idx] = np.sign(U[np.arange(U.shape[0]), idx])
        elif self.p == math.inf:
            out = np.where(U >= 0.0, 1.0, -1.0)
        else:
            q = self.dual_exponent
            w = np.sign(U) * np.abs(U) ** (q - 1.0)
            out = w / np.linalg.norm(w, ord=self.p, axis=1, keepdims=True)
        return _out_rows(self.radius * out, single)

    def gauge(self, x):
        X, single = _as_rows(x, self.dim)
        return _out(np.linalg.norm(X, ord=self.p, axis=1) / self.radius, single)

    def level(self, x):
        if self.p == 2.0:
            r2 = self.radius ** 2
            return float(x @ x) / r2, 2.0 * x / r2, 2.0 * np.eye(self.dim) / r2
        if self.p == 4.0:
            r4 = self.radius ** 4
            return float(np.sum(x ** 4)) / r4, 4.0 * x ** 3 / r4, np.diag(12.0 * x ** 2) / r4
        if 2.0 < self.p < math.inf:
            p, rp, ax = self.p, self.radius ** self.p, np.abs(x)
            return (float(np.sum(ax ** p)) / rp, p * np.sign(x) * ax ** (p - 1.0) / rp,
                    np.diag(p * (p - 1.0) * ax ** (p - 2.0)) / rp)
        raise UnsupportedBodyError(f"the ℓ{self.p:g} ball has no twice-differentiable level function")

    def gauge_gradient(self, x):
        if self.p in (1.0, math.inf):
            return self.as_polytope().gauge_gradient(x)
        X, single = _as_rows(x, self.dim)
        nrm = np.linalg.norm(X, ord=self.p, axis=1, keepdims=True)
        G = np.sign(X) * (np.abs(X) / nrm) ** (self.p - 1.0) / self.radius
        return _out_rows(G, single)

    def contains_points(self, X, tol=0.0):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.linalg.norm(X, ord=self.p, axis=1) <= self.radius * (1.0 + tol)

    @property
    def symmetric(self) -> bool:
        return True

    def volume(self) -> float:
        n, r = self.dim, self.radius
        if self.p == 1.0:
            return float(2.0 ** n / math.factorial(n) * r ** n)
        if self.p == math.inf:
            return float((2.0 * r) ** n)
        if self.p == 2.0:
            return float(_ball_volume(n) * r ** n)
        lg = n * (math.log(2.0) + gammaln(1.0 + 1.0 / self.p)) - gammaln(1.0 + n / self.p)
        return float(math.exp(lg) * r ** n)

    @property
    def is_polyhedral(self) -> bool:
        return self.p in (1.0, math.inf)

    def as_polytope(self) -> Polytope:
        """Polytope view with both representations filled in from closed forms."""
        if "_polytope" in self.__dict__:
            return self.__dict__["_polytope"]
        n, r = self.dim, self.radius
        eye = np.eye(n)
        signs = np.array(list(itertools.product((1.0, -1.0), repeat=n)))
        if self.p == 1.0:
            out = VPolytope(r * np.vstack([eye, -eye]))
            out.__dict__["vertices"] = out.points
            out.__dict__["_hrep"] = (signs, np.full(len(signs), r))
        elif self.p == math.inf:
            out = HPolytope(np.vstack([eye, -eye]), r * np.ones(2 * n))
            out.__dict__["vertices"] = r * signs
        else:
            raise UnsupportedBodyError("only p = 1 and p = inf balls are polytopes")
        self.__dict__["_polytope"] = out
        return out

    def as_ellipsoid(self) -> Ellipsoid:
        if self.p != 2.0:
            raise UnsupportedBodyError("only the p = 2 ball is an ellipsoid")
        return Ellipsoid(self.radius * np.eye(self.dim))


class AffineImage(SmoothBody):
    """``A·B + z`` for a smooth base body ``B`` (used for images of the ℓ4 ball)."""

    def __init__(self, base: SmoothBody, linear: ArrayLike, shift: ArrayLike | None = None):
        T = AffineMap(linear, shift)
        if abs(np.linalg.det(T.linear)) <= 1e-300:
            raise SingularMatrixError("linear part is singular")
        self.base = base
        self.map = T
        self.dim = base.dim
        self._inv = np.linalg.inv(T.linear)

    def __repr__(self) -> str:
        return f"AffineImage({self.base!r})"

    def support(self, u):
        U, single = _as_rows(u, self.dim)
        v = np.atleast_1d(self.base.support(U @ self.map.linear)) + U @ self.map.shift
        return _out(v, single)

    def support_point(self, u):
        U, single = _as_rows(u, self.dim)
        p = np.atleast_2d(self.base.support_point(U @ self.map.linear))
        return _out_rows(p @ self.map.linear.T + self.map.shift, single)

    def _pull(self, X: NDArray) -> NDArray:
        return (X - self.map.shift) @ self._inv.T

    def contains_points(self, X, tol=0.0):
        return self.base.contains_points(self._pull(np.atleast_2d(X)), tol)

    def gauge(self, x):
        X, single = _as_rows(x, self.dim)
        if not np.any(self.map.shift):
            return _out(np.atleast_1d(self.base.gauge(X @ self._inv.T)), single)
        if not self.contains_points(np.zeros((1, self.dim)))[0]:
            raise ValueError("origin is not interior to the body")
        out = np.zeros(X.shape[0])
        for i, row in enumerate(X):
            if not np.any(row):
                continue
            f = lambda r: self.base.gauge(self._pull((row / r)[None, :])[0]) - 1.0  # noqa: E731
            hi = 1.0
            while f(hi) > 0.0:
                hi *= 2.0
            lo = hi
            while f(lo) <= 0.0:
                lo *= 0.5
            out[i] = brentq(f, lo, hi, xtol=1e-15, rtol=1e-14)
        return _out(out, single)

    def level(self, x):
        F, g, H = self.base.level(self._pull(x[None, :])[0])
        return F, self._inv.T @ g, self._inv.T @ H @ self._inv

    @property
    def symmetric(self) -> bool:
        return self.base.symmetric and not np.any(self.map.shift)

    def volume(self) -> float:
        return float(abs(np.linalg.det(self.map.linear)) * self.base.volume())


# ------------------------------------------------------------------ constructors


def cube(n: int, radius: float = 1.0) -> LpBall:
    """``radius · B_∞^n``."""
    return LpBall(math.inf, n, radius)


def cross_polytope(n: int, radius: float = 1.0) -> LpBall:
    """``radius · B_1^n``."""
    return LpBall(1.0, n, radius)


def ball(n: int, radius: float = 1.0) -> LpBall:
    """``radius · B_2^n``."""
    return LpBall(2.0, n, radius)


def is_polytope(B: Body) -> bool:
    return isinstance(B, Polytope) or (isinstance(B, LpBall) and B.is_polyhedral)


def as_polytope(B: Body) -> Polytope | None:
    """Polytope view of ``B`` or ``None`` for curved bodies."""
    if isinstance(B, Polytope):
        return B
    if isinstance(B, LpBall) and B.is_polyhedral:
        return B.as_polytope()
    return None


def as_ellipsoid(B: Body) -> Ellipsoid | None:
    """Ellipsoid view of ``B`` or ``None``."""
    if isinstance(B, Ellipsoid):
        return B
    if isinstance(B, LpBall) and B.p == 2.0:
        return B.as_ellipsoid()
    return None


# ------------------------------------------------------------------ oracles


def support(B: Body, u: ArrayLike):
    """Support function of ``B`` at ``u``."""
    return B.support(u)


def gauge(B: Body, x: ArrayLike):
    """Minkowski functional of ``B`` at ``x``."""
    return B.gauge(x)


def _as_map(T) -> AffineMap:
    if isinstance(T, AffineMap):
        return T
    if isinstance(T, tuple):
        return AffineMap(*T)
    return AffineMap(T)


def apply_affine(B: Body, T) -> Body:
    """Image of ``B`` under ``x -> A x + z``.

    Parameters
    ----------
    B : Body
    T : AffineMap, tuple ``(A, z)`` or matrix ``A``

    Raises
    ------
    SingularMatrixError
        If the linear part is singular.
    """
    T = _as_map(T)
    A, z = T.linear, T.shift
    if A.shape[0] != B.dim:
        raise ValueError("map dimension does not match body")
    s = np.linalg.svd(A, compute_uv=False)
    if s[-1] <= s[0] * 1e-14:
        raise SingularMatrixError("linear part of the affine map is singular")
    if isinstance(B, VPolytope):
        out = VPolytope(B.vertices @ A.T + z)
        out.__dict__["vertices"] = out.points
        if "_hrep" in B.__dict__:
            N = np.linalg.solve(A.T, B.normals.T).T
            out.__dict__["_hrep"] = (N, B.offsets + N @ z)
        return out
    if isinstance(B, HPolytope):
        N = np.linalg.solve(A.T, B.normals.T).T
        out = HPolytope(N, B.offsets + N @ z)
        if "vertices" in B.__dict__:
            out.__dict__["vertices"] = B.vertices @ A.T + z
        return out
    if isinstance(B, Ellipsoid):
        AS = A @ B.shape
        return Ellipsoid(spd_sqrt(sym(AS @ AS.T)), A @ B.center + z)
    if isinstance(B, LpBall):
        d = A[0, 0]
        if not np.any(z) and np.allclose(A, d * np.eye(B.dim), rtol=0.0, atol=1e-15 * abs(d)):
            return LpBall(B.p, B.dim, abs(d) * B.radius)
        if B.p == 2.0:
            return apply_affine(B.as_ellipsoid(), T)
        if B.is_polyhedral:
            return apply_affine(B.as_polytope(), T)
        return AffineImage(B, A, z)
    if isinstance(B, AffineImage):
        return AffineImage(B.base, A @ B.map.linear, A @ B.map.shift + z)
    raise UnsupportedBodyError(f"cannot map {type(B).__name__}")


def scaled(B: Body, s: float) -> Body:
    """``s · B``."""
    return apply_affine(B, AffineMap(s * np.eye(B.dim)))


def translated(B: Body, z: ArrayLike) -> Body:
    """``B + z``."""
    return apply_affine(B, AffineMap(np.eye(B.dim), z))


def polar_dual(B: Body) -> Body:
    """Polar body ``{y : <x, y> <= 1 for all x in B}``.

    Raises
    ------
    ValueError
        If the origin is not interior to ``B``.
    """
    if isinstance(B, HPolytope):
        A, b = B.normals, B.offsets
        if np.any(b <= 0):
            raise ValueError("origin is not interior: polar undefined")
        return VPolytope(A / b[:, None])
    if isinstance(B, VPolytope):
        B._require_origin()
        return HPolytope(B.vertices, np.ones(B.vertices.shape[0]))
    if isinstance(B, LpBall):
        return LpBall(B.dual_exponent, B.dim, 1.0 / B.radius)
    if isinstance(B, Ellipsoid):
        c = B.center
        S2 = B.shape @ B.shape
        Q = sym(S2 - np.outer(c, c))
        try:
            check_spd(Q)
        except ValueError as exc:
            raise ValueError("origin is not interior: polar undefined") from exc
        Qi_c = np.linalg.solve(Q, c)
        k = 1.0 + c @ Qi_c
        return Ellipsoid(spd_sqrt(sym(k * np.linalg.inv(Q))), -Qi_c)
    if isinstance(B, AffineImage):
        if np.any(B.map.shift):
            raise UnsupportedBodyError("polar of a shifted affine image is not represented")
        return AffineImage(polar_dual(B.base), np.linalg.inv(B.map.linear).T)
    raise UnsupportedBodyError(f"cannot take polar of {type(B).__name__}")


def containment_report(outer: Body, inner: Body, tol: float = 1e-9, net_size: int = DEFAULT_NET_SIZE) -> dict:
    """Worst relative violation of ``inner ⊂ outer`` and how it was certified.

    The violation is ``max g_outer(v) − 1`` over vertices of ``inner`` when it
    has vertices, ``max h_inner(a)/b − 1`` over facets of ``outer`` when that
    is a polytope, and the support-ratio excess on a direction net otherwise.
    """
    pin = as_polytope(inner)
    pout = as_polytope(outer)
    if pin is not None:
        viol = float(np.max(np.atleast_1d(outer.gauge(pin.vertices)))) - 1.0
        method, resolution = "vertices", 0.0
    elif pout is not None:
        A, b = pout.unit_halfspaces
        viol = float(np.max(np.atleast_1d(inner.support(A)) / b)) - 1.0
        method, resolution = "facets", 0.0
    else:
        net = direction_net(outer.dim, net_size)
        viol = float(np.max(np.atleast_1d(inner.support(net)) / np.atleast_1d(outer.support(net)))) - 1.0
        method, resolution = "net", net_resolution(net) if net.shape[0] <= 20000 else float("nan")
    margin = -viol
    viol = max(viol, 0.0)
    return {"holds": viol <= tol, "violation": viol, "margin": margin, "method": method, "resolution": resolution}


def contains(outer: Body, inner: Body, tol: float = 1e-9) -> tuple[bool, float]:
    """Test ``inner ⊂ outer`` up to ``tol``; returns ``(holds, worst violation)``."""
    rep = containment_report(outer, inner, tol)
    return rep["holds"], rep["violation"]


def _fan_directions(B: Body) -> NDArray:
    P = as_polytope(B)
    if P is None:
        return np.zeros((0, B.dim))
    return P.unit_halfspaces[0]


def hausdorff_distance(A: Body, B: Body, net_size: int = DEFAULT_NET_SIZE) -> float:
    """Max of ``|h_A − h_B|`` over a direction net joined with both normal fans."""
    if A.dim != B.dim:
        raise ValueError("bodies live in different dimensions")
    net = np.vstack([direction_net(A.dim, net_size), _fan_directions(A), _fan_directions(B)])
    return float(np.max(np.abs(np.atleast_1d(A.support(net)) - np.atleast_1d(B.support(net)))))


def volume(B: Body) -> float:
    """Volume of ``B``."""
    return B.volume()


# ------------------------------------------------------------------ file format


def _matrix(obj: Any, where: str, rows: int | None = None, cols: int | None = None) -> NDArray:
    if not isinstance(obj, list) or not obj or not all(isinstance(r, list) for r in obj):
        raise BodySpecError(f"{where}: expected a nonempty list of rows")
    widths = {len(r) for r in obj}
    if len(widths) != 1:
        raise BodySpecError(f"{where}: rows have unequal lengths {sorted(widths)}")
    for i, r in enumerate(obj):
        for j, v in enumerate(r):
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise BodySpecError(f"{where}[{i}][{j}]: expected a finite number, got {v!r}")
    M = np.asarray(obj, dtype=float)
    if cols is not None and M.shape[1] != cols:
        raise BodySpecError(f"{where}: expected {cols} columns, got {M.shape[1]}")
    if rows is not None and M.shape[0] != rows:
        raise BodySpecError(f"{where}: expected {rows} rows, got {M.shape[0]}")
    return M


def _vector(obj: Any, where: str, length: int | None = None) -> NDArray:
    if not isinstance(obj, list) or not obj:
        raise BodySpecError(f"{where}: expected a nonempty list of numbers")
    for i, v in enumerate(obj):
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
            raise BodySpecError(f"{where}[{i}]: expected a finite number, got {v!r}")
    v = np.asarray(obj, dtype=float)
    if length is not None and v.shape[0] != length:
        raise BodySpecError(f"{where}: expected length {length}, got {v.shape[0]}")
    return v


def _check_bounded(A: NDArray, b: NDArray) -> None:
    n = A.shape[1]
    for i in range(n):
        for sgn in (1.0, -1.0):
            c = np.zeros(n)
            c[i] = -sgn
            res = linprog(c, A_ub=A, b_ub=b, bounds=[(None, None)] * n, method="highs")
            if res.status == 3:
                raise BodySpecError(
                    f"$.normals: halfspaces do not bound the body (unbounded along {'+' if sgn > 0 else '-'}e_{i + 1})"
                )
            if res.status != 0:
                raise BodySpecError(f"$.normals: boundedness check failed ({res.message})")


def parse_body(spec: str | Mapping[str, Any]) -> Body:
    """Parse and validate a body description.

    Parameters
    ----------
    spec : str or mapping
        JSON text or an already-decoded object with a ``"type"`` field.

    Raises
    ------
    BodySpecError
        With a ``$.field[index]`` location for malformed, unbounded or
        empty-interior descriptions.
    """
    if isinstance(spec, str):
        try:
            obj = json.loads(spec)
        except json.JSONDecodeError as exc:
            raise BodySpecError(f"line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    else:
        obj = dict(spec)
    if not isinstance(obj, dict):
        raise BodySpecError("$: expected an object")
    kind = obj.get("type")
    if kind == "h-polytope":
        if "normals" not in obj or "offsets" not in obj:
            raise BodySpecError("$: h-polytope needs 'normals' and 'offsets'")
        A = _matrix(obj["normals"], "$.normals")
        b = _vector(obj["offsets"], "$.offsets", A.shape[0])
        for j, bj in enumerate(b):
            if bj <= 0:
                raise BodySpecError(f"$.offsets[{j}]: offset {bj} <= 0, origin not interior")
        for j, row in enumerate(A):
            if not np.any(row):
                raise BodySpecError(f"$.normals[{j}]: zero normal")
        _check_bounded(A, b)
        return HPolytope(A, b)
    if kind == "v-polytope":
        if "vertices" not in obj:
            raise BodySpecError("$: v-polytope needs 'vertices'")
        V = _matrix(obj["vertices"], "$.vertices")
        n = V.shape[1]
        if V.shape[0] < n + 1:
            raise BodySpecError(f"$.vertices: need at least {n + 1} points in dimension {n}")
        P = VPolytope(V)
        try:
            _, b = P.unit_halfspaces
        except ValueError as exc:
            raise BodySpecError(f"$.vertices: {exc}") from exc
        if np.any(b <= 1e-12 * max(1.0, P.scale)):
            raise BodySpecError("$.vertices: origin is not in the interior of the hull")
        return P
    if kind == "ellipsoid":
        if "shape" not in obj:
            raise BodySpecError("$: ellipsoid needs 'shape'")
        S = _matrix(obj["shape"], "$.shape")
        if S.shape[0] != S.shape[1]:
            raise BodySpecError("$.shape: matrix must be square")
        c = _vector(obj["center"], "$.center", S.shape[0]) if "center" in obj else np.zeros(S.shape[0])
        try:
            E = Ellipsoid(S, c)
        except ValueError as exc:
            raise BodySpecError(f"$.shape: {exc}") from exc
        if np.linalg.norm(E._inv @ c) >= 1.0:
            raise BodySpecError("$.center: origin is not interior to the ellipsoid")
        return E
    if kind == "lp-ball":
        p = obj.get("p")
        if p == "inf":
            p = math.inf
        if isinstance(p, bool) or p not in (1, 2, 4, math.inf):
            raise BodySpecError(f"$.p: expected 1, 2, 4 or \"inf\", got {obj.get('p')!r}")
        n = obj.get("n")
        if isinstance(n, bool) or not isinstance(n, int) or n < 1:
            raise BodySpecError(f"$.n: expected a positive integer, got {n!r}")
        r = obj.get("radius", 1.0)
        if isinstance(r, bool) or not isinstance(r, (int, float)) or not r > 0 or not math.isfinite(r):
            raise BodySpecError(f"$.radius: expected a positive number, got {r!r}")
        return LpBall(p, n, r)
    raise BodySpecError(f"$.type: unknown body type {kind!r}")


def load_body(path: str | Path) -> Body:
    """Read and parse a body file."""
    text = Path(path).read_text()
    try:
        return parse_body(text)
    except BodySpecError as exc:
        raise BodySpecError(f"{path}: {exc}") from exc


def body_to_spec(B: Body) -> dict:
    """Structured description accepted by :func:`parse_body`."""
    if isinstance(B, HPolytope):
        return {"type": "h-polytope", "normals": B.normals.tolist(), "offsets": B.offsets.tolist()}
    if isinstance(B, VPolytope):
        return {"type": "v-polytope", "vertices": B.vertices.tolist()}
    if isinstance(B, Ellipsoid):
        return {"type": "ellipsoid", "shape": B.shape.tolist(), "center": B.center.tolist()}
    if isinstance(B, LpBall):
        if B.p not in LpBall.ALLOWED:
            raise UnsupportedBodyError(f"p = {B.p:g} has no file representation")
        p = "inf" if B.p == math.inf else int(B.p)
        return {"type": "lp-ball", "p": p, "n": B.dim, "radius": B.radius}
    raise UnsupportedBodyError(f"{type(B).__name__} has no file representation")


def dump_body(B: Body) -> str:
    return json.dumps(body_to_spec(B))
