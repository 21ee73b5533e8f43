"""Exact planar geometry for convex polygons and ellipses.

A convex region is bounded by pieces (segments or elliptic arcs), all
oriented counter-clockwise.  Splitting the boundary of one region at its
crossings with another and classifying each sub-piece by its midpoint gives
``∂R ∩ S`` exactly; Green's theorem turns those pieces into areas, first
moments, normal fluxes and ``∫ x ⊗ n̂`` moments.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from ._kernels import clip_polygon, polygon_moments

_J = np.array([[0.0, 1.0], [-1.0, 0.0]])  # rotates a CCW tangent to the outward normal
_GL_X, _GL_W = np.polynomial.legendre.leggauss(48)


@dataclass(frozen=True)
class Polygon:
    """Convex polygon with CCW vertices and unit halfspaces ``a·x <= b``."""

    vertices: NDArray
    normals: NDArray
    offsets: NDArray

    @classmethod
    def from_vertices(cls, V: NDArray) -> "Polygon":
        V = np.asarray(V, dtype=float)
        c = V.mean(axis=0)
        order = np.argsort(np.arctan2(V[:, 1] - c[1], V[:, 0] - c[0]))
        V = V[order]
        d = np.roll(V, -1, axis=0) - V
        N = d @ _J.T
        N /= np.linalg.norm(N, axis=1, keepdims=True)
        return cls(V, N, np.einsum("ij,ij->i", N, V))

    @property
    def scale(self) -> float:
        return float(np.abs(self.vertices).max()) + 1.0

    def level(self, X: NDArray) -> NDArray:
        """Signed-distance-like value: ``max_i a_i·x − b_i``."""
        return np.max(np.atleast_2d(X) @ self.normals.T - self.offsets, axis=1)

    def outward_normal(self, x: NDArray) -> NDArray:
        return self.normals[int(np.argmax(self.normals @ x - self.offsets))]

    def pieces(self) -> list["Piece"]:
        V = self.vertices
        return [Segment(V[i], V[(i + 1) % len(V)]) for i in range(len(V))]


@dataclass(frozen=True)
class Ellipse:
    """``{c + S w : ‖w‖ <= 1}`` with ``det S > 0``."""

    center: NDArray
    shape: NDArray

    @classmethod
    def make(cls, center: NDArray, shape: NDArray) -> "Ellipse":
        S = np.asarray(shape, dtype=float).copy()
        if np.linalg.det(S) < 0.0:
            S[:, 1] *= -1.0
        return cls(np.asarray(center, dtype=float), S)

    @property
    def inverse(self) -> NDArray:
        return np.linalg.inv(self.shape)

    @property
    def scale(self) -> float:
        return float(np.linalg.norm(self.shape, 2) + np.abs(self.center).max()) + 1.0

    def level(self, X: NDArray) -> NDArray:
        """``‖S^{-1}(x − c)‖ − 1`` scaled by the smallest semi-axis."""
        W = (np.atleast_2d(X) - self.center) @ self.inverse.T
        smin = np.linalg.svd(self.shape, compute_uv=False)[-1]
        return (np.linalg.norm(W, axis=1) - 1.0) * smin

    def outward_normal(self, x: NDArray) -> NDArray:
        Si = self.inverse
        g = Si.T @ (Si @ (x - self.center))
        return g / np.linalg.norm(g)

    def point(self, t) -> NDArray:
        t = np.asarray(t, dtype=float)
        return self.center + np.stack([np.cos(t), np.sin(t)], axis=-1) @ self.shape.T

    def pieces(self) -> list["Piece"]:
        return [Arc(self, 0.0, 2.0 * np.pi)]

    def same_as(self, other: "Ellipse", tol: float) -> bool:
        G1 = self.shape @ self.shape.T
        G2 = other.shape @ other.shape.T
        return bool(np.abs(G1 - G2).max() <= tol and np.abs(self.center - other.center).max() <= tol)


Region = Polygon | Ellipse


@dataclass(frozen=True)
class Segment:
    p0: NDArray
    p1: NDArray

    def point(self, s: float) -> NDArray:
        return self.p0 + s * (self.p1 - self.p0)

    @property
    def bounds(self) -> tuple[float, float]:
        return 0.0, 1.0

    def sub(self, s0: float, s1: float) -> "Segment":
        return Segment(self.point(s0), self.point(s1))

    def crossings(self, R: Region) -> list[float]:
        d = self.p1 - self.p0
        out = []
        if isinstance(R, Polygon):
            for a, b in zip(R.normals, R.offsets):
                den = a @ d
                if abs(den) > 1e-15 * np.linalg.norm(d):
                    out.append((b - a @ self.p0) / den)
        else:
            Si = R.inverse
            w0, wd = Si @ (self.p0 - R.center), Si @ d
            A, B, C = wd @ wd, 2.0 * w0 @ wd, w0 @ w0 - 1.0
            disc = B * B - 4.0 * A * C
            if A > 0.0 and disc > 0.0:
                r = np.sqrt(disc)
                q = -0.5 * (B + np.copysign(r, B))
                out += [q / A, C / q] if q != 0.0 else [0.0]
        return out

    def flux(self) -> NDArray:
        return _J @ (self.p1 - self.p0)

    def moment(self) -> NDArray:
        """``∫ x ⊗ n̂ ds``."""
        return np.outer(0.5 * (self.p0 + self.p1), self.flux())

    def green_area(self) -> float:
        return 0.5 * (self.p0[0] * self.p1[1] - self.p1[0] * self.p0[1])

    def green_first(self) -> NDArray:
        """Contributions to ``(∫∫ x dA, ∫∫ y dA)`` via ``∮ x²/2 dy`` and ``−∮ y²/2 dx``."""
        (x0, y0), (x1, y1) = self.p0, self.p1
        fx = (y1 - y0) * (x0 * x0 + x0 * x1 + x1 * x1) / 6.0
        fy = -(x1 - x0) * (y0 * y0 + y0 * y1 + y1 * y1) / 6.0
        return np.array([fx, fy])


@dataclass(frozen=True)
class Arc:
    ellipse: Ellipse
    t0: float
    t1: float

    def point(self, t: float) -> NDArray:
        return self.ellipse.point(t)

    @property
    def bounds(self) -> tuple[float, float]:
        return self.t0, self.t1

    def sub(self, s0: float, s1: float) -> "Arc":
        return Arc(self.ellipse, s0, s1)

    def crossings(self, R: Region) -> list[float]:
        E = self.ellipse
        out: list[float] = []
        if isinstance(R, Polygon):
            for a, b in zip(R.normals, R.offsets):
                al, be = E.shape.T @ a
                rho = np.hypot(al, be)
                g = b - a @ E.center
                if rho > 0.0 and abs(g) < rho:
                    phi = np.arctan2(be, al)
                    dt = np.arccos(g / rho)
                    out += [phi + dt, phi - dt]
        else:
            out += _ellipse_crossings(E, R)
        lo, hi = self.t0, self.t1
        res = []
        for t in out:
            t = lo + np.mod(t - lo, 2.0 * np.pi)
            res.append(t)
        return [t for t in res if lo < t < hi]

    def _e(self):
        t0, t1 = self.t0, self.t1
        return (np.array([np.cos(t0), np.sin(t0)]), np.array([np.cos(t1), np.sin(t1)]))

    def flux(self) -> NDArray:
        e0, e1 = self._e()
        return _J @ (self.ellipse.shape @ (e1 - e0))

    def moment(self) -> NDArray:
        """``∫ x ⊗ n̂ ds`` in closed form."""
        E = self.ellipse
        t0, t1 = self.t0, self.t1
        e0, e1 = self._e()
        # ∫ e e'^T dt with e = (cos, sin), e' = (−sin, cos)
        s0, s1 = np.sin(t0), np.sin(t1)
        ics = 0.5 * (s1 * s1 - s0 * s0)                       # ∫ cos·sin
        icc = 0.5 * (t1 - t0) + 0.25 * (np.sin(2 * t1) - np.sin(2 * t0))
        iss = 0.5 * (t1 - t0) - 0.25 * (np.sin(2 * t1) - np.sin(2 * t0))
        Iee = np.array([[-ics, icc], [-iss, ics]])
        Ixx = np.outer(E.center, E.shape @ (e1 - e0)) + E.shape @ Iee @ E.shape.T
        return Ixx @ _J.T

    def green_area(self) -> float:
        E = self.ellipse
        e0, e1 = self._e()
        d = E.shape @ (e1 - e0)
        c = E.center
        return 0.5 * ((c[0] * d[1] - c[1] * d[0]) + np.linalg.det(E.shape) * (self.t1 - self.t0))

    def green_first(self) -> NDArray:
        E = self.ellipse
        h = 0.5 * (self.t1 - self.t0)
        t = self.t0 + h * (_GL_X + 1.0)
        X = E.point(t)
        dX = np.stack([-np.sin(t), np.cos(t)], axis=-1) @ E.shape.T
        fx = np.sum(_GL_W * 0.5 * X[:, 0] ** 2 * dX[:, 1]) * h
        fy = -np.sum(_GL_W * 0.5 * X[:, 1] ** 2 * dX[:, 0]) * h
        return np.array([fx, fy])


Piece = Segment | Arc


def _ellipse_crossings(E: Ellipse, F: Ellipse) -> list[float]:
    """Parameters ``t`` with ``E.point(t) ∈ ∂F``.

    The crossing points are always computed on the same member of the pair
    and pulled back to the other one, so both boundaries split at identical
    points.  For nearly equal ellipses the roots are ill-conditioned and two
    independent solves would leave Green's-theorem loops slightly open.
    """
    kE = (E.center.tobytes(), E.shape.tobytes())
    kF = (F.center.tobytes(), F.shape.tobytes())
    if kE <= kF:
        return _quartic_crossings(E, F)
    X = F.point(np.asarray(_quartic_crossings(F, E)))
    if X.size == 0:
        return []
    W = (X.reshape(-1, 2) - E.center) @ E.inverse.T
    return [float(t) for t in np.arctan2(W[:, 1], W[:, 0])]


def _quartic_crossings(E: Ellipse, F: Ellipse) -> list[float]:
    """Roots of ``h(t) = ‖F^{-1}(E(t) − c_F)‖² − 1`` via a quartic in ``e^{it}``."""
    Fi = F.inverse
    W = Fi.T @ Fi
    Q = E.shape.T @ W @ E.shape
    q = E.shape.T @ W @ (E.center - F.center)
    r = (E.center - F.center) @ W @ (E.center - F.center) - 1.0
    # h(t) = e^T Q e + 2 q·e + r as a Laurent polynomial in w = e^{it}
    a, b, c = Q[0, 0], Q[1, 1], Q[0, 1]
    coef2 = 0.25 * (a - b) - 0.5j * c            # w^2
    coef1 = q[0] - 1j * q[1]                      # w^1
    coef0 = 0.5 * (a + b) + r                     # w^0
    poly = np.array([coef2, coef1, coef0, np.conj(coef1), np.conj(coef2)])
    scale = np.abs(poly).max()
    if scale == 0.0:
        return []
    poly = poly / scale
    nz = np.nonzero(np.abs(poly) > 1e-14)[0]
    if nz.size <= 1:
        return []
    roots = np.roots(poly[nz[0]:]) if nz[0] > 0 else np.roots(poly)

    def h(t):
        e = np.array([np.cos(t), np.sin(t)])
        return e @ Q @ e + 2.0 * q @ e + r

    def dh(t):
        e = np.array([np.cos(t), np.sin(t)])
        de = np.array([-np.sin(t), np.cos(t)])
        return 2.0 * de @ Q @ e + 2.0 * q @ de

    ts = []
    tolh = 1e-9 * max(1.0, np.abs(Q).max())
    for w in roots:
        if not np.isfinite(w) or abs(abs(w) - 1.0) > 1e-3:
            continue
        t = float(np.angle(w))
        for _ in range(20):
            d = dh(t)
            if d == 0.0:
                break
            step = h(t) / d
            t -= step
            if abs(step) < 1e-15:
                break
        if abs(h(t)) <= tolh:
            ts.append(t)
    return ts


def region_of(body, tol: float = 1e-12) -> Region | None:
    """Planar region for a 2-D polytope or ellipse, ``None`` otherwise."""
    from .bodies import as_ellipsoid, as_polytope

    if body.dim != 2:
        return None
    P = as_polytope(body)
    if P is not None:
        return Polygon.from_vertices(P.vertices)
    E = as_ellipsoid(body)
    if E is not None:
        return Ellipse.make(E.center, E.shape)
    return None


# piece classification labels
INSIDE, OUTSIDE, SAME, OPPOSITE = "inside", "outside", "coincident-same", "coincident-opposite"


_PROBES = (0.5, 0.25, 0.75, 0.125, 0.875)


def _coincident_regions(R: Region, S: Region, tol: float) -> bool:
    return isinstance(R, Ellipse) and isinstance(S, Ellipse) and R.same_as(S, tol)


def split_boundary(R: Region, S: Region | None, tol: float = 1e-9) -> list[tuple[Piece, str]]:
    """Sub-pieces of ``∂R`` labelled by their position relative to ``S``.

    Labels are ``inside``, ``outside``, ``coincident-same`` (on ``∂S`` with
    the same outward normal) and ``coincident-opposite``.  ``S = None``
    labels the whole boundary as inside.
    """
    if S is None:
        return [(p, INSIDE) for p in R.pieces()]
    scale = max(R.scale, S.scale)
    if _coincident_regions(R, S, tol * scale):
        return [(p, SAME) for p in R.pieces()]
    out = []
    for piece in R.pieces():
        lo, hi = piece.bounds
        cuts = sorted({lo, hi, *[t for t in piece.crossings(S) if lo < t < hi]})
        merged = [cuts[0]]
        for t in cuts[1:]:
            if t - merged[-1] > 1e-13 * max(1.0, abs(hi - lo)):
                merged.append(t)
        merged[-1] = hi
        for a, b in zip(merged[:-1], merged[1:]):
            sub = piece.sub(a, b)
            # several probes: a single midpoint may be a tangency point
            probes = np.array([piece.point(a + f * (b - a)) for f in _PROBES])
            levs = S.level(probes)
            k = int(np.argmax(np.abs(levs)))
            lev, mid = float(levs[k]), probes[k]
            if lev < -tol * scale:
                lab = INSIDE
            elif lev > tol * scale:
                lab = OUTSIDE
            else:
                nR = R.outward_normal(mid)
                nS = S.outward_normal(mid)
                lab = SAME if nR @ nS > 0.0 else OPPOSITE
            out.append((sub, lab))
    return out


def intersection_area(R: Region, S: Region, tol: float = 1e-13) -> float:
    """Area of ``R ∩ S``."""
    if isinstance(R, Polygon) and isinstance(S, Polygon):
        poly = clip_polygon(R.vertices, S.normals, S.offsets)
        if poly.shape[0] < 3:
            return 0.0
        return abs(polygon_moments(poly)[0])
    return float(_intersection_moments(R, S, tol)[0])


def _intersection_moments(R: Region, S: Region, tol: float) -> tuple[float, NDArray]:
    area, first = 0.0, np.zeros(2)
    for piece, lab in split_boundary(R, S, tol):
        if lab in (INSIDE, SAME):
            area += piece.green_area()
            first += piece.green_first()
    for piece, lab in split_boundary(S, R, tol):
        if lab == INSIDE:
            area += piece.green_area()
            first += piece.green_first()
    if area <= 0.0:
        # disjoint: nothing collected; or one region strictly inside the other with no pieces
        return 0.0, np.zeros(2)
    return area, first


def intersection_moments(R: Region, S: Region, tol: float = 1e-13) -> tuple[float, NDArray]:
    """Area and first moment ``∫∫ x dA`` of ``R ∩ S``."""
    if isinstance(R, Polygon) and isinstance(S, Polygon):
        poly = clip_polygon(R.vertices, S.normals, S.offsets)
        if poly.shape[0] < 3:
            return 0.0, np.zeros(2)
        a, mx, my = polygon_moments(poly)
        s = np.sign(a) if a != 0.0 else 1.0
        return abs(a), s * np.array([mx, my])
    return _intersection_moments(R, S, tol)


def boundary_terms(L: Region, K: Region | None, tol: float = 1e-9) -> dict:
    """Flux and ``∫ x ⊗ n̂`` over ``∂L ∩ K`` with coincidence accounting.

    Coincident pieces with matching outward normals count as inside (the
    derivative there is one-sided); pieces with opposite normals contribute
    nothing.
    """
    flux = np.zeros(2)
    moment = np.zeros((2, 2))
    length = 0.0
    same = opposite = 0
    for piece, lab in split_boundary(L, K, tol):
        if lab == OPPOSITE:
            opposite += 1
            continue
        if lab == OUTSIDE:
            continue
        if lab == SAME:
            same += 1
        f = piece.flux()
        flux += f
        moment += piece.moment()
        length += _piece_length(piece)
    return {"flux": flux, "moment": moment, "measure": length, "coincident_same": same,
            "coincident_opposite": opposite}


def _piece_length(piece: Piece) -> float:
    if isinstance(piece, Segment):
        return float(np.linalg.norm(piece.p1 - piece.p0))
    h = 0.5 * (piece.t1 - piece.t0)
    t = piece.t0 + h * (_GL_X + 1.0)
    dX = np.stack([-np.sin(t), np.cos(t)], axis=-1) @ piece.ellipse.shape.T
    return float(np.sum(_GL_W * np.linalg.norm(dX, axis=1)) * h)


def ellipse_polygon_region_moments(E: Ellipse, poly: Polygon, tol: float = 1e-13) -> tuple[float, NDArray]:
    """Area and first moment of a polygon clipped by an ellipse."""
    return intersection_moments(poly, E, tol)
