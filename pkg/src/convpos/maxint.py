"""Maximal intersection positions.

Intersection volumes ``vol(K ∩ L)``, the boundary integrals

    flux   = ∫_{K ∩ ∂L} n̂_L dσ,        moment = ∫_{K ∩ ∂L} x ⊗ n̂_L dσ,

that give the first variation of the volume under ``L -> e^{tA} L + t u``
(``<flux, u>`` and ``<moment^T, A>``), an ascent flow over volume-preserving
affine maps, and the isotropy certificate at its stationary points.

``moment`` is stored as ``∫ x ⊗ n̂`` (per facet: first moment of the clipped
facet times its normal), so the linear derivative pairs ``A`` with its
transpose.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.optimize
from numpy.typing import NDArray
from scipy.spatial import ConvexHull, HalfspaceIntersection, QhullError

from . import _kernels, planar
from .bodies import Body, Ellipsoid, apply_affine, as_ellipsoid, as_polytope
from .errors import UnsupportedBodyError
from .linalg import AffineMap, matrix_exp, sym

__all__ = [
    "IntersectionResult",
    "SurfaceIntegrals",
    "FacetTerm",
    "FlowOptions",
    "FlowStep",
    "FlowTrace",
    "intersection_volume",
    "boundary_integrals",
    "volume_derivative",
    "radial_derivative",
    "maxint_flow",
    "isotropy_report",
    "anisotropy",
    "FLOW_COLUMNS",
    "flow_csv",
]

COINCIDENCE_TOL = 1e-9
MC_SAMPLES = 10**6
FLOW_COLUMNS = ("step", "volume", "flux_norm", "anisotropy", "step_size", "det_drift")


# ---------------------------------------------------------------- volumes


@dataclass
class IntersectionResult:
    volume: float
    method: str
    stderr: float = 0.0


def _exact_supported(K: Body, L: Body) -> bool:
    n = K.dim
    if n == 2:
        return planar.region_of(K) is not None and planar.region_of(L) is not None
    return n <= 4 and as_polytope(K) is not None and as_polytope(L) is not None


def _chebyshev(A: NDArray, b: NDArray) -> tuple[NDArray, float]:
    n = A.shape[1]
    c = np.zeros(n + 1)
    c[-1] = -1.0
    res = scipy.optimize.linprog(
        c, A_ub=np.column_stack([A, np.linalg.norm(A, axis=1)]), b_ub=b,
        bounds=[(None, None)] * n + [(None, None)], method="highs",
    )
    if res.status != 0:
        return np.zeros(n), -1.0
    return res.x[:n], float(res.x[-1])


def _halfspace_moments(A: NDArray, b: NDArray, scale: float) -> tuple[float, NDArray]:
    """Volume and first moment of a bounded ``{A x <= b}`` (any dimension >= 2)."""
    k = A.shape[1]
    x0, r = _chebyshev(A, b)
    if r <= 1e-12 * max(scale, 1.0):
        return 0.0, np.zeros(k)
    try:
        hs = HalfspaceIntersection(np.column_stack([A, -b]), x0)
        V = hs.intersections
        hull = ConvexHull(V)
    except QhullError:
        return 0.0, np.zeros(k)
    # fan of simplices from an interior point over the triangulated facets
    c = V[hull.vertices].mean(axis=0)
    vol, first = 0.0, np.zeros(k)
    fact = float(np.prod(np.arange(1, k + 1)))
    for simplex in hull.simplices:
        S = V[simplex] - c
        v = abs(np.linalg.det(S)) / fact
        vol += v
        first += v * (c + S.sum(axis=0) / (k + 1))
    return vol, first


def _polytope_pair_volume(K: Body, L: Body) -> float:
    PK, PL = as_polytope(K), as_polytope(L)
    AK, bK = PK.unit_halfspaces
    AL, bL = PL.unit_halfspaces
    A, b = np.vstack([AK, AL]), np.concatenate([bK, bL])
    if K.dim == 1:
        lo = max(PK.vertices.min(), PL.vertices.min())
        hi = min(PK.vertices.max(), PL.vertices.max())
        return max(0.0, float(hi - lo))
    return _halfspace_moments(A, b, max(PK.scale, PL.scale))[0]


def _mc_volume(K: Body, L: Body, samples: int, seed: int, jobs: int = 1) -> IntersectionResult:
    lo1, hi1 = K.bounding_box()
    lo2, hi2 = L.bounding_box()
    lo, hi = np.maximum(lo1, lo2), np.minimum(hi1, hi2)
    if np.any(hi <= lo):
        return IntersectionResult(0.0, "monte-carlo", 0.0)
    box = float(np.prod(hi - lo))
    block = 1 << 17
    nblocks = -(-samples // block)
    seqs = np.random.SeedSequence(seed).spawn(nblocks)

    def count(i):
        m = min(block, samples - i * block)
        X = lo + (hi - lo) * np.random.default_rng(seqs[i]).random((m, K.dim))
        return int(np.count_nonzero(K.contains_points(X) & L.contains_points(X)))

    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            hits = sum(ex.map(count, range(nblocks)))
    else:
        hits = sum(count(i) for i in range(nblocks))
    p = hits / samples
    return IntersectionResult(box * p, "monte-carlo", box * np.sqrt(p * (1.0 - p) / samples))


def intersection_volume(
    K: Body,
    L: Body,
    method: str = "auto",
    samples: int = MC_SAMPLES,
    seed: int = 0,
    jobs: int = 1,
) -> IntersectionResult:
    """Volume of ``K ∩ L``.

    Parameters
    ----------
    method : {"auto", "exact", "mc"}
        ``exact`` covers polygons and ellipses in the plane and polytope pairs
        up to dimension 4; ``auto`` falls back to Monte Carlo elsewhere.
    samples, seed, jobs
        Monte Carlo sample count, seed and worker threads.  Samples are
        drawn in fixed blocks with per-block streams, so the estimate does
        not depend on ``jobs``.

    Raises
    ------
    UnsupportedBodyError
        If ``exact`` is requested for an unsupported pair.
    """
    if K.dim != L.dim:
        raise ValueError("bodies live in different dimensions")
    if method not in ("auto", "exact", "mc"):
        raise ValueError("method must be auto, exact or mc")
    if method != "mc" and _exact_supported(K, L):
        if K.dim == 2:
            return IntersectionResult(planar.intersection_area(planar.region_of(K), planar.region_of(L)), "exact")
        return IntersectionResult(_polytope_pair_volume(K, L), "exact")
    if method == "exact":
        raise UnsupportedBodyError(
            f"exact intersection volume unavailable for {type(K).__name__}/{type(L).__name__} "
            f"in dimension {K.dim}; use method='mc'"
        )
    return _mc_volume(K, L, samples, seed, jobs)


# ---------------------------------------------------------------- surface integrals


@dataclass
class FacetTerm:
    normal: NDArray
    area: float
    first_moment: NDArray
    coincidence: str | None = None


@dataclass
class SurfaceIntegrals:
    """Boundary integrals over ``K ∩ ∂L``.

    ``one_sided`` is set when part of ``∂L`` lies on ``∂K`` with positive
    measure: the variation formulas then give a one-sided derivative.
    """

    flux: NDArray
    moment: NDArray
    per_facet: list[FacetTerm] = field(default_factory=list)
    coincident_same: int = 0
    coincident_opposite: int = 0
    measure: float = 0.0

    @property
    def one_sided(self) -> bool:
        return self.coincident_same + self.coincident_opposite > 0

    @property
    def flux_norm(self) -> float:
        return float(np.linalg.norm(self.flux))

    @property
    def trace(self) -> float:
        return float(np.trace(self.moment))


def _plane_basis(a: NDArray) -> NDArray:
    """Orthonormal basis of ``a^⊥`` as columns."""
    _, _, Vt = np.linalg.svd(a[None, :])
    return Vt[1:].T


def _facet_polytope_terms(
    a: NDArray, b: float, W: NDArray, K_local: tuple[NDArray, NDArray] | None, ell: tuple | None, k: int
) -> tuple[float, NDArray]:
    """Area and local first moment of a facet (local vertices ``W``) clipped by K."""
    if k == 2:
        poly = planar.Polygon.from_vertices(W)
        if ell is not None:
            return planar.intersection_moments(poly, ell)
        V = poly.vertices
        if K_local is not None and K_local[0].shape[0]:
            V = _kernels.clip_polygon(V, K_local[0], K_local[1])
        if V.shape[0] < 3:
            return 0.0, np.zeros(2)
        ar, mx, my = _kernels.polygon_moments(V)
        s = 1.0 if ar >= 0 else -1.0
        return abs(ar), s * np.array([mx, my])
    if ell is not None:
        raise UnsupportedBodyError("facet clipping against an ellipsoid needs n <= 3")
    if k == 1:
        lo, hi = float(W.min()), float(W.max())
        if K_local is not None:
            for g, h in zip(K_local[0][:, 0], K_local[1]):
                if g > 0:
                    hi = min(hi, h / g)
                elif g < 0:
                    lo = max(lo, h / g)
        if hi <= lo:
            return 0.0, np.zeros(1)
        return hi - lo, np.array([0.5 * (hi * hi - lo * lo)])
    # k >= 3: facet's own H-representation in local coordinates plus K's
    hull = ConvexHull(W)
    A = hull.equations[:, :-1]
    bb = -hull.equations[:, -1]
    if K_local is not None and K_local[0].shape[0]:
        A = np.vstack([A, K_local[0]])
        bb = np.concatenate([bb, K_local[1]])
    return _halfspace_moments(A, bb, float(np.abs(W).max()))


def boundary_integrals(K: Body | None, L: Body, tol: float = COINCIDENCE_TOL) -> SurfaceIntegrals:
    """Flux and moment of ``K ∩ ∂L``.

    Parameters
    ----------
    K : Body or None
        Container to clip against; ``None`` integrates over all of ``∂L``.
    L : Body
        A polytope, or an ellipse in the plane.
    tol : float
        Relative tolerance for detecting facets of ``L`` lying on ``∂K``.
        Such pieces are counted as inside when the outward normals agree and
        dropped when they are opposite; both are recorded.

    Raises
    ------
    UnsupportedBodyError
        For smooth ``L`` outside the plane, or a smooth container that is not
        an ellipsoid (or an ellipsoid with ``n >= 4``).
    """
    n = L.dim
    if K is not None and K.dim != n:
        raise ValueError("bodies live in different dimensions")
    if n == 2:
        RL = planar.region_of(L)
        RK = None if K is None else planar.region_of(K)
        if RL is None or (K is not None and RK is None):
            raise UnsupportedBodyError("planar boundary integrals need polygons or ellipses")
        t = planar.boundary_terms(RL, RK, tol)
        return SurfaceIntegrals(t["flux"], t["moment"], [], t["coincident_same"], t["coincident_opposite"], t["measure"])
    PL = as_polytope(L)
    if PL is None:
        raise UnsupportedBodyError("boundary integrals of a smooth body need n = 2")
    PK = None if K is None else as_polytope(K)
    EK = None if K is None or PK is not None else as_ellipsoid(K)
    if K is not None and PK is None and EK is None:
        raise UnsupportedBodyError(f"cannot clip against {type(K).__name__}")
    scale = PL.scale if PK is None else max(PL.scale, PK.scale)
    ctol = tol * max(1.0, scale)
    AL, bL = PL.unit_halfspaces
    V = PL.vertices
    if PK is not None:
        AK, bK = PK.unit_halfspaces
    flux = np.zeros(n)
    moment = np.zeros((n, n))
    terms: list[FacetTerm] = []
    same = opp = 0
    measure = 0.0
    for a, b, idx in zip(AL, bL, PL.facets):
        B = _plane_basis(a)
        o = b * a
        W = (V[idx] - o) @ B
        coincidence = None
        K_local = None
        ell = None
        outside = False
        if PK is not None:
            rows, rhs = [], []
            for aK, bKk in zip(AK, bK):
                if np.abs(aK - a).max() <= tol and abs(bKk - b) <= ctol:
                    coincidence = "same"
                    continue
                if np.abs(aK + a).max() <= tol and abs(bKk + b) <= ctol:
                    coincidence = "opposite"
                    continue
                g = B.T @ aK
                h = bKk - aK @ o
                if np.abs(g).max() <= 1e-14:
                    if h < -ctol:
                        outside = True
                    continue
                rows.append(g)
                rhs.append(h)
            K_local = (np.array(rows).reshape(-1, n - 1), np.array(rhs))
        elif EK is not None:
            Si = np.linalg.inv(EK.shape)
            M = Si @ B
            m = Si @ (o - EK.center)
            G = M.T @ M
            w0 = -np.linalg.solve(G, M.T @ m)
            rho = 1.0 - m @ m + w0 @ G @ w0
            if rho <= 0.0:
                outside = True
            else:
                wG, VG = np.linalg.eigh(G)
                S2 = np.sqrt(rho) * (VG / np.sqrt(wG)) @ VG.T
                ell = planar.Ellipse.make(w0, S2)
        if coincidence == "opposite":
            opp += 1
            terms.append(FacetTerm(a, 0.0, np.zeros(n), "opposite"))
            continue
        if coincidence == "same":
            same += 1
        if outside:
            terms.append(FacetTerm(a, 0.0, np.zeros(n), coincidence))
            continue
        area, first_local = _facet_polytope_terms(a, b, W, K_local, ell, n - 1)
        first = area * o + B @ first_local
        flux += area * a
        moment += np.outer(first, a)
        measure += area
        terms.append(FacetTerm(a, area, first, coincidence))
    return SurfaceIntegrals(flux, moment, terms, same, opp, measure)


def volume_derivative(
    K: Body, L: Body, u: NDArray | None = None, A: NDArray | None = None,
    integrals: SurfaceIntegrals | None = None,
) -> float:
    """First variation of ``vol(K ∩ (e^{tA} L + t u))`` at ``t = 0``.

    Returns ``<flux, u> + <moment^T, A>``; either direction may be omitted.
    """
    bi = boundary_integrals(K, L) if integrals is None else integrals
    d = 0.0
    if u is not None:
        d += float(bi.flux @ np.asarray(u, dtype=float))
    if A is not None:
        d += float(np.sum(bi.moment.T * np.asarray(A, dtype=float)))
    return d


def radial_derivative(K: Body, L: Body, u: NDArray | None = None, A: NDArray | None = None, points: int = 200_000) -> float:
    """Planar cross-check of :func:`volume_derivative` by polar quadrature.

    With ``r_L = 1 / g_L`` the intersection area is ``½ ∫ min(r_K, r_L)² dθ``.
    Moving the boundary point ``b = θ / g_L(θ)`` with velocity
    ``w(b) = A b + u`` gives ``r ṙ = <∇g_L(θ), w(b)> / g_L(θ)²``, integrated
    over the directions where ``∂L`` lies inside ``K``.  Needs the origin
    interior to both bodies.
    """
    if K.dim != 2:
        raise UnsupportedBodyError("radial cross-check is planar")
    th = 2.0 * np.pi * (np.arange(points) + 0.5) / points
    U = np.column_stack([np.cos(th), np.sin(th)])
    gK = np.atleast_1d(K.gauge(U))
    gL = np.atleast_1d(L.gauge(U))
    mask = gL > gK
    Bp = U[mask] / gL[mask, None]
    Wv = np.zeros_like(Bp)
    if A is not None:
        Wv += Bp @ np.asarray(A, dtype=float).T
    if u is not None:
        Wv += np.asarray(u, dtype=float)
    # the gauge gradient is homogeneous of degree 0, so ∇g_L(b) = ∇g_L(θ)
    Gr = np.atleast_2d(np.asarray(L.gauge_gradient(U[mask]), dtype=float))
    vals = np.einsum("ij,ij->i", Gr, Wv) / gL[mask] ** 2
    return float(vals.sum() * 2.0 * np.pi / points)


# ---------------------------------------------------------------- flow


def anisotropy(M: NDArray) -> float:
    """``‖n M / tr M − I‖_F``.

    A zero moment (no boundary inside the other body) is trivially
    proportional to the identity and scores 0; a nonzero moment with
    nonpositive trace scores ``inf``.
    """
    n = M.shape[0]
    tr = np.trace(M)
    if not np.any(M):
        return 0.0
    if tr <= 0.0:
        return float("inf")
    return float(np.linalg.norm(n * M / tr - np.eye(n)))


@dataclass(frozen=True)
class FlowOptions:
    tol: float = 1e-6
    aniso_tol: float = 1e-5
    max_iter: int = 500
    armijo: float = 1e-4
    backtrack: float = 0.5
    cond_max: float = 1e6
    volume_method: str = "auto"
    samples: int = MC_SAMPLES
    seed: int = 0
    refine: bool = True
    coincidence_tol: float = COINCIDENCE_TOL
    sweep: str = "auto"  # "always", "on-stall", or "auto" (always when n <= 3)


@dataclass
class FlowStep:
    step: int
    volume: float
    flux_norm: float
    anisotropy: float
    step_size: float
    det_drift: float
    linear: NDArray
    shift: NDArray


@dataclass
class FlowTrace:
    mode: str
    steps: list[FlowStep]
    status: str
    K: Body
    L0: Body
    final: Body
    integrals: SurfaceIntegrals | None
    method: str

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    @property
    def final_map(self) -> AffineMap:
        s = self.steps[-1]
        return AffineMap(s.linear, s.shift)


def flow_csv(trace: FlowTrace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FLOW_COLUMNS)
    for s in trace.steps:
        w.writerow([s.step, repr(float(s.volume)), repr(float(s.flux_norm)), repr(float(s.anisotropy)),
                    repr(float(s.step_size)), repr(float(s.det_drift))])
    return buf.getvalue()


def _refine_line(f, eta: float, f_eta: float) -> tuple[float, float]:
    """Expand a bracket past an accepted step and maximize exactly inside it."""
    lo, hi, fhi = 0.0, eta, f_eta
    for _ in range(40):
        fn = f(2.0 * hi)
        if fn <= fhi:
            break
        lo, hi, fhi = hi, 2.0 * hi, fn
    res = scipy.optimize.minimize_scalar(
        lambda e: -f(e), bounds=(lo, 2.0 * hi), method="bounded",
        options={"xatol": 1e-15 * max(1.0, hi)},
    )
    if -res.fun > fhi:
        return float(res.x), float(-res.fun)
    return hi, fhi


def _line_max(f, f0: float, s0: float) -> tuple[float, float]:
    """Largest value of ``f`` on ``η > 0`` near the origin, or ``(0, f0)``."""
    s, fs = s0, f(s0)
    while fs <= f0 and s > 1e-15:
        s *= 0.125
        fs = f(s)
    if fs <= f0:
        return 0.0, f0
    return _refine_line(f, s, fs)


def _coordinate_directions(n: int, mode: str) -> list[tuple[NDArray, NDArray]]:
    """Unit translations and a basis of traceless (symmetric in positive mode) matrices."""
    out = [(np.zeros((n, n)), e) for e in np.eye(n)]
    for i in range(n - 1):
        D = np.zeros((n, n))
        D[i, i], D[n - 1, n - 1] = 1.0, -1.0
        out.append((D / np.sqrt(2.0), np.zeros(n)))
    for i in range(n):
        for j in range(i + 1, n):
            S = np.zeros((n, n))
            S[i, j] = S[j, i] = 1.0 / np.sqrt(2.0)
            out.append((S, np.zeros(n)))
            if mode == "full-affine":
                Ak = np.zeros((n, n))
                Ak[i, j], Ak[j, i] = 1.0 / np.sqrt(2.0), -1.0 / np.sqrt(2.0)
                out.append((Ak, np.zeros(n)))
    return out


def maxint_flow(K: Body, L: Body, mode: str = "full-affine", opts: FlowOptions | None = None) -> FlowTrace:
    """Ascent flow of ``vol(K ∩ (A L + z))`` over ``A ∈ SL_n`` and ``z``.

    Each step moves ``L <- e^{ηA*} L + η u*`` with ``u* = flux`` and
    ``A* = traceless(moment^T)`` (``full-affine``) or its symmetric part
    (``positive``), with an Armijo line search followed by a bracketed exact
    line maximization that lets the iterate land on kinks of the volume.

    Statuses: ``converged``, ``max-iter``, ``stalled``, ``noise-limited``
    (Monte Carlo volumes), ``cond-abort`` (accumulated map too distorted).
    """
    if mode not in ("full-affine", "positive"):
        raise ValueError("mode must be 'full-affine' or 'positive'")
    opts = opts or FlowOptions()
    n = K.dim
    Amap, z = np.eye(n), np.zeros(n)

    def body(Am, zz):
        return apply_affine(L, AffineMap(Am, zz))

    def vol(Am, zz):
        return intersection_volume(K, body(Am, zz), opts.volume_method, opts.samples, opts.seed)

    r0 = vol(Amap, z)
    method = r0.method
    if r0.volume <= 0.0:
        raise ValueError("initial intersection volume is zero")
    V = r0.volume
    steps: list[FlowStep] = []
    status = "max-iter"
    bi = None
    drift = 0.0
    eta_used = 0.0
    for it in range(opts.max_iter + 1):
        Lc = body(Amap, z)
        bi = boundary_integrals(K, Lc, opts.coincidence_tol)
        u = bi.flux.copy()
        Mt = bi.moment.T
        if mode == "positive":
            Mt = sym(Mt)
        Astar = Mt - np.trace(Mt) / n * np.eye(n)
        an = anisotropy(Mt)
        steps.append(FlowStep(it, V, bi.flux_norm, an, eta_used, drift, Amap.copy(), z.copy()))
        if bi.flux_norm <= opts.tol and an <= opts.aniso_tol:
            status = "converged"
            break
        if it == opts.max_iter:
            break
        d2 = float(u @ u + np.sum(Astar * Astar))

        def trial(eta, dA=Astar, du=u):
            E = matrix_exp(eta * dA)
            return E @ Amap, E @ z + eta * du

        def vol_at(eta, dA=Astar, du=u):
            return vol(*trial(eta, dA, du)).volume

        eta = 1.0 / (1.0 + np.linalg.norm(Astar))
        Vt = vol_at(eta)
        while Vt < V + opts.armijo * eta * d2 and eta > 1e-16:
            eta *= opts.backtrack
            Vt = vol_at(eta)
        dA, du = Astar, u
        if Vt >= V + opts.armijo * eta * d2 and opts.refine:
            eta, Vt = _refine_line(vol_at, eta, Vt)
        if not Vt >= V + opts.armijo * eta * d2:
            eta, Vt = 0.0, V
        sweep = opts.sweep if opts.sweep != "auto" else ("always" if n <= 3 else "on-stall")
        blocked = not Vt > V * (1.0 + 1e-12)
        if method == "monte-carlo":
            if blocked:
                status = "noise-limited"
                break
        elif blocked or sweep == "always":
            # exact searches along the translation part and coordinate
            # directions land on kinks that block the gradient step
            cands = [(np.zeros((n, n)), u)] + [
                (sg * a, sg * b) for a, b in _coordinate_directions(n, mode) for sg in (1.0, -1.0)
            ]
            for dA_k, du_k in cands:
                if not (np.any(dA_k) or np.any(du_k)):
                    continue
                e_k, V_k = _line_max(lambda e, a=dA_k, b=du_k: vol_at(e, a, b), V, 1e-2)
                if e_k > 0.0 and V_k > Vt:
                    eta, Vt, dA, du = e_k, V_k, dA_k, du_k
        if not Vt > V:
            status = "stalled"
            break
        Amap, z = trial(eta, dA, du)
        det = np.linalg.det(Amap)
        drift = abs(det - 1.0)
        Amap = Amap / np.sign(det) / abs(det) ** (1.0 / n)
        V = vol(Amap, z).volume
        eta_used = eta
        s = np.linalg.svd(Amap, compute_uv=False)
        if s[0] / s[-1] > opts.cond_max:
            status = "cond-abort"
            steps.append(FlowStep(it + 1, V, float("nan"), float("nan"), eta, drift, Amap.copy(), z.copy()))
            break
    final = body(Amap, z)
    return FlowTrace(mode, steps, status, K, L, final, bi, method)


def isotropy_report(K: Body, L: Body, tol: float = COINCIDENCE_TOL) -> dict:
    """First-order maximal-intersection certificate in both orientations."""

    def one(A, B):
        bi = boundary_integrals(A, B, tol)
        M = bi.moment
        return {
            "flux_norm": bi.flux_norm,
            "anisotropy_full": anisotropy(M),
            "anisotropy_sym": anisotropy(sym(M)),
            "trace": bi.trace,
            "one_sided": bi.one_sided,
        }

    rep = one(K, L)
    rep["swapped"] = one(L, K)
    rep["certification"] = "first-order"
    return rep
