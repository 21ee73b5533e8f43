"""Positive John positions.

Maximize ``log det P`` over symmetric positive-definite ``P`` and translations
``z`` subject to ``P L + z ⊂ K``.  The program is solved by a log-barrier
interior point method with damped Newton steps in the coordinates
``(P_ij for i <= j, z)``.  Constraints come in three families:

* linear: ``<y, P v + z> <= 1`` for a vertex ``v`` of ``L`` and a facet
  functional ``y = a/b`` of a polytope ``K``;
* smooth: ``F_K(P v + z) <= 1`` for a vertex ``v`` of ``L`` and the level
  function ``F_K`` of a smooth ``K``;
* second-order cone: ``‖S P y‖ + <c, P y> + <y, z> <= 1`` for a facet
  functional ``y`` of a polytope ``K`` and an ellipsoid ``L = S B + c``.

Smooth ``L`` that is not an ellipsoid is replaced by the polytope spanned by
its support points on a direction net (flagged as an approximation).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace

import numpy as np
import scipy.linalg
from numpy.typing import NDArray

from .bodies import (
    Body,
    SmoothBody,
    VPolytope,
    apply_affine,
    as_ellipsoid,
    as_polytope,
    containment_report,
)
from .errors import ConvergenceError, InfeasibleStartError
from .linalg import AffineMap, nonneg_least_squares, spd_inv_sqrt, spd_sqrt, sym
from .nets import direction_net

__all__ = [
    "PjpProblem",
    "SolverOptions",
    "PositionSolution",
    "ContactPair",
    "IdentityDecomposition",
    "Recentering",
    "PjpCertificate",
    "solve_positive_john",
    "extract_contact_pairs",
    "solve_decomposition_weights",
    "normalize_position",
    "recenter_contact_pairs",
    "verify_positive_john",
    "image_body",
]

MODES = ("auto", "vertices", "facets", "approximation")


@dataclass(frozen=True)
class PjpProblem:
    """Container ``K``, inscribed body ``L`` and how constraints are generated.

    Attributes
    ----------
    K, L : Body
    constraint_mode : str
        ``"auto"``, ``"vertices"`` (vertices of L against the gauge of K),
        ``"facets"`` (facets of K against the support of L) or
        ``"approximation"`` (L replaced by support points on a net).
    symmetric_mode : bool or None
        Fix ``z = 0`` and deduplicate constraints over ±.  ``None`` enables it
        when both bodies are centrally symmetric.
    approx_points : int
        Net size for the approximation mode.
    """

    K: Body
    L: Body
    constraint_mode: str = "auto"
    symmetric_mode: bool | None = None
    approx_points: int = 256

    def __post_init__(self):
        if self.K.dim != self.L.dim:
            raise ValueError("K and L live in different dimensions")
        if self.constraint_mode not in MODES:
            raise ValueError(f"constraint_mode must be one of {MODES}")

    @property
    def dim(self) -> int:
        return self.K.dim

    @property
    def is_symmetric(self) -> bool:
        if self.symmetric_mode is None:
            return bool(self.K.symmetric and self.L.symmetric)
        return bool(self.symmetric_mode)


@dataclass(frozen=True)
class SolverOptions:
    """Barrier schedule and tolerances."""

    mu0: float = 1.0
    mu_factor: float = 5.0
    mu_final: float = 1e-9
    newton_tol: float = 1e-12
    max_newton: int = 80
    tol: float = 1e-6
    active_tol: float = 1e-7
    approx_active_tol: float = 1e-6
    warm_mu0: float = 1e-3


@dataclass
class PositionSolution:
    """Optimal ``(P, z)`` with solver diagnostics.

    ``multipliers`` and ``slacks`` are indexed like the constraint list;
    ``active_indices`` are the constraints whose relative slack is below the
    contact tolerance.  ``kkt_residual`` is the Newton decrement of the
    barrier problem at the final ``mu``; ``gradient_norm`` is the raw
    Lagrangian stationarity residual.
    """

    P: NDArray
    z: NDArray
    logdet: float
    active_indices: NDArray
    kkt_residual: float
    iterations: int
    final_mu: float
    duality_gap: float
    multipliers: NDArray
    slacks: NDArray
    approximate: bool
    symmetric: bool
    active_tol: float
    active_rank: int = 0
    active_sv_ratio: float = float("nan")
    gradient_norm: float = float("nan")

    @property
    def det(self) -> float:
        return float(np.exp(self.logdet))


@dataclass
class ContactPair:
    """Common boundary point ``x`` and common supporting functional ``y``."""

    x: NDArray
    y: NDArray
    index: int = -1
    multiplier: float = 0.0
    flag: str | None = None

    @property
    def pairing(self) -> float:
        return float(self.x @ self.y)


@dataclass
class IdentityDecomposition:
    """Nonnegative weights on contact pairs against the target ``(I, 0)``."""

    pairs: list[ContactPair]
    weights: NDArray
    mode: str
    matrix_residual: float
    vector_residual: float

    @property
    def weight_sum(self) -> float:
        return float(np.sum(self.weights))

    def moment(self) -> NDArray:
        """``Σ c_i x_i ⊗ y_i`` (unsymmetrized)."""
        n = self.pairs[0].x.shape[0] if self.pairs else 0
        M = np.zeros((n, n))
        for c, p in zip(self.weights, self.pairs):
            M += c * np.outer(p.x, p.y)
        return M

    @property
    def residual(self) -> float:
        return max(self.matrix_residual, self.vector_residual)


@dataclass
class Recentering:
    shift: NDArray
    pairs: list[ContactPair]
    weights: NDArray
    sum_u: float
    sum_v: float
    matrix_residual: float


@dataclass
class PjpCertificate:
    is_pjp: bool
    contained: bool
    violation: float
    decomposition: IdentityDecomposition | None
    message: str


# ---------------------------------------------------------------- coordinates


def _sym_basis(n: int) -> NDArray:
    """Basis ``E_k`` of symmetric matrices with coordinates ``P_ij`` (i <= j)."""
    idx = [(i, j) for i in range(n) for j in range(i, n)]
    E = np.zeros((len(idx), n, n))
    for k, (i, j) in enumerate(idx):
        E[k, i, j] = 1.0
        E[k, j, i] = 1.0
    return E


def _pack(P: NDArray) -> NDArray:
    return P[np.triu_indices(P.shape[0])]


@dataclass
class _Constraints:
    n: int
    sym: bool
    E: NDArray
    approximate: bool
    # linear family
    G: NDArray
    lin_v: NDArray
    lin_y: NDArray
    # smooth family
    sm_v: NDArray
    sm_body: SmoothBody | None
    sm_Jp: NDArray
    # second-order cone family
    soc_y: NDArray
    soc_Gt: NDArray
    soc_W: NDArray
    soc_S: NDArray | None
    soc_c: NDArray | None

    @property
    def d_p(self) -> int:
        return self.E.shape[0]

    @property
    def d(self) -> int:
        return self.d_p + (0 if self.sym else self.n)

    @property
    def counts(self) -> tuple[int, int, int]:
        return self.G.shape[0], self.sm_v.shape[0], self.soc_y.shape[0]

    @property
    def total(self) -> int:
        return sum(self.counts)

    @property
    def barrier_parameter(self) -> float:
        a, b, c = self.counts
        return float(a + b + 2 * c)

    def pack(self, P: NDArray, z: NDArray) -> NDArray:
        p = _pack(P)
        return p if self.sym else np.concatenate([p, z])


def _dedupe_pm(X: NDArray, tol: float = 1e-9) -> NDArray:
    """Keep one row of each ± pair."""
    keep: list[int] = []
    scale = max(1.0, float(np.abs(X).max()) if X.size else 1.0)
    for i in range(X.shape[0]):
        if keep:
            if np.abs(X[keep] + X[i]).max(axis=1).min() <= tol * scale:
                continue
        keep.append(i)
    return X[keep]


def _linear_rows(E: NDArray, V: NDArray, Y: NDArray, with_z: bool) -> NDArray:
    Gp = np.einsum("kij,mi,mj->mk", E, Y, V)
    return np.hstack([Gp, Y]) if with_z else Gp


def _facet_functionals(K: Body) -> NDArray:
    PK = as_polytope(K)
    A, b = PK.unit_halfspaces
    if np.any(b <= 0.0):
        raise ValueError("origin is not interior to K")
    return A / b[:, None]


def _build(prob: PjpProblem) -> _Constraints:
    n = prob.dim
    symm = prob.is_symmetric
    E = _sym_basis(n)
    K, L = prob.K, prob.L
    PK, PL = as_polytope(K), as_polytope(L)
    EL = as_ellipsoid(L)
    mode = prob.constraint_mode
    if mode == "auto":
        if PL is not None:
            mode = "vertices"
        elif PK is not None and EL is not None:
            mode = "facets"
        else:
            mode = "approximation"
    if mode == "vertices" and PL is None:
        raise ValueError("vertex constraints need a polytope L")
    if mode == "facets" and PK is None:
        raise ValueError("facet constraints need a polytope K")
    if mode == "facets" and PL is not None:
        mode = "vertices"  # identical linear system
    if mode == "facets" and EL is None:
        mode = "approximation"

    empty = np.zeros((0, n))
    lin_v = lin_y = sm_v = soc_y = empty
    G = np.zeros((0, len(E) + (0 if symm else n)))
    soc_S = soc_c = None
    approximate = False

    if mode in ("vertices", "approximation"):
        if mode == "vertices":
            pts = PL.vertices
        else:
            approximate = True
            m = max(int(prob.approx_points), 2 * n + 2)
            net = direction_net(n, m // 2 if symm else m)
            pts = np.asarray(L.support_point(net))
            if symm:
                pts = np.vstack([pts, -pts])
            pts = _unique_rows_local(pts)
        if symm:
            pts = _dedupe_pm(pts)
        if PK is not None:
            Y = _facet_functionals(K)
            V = np.repeat(pts, Y.shape[0], axis=0)
            Yr = np.tile(Y, (pts.shape[0], 1))
            lin_v, lin_y = V, Yr
            G = _linear_rows(E, V, Yr, not symm)
        else:
            if not isinstance(K, SmoothBody):
                raise ValueError(f"no constraint generator for container {type(K).__name__}")
            sm_v = pts
    else:  # facets of K against an ellipsoid L
        Y = _facet_functionals(K)
        if symm:
            Y = _dedupe_pm(Y)
        soc_y = Y
        soc_S, soc_c = EL.shape, EL.center

    sm_Jp = np.einsum("kij,mj->mik", E, sm_v) if sm_v.shape[0] else np.zeros((0, n, len(E)))
    if soc_y.shape[0]:
        Gt_p = np.einsum("kij,i,mj->mk", E, soc_c, soc_y)
        soc_Gt = Gt_p if symm else np.hstack([Gt_p, soc_y])
        Wp = np.einsum("ab,kbj,mj->mak", soc_S, E, soc_y)
        soc_W = Wp if symm else np.concatenate([Wp, np.zeros((soc_y.shape[0], n, n))], axis=2)
    else:
        soc_Gt = np.zeros((0, G.shape[1]))
        soc_W = np.zeros((0, n, G.shape[1]))
    return _Constraints(
        n=n, sym=symm, E=E, approximate=approximate,
        G=G, lin_v=lin_v, lin_y=lin_y,
        sm_v=sm_v, sm_body=K if sm_v.shape[0] else None, sm_Jp=sm_Jp,
        soc_y=soc_y, soc_Gt=soc_Gt, soc_W=soc_W, soc_S=soc_S, soc_c=soc_c,
    )


def _unique_rows_local(X: NDArray) -> NDArray:
    scale = max(1.0, float(np.abs(X).max()))
    keep: list[int] = []
    for i in range(X.shape[0]):
        if keep and np.abs(X[keep] - X[i]).max(axis=1).min() <= 1e-12 * scale:
            continue
        keep.append(i)
    return X[keep]


# ---------------------------------------------------------------- barrier


class _Infeasible(Exception):
    pass


def _unpack(C: _Constraints, x: NDArray) -> tuple[NDArray, NDArray]:
    P = np.einsum("k,kij->ij", x[: C.d_p], C.E)
    z = np.zeros(C.n) if C.sym else x[C.d_p:]
    return P, z


def _smooth_terms(C: _Constraints, x: NDArray, P: NDArray, z: NDArray):
    X = C.sm_v @ P.T + z
    F = np.empty(X.shape[0])
    grads = np.empty_like(X)
    hess = np.empty((X.shape[0], C.n, C.n))
    for i, p in enumerate(X):
        F[i], grads[i], hess[i] = C.sm_body.level(p)
    return X, F, grads, hess


def _evaluate(C: _Constraints, x: NDArray, mu: float, derivs: bool):
    """Barrier objective ``-log det P - mu Σ log(slack)`` and optionally derivatives."""
    P, z = _unpack(C, x)
    try:
        Lc = np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        raise _Infeasible from None
    logdet = 2.0 * np.log(np.diag(Lc)).sum()
    f = -logdet
    # linear
    s = 1.0 - C.G @ x
    if s.size and s.min() <= 0.0:
        raise _Infeasible
    f -= mu * np.log(s).sum()
    # smooth
    if C.sm_v.shape[0]:
        Xs, F, gF, hF = _smooth_terms(C, x, P, z)
        ss = 1.0 - F
        if ss.min() <= 0.0:
            raise _Infeasible
        f -= mu * np.log(ss).sum()
    # cone
    if C.soc_y.shape[0]:
        t = 1.0 - C.soc_Gt @ x
        w = np.einsum("mak,k->ma", C.soc_W, x)
        ww = np.einsum("ma,ma->m", w, w)
        u = t * t - ww
        if t.min() <= 0.0 or u.min() <= 0.0:
            raise _Infeasible
        f -= mu * np.log(u).sum()
    if not derivs:
        return f
    d = C.d
    Winv = scipy.linalg.cho_solve((Lc, True), np.eye(C.n))
    g = np.zeros(d)
    H = np.zeros((d, d))
    Ef = C.E.reshape(C.d_p, -1)
    g[: C.d_p] = -Ef @ Winv.ravel()
    H[: C.d_p, : C.d_p] = Ef @ np.kron(Winv, Winv) @ Ef.T
    if s.size:
        Gs = C.G / s[:, None]
        g += mu * Gs.sum(axis=0)
        H += mu * Gs.T @ Gs
    if C.sm_v.shape[0]:
        m = C.sm_v.shape[0]
        J = C.sm_Jp if C.sym else np.concatenate([C.sm_Jp, np.broadcast_to(np.eye(C.n), (m, C.n, C.n))], axis=2)
        jg = np.einsum("mak,ma->mk", J, gF)  # ∇F_i in x-coordinates
        g += mu * (jg / ss[:, None]).sum(axis=0)
        JtHJ = np.einsum("mak,mab,mbl->kl", J, hF / ss[:, None, None], J)
        H += mu * (JtHJ + (jg / ss[:, None]).T @ (jg / ss[:, None]))
    if C.soc_y.shape[0]:
        grad_u = -2.0 * t[:, None] * C.soc_Gt - 2.0 * np.einsum("mak,ma->mk", C.soc_W, w)
        g += mu * (-(grad_u / u[:, None])).sum(axis=0)
        Hu = 2.0 * np.einsum("mk,ml->mkl", C.soc_Gt, C.soc_Gt) - 2.0 * np.einsum("mak,mal->mkl", C.soc_W, C.soc_W)
        gu = grad_u / u[:, None]
        H += mu * (gu.T @ gu - np.einsum("mkl,m->kl", Hu, 1.0 / u))
    return f, g, H


def _initial_point(C: _Constraints, K: Body, L: Body) -> NDArray:
    ratio = 0.0
    if C.G.shape[0]:
        ratio = max(ratio, float(np.max(np.einsum("mi,mi->m", C.lin_y, C.lin_v))))
    if C.sm_v.shape[0]:
        ratio = max(ratio, float(np.max(np.atleast_1d(K.gauge(C.sm_v)))))
    if C.soc_y.shape[0]:
        hs = np.linalg.norm(C.soc_y @ C.soc_S, axis=1) + C.soc_y @ C.soc_c
        ratio = max(ratio, float(np.max(hs)))
    if not ratio > 0.0:
        raise InfeasibleStartError("could not scale L into K: degenerate constraint data")
    eps = 0.5 / ratio
    x0 = C.pack(eps * np.eye(C.n), np.zeros(C.n))
    try:
        _evaluate(C, x0, 1.0, False)
    except _Infeasible:
        raise InfeasibleStartError("ε·I start is not strictly feasible") from None
    return x0


def _solve_spd(H: NDArray, g: NDArray) -> NDArray:
    """``H^{-1} g``; at tiny mu the Hessian is badly scaled by design."""
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        try:
            return scipy.linalg.solve(H, g, assume_a="pos")
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
            return np.linalg.lstsq(H, g, rcond=None)[0]


def _newton_stage(C: _Constraints, x: NDArray, mu: float, opts: SolverOptions) -> tuple[NDArray, int, float]:
    steps = 0
    dec = np.inf
    for steps in range(1, opts.max_newton + 1):
        f, g, H = _evaluate(C, x, mu, True)
        dx = -_solve_spd(H, g)
        dec = float(-g @ dx)
        # scale with mu: the barrier Hessian grows like 1/mu, so a fixed
        # decrement would leave the multipliers mu/s inaccurate
        if dec / 2.0 <= opts.newton_tol * min(1.0, mu):
            return x, steps, dec
        alpha = 1.0
        while alpha > 1e-16:
            xt = x + alpha * dx
            try:
                ft = _evaluate(C, xt, mu, False)
                # inside the quadratic region f differences drop below rounding
                if dec < 1e-8 or ft <= f - 0.25 * alpha * dec:
                    break
            except _Infeasible:
                pass
            alpha *= 0.5
        else:
            return x, steps, dec
        x = xt
    return x, steps, dec


def _multipliers(C: _Constraints, x: NDArray, mu: float, K: Body) -> tuple[NDArray, NDArray]:
    """Constraint multipliers ``mu / slack`` and relative slacks, in constraint order.

    With ``mu == 0`` the point is not on the central path; multipliers are 0.
    """
    P, z = _unpack(C, x)
    lam, sl = [], []
    if C.G.shape[0]:
        s = 1.0 - C.G @ x
        lam.append(lambda s=s: mu / s)
        sl.append(s)
    if C.sm_v.shape[0]:
        X = C.sm_v @ P.T + z
        F = np.array([C.sm_body.level(p)[0] for p in X])
        lam.append(lambda F=F: mu / (1.0 - F))
        sl.append(1.0 - np.atleast_1d(K.gauge(X)))
    if C.soc_y.shape[0]:
        t = 1.0 - C.soc_Gt @ x
        w = np.einsum("mak,k->ma", C.soc_W, x)
        nw = np.linalg.norm(w, axis=1)
        lam.append(lambda t=t, nw=nw: 2.0 * t * mu / (t * t - nw * nw))
        sl.append(t - nw)
    if not sl:
        return np.zeros(0), np.zeros(0)
    slack = np.concatenate(sl)
    if mu == 0.0:
        return np.zeros_like(slack), slack
    return np.concatenate([f() for f in lam]), slack


def _constraint_gradients(C: _Constraints, x: NDArray) -> NDArray:
    """Gradient rows of every constraint function in x-coordinates."""
    P, z = _unpack(C, x)
    rows = [C.G]
    if C.sm_v.shape[0]:
        m = C.sm_v.shape[0]
        J = C.sm_Jp if C.sym else np.concatenate([C.sm_Jp, np.broadcast_to(np.eye(C.n), (m, C.n, C.n))], axis=2)
        X = C.sm_v @ P.T + z
        gF = np.array([C.sm_body.level(p)[1] for p in X])
        rows.append(np.einsum("mak,ma->mk", J, gF))
    if C.soc_y.shape[0]:
        w = np.einsum("mak,k->ma", C.soc_W, x)
        nw = np.linalg.norm(w, axis=1)
        rows.append(C.soc_Gt + np.einsum("mak,ma->mk", C.soc_W, w / nw[:, None]))
    return np.vstack(rows)


def solve_positive_john(
    prob: PjpProblem,
    opts: SolverOptions | None = None,
    warm_start: PositionSolution | None = None,
) -> PositionSolution:
    """Positive John position of ``L`` inside ``K``.

    Parameters
    ----------
    prob : PjpProblem
    opts : SolverOptions, optional
    warm_start : PositionSolution, optional
        Solution of a nearby problem.  Its ``(P, z)`` shrunk toward 0 seeds
        the barrier at ``opts.warm_mu0``; falls back to a cold start.

    Returns
    -------
    PositionSolution

    Raises
    ------
    InfeasibleStartError
        If no strictly feasible ``ε·I`` start exists.
    ConvergenceError
        If Newton's method stalls with a KKT residual above ``opts.tol``.
    """
    opts = opts or SolverOptions()
    C = _build(prob)
    if warm_start is not None:
        x_prev = C.pack(warm_start.P, warm_start.z)
        for theta in (0.99, 0.9, 0.7):
            try:
                _evaluate(C, theta * x_prev, 1.0, False)
            except _Infeasible:
                continue
            warm = replace(opts, mu0=min(opts.mu0, opts.warm_mu0))
            try:
                return _solve(C, prob, warm, theta * x_prev)
            except ConvergenceError:
                break
    return _solve(C, prob, opts)


def _solve(C: _Constraints, prob: PjpProblem, opts: SolverOptions, x0: NDArray | None = None) -> PositionSolution:
    x = _initial_point(C, prob.K, prob.L) if x0 is None else x0
    mu = opts.mu0
    total = 0
    while True:
        x, steps, dec = _newton_stage(C, x, mu, opts)
        total += steps
        if mu <= opts.mu_final * (1.0 + 1e-12):
            break
        mu = max(mu / opts.mu_factor, opts.mu_final)
    _, g, H = _evaluate(C, x, mu, True)
    # affine-invariant stationarity: the raw gradient carries the 1/mu
    # growth of the barrier Hessian and stalls near 1e-6 at tiny mu
    kkt = float(np.sqrt(max(g @ _solve_spd(H, g), 0.0)))
    P, z = _unpack(C, x)
    lam, slack = _multipliers(C, x, mu, prob.K)
    atol = opts.approx_active_tol if C.approximate else opts.active_tol
    active = np.where(slack <= atol)[0]
    rank, ratio = 0, float("nan")
    if active.size:
        Ja = _constraint_gradients(C, x)[active]
        sv = np.linalg.svd(Ja, compute_uv=False)
        rank = int(np.sum(sv > sv[0] * 1e-9))
        ratio = float(sv[min(len(sv), Ja.shape[1]) - 1] / sv[0])
    sol = PositionSolution(
        P=sym(P), z=z.copy(), logdet=float(np.linalg.slogdet(P)[1]), active_indices=active,
        kkt_residual=kkt, gradient_norm=float(np.linalg.norm(g)), iterations=total, final_mu=mu, duality_gap=mu * C.barrier_parameter,
        multipliers=lam, slacks=slack, approximate=C.approximate, symmetric=C.sym,
        active_tol=atol, active_rank=rank, active_sv_ratio=ratio,
    )
    if kkt > opts.tol:
        raise ConvergenceError(f"Newton stalled with decrement {kkt:.3e}", residual=kkt, best=sol)
    return sol


# ---------------------------------------------------------------- contact pairs


def image_body(L: Body, P: NDArray, z: NDArray) -> Body:
    """``P L + z``."""
    return apply_affine(L, AffineMap(P, z))


def _pair_flag(K: Body, Limg: Body, x: NDArray, y: NDArray) -> str | None:
    gk = float(K.gauge(x))
    if abs(gk - 1.0) > 1e-6:
        return f"gauge_K(x) = {gk:.9f}"
    try:
        gl = float(Limg.gauge(x))
        if abs(gl - 1.0) > 1e-6:
            return f"gauge_L(x) = {gl:.9f}"
        hl = float(Limg.support(y))
        if abs(hl - 1.0) > 1e-6:
            return f"h_L(y) = {hl:.9f}"
    except ValueError:
        pass
    hk = float(K.support(y))
    if abs(hk - 1.0) > 1e-6:
        return f"h_K(y) = {hk:.9f}"
    return None


def extract_contact_pairs(
    prob: PjpProblem,
    sol: PositionSolution,
    tol: float | None = None,
    frame: str = "image",
) -> list[ContactPair]:
    """Contact pairs of ``K`` and ``P L + z`` read off the active constraints.

    Parameters
    ----------
    prob, sol
        Problem and its solution.
    tol : float, optional
        Relative slack below which a constraint counts as active; defaults to
        the tolerance stored in ``sol``.
    frame : {"image", "normalized"}
        ``"image"`` gives pairs of ``(K, P L + z)``.  ``"normalized"`` maps them
        to ``(P^{-1/2} K, P^{1/2} L + P^{-1/2} z)`` via
        ``x -> P^{-1/2} x``, ``y -> P^{1/2} y``.

    Returns
    -------
    list of ContactPair
        One pair per active constraint (two in symmetric mode, ``±(x, y)``).
        Pairs failing the contact invariants carry a ``flag``.
    """
    C = _build(prob)
    tol = sol.active_tol if tol is None else tol
    active = np.where(sol.slacks <= tol)[0]
    P, z = sol.P, sol.z
    Limg = image_body(prob.L, P, z) if not C.approximate else None
    n_lin, n_sm, _ = C.counts
    pairs: list[ContactPair] = []
    for i in active:
        if i < n_lin:
            x = P @ C.lin_v[i] + z
            y = C.lin_y[i].copy()
        elif i < n_lin + n_sm:
            x = P @ C.sm_v[i - n_lin] + z
            y = np.asarray(prob.K.gauge_gradient(x), dtype=float)
        else:
            yk = C.soc_y[i - n_lin - n_sm]
            u = P @ yk
            Su = C.soc_S @ u
            x = P @ (C.soc_c + C.soc_S @ Su / np.linalg.norm(Su)) + z
            y = yk.copy()
        y = y / float(x @ y)
        flag = _pair_flag(prob.K, Limg, x, y) if Limg is not None else _pair_flag_k(prob.K, x, y)
        pairs.append(ContactPair(x=x, y=y, index=int(i), multiplier=float(sol.multipliers[i]), flag=flag))
        if C.sym:
            pairs.append(ContactPair(x=-x, y=-y, index=int(i), multiplier=float(sol.multipliers[i]), flag=flag))
    if frame == "normalized":
        Ph, Pih = spd_sqrt(P), spd_inv_sqrt(P)
        pairs = [replace(p, x=Pih @ p.x, y=Ph @ p.y) for p in pairs]
    elif frame != "image":
        raise ValueError("frame must be 'image' or 'normalized'")
    return pairs


def _pair_flag_k(K: Body, x: NDArray, y: NDArray) -> str | None:
    gk = float(K.gauge(x))
    if abs(gk - 1.0) > 1e-6:
        return f"gauge_K(x) = {gk:.9f}"
    hk = float(K.support(y))
    if abs(hk - 1.0) > 1e-6:
        return f"h_K(y) = {hk:.9f}"
    return None


def _decomposition_system(pairs: list[ContactPair], mode: str) -> tuple[NDArray, NDArray]:
    n = pairs[0].x.shape[0]
    cols = []
    for p in pairs:
        M = np.outer(p.x, p.y)
        if mode == "symmetrized":
            M = sym(M)
        cols.append(np.concatenate([M.ravel(), p.y]))
    target = np.concatenate([np.eye(n).ravel(), np.zeros(n)])
    return np.column_stack(cols), target


def solve_decomposition_weights(pairs: list[ContactPair], mode: str = "symmetrized") -> IdentityDecomposition:
    """Nonnegative weights with ``Σ c_i (x_i ⊗ y_i)[sym] = I`` and ``Σ c_i y_i = 0``.

    Parameters
    ----------
    pairs : list of ContactPair
    mode : {"symmetrized", "genuine"}

    Returns
    -------
    IdentityDecomposition
        Weights from Lawson-Hanson NNLS with the Frobenius residual of the
        matrix equation and the norm of the weighted ``y`` barycenter.
    """
    if mode not in ("symmetrized", "genuine"):
        raise ValueError("mode must be 'symmetrized' or 'genuine'")
    if not pairs:
        raise ValueError("pair list is empty")
    n = pairs[0].x.shape[0]
    A, t = _decomposition_system(pairs, mode)
    w, _ = nonneg_least_squares(A, t)
    r = A @ w - t
    return IdentityDecomposition(
        pairs=list(pairs), weights=w, mode=mode,
        matrix_residual=float(np.linalg.norm(r[: n * n])),
        vector_residual=float(np.linalg.norm(r[n * n:])),
    )


def normalize_position(prob: PjpProblem, sol: PositionSolution) -> tuple[Body, Body]:
    """``(P^{-1/2} K, P^{1/2} L + P^{-1/2} z)``: the normalized pair whose solution is ``(I, 0)``."""
    Ph, Pih = spd_sqrt(sol.P), spd_inv_sqrt(sol.P)
    K2 = apply_affine(prob.K, AffineMap(Pih))
    L2 = apply_affine(prob.L, AffineMap(Ph, Pih @ sol.z))
    return K2, L2


def recenter_contact_pairs(pairs: list[ContactPair], weights: NDArray) -> Recentering:
    """Shift contact pairs to the weighted barycenter ``a = Σ c_i x_i / (n + 1)``.

    ``u_i = x_i − a``, ``v_i = γ_i y_i`` and ``a_i = c_i / γ_i`` with
    ``γ_i = 1 / (1 − <y_i, a>)``.

    Raises
    ------
    ValueError
        If some ``<y_i, a> >= 1`` so that ``γ_i`` is undefined.
    """
    w = np.asarray(weights, dtype=float)
    n = pairs[0].x.shape[0]
    X = np.array([p.x for p in pairs])
    Y = np.array([p.y for p in pairs])
    a = (w @ X) / (n + 1.0)
    den = 1.0 - Y @ a
    if np.any(den <= 0.0):
        i = int(np.argmin(den))
        raise ValueError(f"recentering undefined: <y_{i}, a> = {1.0 - den[i]:.6g} >= 1")
    gam = 1.0 / den
    U = X - a
    V = Y * gam[:, None]
    aw = w / gam
    out = [ContactPair(x=u, y=v, index=p.index, multiplier=p.multiplier, flag=p.flag) for u, v, p in zip(U, V, pairs)]
    M = np.einsum("i,ij,ik->jk", aw, U, V)
    return Recentering(
        shift=a, pairs=out, weights=aw,
        sum_u=float(np.linalg.norm(aw @ U)), sum_v=float(np.linalg.norm(aw @ V)),
        matrix_residual=float(np.linalg.norm(M - np.eye(n))),
    )


def verify_positive_john(K: Body, L: Body, tol: float = 1e-6, approx_points: int = 256) -> PjpCertificate:
    """Certificate that ``L`` is in positive John position inside ``K``.

    Checks containment, collects contact pairs at ``(P, z) = (I, 0)`` and solves
    the symmetrized identity decomposition.
    """
    rep = containment_report(K, L, tol)
    prob = PjpProblem(K, L, approx_points=approx_points)
    C = _build(prob)
    n = K.dim
    x = C.pack(np.eye(n), np.zeros(n))
    _, slack = _multipliers(C, x, 0.0, K)
    fake = PositionSolution(
        P=np.eye(n), z=np.zeros(n), logdet=0.0, active_indices=np.where(slack <= tol)[0],
        kkt_residual=float("nan"), iterations=0, final_mu=0.0, duality_gap=float("nan"),
        multipliers=np.zeros_like(slack), slacks=slack, approximate=C.approximate, symmetric=C.sym,
        active_tol=tol,
    )
    pairs = [p for p in extract_contact_pairs(prob, fake, tol) if p.flag is None]
    if not rep["holds"]:
        return PjpCertificate(False, False, rep["violation"], None, f"L is not contained in K (violation {rep['violation']:.3e})")
    if not pairs:
        return PjpCertificate(False, True, rep["violation"], None, "no contact pairs found")
    dec = solve_decomposition_weights(pairs, "symmetrized")
    ok = dec.matrix_residual <= tol and dec.vector_residual <= tol
    msg = "identity decomposition found" if ok else (
        f"decomposition residuals {dec.matrix_residual:.3e}, {dec.vector_residual:.3e} exceed {tol:.1e}"
    )
    return PjpCertificate(ok, True, rep["violation"], dec, msg)
