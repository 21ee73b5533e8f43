"""The positive John family over the orthogonal group.

For a rotation ``U`` let ``(P*(U), z*(U))`` be the positive John position of
``U L`` inside ``K``.  This module samples ``U -> log det P*(U)``, computes its
Riemannian gradient from the contact structure, searches for minimizers and
maximizers, and checks the geometric consequences at those points.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .bodies import Body, Ellipsoid, apply_affine, as_ellipsoid, containment_report, translated
from .errors import ConditioningError, ConvergenceError, DecompositionError
from .linalg import (
    AffineMap,
    antisym,
    generalized_polar_decompose,
    haar_orthogonal,
    matrix_exp,
    nonneg_least_squares,
    spd_inv_sqrt,
    spd_sqrt,
    sym,
)
from .pjp import (
    ContactPair,
    IdentityDecomposition,
    PjpProblem,
    PositionSolution,
    SolverOptions,
    extract_contact_pairs,
    recenter_contact_pairs,
    solve_decomposition_weights,
    solve_positive_john,
)

__all__ = [
    "RotationState",
    "FamilySample",
    "FamilySweep",
    "ExtremalPosition",
    "ExtremizeOptions",
    "solve_at_rotation",
    "rotation_state",
    "sweep_family",
    "envelope_gradient",
    "extremize_over_rotations",
    "check_dilation_inclusion",
    "ellipsoid_family_transport",
    "TransportResult",
    "random_rotation_statistics",
    "SWEEP_COLUMNS",
    "sweep_csv",
]

SWEEP_COLUMNS = ("seed_index", "logdet", "det_nth_root", "grad_norm", "solver_iters")


def _child_rngs(seed: int, count: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(count)]


def solve_at_rotation(
    K: Body, L: Body, U: NDArray, opts: SolverOptions | None = None, **problem_kw
) -> tuple[PjpProblem, PositionSolution]:
    """Positive John position of ``U L`` in ``K``."""
    prob = PjpProblem(K, apply_affine(L, U), **problem_kw)
    return prob, solve_positive_john(prob, opts)


def envelope_gradient(
    solution: PositionSolution,
    pairs: list[ContactPair],
    weights: NDArray,
    U: NDArray | None = None,
) -> NDArray:
    """Riemannian gradient of ``U -> log det P*(U)`` for ``U(t) = U e^{tA}``.

    Parameters
    ----------
    solution : PositionSolution
        Solution at ``U``.
    pairs : list of ContactPair
        Contact pairs in the normalized frame.
    weights : ndarray
        Identity-decomposition weights for ``pairs``.
    U : ndarray, optional
        Current rotation; identity if omitted.

    Returns
    -------
    ndarray
        Antisymmetric ``Γ`` with ``d/dt log det P*(U e^{tA}) = <A, Γ>``.  With
        ``M = Σ c_i x_i ⊗ y_i`` it is ``-antisym(U^T P^{1/2} M^T P^{-1/2} U)``;
        at ``P = I, U = I`` this is ``antisym(M)``.
    """
    n = solution.P.shape[0]
    U = np.eye(n) if U is None else np.asarray(U, dtype=float)
    M = np.zeros((n, n))
    for c, p in zip(weights, pairs):
        M += c * np.outer(p.x, p.y)
    T = _transport(solution.P, U)
    return -antisym(T(M.T))


def _transport(P: NDArray, U: NDArray):
    Ph, Pih = spd_sqrt(P), spd_inv_sqrt(P)
    L, R = U.T @ Ph, Pih @ U
    return lambda X: L @ X @ R


@dataclass
class RotationState:
    """Everything the search needs at one rotation."""

    U: NDArray
    problem: PjpProblem
    solution: PositionSolution
    pairs: list[ContactPair]
    weights: NDArray
    gradient: NDArray
    decomposition_residual: float

    @property
    def logdet(self) -> float:
        return self.solution.logdet

    @property
    def grad_norm(self) -> float:
        return float(np.linalg.norm(self.gradient))


def _min_norm_gradient(
    sol: PositionSolution, pairs: list[ContactPair], U: NDArray, omega: float = 1e3
) -> tuple[NDArray, NDArray, float]:
    """Smallest gradient over all symmetrized decompositions on ``pairs``.

    Minimizes ``ω² ‖decomposition residual‖² + ‖gradient‖²`` over nonnegative
    weights.  Where the weights are unique this is the gradient; at a kink
    of ``log det P*`` the δ-active pairs span several pieces and the result
    is the minimal-norm element of their convex hull.
    """
    n = sol.P.shape[0]
    T = _transport(sol.P, U)
    cols, grads = [], []
    for p in pairs:
        xy = np.outer(p.x, p.y)
        g = -antisym(T(xy.T))
        grads.append(g)
        cols.append(np.concatenate([omega * sym(xy).ravel(), omega * p.y, g.ravel()]))
    A = np.column_stack(cols)
    t = np.concatenate([omega * np.eye(n).ravel(), np.zeros(n), np.zeros(n * n)])
    w, _ = nonneg_least_squares(A, t)
    G = np.einsum("i,ijk->jk", w, np.array(grads))
    r = A[: n * n + n] @ w / omega - t[: n * n + n] / omega
    return w, G, float(np.linalg.norm(r))


def rotation_state(
    K: Body,
    L: Body,
    U: NDArray,
    opts: SolverOptions | None = None,
    kink_tol: float = 1e-6,
    **problem_kw,
) -> RotationState:
    """Solve at ``U`` and compute the (minimal-norm) envelope gradient.

    ``kink_tol`` is the relative slack below which a constraint contributes a
    pair to the gradient computation.
    """
    prob, sol = solve_at_rotation(K, L, U, opts, **problem_kw)
    tol = max(kink_tol, sol.active_tol)
    pairs = extract_contact_pairs(prob, sol, tol=tol, frame="normalized")
    if not pairs:
        raise DecompositionError("no contact pairs at the solution")
    w, G, res = _min_norm_gradient(sol, pairs, U)
    return RotationState(U=U, problem=prob, solution=sol, pairs=pairs, weights=w, gradient=G,
                         decomposition_residual=res)


# ---------------------------------------------------------------- sweeps


@dataclass
class FamilySample:
    seed_index: int
    U: NDArray
    logdet: float = float("nan")
    grad_norm: float = float("nan")
    solver_iters: int = 0
    solution: PositionSolution | None = None
    error: str | None = None

    @property
    def det_nth_root(self) -> float:
        return float(np.exp(self.logdet / self.U.shape[0]))


@dataclass
class FamilySweep:
    K: Body
    L: Body
    seed: int
    samples: list[FamilySample]

    @property
    def logdets(self) -> NDArray:
        return np.array([s.logdet for s in self.samples if s.error is None])

    @property
    def failures(self) -> int:
        return sum(s.error is not None for s in self.samples)

    def summary(self) -> dict:
        v = self.logdets
        n = self.K.dim
        if v.size == 0:
            return {"count": 0, "failures": self.failures}
        return {
            "count": int(v.size),
            "failures": self.failures,
            "min_logdet_per_n": float(v.min() / n),
            "max_logdet_per_n": float(v.max() / n),
            "mean_logdet_per_n": float(v.mean() / n),
            "std_logdet": float(v.std()),
            "min_logdet": float(v.min()),
            "max_logdet": float(v.max()),
        }


def _sweep_one(K, L, i, rng, opts, with_gradient, problem_kw) -> FamilySample:
    U = haar_orthogonal(K.dim, rng)
    s = FamilySample(seed_index=i, U=U)
    try:
        if with_gradient:
            st = rotation_state(K, L, U, opts, **problem_kw)
            sol, s.grad_norm = st.solution, st.grad_norm
        else:
            sol = solve_at_rotation(K, L, U, opts, **problem_kw)[1]
        s.logdet, s.solver_iters, s.solution = sol.logdet, sol.iterations, sol
    except Exception as exc:  # recorded per sample, sweep continues
        s.error = f"{type(exc).__name__}: {exc}"
    return s


def sweep_family(
    K: Body,
    L: Body,
    m: int,
    seed: int = 0,
    jobs: int = 1,
    with_gradient: bool = True,
    opts: SolverOptions | None = None,
    **problem_kw,
) -> FamilySweep:
    """Solve the positive John problem at ``m`` Haar-random rotations.

    Sample ``i`` draws its rotation from the ``i``-th child of
    ``SeedSequence(seed)``, so results do not depend on ``jobs``.
    """
    if m < 1:
        raise ValueError("m must be at least 1")
    rngs = _child_rngs(seed, m)
    args = [(K, L, i, rngs[i], opts, with_gradient, problem_kw) for i in range(m)]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            samples = list(ex.map(lambda a: _sweep_one(*a), args))
    else:
        samples = [_sweep_one(*a) for a in args]
    return FamilySweep(K=K, L=L, seed=seed, samples=samples)


def sweep_csv(sweep: FamilySweep) -> str:
    """CSV text with one row per sample."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for s in sweep.samples:
        w.writerow([s.seed_index, repr(float(s.logdet)), repr(s.det_nth_root), repr(float(s.grad_norm)), s.solver_iters])
    return buf.getvalue()


def random_rotation_statistics(
    K: Body, L: Body, m: int, seed: int = 0, jobs: int = 1,
    quantiles: tuple[float, ...] = (0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0),
) -> dict:
    """Empirical quantiles of ``det P*(U)^{1/n}`` over ``m`` Haar rotations."""
    if m < 10:
        raise ValueError("m must be at least 10")
    sw = sweep_family(K, L, m, seed, jobs, with_gradient=False)
    roots = np.exp(sw.logdets / K.dim)
    return {
        "m": m,
        "seed": seed,
        "n": K.dim,
        "failures": sw.failures,
        "quantiles": {float(q): float(np.quantile(roots, q)) for q in quantiles},
    }


# ---------------------------------------------------------------- extremization


@dataclass(frozen=True)
class ExtremizeOptions:
    stationarity_tol: float = 1e-5
    max_iter: int = 300
    armijo: float = 1e-4
    kink_tol: float = 1e-6
    max_restarts: int = 3
    restart_scale: float = 1e-3
    solver: SolverOptions = field(default_factory=SolverOptions)


@dataclass
class ExtremalPosition:
    """Best stationary point found by multi-start search (not a global claim)."""

    direction: str
    U: NDArray
    solution: PositionSolution
    envelope_gradient_norm: float
    decomposition: IdentityDecomposition
    starts_used: int
    converged_starts: int
    pairs: list[ContactPair]
    history: list[float]
    problem: PjpProblem

    @property
    def logdet(self) -> float:
        return self.solution.logdet

    @property
    def genuine_residual(self) -> float:
        return self.decomposition.residual


@dataclass
class _StartResult:
    index: int
    state: RotationState | None
    converged: bool
    history: list[float]
    error: str | None = None


def _run_start(K, L, sign, U0, rng, opts: ExtremizeOptions, problem_kw, index) -> _StartResult:
    try:
        st = rotation_state(K, L, U0, opts.solver, opts.kink_tol, **problem_kw)
    except Exception as exc:
        return _StartResult(index, None, False, [], f"{type(exc).__name__}: {exc}")
    hist = [st.logdet]
    restarts = 0
    eta = 1.0 / (1.0 + st.grad_norm)
    for _ in range(opts.max_iter):
        if st.grad_norm <= opts.stationarity_tol:
            return _StartResult(index, st, True, hist)
        D = sign * st.gradient
        d2 = float(np.sum(D * D))
        accepted = None
        step = eta
        while step > 1e-14:
            U = st.U @ matrix_exp(step * D)
            try:
                cand = rotation_state(K, L, U, opts.solver, opts.kink_tol, **problem_kw)
            except (ConvergenceError, DecompositionError, ConditioningError):
                step *= 0.5
                continue
            if sign * (cand.logdet - st.logdet) >= opts.armijo * step * d2:
                accepted = cand
                break
            step *= 0.5
        if accepted is None:
            if restarts >= opts.max_restarts:
                break
            restarts += 1
            A = antisym(rng.standard_normal(st.U.shape)) * opts.restart_scale
            try:
                st = rotation_state(K, L, st.U @ matrix_exp(A), opts.solver, opts.kink_tol, **problem_kw)
            except Exception:
                break
            eta = 1.0 / (1.0 + st.grad_norm)
            continue
        # Barzilai-Borwein trial step for the next iteration
        s_vec = step * D
        y_vec = sign * (accepted.gradient - st.gradient)
        sy = abs(float(np.sum(s_vec * y_vec)))
        eta = float(np.clip(np.sum(s_vec * s_vec) / sy, 1e-6, 10.0)) if sy > 1e-300 else 2.0 * step
        st = accepted
        hist.append(st.logdet)
    return _StartResult(index, st, st.grad_norm <= opts.stationarity_tol, hist)


def extremize_over_rotations(
    K: Body,
    L: Body,
    direction: str = "min",
    starts: int = 16,
    seed: int = 0,
    opts: ExtremizeOptions | None = None,
    jobs: int = 1,
    initial: list[NDArray] | None = None,
    **problem_kw,
) -> ExtremalPosition:
    """Multi-start Riemannian gradient search for extremes of ``log det P*(U)``.

    Parameters
    ----------
    K, L : Body
    direction : {"min", "max"}
    starts : int
        Number of Haar-random starting rotations.
    seed : int
    opts : ExtremizeOptions, optional
    jobs : int
        Worker threads; results are merged by start index.
    initial : list of ndarray, optional
        Extra starting rotations tried before the random ones.

    Returns
    -------
    ExtremalPosition
        The best stationary point found, with the genuine decomposition at it.

    Raises
    ------
    ConvergenceError
        If no start reaches the stationarity tolerance; ``best`` carries the
        best iterate found.
    """
    if direction not in ("min", "max"):
        raise ValueError("direction must be 'min' or 'max'")
    if starts < 1:
        raise ValueError("starts must be at least 1")
    opts = opts or ExtremizeOptions()
    sign = 1.0 if direction == "max" else -1.0
    n = K.dim
    rngs = _child_rngs(seed, starts)
    U0s = list(initial or []) + [haar_orthogonal(n, r) for r in rngs]
    rngs = list(_child_rngs(seed + 1, len(U0s)))
    args = [(K, L, sign, U0s[i], rngs[i], opts, problem_kw, i) for i in range(len(U0s))]
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            results = list(ex.map(lambda a: _run_start(*a), args))
    else:
        results = [_run_start(*a) for a in args]
    done = [r for r in results if r.state is not None]
    conv = [r for r in done if r.converged]
    if not done:
        raise ConvergenceError("every start failed: " + "; ".join(r.error or "" for r in results))
    pool = conv or done
    best = max(pool, key=lambda r: (sign * r.state.logdet, -r.index))
    st = best.state
    # same pair set as the gradient: contacts within kink_tol of binding
    genuine = solve_decomposition_weights(st.pairs, "genuine")
    ext = ExtremalPosition(
        direction=direction, U=st.U, solution=st.solution, envelope_gradient_norm=st.grad_norm,
        decomposition=genuine, starts_used=len(U0s), converged_starts=len(conv), pairs=st.pairs,
        history=best.history, problem=st.problem,
    )
    if not conv:
        raise ConvergenceError(
            f"no start reached stationarity {opts.stationarity_tol:.1e}; best gradient norm {st.grad_norm:.3e}",
            residual=st.grad_norm, best=ext,
        )
    return ext


# ---------------------------------------------------------------- consequences


def check_dilation_inclusion(
    K: Body,
    L_s: Body,
    pairs: list[ContactPair],
    weights: NDArray,
    P: NDArray | None = None,
    tol: float = 1e-6,
) -> dict:
    """Check ``K − a ⊂ −n (L_s − a)`` at a saddle position.

    Parameters
    ----------
    K : Body
    L_s : Body
        The positioned body ``P U L + z``.
    pairs, weights
        Genuine decomposition in the normalized frame ``x -> P^{-1/2} x``.
    P : ndarray, optional
        Positive factor of the position; identity if omitted.

    Returns
    -------
    dict
        ``a`` (shift, original frame), ``holds``, ``worst_margin`` (relative;
        negative means violated), ``method`` and the recentering residuals.
    """
    n = K.dim
    P = np.eye(n) if P is None else np.asarray(P, dtype=float)
    rc = recenter_contact_pairs(pairs, weights)
    a = spd_sqrt(P) @ rc.shift
    outer = apply_affine(L_s, AffineMap(-n * np.eye(n), n * a))
    inner = translated(K, -a)
    rep = containment_report(outer, inner, tol)
    return {
        "a": a,
        "holds": bool(rep["margin"] >= -tol),
        "worst_margin": float(rep["margin"]),
        "method": rep["method"],
        "recenter_sum_u": rc.sum_u,
        "recenter_sum_v": rc.sum_v,
        "recenter_matrix_residual": rc.matrix_residual,
    }


@dataclass
class TransportResult:
    P: NDArray
    orientation: str
    residual_statement: float
    residual_transpose: float
    det_error: float
    P_direct: NDArray


def ellipsoid_family_transport(
    E: Ellipsoid,
    L: Body,
    base: PositionSolution,
    U: NDArray,
    direct: PositionSolution | None = None,
    match_tol: float = 1e-4,
) -> TransportResult:
    """Positive John factor of ``U L`` in a centered ellipsoid from the one at ``U = I``.

    With ``E = P_e B`` and base factor ``P_0``, the candidate ``P*(U)`` is the
    positive factor of ``U P_0 P_e^{-1} = P*(U) P_e^{-1} V`` (statement
    orientation), or of the same equation with ``U^T`` (transpose
    orientation).  Both are compared against a direct solve; the matching one
    is returned.

    Raises
    ------
    ConvergenceError
        If neither orientation matches the direct solve within ``match_tol``.
    """
    Ee = as_ellipsoid(E)
    if Ee is None:
        raise ValueError("container must be an ellipsoid")
    if np.any(np.abs(Ee.center) > 1e-12):
        raise ValueError("ellipsoid must be centered")
    Pe = spd_sqrt(sym(Ee.shape @ Ee.shape.T))
    Pe_inv = np.linalg.inv(Pe)
    U = np.asarray(U, dtype=float)
    if direct is None:
        direct = solve_at_rotation(E, L, U)[1]
    cands = {}
    for name, R in (("statement", U), ("transpose", U.T)):
        Pc, _ = generalized_polar_decompose(R @ base.P @ Pe_inv, Pe_inv)
        cands[name] = (Pc, float(np.linalg.norm(Pc - direct.P)))
    name = min(cands, key=lambda k: cands[k][1])
    Pc, res = cands[name]
    if res > match_tol:
        raise ConvergenceError(
            f"no orientation matches the direct solve: statement {cands['statement'][1]:.3e}, "
            f"transpose {cands['transpose'][1]:.3e}",
            residual=res,
        )
    return TransportResult(
        P=Pc, orientation=name,
        residual_statement=cands["statement"][1], residual_transpose=cands["transpose"][1],
        det_error=float(abs(np.linalg.slogdet(Pc)[1] - base.logdet)), P_direct=direct.P,
    )
