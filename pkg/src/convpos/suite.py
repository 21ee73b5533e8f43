"""Regression suite of exact small-dimension cases.

Each case returns a :class:`CaseResult` with a pass flag and the measured
quantities, so the same code backs the ``paper-suite`` command and the
acceptance tests.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg

from .bodies import (
    AffineMap, Ellipsoid, VPolytope, apply_affine, ball, cross_polytope, cube, hausdorff_distance, translated,
)
from .family import (
    check_dilation_inclusion, ellipsoid_family_transport, extremize_over_rotations, solve_at_rotation,
    sweep_family,
)
from .linalg import generalized_polar_decompose, haar_orthogonal, matrix_exp
from .maxint import (
    FlowOptions, boundary_integrals, intersection_volume, isotropy_report, maxint_flow, volume_derivative,
)
from .pjp import (
    PjpProblem, SolverOptions, extract_contact_pairs, image_body, solve_decomposition_weights,
    solve_positive_john,
)


@dataclass
class CaseResult:
    number: int
    title: str
    passed: bool
    details: dict = field(default_factory=dict)
    seconds: float = 0.0
    error: str | None = None

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] {self.number:2d}  {self.title}  ({self.seconds:.1f}s)"


def _max_abs(A) -> float:
    return float(np.max(np.abs(np.asarray(A, dtype=float))))


# ---------------------------------------------------------------- 1


def case_pjp_exact(dims=range(2, 7)) -> tuple[bool, dict]:
    """Cube inside the cross-polytope sits at ``(1/n) I``."""
    rows = {}
    ok = True
    for n in dims:
        prob = PjpProblem(cross_polytope(n), cube(n))
        sol = solve_positive_john(prob)
        pairs = extract_contact_pairs(prob, sol, frame="normalized")
        dec = solve_decomposition_weights(pairs, "symmetrized")
        r = {
            "P_error": _max_abs(sol.P - np.eye(n) / n),
            "z_error": _max_abs(sol.z),
            "matrix_residual": dec.matrix_residual,
            "vector_residual": dec.vector_residual,
            "trace_error": abs(float(dec.weights.sum()) - n),
        }
        r["ok"] = (r["P_error"] <= 1e-6 and r["z_error"] <= 1e-6 and r["matrix_residual"] <= 1e-6
                   and r["vector_residual"] <= 1e-6 and r["trace_error"] <= 1e-5)
        ok &= r["ok"]
        rows[n] = r
    return ok, rows


# ---------------------------------------------------------------- 2, 3


def case_saddle_hadamard(dims=(2, 4), starts: int = 16, seed: int = 0, jobs: int = 1) -> tuple[bool, dict]:
    """Minimum of the cube-in-cube family is ``-(n/2) log n``."""
    rows = {}
    ok = True
    for n in dims:
        ext = extremize_over_rotations(cube(n), cube(n), "min", starts=starts, seed=seed, jobs=jobs)
        target = -0.5 * n * np.log(n)
        r = {
            "logdet": ext.logdet,
            "target": target,
            "error": abs(ext.logdet - target),
            "genuine_residual": ext.decomposition.matrix_residual,
            "gradient_norm": ext.envelope_gradient_norm,
        }
        r["ok"] = r["error"] <= 1e-4 and r["genuine_residual"] <= 1e-4
        ok &= r["ok"]
        rows[n] = r
    return ok, rows


def case_maxvol_rotation(samples: int = 200, starts: int = 16, seed: int = 0, jobs: int = 1) -> tuple[bool, dict]:
    """Cross-polytope in the square: maximal determinant 2, sweep inside ``[1, 2]``."""
    K, L = cube(2), cross_polytope(2)
    ext = extremize_over_rotations(K, L, "max", starts=starts, seed=seed, jobs=jobs)
    det = float(np.exp(ext.logdet))
    sw = sweep_family(K, L, samples, seed=seed, jobs=jobs, with_gradient=False)
    dets = np.exp(sw.logdets)
    r = {
        "det": det,
        "det_error": abs(det - 2.0),
        "sweep_min_det": float(dets.min()),
        "sweep_max_det": float(dets.max()),
        "sweep_failures": sw.failures,
    }
    ok = (r["det_error"] <= 1e-5 and sw.failures == 0 and r["sweep_min_det"] >= 1.0 - 1e-9
          and r["sweep_max_det"] <= 2.0 + 1e-5)
    return ok, r


# ---------------------------------------------------------------- 4


def case_polar(count: int = 1000, max_dim: int = 8, seed: int = 0) -> tuple[bool, dict]:
    """Round trip of the generalized polar decomposition."""
    rng = np.random.default_rng(seed)
    worst_rt = worst_classical = 0.0
    for k in range(count):
        n = int(rng.integers(1, max_dim + 1))
        A = rng.normal(size=(n, n))
        M = rng.normal(size=(n, n))
        P, U = generalized_polar_decompose(A, M)
        worst_rt = max(worst_rt, float(np.linalg.norm(P @ M @ U - A) / np.linalg.norm(A)))
        P1, U1 = generalized_polar_decompose(A, np.eye(n))
        Uc, Pc = scipy.linalg.polar(A, side="left")
        worst_classical = max(worst_classical, _max_abs(P1 - Pc) / max(1.0, _max_abs(Pc)), _max_abs(U1 - Uc))
    r = {"worst_reconstruction": worst_rt, "worst_classical_gap": worst_classical}
    return worst_rt <= 1e-9 and worst_classical <= 1e-10, r


# ---------------------------------------------------------------- 5


def case_ellipsoid_constant(samples: int = 50, seed: int = 0, jobs: int = 1) -> tuple[bool, dict]:
    """Constant determinant in an ellipsoid container, and the transport formula."""
    rows = {}
    ok = True
    for shape in (np.diag([2.0, 1.0]), np.diag([3.0, 1.0, 0.5])):
        n = shape.shape[0]
        E = Ellipsoid(shape)
        for name, L in (("cube", cube(n)), ("cross-polytope", cross_polytope(n))):
            sw = sweep_family(E, L, samples, seed=seed, jobs=jobs, with_gradient=False)
            base = solve_at_rotation(E, L, np.eye(n))[1]
            worst = {"statement": 0.0, "transpose": 0.0}
            for i in range(5):
                U = haar_orthogonal(n, seed + 100 + i)
                tr = ellipsoid_family_transport(E, L, base, U)
                worst["statement"] = max(worst["statement"], tr.residual_statement)
                worst["transpose"] = max(worst["transpose"], tr.residual_transpose)
            r = {
                "std_logdet": float(sw.logdets.std()),
                "failures": sw.failures,
                "transport_error_statement": worst["statement"],
                "transport_error_transpose": worst["transpose"],
            }
            r["ok"] = r["std_logdet"] <= 1e-6 and sw.failures == 0 and worst["statement"] <= 1e-5
            ok &= r["ok"]
            rows[f"n={n} {name}"] = r
    return ok, rows


# ---------------------------------------------------------------- 6


def _dilation_row(K, L, U, sol, prob) -> dict:
    pairs = extract_contact_pairs(prob, sol, frame="normalized")
    dec = solve_decomposition_weights(pairs, "genuine")
    Ls = image_body(apply_affine(L, U), sol.P, sol.z)
    rep = check_dilation_inclusion(K, Ls, dec.pairs, dec.weights, sol.P)
    return {"genuine_residual": dec.matrix_residual, "holds": rep["holds"],
            "worst_margin": rep["worst_margin"], "a_norm": float(np.linalg.norm(rep["a"]))}


def case_dilation(starts: int = 16, seed: int = 0, jobs: int = 1) -> tuple[bool, dict]:
    """Dilation inclusion at every certified saddle point of cases 1-3."""
    rows = {}
    for n in range(2, 7):
        K, L = cross_polytope(n), cube(n)
        prob, sol = solve_at_rotation(K, L, np.eye(n))
        rows[f"pjp n={n}"] = _dilation_row(K, L, np.eye(n), sol, prob)
    for n in (2, 4):
        ext = extremize_over_rotations(cube(n), cube(n), "min", starts=starts, seed=seed, jobs=jobs)
        rows[f"saddle cube n={n}"] = _dilation_row(cube(n), cube(n), ext.U, ext.solution, ext.problem)
    ext = extremize_over_rotations(cube(2), cross_polytope(2), "min", starts=starts, seed=seed, jobs=jobs)
    rows["saddle cross-in-cube n=2"] = _dilation_row(cube(2), cross_polytope(2), ext.U, ext.solution, ext.problem)
    certified = {k: v for k, v in rows.items() if v["genuine_residual"] <= 1e-5}
    ok = bool(certified) and all(v["holds"] and v["worst_margin"] >= -1e-6 for v in certified.values())
    return ok, {"certified": len(certified), "rows": rows}


# ---------------------------------------------------------------- 7, 8


def random_polygon(rng, n: int, count: int | None = None, scale: float = 1.0) -> VPolytope:
    """Hull of random points at radii in ``[0.6, 1.2]`` around the origin."""
    while True:
        k = count or int(rng.integers(n + 3, 3 * n + 6))
        X = rng.normal(size=(k, n))
        X *= (rng.uniform(0.6, 1.2, size=k) / np.linalg.norm(X, axis=1))[:, None]
        try:
            return VPolytope(scale * X)
        except ValueError:
            continue


def offset_rectangles() -> tuple:
    """``K = [0,1]^2`` and ``L = [1/4,3/4] x [-1/2,1/2]``."""
    K = VPolytope(np.array([[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]) - 0.5)
    L = VPolytope(np.array([[0.25, -0.5], [0.75, -0.5], [0.75, 0.5], [0.25, 0.5]]) - 0.5)
    return K, L


def case_derivatives(pairs: int = 50, h: float = 1e-5, seed: int = 0) -> tuple[bool, dict]:
    """Analytic first variations against central differences of exact volumes."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    done = skipped = 0
    while done < pairs:
        n = 2 if done % 2 == 0 else 3
        K = random_polygon(rng, n)
        L = translated(random_polygon(rng, n), 0.4 * rng.normal(size=n))
        bi = boundary_integrals(K, L)
        if bi.one_sided or intersection_volume(K, L).volume <= 1e-3:
            skipped += 1
            continue
        u = rng.normal(size=n)
        u /= np.linalg.norm(u)
        A = rng.normal(size=(n, n))
        A -= np.trace(A) / n * np.eye(n)
        A /= np.linalg.norm(A)
        for du, dA in ((u, None), (None, A)):
            def V(t, du=du, dA=dA):
                lin = matrix_exp(t * dA) if dA is not None else np.eye(n)
                sh = t * du if du is not None else np.zeros(n)
                return intersection_volume(K, apply_affine(L, AffineMap(lin, sh)), "exact").volume
            fd = (V(h) - V(-h)) / (2.0 * h)
            an = volume_derivative(K, L, du, dA, integrals=bi)
            worst = max(worst, abs(fd - an))
        done += 1
    K, L = offset_rectangles()
    rect = volume_derivative(K, L, u=np.array([0.0, 1.0]))
    r = {"pairs": done, "skipped_degenerate": skipped, "worst_abs_error": worst, "offset_rectangles": rect}
    return worst <= 1e-6 and abs(rect - 0.5) <= 1e-12, r


def case_closed_surface(count: int = 20, seed: int = 0) -> tuple[bool, dict]:
    """Divergence-theorem identities on full polytope boundaries."""
    rng = np.random.default_rng(seed)
    worst_flux = worst_trace = 0.0
    for k in range(count):
        n = (2, 3, 4)[k % 3]
        L = translated(random_polygon(rng, n), 0.2 * rng.normal(size=n))
        bi = boundary_integrals(None, L)
        vol = intersection_volume(L, L, "exact").volume
        worst_flux = max(worst_flux, bi.flux_norm)
        worst_trace = max(worst_trace, abs(bi.trace - n * vol))
    r = {"worst_flux": worst_flux, "worst_trace_error": worst_trace}
    return worst_flux <= 1e-12 and worst_trace <= 1e-9, r


# ---------------------------------------------------------------- 9


def flow_cases() -> dict:
    """Equal-volume offset squares and offset disks."""
    return {
        "squares": (cube(2), translated(cube(2), [0.5, 0.3])),
        "disks": (ball(2), translated(ball(2), [0.4, 0.2])),
    }


def _certificate_ok(rep: dict, key: str, tol: float) -> bool:
    return rep["flux_norm"] <= tol and rep[key] <= tol


def case_flow(opts: FlowOptions | None = None) -> tuple[bool, dict]:
    """Flows converge and the final positions pass the isotropy certificates."""
    opts = opts or FlowOptions()
    rows = {}
    ok = True
    for name, (K, L) in flow_cases().items():
        for mode in ("full-affine", "positive"):
            tr = maxint_flow(K, L, mode, opts)
            rep = isotropy_report(K, tr.final)
            last = tr.steps[-1]
            cert_tol = 2.0 * opts.aniso_tol
            r = {
                "status": tr.status,
                "steps": len(tr.steps) - 1,
                "volume": last.volume,
                "flux_norm": last.flux_norm,
                "anisotropy": last.anisotropy,
                "certificate_KL": _certificate_ok(rep, "anisotropy_full", cert_tol),
                "certificate_LK": _certificate_ok(rep["swapped"], "anisotropy_full", cert_tol),
            }
            if mode == "positive":
                r["symmetrized_KL"] = _certificate_ok(rep, "anisotropy_sym", cert_tol)
                r["symmetrized_LK"] = _certificate_ok(rep["swapped"], "anisotropy_sym", cert_tol)
            r["ok"] = (tr.status == "converged" and r["steps"] <= 500 and last.flux_norm <= 1e-6
                       and last.anisotropy <= 1e-5 and r["certificate_KL"] and r["certificate_LK"]
                       and r.get("symmetrized_KL", True) and r.get("symmetrized_LK", True))
            ok &= r["ok"]
            rows[f"{name} {mode}"] = r
    return ok, rows


# ---------------------------------------------------------------- 10


def uniqueness_instances() -> dict:
    tri = VPolytope(np.array([[1.0, -0.6], [0.1, 1.2], [-1.1, -0.5]]))
    return {
        "cube in cross n=3": (cross_polytope(3), cube(3)),
        "cross in cube n=2": (cube(2), cross_polytope(2)),
        "triangle in square": (cube(2), tri),
        "square in triangle": (VPolytope(3.0 * tri.vertices), cube(2)),
        "ball in square": (cube(2), ball(2)),
        "square in ellipse": (Ellipsoid(np.array([[2.0, 0.3], [0.3, 1.0]])), cube(2)),
    }


def perturbed_square(eps: float) -> VPolytope:
    """Square with one corner pulled outward by ``eps``."""
    V = np.array([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])
    V[0] += eps / np.sqrt(2.0)
    return VPolytope(V)


def case_uniqueness_continuity() -> tuple[bool, dict]:
    """Schedule independence of the optimum and Hausdorff continuity."""
    other = SolverOptions(mu0=10.0, mu_factor=3.0, mu_final=1e-10)
    gaps = {}
    for name, (K, L) in uniqueness_instances().items():
        a = solve_positive_john(PjpProblem(K, L))
        b = solve_positive_john(PjpProblem(K, L), other)
        gaps[name] = max(_max_abs(a.P - b.P), _max_abs(a.z - b.z))
    L = VPolytope(np.array([[1.0, -0.6], [0.1, 1.2], [-1.1, -0.5]]))
    base = solve_positive_john(PjpProblem(perturbed_square(0.0), L))
    steps = []
    for eps in (1e-2, 1e-3, 1e-4):
        K = perturbed_square(eps)
        sol = solve_positive_john(PjpProblem(K, L))
        steps.append({
            "eps": eps,
            "hausdorff": hausdorff_distance(K, perturbed_square(0.0)),
            "dP": _max_abs(sol.P - base.P),
            "dz": _max_abs(sol.z - base.z),
        })
    floor = 1e-5
    d = [s["dP"] for s in steps]
    monotone = all(d[i + 1] < d[i] or d[i + 1] <= floor for i in range(len(d) - 1))
    ok = max(gaps.values()) <= 1e-5 and monotone and d[-1] <= max(floor, d[0])
    return ok, {"schedule_gaps": gaps, "continuity": steps}


# ---------------------------------------------------------------- runner


CASES: dict[int, tuple[str, Callable]] = {
    1: ("positive John exactness (cube in cross-polytope, n = 2..6)", case_pjp_exact),
    2: ("saddle-John Hadamard value (cube in cube, n = 2, 4)", case_saddle_hadamard),
    3: ("maximal-volume rotation value (cross-polytope in square)", case_maxvol_rotation),
    4: ("generalized polar decomposition round trip", case_polar),
    5: ("constant volume in an ellipsoid container", case_ellipsoid_constant),
    6: ("dilation inclusion at saddle points", case_dilation),
    7: ("first-variation formulas vs finite differences", case_derivatives),
    8: ("closed-surface identities", case_closed_surface),
    9: ("maximal intersection flow and isotropy certificates", case_flow),
    10: ("uniqueness and continuity of the positive John position", case_uniqueness_continuity),
}

_ACCEPTS = {
    2: ("starts", "seed", "jobs"), 3: ("starts", "seed", "jobs"), 5: ("seed", "jobs"), 6: ("starts", "seed", "jobs"),
}


def run_case(number: int, **kw) -> CaseResult:
    title, fn = CASES[number]
    args = {k: v for k, v in kw.items() if k in _ACCEPTS.get(number, ())}
    t0 = time.perf_counter()
    try:
        ok, details = fn(**args)
        res = CaseResult(number, title, bool(ok), details)
    except Exception as exc:  # a crashing case is a failing case
        res = CaseResult(number, title, False, {}, error=f"{type(exc).__name__}: {exc}")
    res.seconds = time.perf_counter() - t0
    return res


def run_suite(numbers=None, jobs: int = 1, seed: int = 0, starts: int = 16) -> list[CaseResult]:
    """Run the selected cases, concurrently when ``jobs > 1``; ordered by number."""
    numbers = sorted(numbers or CASES)
    kw = {"seed": seed, "starts": starts, "jobs": 1}
    if jobs > 1:
        with ThreadPoolExecutor(jobs) as ex:
            return list(ex.map(lambda k: run_case(k, **kw), numbers))
    return [run_case(k, **kw) for k in numbers]
