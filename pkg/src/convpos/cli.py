"""Command-line front end.

Exit codes: 0 when every requested check passes, 1 on a certificate failure,
2 on usage errors (bad flags, unreadable or invalid body files), 3 when a
solver or flow does not converge.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import reports
from .bodies import AffineMap, Body, apply_affine, as_ellipsoid, load_body
from .errors import BodySpecError, ConvergenceError, ConvposError, DecompositionError
from .family import (
    ExtremizeOptions, check_dilation_inclusion, ellipsoid_family_transport, extremize_over_rotations,
    solve_at_rotation, sweep_csv, sweep_family,
)
from .linalg import generalized_polar_decompose, haar_orthogonal, matrix_exp, orthogonality_residual
from .maxint import (
    MC_SAMPLES, FlowOptions, boundary_integrals, flow_csv, intersection_volume, isotropy_report, maxint_flow,
    volume_derivative,
)
from .pjp import (
    PjpProblem, SolverOptions, extract_contact_pairs, image_body, solve_decomposition_weights,
    solve_positive_john, verify_positive_john,
)
from .suite import CASES, run_suite

EXIT_OK, EXIT_CERT, EXIT_USAGE, EXIT_NONCONV = 0, 1, 2, 3


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Parsed command line."""

    subcommand: str
    outer: Body | None = None
    inner: Body | None = None
    tol: float = 1e-6
    seed: int = 0
    samples: int | None = None
    starts: int = 16
    jobs: int = 1
    out: Path | None = None
    volume_method: str = "auto"
    extra: dict = field(default_factory=dict)


def _body(path: str | None, flag: str) -> Body | None:
    if path is None:
        return None
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"{flag}: file not found: {path}")
    try:
        return load_body(p)
    except (BodySpecError, ValueError, json.JSONDecodeError) as exc:
        raise UsageError(f"{flag}: {path}: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--outer", help="body file for the container K")
    common.add_argument("--inner", help="body file for the inscribed body L")
    common.add_argument("--tol", type=float, default=1e-6, help="certificate tolerance (default 1e-6)")
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--samples", type=int, default=None, help="sample count (sweeps, rotations, Monte Carlo)")
    common.add_argument("--starts", type=int, default=16, help="multi-start count for extremal searches")
    common.add_argument("--jobs", type=int, default=1, help="worker threads")
    common.add_argument("--out", default=None, help="directory for JSON/text reports and CSV files")
    common.add_argument("--volume-method", choices=("auto", "exact", "mc"), default="auto")

    ap = argparse.ArgumentParser(prog="convpos", description="Extremal positions of convex bodies.")
    sub = ap.add_subparsers(dest="subcommand", required=True)
    p = sub.add_parser("pjp", parents=[common], help="solve for the positive John position and certify it")
    p.add_argument("--mode", choices=("auto", "vertices", "facets", "approximation"), default="auto")
    sub.add_parser("verify", parents=[common], help="certify that the inner body is already in positive John position")
    sub.add_parser("sweep", parents=[common], help="positive John family over Haar rotations (CSV)")
    sub.add_parser("saddle", parents=[common], help="minimize det P*(U) over rotations")
    sub.add_parser("maxvol", parents=[common], help="maximize det P*(U) over rotations")
    sub.add_parser("ellipsoid-transport", parents=[common], help="transport formula in an ellipsoid container")
    p = sub.add_parser("polar-decomp", parents=[common], help="generalized polar decomposition of matrices from a file")
    p.add_argument("--matrices", required=True, help='JSON file: {"A": ..., "M": ...} or a list of such objects')
    p = sub.add_parser("maxint", parents=[common], help="maximal intersection flow and isotropy certificate")
    p.add_argument("--mode", choices=("full-affine", "positive"), default="full-affine")
    p.add_argument("--max-iter", type=int, default=500)
    sub.add_parser("derivative-check", parents=[common], help="first variations against finite differences")
    p = sub.add_parser("paper-suite", parents=[common], help="run the regression cases and print a table")
    p.add_argument("--cases", default=None, help="comma-separated case numbers (default: all)")
    return ap


def parse_config(argv: list[str]) -> RunConfig:
    ns = build_parser().parse_args(argv)
    cfg = RunConfig(
        subcommand=ns.subcommand,
        outer=_body(ns.outer, "--outer"),
        inner=_body(ns.inner, "--inner"),
        tol=ns.tol, seed=ns.seed, samples=ns.samples, starts=ns.starts, jobs=max(1, ns.jobs),
        out=Path(ns.out) if ns.out else None, volume_method=ns.volume_method,
    )
    for k in ("mode", "matrices", "max_iter", "cases"):
        if hasattr(ns, k):
            cfg.extra[k] = getattr(ns, k)
    if cfg.tol <= 0:
        raise UsageError("--tol must be positive")
    if cfg.samples is not None and cfg.samples < 1:
        raise UsageError("--samples must be positive")
    if cfg.starts < 1:
        raise UsageError("--starts must be positive")
    return cfg


def _need_bodies(cfg: RunConfig) -> tuple[Body, Body]:
    if cfg.outer is None or cfg.inner is None:
        raise UsageError(f"{cfg.subcommand} needs --outer and --inner")
    if cfg.outer.dim != cfg.inner.dim:
        raise UsageError(f"dimension mismatch: outer {cfg.outer.dim}, inner {cfg.inner.dim}")
    return cfg.outer, cfg.inner


def _emit(cfg: RunConfig, stem: str, report: dict, csv_text: str | None = None, csv_name: str | None = None) -> None:
    print(reports.render_text(report))
    reports.write_outputs(cfg.out, stem, report, csv_text, csv_name)


# ---------------------------------------------------------------- commands


def cmd_pjp(cfg: RunConfig) -> int:
    K, L = _need_bodies(cfg)
    prob = PjpProblem(K, L, constraint_mode=cfg.extra.get("mode", "auto"))
    sol = solve_positive_john(prob)
    pairs = extract_contact_pairs(prob, sol, frame="normalized")
    flagged = [p for p in pairs if p.flag is not None]
    dec = solve_decomposition_weights([p for p in pairs if p.flag is None], "symmetrized") if pairs else None
    rep = reports.solution_report(sol, dec)
    failures = []
    if dec is None:
        failures.append("no contact pairs found")
    elif dec.matrix_residual > cfg.tol or dec.vector_residual > cfg.tol:
        failures.append(f"identity decomposition residuals {dec.matrix_residual:.3e}/{dec.vector_residual:.3e} "
                        f"exceed {cfg.tol:.1e}")
    if flagged:
        rep["flagged_pairs"] = [reports.pair_report(p) for p in flagged]
    rep["checks"] = {"decomposition": not failures}
    rep["failures"] = failures
    _emit(cfg, "pjp", rep)
    return _finish(failures)


def cmd_verify(cfg: RunConfig) -> int:
    K, L = _need_bodies(cfg)
    cert = verify_positive_john(K, L, cfg.tol)
    rep = reports.certificate_report(cert)
    _emit(cfg, "verify", rep)
    return _finish([] if cert.is_pjp else [cert.message])


def cmd_sweep(cfg: RunConfig) -> int:
    K, L = _need_bodies(cfg)
    m = cfg.samples or 100
    sw = sweep_family(K, L, m, seed=cfg.seed, jobs=cfg.jobs)
    rep = reports.sweep_report(sw)
    _emit(cfg, "sweep", rep, sweep_csv(sw), "sweep.csv")
    if sw.failures == m:
        print("error: every sample failed to solve", file=sys.stderr)
        return EXIT_NONCONV
    return EXIT_OK


def cmd_extremal(cfg: RunConfig) -> int:
    K, L = _need_bodies(cfg)
    direction = "min" if cfg.subcommand == "saddle" else "max"
    opts = ExtremizeOptions()
    ext = extremize_over_rotations(K, L, direction, starts=cfg.starts, seed=cfg.seed, opts=opts, jobs=cfg.jobs)
    failures = []
    dilation = None
    gen = ext.decomposition
    if gen.matrix_residual > 1e-4:
        failures.append(f"genuine decomposition residual {gen.matrix_residual:.3e} exceeds 1e-4")
    else:
        Ls = image_body(apply_affine(L, ext.U), ext.solution.P, ext.solution.z)
        try:
            dilation = check_dilation_inclusion(K, Ls, gen.pairs, gen.weights, ext.solution.P, cfg.tol)
            if not dilation["holds"]:
                failures.append(f"dilation inclusion violated (margin {dilation['worst_margin']:.3e})")
        except (DecompositionError, ValueError) as exc:
            failures.append(f"recentering failed: {exc}")
    rep = reports.extremal_report(ext, dilation)
    rep["failures"] = failures
    _emit(cfg, cfg.subcommand, rep)
    return _finish(failures)


def cmd_transport(cfg: RunConfig) -> int:
    E, L = _need_bodies(cfg)
    if as_ellipsoid(E) is None:
        raise UsageError("ellipsoid-transport needs an ellipsoid --outer body")
    n = E.dim
    base = solve_at_rotation(E, L, np.eye(n))[1]
    rows, failures = [], []
    worst = 0.0
    for i in range(cfg.samples or 10):
        U = haar_orthogonal(n, np.random.SeedSequence([cfg.seed, i]))
        try:
            tr = ellipsoid_family_transport(E, L, base, U)
        except ConvergenceError as exc:
            failures.append(f"rotation {i}: {exc}")
            continue
        err = float(np.max(np.abs(tr.P - tr.P_direct)))
        worst = max(worst, err)
        rows.append({"index": i, "orientation": tr.orientation, "residual_statement": tr.residual_statement,
                     "residual_transpose": tr.residual_transpose, "det_error": tr.det_error})
        if err > 1e-5:
            failures.append(f"rotation {i}: transported P differs from direct solve by {err:.3e}")
        if tr.det_error > 1e-8:
            failures.append(f"rotation {i}: logdet changed by {tr.det_error:.3e}")
    rep = {"base_logdet": base.logdet, "base_P": base.P, "worst_error": worst, "rotations": rows,
           "failures": failures}
    _emit(cfg, "ellipsoid-transport", rep)
    return _finish(failures)


def _read_matrices(path: str) -> list[tuple[np.ndarray, np.ndarray]]:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"--matrices: file not found: {path}")
    try:
        data = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise UsageError(f"--matrices: {path}: {exc}") from exc
    items = data if isinstance(data, list) else [data]
    out = []
    for k, it in enumerate(items):
        try:
            A = np.asarray(it["A"], dtype=float)
            M = np.asarray(it.get("M", np.eye(A.shape[0])), dtype=float)
        except (KeyError, TypeError, ValueError) as exc:
            raise UsageError(f"--matrices: entry {k}: expected numeric 'A' (and optional 'M')") from exc
        if A.ndim != 2 or A.shape[0] != A.shape[1] or M.shape != A.shape:
            raise UsageError(f"--matrices: entry {k}: A and M must be square of equal size")
        out.append((A, M))
    return out


def cmd_polar(cfg: RunConfig) -> int:
    rows, failures = [], []
    for k, (A, M) in enumerate(_read_matrices(cfg.extra["matrices"])):
        try:
            P, U = generalized_polar_decompose(A, M)
        except ConvposError as exc:
            failures.append(f"entry {k}: {exc}")
            continue
        rec = float(np.linalg.norm(P @ M @ U - A) / np.linalg.norm(A))
        orth = orthogonality_residual(U)
        rows.append({"index": k, "P": P, "U": U, "reconstruction": rec, "orthogonality": orth})
        if rec > 1e-9:
            failures.append(f"entry {k}: reconstruction residual {rec:.3e} exceeds 1e-9")
    rep = {"decompositions": rows, "failures": failures}
    _emit(cfg, "polar-decomp", rep)
    return _finish(failures)


def cmd_maxint(cfg: RunConfig) -> int:
    K, L = _need_bodies(cfg)
    mode = cfg.extra.get("mode", "full-affine")
    opts = FlowOptions(tol=cfg.tol, max_iter=cfg.extra.get("max_iter", 500), volume_method=cfg.volume_method,
                       samples=cfg.samples or MC_SAMPLES, seed=cfg.seed)
    tr = maxint_flow(K, L, mode, opts)
    iso = isotropy_report(K, tr.final)
    rep = reports.flow_report(tr, iso)
    failures = []
    key = "anisotropy_sym" if mode == "positive" else "anisotropy_full"
    cert_tol = 2.0 * max(opts.tol, opts.aniso_tol)
    for name, r in (("(K, L)", iso), ("(L, K)", iso["swapped"])):
        if not (r["flux_norm"] <= cert_tol and r[key] <= cert_tol):
            failures.append(f"isotropy certificate {name}: flux {r['flux_norm']:.3e}, {key} {r[key]:.3e}")
    rep["failures"] = failures
    _emit(cfg, "maxint", rep, flow_csv(tr), "flow.csv")
    if not tr.converged:
        print(f"error: flow did not converge (status {tr.status})", file=sys.stderr)
        return EXIT_NONCONV
    return _finish(failures)


def cmd_derivative(cfg: RunConfig) -> int:
    K, L = _need_bodies(cfg)
    n = K.dim
    h = 1e-5
    rng = np.random.default_rng(cfg.seed)
    bi = boundary_integrals(K, L)
    method = cfg.volume_method

    def V(lin, sh):
        return intersection_volume(K, apply_affine(L, AffineMap(lin, sh)), method, cfg.samples or MC_SAMPLES,
                                   cfg.seed).volume

    dirs = [(f"translation e{i + 1}", None, e) for i, e in enumerate(np.eye(n))]
    for k in range(cfg.samples or 3):
        A = rng.normal(size=(n, n))
        A -= np.trace(A) / n * np.eye(n)
        dirs.append((f"traceless #{k}", A / np.linalg.norm(A), None))
    rows, failures = [], []
    for name, A, u in dirs:
        lin = (lambda t: matrix_exp(t * A)) if A is not None else (lambda t: np.eye(n))
        sh = (lambda t: t * u) if u is not None else (lambda t: np.zeros(n))
        fd = (V(lin(h), sh(h)) - V(lin(-h), sh(-h))) / (2.0 * h)
        an = volume_derivative(K, L, u, A, integrals=bi)
        rows.append({"direction": name, "analytic": an, "finite_difference": fd, "error": abs(an - fd)})
        if abs(an - fd) > cfg.tol:
            failures.append(f"{name}: analytic {an:.9g} vs finite difference {fd:.9g}")
    if bi.one_sided:
        # the formulas give one-sided derivatives only; central differences
        # average the two sides, so the comparison is not meaningful
        failures = ["hypothesis violated: the boundaries overlap on a set of positive measure, "
                    "derivatives are one-sided"]
    rep = {"one_sided": bi.one_sided, "flux": bi.flux, "moment": bi.moment, "checks": rows, "failures": failures}
    _emit(cfg, "derivative-check", rep)
    return _finish(failures)


def cmd_suite(cfg: RunConfig) -> int:
    sel = cfg.extra.get("cases")
    try:
        numbers = [int(x) for x in sel.split(",")] if sel else None
    except ValueError as exc:
        raise UsageError("--cases expects comma-separated integers") from exc
    if numbers and any(k not in CASES for k in numbers):
        raise UsageError(f"--cases: known cases are {sorted(CASES)}")
    results = run_suite(numbers, jobs=cfg.jobs, seed=cfg.seed, starts=cfg.starts)
    for r in results:
        print(r.line() + (f"  {r.error}" if r.error else ""))
    passed = sum(r.passed for r in results)
    print(f"{passed}/{len(results)} cases passed")
    rep = {"cases": [{"number": r.number, "title": r.title, "passed": r.passed, "seconds": r.seconds,
                      "error": r.error, "details": r.details} for r in results]}
    reports.write_outputs(cfg.out, "paper-suite", rep)
    return EXIT_OK if passed == len(results) else EXIT_CERT


COMMANDS = {
    "pjp": cmd_pjp, "verify": cmd_verify, "sweep": cmd_sweep, "saddle": cmd_extremal, "maxvol": cmd_extremal,
    "ellipsoid-transport": cmd_transport, "polar-decomp": cmd_polar, "maxint": cmd_maxint,
    "derivative-check": cmd_derivative, "paper-suite": cmd_suite,
}


def _finish(failures: list[str]) -> int:
    for f in failures:
        print(f"certificate failure: {f}", file=sys.stderr)
    return EXIT_CERT if failures else EXIT_OK


def execute(argv: list[str]) -> int:
    """Run one subcommand and return its exit status."""
    try:
        cfg = parse_config(argv)
        return COMMANDS[cfg.subcommand](cfg)
    except SystemExit as exc:  # argparse usage errors and --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"error: did not converge: {exc}", file=sys.stderr)
        return EXIT_NONCONV
    except ConvposError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CERT


def main(argv: list[str] | None = None) -> int:
    return execute(sys.argv[1:] if argv is None else argv)


if __name__ == "__main__":
    sys.exit(main())
