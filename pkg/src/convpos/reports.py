"""Structured and human-readable reports.

Reports are plain dictionaries of JSON-compatible values.  ``dump_report``
and ``load_report`` are exact inverses on anything ``to_jsonable`` returns
(floats are written with ``repr`` precision, non-finite values as strings),
and ``render_text`` formats the same dictionary for reading.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import numpy as np

from .family import ExtremalPosition, FamilySweep
from .maxint import FlowTrace
from .pjp import ContactPair, IdentityDecomposition, PjpCertificate, PositionSolution

_NONFINITE = {"nan": math.nan, "inf": math.inf, "-inf": -math.inf}


def to_jsonable(obj: Any) -> Any:
    """Convert arrays, numpy scalars and tuples into JSON-ready values."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if obj is None or isinstance(obj, str):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dump_report(report: dict) -> str:
    """Deterministic JSON text (sorted keys, trailing newline)."""
    return json.dumps(to_jsonable(report), indent=2, sort_keys=True) + "\n"


def load_report(text: str) -> dict:
    """Parse :func:`dump_report` output; non-finite markers stay strings."""
    return json.loads(text)


def as_float(v: Any) -> float:
    """Read back a float field that may hold a non-finite marker."""
    return _NONFINITE[v] if isinstance(v, str) else float(v)


# ---------------------------------------------------------------- builders


def pair_report(p: ContactPair) -> dict:
    return {"x": p.x, "y": p.y, "index": p.index, "multiplier": p.multiplier, "flag": p.flag}


def decomposition_report(dec: IdentityDecomposition | None) -> dict | None:
    if dec is None:
        return None
    return {
        "mode": dec.mode,
        "weights": dec.weights,
        "weight_sum": float(np.sum(dec.weights)),
        "matrix_residual": dec.matrix_residual,
        "vector_residual": dec.vector_residual,
        "pairs": [pair_report(p) for p in dec.pairs],
    }


def solution_report(sol: PositionSolution, dec: IdentityDecomposition | None = None) -> dict:
    """``{P, z, logdet, contact_pairs, weights, residuals, solver}``."""
    rep = {
        "P": sol.P,
        "z": sol.z,
        "logdet": sol.logdet,
        "approximate": sol.approximate,
        "symmetric": sol.symmetric,
        "solver": {
            "iterations": sol.iterations,
            "final_mu": sol.final_mu,
            "kkt_residual": sol.kkt_residual,
            "gradient_norm": sol.gradient_norm,
            "duality_gap": sol.duality_gap,
            "active_constraints": int(len(sol.active_indices)),
            "active_rank": sol.active_rank,
            "active_sv_ratio": sol.active_sv_ratio,
        },
    }
    if dec is not None:
        rep["contact_pairs"] = [pair_report(p) for p in dec.pairs]
        rep["weights"] = dec.weights
        rep["residuals"] = {"matrix": dec.matrix_residual, "vector": dec.vector_residual,
                            "weight_sum": float(np.sum(dec.weights))}
    return rep


def certificate_report(cert: PjpCertificate) -> dict:
    return {
        "is_pjp": cert.is_pjp,
        "contained": cert.contained,
        "violation": cert.violation,
        "message": cert.message,
        "decomposition": decomposition_report(cert.decomposition),
    }


def extremal_report(ext: ExtremalPosition, dilation: dict | None) -> dict:
    rep = solution_report(ext.solution, ext.decomposition)
    rep.update({
        "direction": ext.direction,
        "U": ext.U,
        "envelope_gradient_norm": ext.envelope_gradient_norm,
        "genuine_residual": ext.decomposition.matrix_residual,
        "starts_used": ext.starts_used,
        "converged_starts": ext.converged_starts,
        "label": "best found",
        "dilation_check": dilation,
    })
    return rep


def sweep_report(sweep: FamilySweep) -> dict:
    return {
        "seed": sweep.seed,
        "summary": sweep.summary(),
        "errors": {str(s.seed_index): s.error for s in sweep.samples if s.error is not None},
    }


def flow_report(trace: FlowTrace, isotropy: dict) -> dict:
    last = trace.steps[-1]
    return {
        "mode": trace.mode,
        "status": trace.status,
        "volume_method": trace.method,
        "steps": len(trace.steps) - 1,
        "final": {
            "volume": last.volume,
            "flux_norm": last.flux_norm,
            "anisotropy": last.anisotropy,
            "linear": last.linear,
            "shift": last.shift,
        },
        "isotropy": isotropy,
    }


# ---------------------------------------------------------------- text


def _fmt(v: Any) -> str:
    if isinstance(v, float):
        return f"{v + 0.0:.10g}"
    if isinstance(v, list) and v and all(isinstance(r, list) for r in v):
        return "\n" + "\n".join("    [" + ", ".join(_fmt(x) for x in r) + "]" for r in v)
    if isinstance(v, list):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def render_text(report: dict, indent: int = 0) -> str:
    """Indented ``key: value`` listing of a report."""
    data = to_jsonable(report)
    pad = "  " * indent
    lines = []
    for k, v in data.items():
        if isinstance(v, (dict, list)) and not v:
            lines.append(f"{pad}{k}: {'{}' if isinstance(v, dict) else '[]'}")
        elif isinstance(v, dict):
            lines.append(f"{pad}{k}:")
            lines.append(render_text(v, indent + 1))
        elif isinstance(v, list) and v and all(isinstance(r, dict) for r in v):
            lines.append(f"{pad}{k}: ({len(v)} entries)")
            for i, r in enumerate(v):
                lines.append(f"{pad}  [{i}]")
                lines.append(render_text(r, indent + 2))
        else:
            lines.append(f"{pad}{k}: {_fmt(v)}".replace(": \n", ":\n"))
    return "\n".join(x for x in lines if x)


def write_outputs(out: str | Path | None, stem: str, report: dict, csv_text: str | None = None,
                  csv_name: str | None = None) -> list[Path]:
    """Write ``stem.json`` and ``stem.txt`` (and a CSV) into ``out``."""
    if out is None:
        return []
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    paths = [d / f"{stem}.json", d / f"{stem}.txt"]
    paths[0].write_text(dump_report(report))
    paths[1].write_text(render_text(report) + "\n")
    if csv_text is not None:
        p = d / (csv_name or f"{stem}.csv")
        p.write_text(csv_text)
        paths.append(p)
    return paths
