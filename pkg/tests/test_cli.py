import json
import re
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from convpos.cli import execute
from convpos.reports import as_float, dump_report, load_report

BODIES = Path(__file__).resolve().parents[1] / "bodies"


def body(tmp_path, name, spec):
    p = tmp_path / f"{name}.json"
    p.write_text(json.dumps(spec))
    return str(p)


@pytest.fixture
def files(tmp_path):
    return {
        "square": body(tmp_path, "square", {"type": "lp-ball", "p": "inf", "n": 2, "radius": 1.0}),
        "diamond": body(tmp_path, "diamond", {"type": "lp-ball", "p": 1, "n": 2, "radius": 1.0}),
        "small_diamond": body(tmp_path, "sd", {"type": "lp-ball", "p": 1, "n": 2, "radius": 0.9}),
        "disk": body(tmp_path, "disk", {"type": "lp-ball", "p": 2, "n": 2, "radius": 1.0}),
        "ellipse": body(tmp_path, "ell", {"type": "ellipsoid", "shape": [[2, 0], [0, 1]], "center": [0, 0]}),
        "offset_square": body(tmp_path, "os", {"type": "v-polytope",
                                               "vertices": [[-0.5, -0.7], [1.5, -0.7], [1.5, 1.3], [-0.5, 1.3]]}),
        "offset_disk": body(tmp_path, "od", {"type": "ellipsoid", "shape": [[1, 0], [0, 1]], "center": [0.4, 0.2]}),
        "triangle": body(tmp_path, "tri", {"type": "h-polytope", "normals": [[0, -1], [1, 1], [-1, 1]],
                                           "offsets": [1.2, 1.3, 1.3]}),
        "bad": body(tmp_path, "bad", {"type": "h-polytope", "normals": [[1, 0]], "offsets": [-1]}),
        "cube3": body(tmp_path, "cube3", {"type": "lp-ball", "p": "inf", "n": 3}),
    }


def run(argv, out=None):
    argv = list(argv) + (["--out", str(out)] if out is not None else [])
    return execute(argv)


def read(out, stem):
    return load_report((Path(out) / f"{stem}.json").read_text())


# ------------------------------------------------------------ subcommands


def test_pjp_identity(files, tmp_path, capsys):
    code = run(["pjp", "--outer", files["square"], "--inner", files["diamond"]], tmp_path)
    assert code == 0
    rep = read(tmp_path, "pjp")
    np.testing.assert_allclose(rep["P"], np.eye(2), atol=1e-6)
    assert set(rep) >= {"P", "z", "logdet", "contact_pairs", "weights", "residuals", "solver"}
    assert set(rep["solver"]) >= {"iterations", "final_mu", "kkt_residual"}
    assert "logdet" in capsys.readouterr().out
    assert (tmp_path / "pjp.txt").read_text().startswith("P:")


def test_pjp_bundled_bodies(tmp_path):
    assert run(["pjp", "--outer", str(BODIES / "binf2.json"), "--inner", str(BODIES / "b1_2.json")], tmp_path) == 0


def test_verify_exit_codes(files, capsys):
    assert run(["verify", "--outer", files["square"], "--inner", files["diamond"]]) == 0
    assert run(["verify", "--outer", files["square"], "--inner", files["small_diamond"]]) == 1
    assert "no contact pairs found" in capsys.readouterr().err


def test_usage_errors(files, capsys):
    assert run(["pjp", "--outer", files["square"]]) == 2
    assert run(["pjp", "--outer", files["square"], "--inner", "/nonexistent.json"]) == 2
    assert run(["pjp", "--outer", files["bad"], "--inner", files["diamond"]]) == 2
    assert run(["pjp", "--outer", files["cube3"], "--inner", files["diamond"]]) == 2
    assert run(["no-such-command"]) == 2
    assert run(["maxint", "--outer", files["square"], "--inner", files["disk"], "--mode", "weird"]) == 2
    err = capsys.readouterr().err
    assert "offsets[0]" in err and "dimension mismatch" in err


def test_sweep_csv_deterministic(files, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    argv = ["sweep", "--outer", files["square"], "--inner", files["triangle"], "--samples", "6", "--seed", "3"]
    assert run(argv, a) == 0
    assert run(argv + ["--jobs", "3"], b) == 0
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
    lines = (a / "sweep.csv").read_text().splitlines()
    assert lines[0] == "seed_index,logdet,det_nth_root,grad_norm,solver_iters" and len(lines) == 7


def test_saddle_and_maxvol(files, tmp_path):
    assert run(["saddle", "--outer", files["square"], "--inner", files["diamond"], "--starts", "2"], tmp_path) == 0
    rep = read(tmp_path, "saddle")
    assert rep["label"] == "best found" and rep["dilation_check"]["holds"]
    assert as_float(rep["genuine_residual"]) <= 1e-4
    assert run(["maxvol", "--outer", files["square"], "--inner", files["diamond"], "--starts", "2"], tmp_path) == 0
    assert np.exp(read(tmp_path, "maxvol")["logdet"]) == pytest.approx(2.0, abs=1e-5)


def test_ellipsoid_transport(files, tmp_path):
    argv = ["ellipsoid-transport", "--outer", files["ellipse"], "--inner", files["square"], "--samples", "4"]
    assert run(argv, tmp_path) == 0
    rep = read(tmp_path, "ellipsoid-transport")
    assert len(rep["rotations"]) == 4 and rep["worst_error"] <= 1e-5
    assert run(["ellipsoid-transport", "--outer", files["square"], "--inner", files["square"]]) == 2


def test_polar_decomp(tmp_path):
    rng = np.random.default_rng(0)
    items = [{"A": rng.standard_normal((3, 3)).tolist(), "M": rng.standard_normal((3, 3)).tolist()},
             {"A": [[2, 0], [0, 2]]}]
    p = tmp_path / "m.json"
    p.write_text(json.dumps(items))
    assert run(["polar-decomp", "--matrices", str(p)], tmp_path) == 0
    rep = read(tmp_path, "polar-decomp")
    np.testing.assert_allclose(rep["decompositions"][1]["P"], 2 * np.eye(2))
    p.write_text(json.dumps({"A": [[1, 1], [1, 1]]}))
    assert run(["polar-decomp", "--matrices", str(p)]) == 1
    p.write_text(json.dumps({"B": 1}))
    assert run(["polar-decomp", "--matrices", str(p)]) == 2


@pytest.mark.parametrize("inner", ["offset_square", "offset_disk"])
def test_maxint_flow(files, tmp_path, inner):
    outer = files["square"] if inner == "offset_square" else files["disk"]
    assert run(["maxint", "--outer", outer, "--inner", files[inner]], tmp_path) == 0
    rep = read(tmp_path, "maxint")
    assert rep["status"] == "converged" and rep["isotropy"]["certification"] == "first-order"
    header = (tmp_path / "flow.csv").read_text().splitlines()[0]
    assert header == "step,volume,flux_norm,anisotropy,step_size,det_drift"


def test_maxint_nonconvergence_exit(files):
    argv = ["maxint", "--outer", files["disk"], "--inner", files["offset_disk"], "--max-iter", "0"]
    assert run(argv) == 3


def test_derivative_check(files, tmp_path, capsys):
    assert run(["derivative-check", "--outer", files["square"], "--inner", files["triangle"]], tmp_path) == 0
    assert read(tmp_path, "derivative-check")["one_sided"] is False
    assert run(["derivative-check", "--outer", files["square"], "--inner", files["square"]]) == 1
    assert "one-sided" in capsys.readouterr().err


def test_paper_suite_selected_cases(tmp_path, capsys):
    assert run(["paper-suite", "--cases", "1,4"], tmp_path) == 0
    out = capsys.readouterr().out
    assert re.search(r"\[PASS\]\s+1\s", out) and re.search(r"\[PASS\]\s+4\s", out)
    assert "2/2 cases passed" in out
    assert run(["paper-suite", "--cases", "99"]) == 2
    assert run(["paper-suite", "--cases", "x"]) == 2


# ------------------------------------------------------------ artifacts


def test_reports_round_trip(files, tmp_path):
    run(["pjp", "--outer", files["square"], "--inner", files["disk"]], tmp_path)
    run(["verify", "--outer", files["square"], "--inner", files["small_diamond"]], tmp_path)
    run(["derivative-check", "--outer", files["square"], "--inner", files["triangle"]], tmp_path)
    for stem in ("pjp", "verify", "derivative-check"):
        text = (tmp_path / f"{stem}.json").read_text()
        assert dump_report(load_report(text)) == text


def test_module_entry_point(files):
    out = subprocess.run([sys.executable, "-m", "convpos", "verify", "--outer", files["square"],
                          "--inner", files["diamond"]], capture_output=True, text=True)
    assert out.returncode == 0 and "is_pjp: True" in out.stdout
