from __future__ import annotations

import json
from pathlib import Path

import pytest

from qtorus.cli import main

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(capsys, *argv):
    rc = main(list(argv))
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_bracket(capsys):
    rc, out, _ = run(capsys, "bracket", "t0^1 t^(1,0)", "t0^1 t^(-1,0)")
    assert rc == 0 and out.strip() == "-1*c1"


def test_verify_jacobi(capsys):
    rc, out, _ = run(capsys, "verify", "jacobi", "--box", "1", "--random", "20")
    rep = json.loads(out)
    assert rc == 0 and rep["pass"] and rep["schemaVersion"] == 1


def test_verify_heisenberg_and_aff(capsys):
    assert run(capsys, "verify", "heisenberg", "--basis", "(1,0);(0,1)", "--box", "2")[0] == 0
    assert run(capsys, "verify", "iso-aff", "--box", "2")[0] == 0


def test_build_hw(tmp_path, capsys):
    js = tmp_path / "out.json"
    rc, out, _ = run(capsys, "build-hw", "--config", str(CONFIGS / "remark52.cfg"), "--backend", "both",
                     "--window", "2", "--probe", "2", "--depth", "2", "--json", str(js))
    assert rc == 0
    assert out.splitlines() == ["s,dim", "0,1", "1,2", "2,5"]
    rep = json.loads(js.read_text())
    assert rep["dims"] == [1, 2, 5] and rep["backendAgreement"] and rep["stable"]
    assert rep["dimsByBackend"] == {"exact": [1, 2, 5], "prime": [1, 2, 5]}


def test_dims_table(capsys):
    rc, out, _ = run(capsys, "dims", "--config", str(CONFIGS / "remark52.cfg"), "--backend", "prime",
                     "--windows", "2,3", "--depth", "3")
    assert rc == 0
    assert out.splitlines() == ["K,s0,s1,s2,s3", "2,1,2,5,10", "3,1,2,5,10"]


def test_quasifinite(capsys):
    rc, out, _ = run(capsys, "quasifinite", "--config", str(CONFIGS / "remark52.cfg"))
    assert rc == 0 and json.loads(out)["verdict"] == "Quasifinite"
    rc, out, _ = run(capsys, "quasifinite", "--config", str(CONFIGS / "nonrecurrent.cfg"))
    assert json.loads(out)["verdict"] == "UnknownWithinWindow"


def test_z2_dims(capsys):
    rc, out, _ = run(capsys, "z2-dims", "--config", str(CONFIGS / "remark52.cfg"), "--backend", "prime",
                     "--depth", "2", "--window", "2", "--probe", "2")
    assert rc == 0
    assert out.splitlines()[1:] == ["0,0,1,0,1,0,1,0", "1,1,1,1,1,1,1,1", "2,2,3,2,3,2,3,2"]


def test_probe(capsys):
    cfg = str(CONFIGS / "remark52_t01_half.cfg")
    rc, out, _ = run(capsys, "probe", "integrability", "--config", cfg, "--backend", "prime",
                     "--window", "1", "--probe", "1", "--depth", "3")
    assert rc == 0
    assert json.loads(out)["nilpotencyIndex"] == {"plus": "none up to 3", "minus": "none up to 3"}
    rc, out, _ = run(capsys, "probe", "growth", "--config", cfg, "--backend", "prime",
                     "--window", "1", "--probe", "1", "--depth", "3")
    rep = json.loads(out)
    assert rc == 0 and rep["holds"] and rep["witnessRanks"] == {"1": 1, "2": 2, "3": 3}


def test_deterministic_output(tmp_path, capsys):
    paths = []
    for n in range(2):
        p = tmp_path / f"run{n}.json"
        run(capsys, "build-hw", "--config", str(CONFIGS / "eval_d2.cfg"), "--seed", "11", "--json", str(p))
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_config_error_has_line_number(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("basis = (1,0);(0,1)\nmodule = character\nwindow = x\n")
    rc, _, err = run(capsys, "build-hw", "--config", str(cfg))
    assert rc == 2 and f"{cfg}:3:" in err and err.count(str(cfg)) == 1
    cfg.write_text("basis = (1,0);(0,1)\nfoo = 1\n")
    rc, _, err = run(capsys, "build-hw", "--config", str(cfg))
    assert rc == 2 and ":2: unknown key 'foo'" in err


def test_parity_mismatch_exit_code(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("basis = (1,0);(0,1)\nmodule = eval\nmu = 1\ndims = 2\n")
    rc, _, err = run(capsys, "build-hw", "--config", str(cfg))
    assert rc == 2 and "parity" in err


def test_bad_determinant(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("basis = (2,0);(0,1)\n")
    rc, _, err = run(capsys, "build-hw", "--config", str(cfg))
    assert rc == 2 and "determinant" in err


def test_missing_config(capsys):
    rc, _, err = run(capsys, "build-hw", "--config", "/nonexistent/x.cfg")
    assert rc == 2 and "cannot read" in err


def test_bad_element_syntax(capsys):
    rc, _, err = run(capsys, "bracket", "t0^0 t^(0,0)", "c1")
    assert rc == 2


def test_usage_error():
    with pytest.raises(SystemExit):
        main(["nonsense"])
