import json

import numpy as np
import pytest

from cancellation.autocorr import density_profile
from cancellation.cli import main, validate, ConfigError
from cancellation.seqgen import GOLDEN, gen_sqrt_rotation, load_binary


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def _err(capsys):
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_gen_rotation_zero_is_all_ones(workdir):
    assert main(["gen", "--family", "rotation", "--alpha", "0", "--T", "7", "--out", "g"]) == 0
    seq = load_binary(workdir / "g" / "seq.bin")
    assert np.array_equal(seq.values, np.ones(7))
    lines = (workdir / "g" / "seq.csv").read_text().splitlines()
    assert lines[0] == "n,re,im" and lines[1] == "1,1,0"
    man = json.loads((workdir / "g" / "manifest.json").read_text())
    assert man["version"] and man["config"]["params"]["family"] == "rotation"


def test_density_matches_library_and_replays(workdir):
    assert main(["gen", "--family", "sqrt_rotation", "--T", "12000", "--out", "sq"]) == 0
    args = ["density", "--in", "sq", "--epsilon", "0.2", "--N-lo", "1000", "--N-hi", "8000", "--T", "2000"]
    assert main(args + ["--out", "d"]) == 0
    rep = json.loads((workdir / "d" / "density.json").read_text())
    lib = density_profile(gen_sqrt_rotation(GOLDEN, 12000), 0.2, 1000, 8000, 2000)
    assert rep["density"] == lib.density and rep["windows"] == list(lib.windows)
    assert (workdir / "d" / "density.csv").read_text().startswith("N,bad_count,density,max_abs_rho\n")
    # manifest round trip gives byte-identical numeric artifacts
    assert main(["density", "--config", "d/manifest.json", "--out", "d2"]) == 0
    for f in ("density.json", "density.csv"):
        assert (workdir / "d" / f).read_bytes() == (workdir / "d2" / f).read_bytes()


def test_flags_override_config(workdir):
    main(["gen", "--family", "sqrt_rotation", "--T", "5000", "--out", "sq"])
    cfg = {"command": "density", "params": {"in": "sq", "epsilon": 0.5, "N_lo": 100, "N_hi": 400, "T": 100}}
    (workdir / "cfg.json").write_text(json.dumps(cfg))
    assert main(["density", "--config", "cfg.json", "--epsilon", "0.9", "--out", "o"]) == 0
    assert json.loads((workdir / "o" / "density.json").read_text())["epsilon"] == 0.9


def test_schema_error_names_field(workdir, capsys):
    main(["gen", "--family", "sqrt_rotation", "--T", "5000", "--out", "sq"])
    code = main(["density", "--in", "sq", "--N-lo", "100", "--N-hi", "200", "--T", "10", "--out", "o"])
    assert code == 2
    rec = _err(capsys)
    assert rec["kind"] == "schema" and rec["path"] == "params.epsilon"
    assert not (workdir / "o").exists()
    with pytest.raises(ConfigError) as err:
        validate("torus", {"beta": 0.5, "alpha": 1, "m1": 1, "m2": 1, "N": 0})
    assert err.value.path == "params.N"


def test_precondition_and_io_exits(workdir, capsys):
    main(["gen", "--family", "sqrt_rotation", "--T", "5000", "--out", "sq"])
    code = main(["density", "--in", "sq", "--epsilon", "0.2", "--N-lo", "4000", "--N-hi", "8000",
                 "--T", "100", "--out", "o"])
    assert code == 3 and _err(capsys)["kind"] == "precondition"
    assert (workdir / "o" / "error.json").exists()
    # existing output directory is never touched
    before = sorted(p.name for p in (workdir / "sq").iterdir())
    assert main(["gen", "--family", "rotation", "--T", "3", "--out", "sq"]) == 4
    assert _err(capsys)["kind"] == "io"
    assert sorted(p.name for p in (workdir / "sq").iterdir()) == before
    assert main(["spectrum", "--in", "missing.bin", "--out", "s"]) == 4


def test_report_sorting_and_flags(workdir, capsys):
    main(["gen", "--family", "sqrt_rotation", "--T", "5000", "--out", "sq"])
    for name, eps in (("b", 0.5), ("a", 0.1)):
        main(["density", "--in", "sq", "--epsilon", str(eps), "--N-lo", "100", "--N-hi", "400",
              "--T", "100", "--out", name])
    (workdir / "empty").mkdir()
    assert main(["report", "--dirs", "b", "a", "empty", "--out", "r"]) == 0
    rows = json.loads((workdir / "r" / "report.json").read_text())
    assert [r["epsilon"] for r in rows[:2]] == [0.1, 0.5]
    assert rows[2]["flag"] == "missing manifest"
    assert main(["report", "--dirs", "--out", "r2"]) == 0
    assert json.loads((workdir / "r2" / "report.json").read_text()) == []
    assert (workdir / "r2" / "report.csv").read_text().splitlines() == ["dir,command,family,criterion,epsilon,value,flag"]


def test_spectrum_cancel_torus_symbolic_hochman(workdir):
    assert main(["gen", "--family", "rotation", "--alpha", "1/4", "--T", "4096", "--out", "r"]) == 0
    assert main(["spectrum", "--in", "r", "--grid", "16", "--Ts", "1024,4096", "--out", "s"]) == 0
    atoms = json.loads((workdir / "s" / "atoms.json").read_text())
    assert [a["angle"] for a in atoms["atoms"]] == [0.75]
    proc = {"kind": "rotation_process", "z0_turns": "3/4"}
    assert main(["cancel", "--x", "r", "--process", json.dumps(proc), "--seeds", "4", "--Ts", "10,4096",
                 "--out", "c"]) == 0
    summ = json.loads((workdir / "c" / "summary.json").read_text())
    assert summ["value"] == pytest.approx(1.0, abs=1e-9)
    assert main(["torus", "--beta", "1/3", "--alpha", "1", "--m1", "3", "--m2=0,1", "--N", "500",
                 "--out", "t"]) == 0
    rows = (workdir / "t" / "torus.csv").read_text().splitlines()
    assert rows[0] == "m1,m2,N,re,im,abs" and rows[1].split(",")[-1] == "1"
    assert main(["symbolic", "--op", "generic", "--u", "ab", "--word", "a" * 50, "--epsilon", "0.1",
                 "--out", "y"]) == 0
    doc = json.loads((workdir / "y" / "symbolic.json").read_text())
    assert doc["ok"] is False and doc["offender"] == "b"
    assert main(["hochman", "--u", "ab", "--scales", "3", "--T", "2000", "--out", "h"]) == 0
    h = json.loads((workdir / "h" / "hochman.json").read_text())
    assert h["results"][0]["A_diagonal"] > h["results"][0]["B_diagonal"]
    assert (workdir / "h" / "orbital.csv").exists() and (workdir / "h" / "covers.json").exists()
    assert main(["hochman", "--covers", "h/covers.json", "--T", "500", "--mode", "simple", "--out", "h2"]) == 0
    assert len((workdir / "h2" / "point.txt").read_text().strip()) == 500
