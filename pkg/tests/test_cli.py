from __future__ import annotations

import csv
import json

import numpy as np
import pytest

from noncomm_fourier.cli import main
from noncomm_fourier.fourier import dumps, loads, random_coefficients
from noncomm_fourier.group_backend import SU2
from noncomm_fourier.operators_zoo import zoo_symbol
from noncomm_fourier.symbols import dumps_symbol


def run(argv, capsys=None):
    code = main([str(a) for a in argv])
    out = capsys.readouterr().out if capsys is not None else ""
    return code, out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_grid(tmp_path):
    out = tmp_path / "g.csv"
    assert run(["grid", "--band", "1", "--out", out])[0] == 0
    rows = read_csv(out)
    assert len(rows) == 3 * 2 * 5
    assert set(rows[0]) == {"node", "alpha", "beta", "gamma", "weight"}
    assert sum(float(r["weight"]) for r in rows) == pytest.approx(1.0, abs=1e-14)


def test_synthesize_transform_round_trip(tmp_path):
    c = random_coefficients(SU2(), 2, np.random.default_rng(0))
    (tmp_path / "c.json").write_text(dumps(c))
    assert run(["synthesize", "--in", tmp_path / "c.json", "--out", tmp_path / "f.csv"])[0] == 0
    assert run(["transform", "--band", "2", "--in", tmp_path / "f.csv", "--out", tmp_path / "back.json"])[0] == 0
    back = loads((tmp_path / "back.json").read_text())
    assert (back - c).max_abs() <= 1e-12 * c.max_abs()


def test_transform_bad_csv(tmp_path):
    (tmp_path / "f.csv").write_text("value\n1\n")
    assert run(["transform", "--band", "1", "--in", tmp_path / "f.csv", "--out-dir", tmp_path])[0] == 64
    (tmp_path / "g.csv").write_text("re,im\n1,0\n")
    assert run(["transform", "--band", "1", "--in", tmp_path / "g.csv", "--out-dir", tmp_path])[0] == 64


def test_check_hm_identity(tmp_path, capsys):
    code, out = run(["check", "hm", "--zoo", "identity", "--cutoff", "4", "--out-dir", tmp_path], capsys)
    assert code == 0 and out.startswith("hm: pass")
    rows = read_csv(tmp_path / "check-hm.csv")
    assert list(rows[0])[:6] == ["condition", "alpha", "beta", "constant", "argmax_label", "argmax_node"]
    assert json.loads((tmp_path / "check-hm.json").read_text())["verdict"] == "pass"


def test_check_hm_growing_file_fails(tmp_path, capsys):
    (tmp_path / "s.json").write_text(dumps_symbol(zoo_symbol("growing", "t3", 10)))
    code, out = run(["check", "hm", "--file", tmp_path / "s.json", "--cutoff", "8", "--out-dir", tmp_path], capsys)
    assert code == 2 and "fail" in out


def test_check_class_rho_flags(tmp_path, capsys):
    base = ["check", "class", "--zoo", "sublaplacian-parametrix", "--m", "-1", "--max-order", "2",
            "--cutoffs", "4,8", "--out-dir", tmp_path]
    assert run(base + ["--rho", "0.5"], capsys)[0] == 0
    rows = read_csv(tmp_path / "check-class.csv")
    assert {"constant@4", "constant@8"} <= set(rows[0])


def test_check_noninv_zoo(tmp_path, capsys):
    code, out = run(["check", "noninv", "--zoo", "identity", "--cutoffs", "1,2", "--p", "2", "--out-dir", tmp_path],
                    capsys)
    assert code in (0, 3) and out.startswith("noninv:")
    assert read_csv(tmp_path / "check-noninv.csv")[0]["beta"] == "0,0,0"


def test_check_full_symbol_needs_noninv(tmp_path):
    from noncomm_fourier.group_backend import haar_grid
    from noncomm_fourier.symbols import FullSymbol

    full = FullSymbol.from_invariant(zoo_symbol("identity", "su2", 2), haar_grid(SU2(), 1))
    (tmp_path / "f.json").write_text(dumps_symbol(full))
    assert run(["check", "hm", "--file", tmp_path / "f.json", "--cutoff", "1", "--out-dir", tmp_path])[0] == 64


def test_malformed_symbol_file(tmp_path, capsys):
    doc = {"group": "su2", "support_limit": "1/2", "entries": [
        {"label": "1/2", "matrix_re": [[1]], "matrix_im": [[0]]}]}
    (tmp_path / "bad.json").write_text(json.dumps(doc))
    code = main(["check", "hm", "--file", str(tmp_path / "bad.json"), "--cutoff", "1"])
    assert code == 64
    assert "entry 0" in capsys.readouterr().err
    (tmp_path / "junk.json").write_text("{nope")
    assert main(["check", "hm", "--file", str(tmp_path / "junk.json"), "--cutoff", "1"]) == 64
    assert main(["check", "hm", "--file", str(tmp_path / "missing.json"), "--cutoff", "1"]) == 64


def test_usage_errors_exit_64(tmp_path):
    for argv in (["frobnicate"], ["check", "hm", "--zoo", "identity", "--cutoff"], ["probe", "apriori"]):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 64
    assert main(["check", "hm", "--cutoff", "2", "--out-dir", str(tmp_path)]) == 64
    assert main(["check", "hm", "--zoo", "identity", "--out-dir", str(tmp_path)]) == 64


def test_named_errors_exit_1(tmp_path):
    assert main(["check", "hm", "--zoo", "nope", "--cutoff", "2", "--out-dir", str(tmp_path)]) == 1
    assert main(["probe", "apriori", "--kind", "xplusc", "--c", "0.5i", "--bands", "1",
                 "--out-dir", str(tmp_path)]) == 1


def test_zoo_exceptional(capsys, tmp_path):
    code, out = run(["zoo", "exceptional", "--window", "1.5", "--out", tmp_path / "e.json"], capsys)
    assert code == 0
    assert out.split() == ["-1.5i", "-1.0i", "-0.5i", "0", "0.5i", "1.0i", "1.5i"]
    assert json.loads((tmp_path / "e.json").read_text())["step"] == "1/2"


def test_zoo_symbol_and_parametrix(tmp_path):
    assert run(["zoo", "symbol", "--op", "heat", "--cutoff", "2", "--out", tmp_path / "h.json"])[0] == 0
    doc = json.loads((tmp_path / "h.json").read_text())
    assert doc["kind"] == "invariant" and doc["support_limit"] == "2"
    assert run(["zoo", "parametrix", "--op", "heat", "--cutoff", "2", "--out-dir", tmp_path])[0] == 0
    assert (tmp_path / "heat.json").exists()
    assert run(["zoo", "parametrix", "--op", "laplacian", "--cutoff", "2", "--out-dir", tmp_path])[0] == 64


def test_probe_apriori(tmp_path, capsys):
    code, out = run(["probe", "apriori", "--p", "2", "--bands", "1,2", "--trials", "2", "--out-dir", tmp_path],
                    capsys)
    assert code == 0
    rows = read_csv(tmp_path / "probe-apriori.csv")
    assert [r["band_limit"] for r in rows] == ["1", "2"]
    assert float(rows[0]["statistic"]) == pytest.approx(np.sqrt(7), abs=1e-12)
    assert out == (tmp_path / "probe-apriori.csv").read_text()
    assert (tmp_path / "probe-apriori.dat").read_text().startswith("# apriori")


def test_probe_opnorm_seeded(tmp_path):
    argv = ["probe", "opnorm", "--zoo", "riesz", "--p", "3", "--bands", "2,4", "--trials", "3", "--seed", "4"]
    assert main(argv + ["--out-dir", str(tmp_path / "a")]) == 0
    assert main(argv + ["--out-dir", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "probe-opnorm.csv").read_bytes() == (tmp_path / "b" / "probe-opnorm.csv").read_bytes()


@pytest.mark.parametrize("fmt", ["json", "kv"])
def test_config_defaults_and_precedence(tmp_path, fmt, capsys):
    cfg = tmp_path / f"cfg.{fmt}"
    if fmt == "json":
        cfg.write_text(json.dumps({"zoo": "sublaplacian-parametrix", "m": -1, "rho": 0.5, "max-order": 2,
                                   "cutoffs": [4, 8]}))
    else:
        cfg.write_text("# class check\nzoo = sublaplacian-parametrix\nm = -1\nrho = 0.5\nmax_order = 2\ncutoffs = 4,8\n")
    code, out = run(["check", "class", "--config", cfg, "--out-dir", tmp_path], capsys)
    assert code == 0
    report = json.loads((tmp_path / "check-class.json").read_text())
    assert report["params"]["rho"] == 0.5 and report["cutoffs"] == ["4", "8"]
    run(["check", "class", "--config", cfg, "--rho", "1", "--out-dir", tmp_path], capsys)
    report = json.loads((tmp_path / "check-class.json").read_text())
    assert report["params"]["rho"] == 1.0


def test_config_unknown_key(tmp_path):
    cfg = tmp_path / "cfg.txt"
    cfg.write_text("colour = blue\n")
    assert main(["grid", "--band", "1", "--config", str(cfg), "--out-dir", str(tmp_path)]) == 64
