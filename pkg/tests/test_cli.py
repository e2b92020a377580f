import csv
import io

import pytest

from bilayer_sc.cli import OPTIONS, ConfigError, main, parse_config
from bilayer_sc.ensemble import REFERENCE_RATES

SMALL_SIM = ["--set", "l1=4", "--set", "r1=6", "--set", "l2=4", "--set", "r2=6",
             "--set", "ls1=1", "--set", "rs1=6", "--set", "ls2=1", "--set", "rs2=6",
             "--set", "L=12", "--set", "w=3", "--set", "M1=30", "--set", "M2=30",
             "--set", "p=0.3", "--set", "trials=4", "--set", "sweep_eps1=0.5:0.7:0.1"]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.reader(io.StringIO("\n".join(body))))


def test_print_config_roundtrips(capsys, tmp_path):
    code, out, _ = run(capsys, "limits", "--print-config", "--set", "p=0.25")
    assert code == 0
    assert [ln.split(" = ")[0] for ln in out.splitlines()] == list(OPTIONS)
    cfg = parse_config(out)
    assert cfg["p"] == 0.25 and cfg["tie_rs1"] is None and cfg["punctured"] is True
    f = tmp_path / "eff.cfg"
    f.write_text(out)
    code, again, _ = run(capsys, "limits", "--print-config", "--config", str(f))
    assert again == out


def test_config_errors_report_line(capsys, tmp_path):
    f = tmp_path / "bad.cfg"
    f.write_text("# comment\np = 0.3\nbogus = 1\n")
    code, _, err = run(capsys, "limits", "--config", str(f))
    assert code == 2 and "bad.cfg:3" in err and "bogus" in err
    with pytest.raises(ConfigError, match=":2:"):
        parse_config("p = 0.1\np 0.2\n")
    with pytest.raises(ConfigError, match="bad value"):
        parse_config("trials = many\n")
    assert run(capsys, "limits", "--set", "eps_s1d=1.5")[0] == 2
    assert run(capsys, "limits", "--set", "nokey")[0] == 2
    assert run(capsys, "limits", "--config", str(tmp_path / "missing.cfg"))[0] == 2
    assert run(capsys, "simulate", "--set", "code=Z")[0] == 2


def test_limits(capsys):
    code, out, _ = run(capsys, "limits", "--set", "p=0.3")
    assert code == 0
    assert out.startswith("# command=limits")
    table = {r[0]: r[1:] for r in rows(out)[1:]}
    for key in ("theta1", "theta2", "theta_r", "Rmax", "sd_corner0", "sr_corner0"):
        assert key in table
    th = sum(float(table[k][0]) for k in ("theta1", "theta2", "theta_r"))
    assert th == pytest.approx(1.0, abs=1e-9)


def test_infeasible_design_exit(capsys):
    code, _, err = run(capsys, "design", "--set", "eps_s1r=0.95", "--set", "eps_s2r=0.95",
                       "--set", "eps_s1d=0.05", "--set", "eps_s2d=0.05")
    assert code == 3 and "infeasible" in err


def test_design_from_code(capsys):
    code, out, _ = run(capsys, "design", "--set", "design_from=code", "--set", "code=B")
    assert code == 0
    table = dict(rows(out)[1:])
    assert (table["l1"], table["r1"], table["ls2"], table["rs2"]) == ("12", "20", "3", "14")
    assert float(table["Rtilde1"]) == pytest.approx(REFERENCE_RATES["B"]["Rtilde1"], abs=1e-3)


def test_design_from_channels_reproduces_code_a(capsys):
    code, out, _ = run(capsys, "design", "--set", "eps_s1r=0.45209", "--set", "eps_s2r=0.45209",
                       "--set", "eps_s1d=0.61877", "--set", "eps_s2d=0.61877",
                       "--set", "p=0.3", "--set", "tie_rs1=0.85")
    assert code == 0
    t = dict(rows(out)[1:])
    assert (t["l1"], t["r1"], t["ls1"], t["rs1"]) == ("6", "10", "2", "10")


def test_de_equivalence(capsys):
    code, out, _ = run(capsys, "de", "--set", "task=equivalence", "--set", "L=30",
                       "--set", "equiv_iters=50")
    assert code == 0
    assert float(rows(out)[1][-1]) <= 1e-12


def test_de_thresholds_small(capsys):
    code, out, _ = run(capsys, "de", "--set", "L=20", "--set", "rays=diag",
                       "--set", "bisect_tol=0.01", "--set", "w_list=4,10")
    assert code == 0
    r = rows(out)
    assert r[0][:4] == ["w", "L", "p", "ray"] and len(r) == 3
    assert all(0.3 < float(x[6]) < 0.9 for x in r[1:])


def test_de_nonconvergence_exit(capsys):
    code, _, err = run(capsys, "exit-surface", "--set", "L=10", "--set", "grid_step=0.1",
                       "--set", "max_iters=2", "--set", "strict=true")
    assert code == 4 and "non-convergence" in err


def test_region_small(capsys):
    code, out, _ = run(capsys, "region", "--set", "L=10", "--set", "grid_step=0.1")
    assert code == 0
    r = rows(out)
    assert r[0] == ["eps_s1d", "eps_s2d_max", "pentagon_eps_s2d"]
    assert len(r) == 12


def test_simulate_is_reproducible(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(capsys, "simulate", *SMALL_SIM, "--seed", "3", "--out", str(a))[0] == 0
    assert run(capsys, "simulate", *SMALL_SIM, "--seed", "3", "--jobs", "2",
               "--out", str(b))[0] == 0
    assert a.read_bytes() == b.read_bytes()
    text = a.read_text()
    assert text.startswith("# ") and "seed=3" in text.splitlines()[0]
    assert len(rows(text)) == 4
    assert run(capsys, "simulate", *SMALL_SIM, "--set", "trials=0")[0] == 2


def test_dump_matrix(capsys, tmp_path):
    path = tmp_path / "H.txt"
    code, _, _ = run(capsys, "simulate", *SMALL_SIM, "--set", "trials=1",
                     "--dump-matrix", str(path))
    assert code == 0
    lines = path.read_text().splitlines()
    nrows, ncols = (int(x) for x in lines[0].split())
    assert ncols == 2 * 30 * 12 and len(lines) == nrows + 1
    assert all(0 <= int(c) < ncols for ln in lines[1:] for c in ln.split())
