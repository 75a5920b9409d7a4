import csv
import io
import subprocess
import sys

import numpy as np
import pytest

from nonlocal_dd import __version__, import_matrix
from nonlocal_dd.cli import main


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def test_version(capsys):
    code, out, _ = run(["version"], capsys)
    assert code == 0 and __version__ in out


def test_sweep_h_matches_the_table(capsys):
    code, out, _ = run(["sweep-h", "--dim", "1", "--delta", "0.3", "--n", "20,40,80,160,320",
                        "--target", "stiffness", "--workers", "1"], capsys)
    assert code == 0
    kappa = [float(r["kappa"]) for r in rows(out)]
    np.testing.assert_allclose(kappa, [9.41, 8.92, 8.58, 8.39, 8.29], rtol=0.15)


def test_sweep_delta_schur(capsys):
    code, out, _ = run(["sweep-delta", "--dim", "1", "--n", "100", "--delta", "0.02,0.04,0.08,0.16,0.32",
                        "--target", "schur", "--workers", "1"], capsys)
    assert code == 0
    recs = rows(out)
    np.testing.assert_allclose([float(r["kappa"]) for r in recs], [1.73, 1.49, 1.36, 1.30, 1.27], rtol=0.15)
    assert "w_actual" in recs[0] and "n_gamma" in recs[0]


def test_two_by_two_spectrum(capsys):
    code, out, _ = run(["spectrum", "--dim", "1", "--n", "2", "--delta", "0.6", "--bc", "neumann",
                        "--layout", "cell", "--quadrature", "midpoint"], capsys)
    assert code == 0
    (r,) = rows(out)
    assert float(r["lambda_min"]) == pytest.approx(0.5) and float(r["kappa"]) == pytest.approx(1.0)
    assert r["null_dim"] == "1"


def test_rows_echo_the_configuration(capsys):
    _, out, _ = run(["spectrum", "--dim", "2", "--n", "6", "--delta", "1/3", "--norm", "max"], capsys)
    header = out.splitlines()[0].split(",")
    for key in ("dim", "n", "h", "delta", "bc", "kernel", "quadrature", "norm", "lambda_min",
                "lambda_max", "kappa", "null_dim", "method"):
        assert key in header
    (r,) = rows(out)
    assert r["norm"] == "max" and r["delta"] == "3.33333e-01"


def test_output_is_byte_identical_across_worker_counts(capsys, tmp_path):
    argv = ["sweep-delta", "--dim", "1", "--n", "60", "--delta", "0.05,0.1,0.2", "--target", "schur"]
    _, a, _ = run(argv + ["--workers", "1"], capsys)
    _, b, _ = run(argv + ["--workers", "3"], capsys)
    assert a == b


def test_out_and_export(capsys, tmp_path):
    out, mtx = tmp_path / "a.csv", tmp_path / "k.mtx"
    code, text, _ = run(["assemble", "--dim", "1", "--n", "20", "--delta", "0.3", "--layout", "cell",
                         "--quadrature", "midpoint", "--out", str(out), "--export-matrix", str(mtx)], capsys)
    assert code == 0 and text == ""
    (r,) = rows(out.read_text())
    assert r["stored_entries"] == "119" and r["order"] == "20"
    assert import_matrix(mtx).shape == (20, 20)


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# sweep\ndim = 1\nn = 20, 40\ndelta = 0.3\nworkers = 1\n")
    code, out, _ = run(["spectrum", "--config", str(cfg), "--n", "20"], capsys)
    assert code == 0 and len(rows(out)) == 1
    cfg.write_text("dimension = 1\n")
    code, _, err = run(["spectrum", "--config", str(cfg)], capsys)
    assert code == 2 and "dimension" in err


@pytest.mark.parametrize("argv, flag", [
    (["spectrum", "--dim", "5"], "dim"),
    (["spectrum", "--delta", "1.5"], "delta"),
    (["spectrum", "--quadrature", "simpson"], "quadrature"),
    (["sweep-h", "--delta", "0.1,0.2"], "delta"),
    (["sweep-delta", "--n", "10,20"], "n"),
    (["schur", "--dim", "1", "--n", "10", "--delta", "0.95"], "delta"),
])
def test_parameter_errors_exit_2(capsys, argv, flag):
    code, _, err = run(argv, capsys)
    assert code == 2 and flag in err


def test_usage_errors_exit_2(capsys):
    assert run(["frobnicate"], capsys)[0] == 2
    assert run(["spectrum", "--n", "abc"], capsys)[0] == 2


def test_numerical_failure_exits_1(capsys, tmp_path, monkeypatch):
    import nonlocal_dd.cli as cli
    from nonlocal_dd import ConvergenceError

    def boom(opts):
        raise ConvergenceError("no luck", bracket=(0, 1))
    monkeypatch.setitem(cli.HANDLERS, "spectrum", boom)
    code, _, err = run(["spectrum"], capsys)
    assert code == 1 and "no luck" in err


def test_equivalence_command(capsys):
    code, out, _ = run(["equivalence", "--dim", "1", "--n", "20,40", "--delta", "0.3", "--trials", "3",
                        "--workers", "1"], capsys)
    assert code == 0
    for r in rows(out):
        assert r["passed"] == "1" and float(r["max_rel_diff"]) <= 1e-8


def test_local_limit_command(capsys):
    code, out, _ = run(["local-limit", "--delta", "0.1,0.05,0.025"], capsys)
    assert code == 0
    recs = rows(out)
    assert float(recs[0]["fitted_order"]) == pytest.approx(2.0, abs=0.3)


def test_poincare_fit_from_csv(capsys, tmp_path):
    sweep = tmp_path / "s.csv"
    run(["sweep-delta", "--dim", "1", "--n", "100", "--delta", "0.02,0.04,0.08,0.16,0.32",
         "--out", str(sweep), "--workers", "1"], capsys)
    code, out, _ = run(["poincare-fit", "--from-csv", str(sweep)], capsys)
    assert code == 0
    fits = {r["quantity"]: float(r["exponent"]) for r in rows(out)}
    assert fits["lambda_min"] == pytest.approx(3.0, abs=0.15)
    assert fits["kappa"] == pytest.approx(-2.0, abs=0.15)


def test_strips_command(capsys):
    code, out, _ = run(["strips", "--shape", "unit_disk", "--delta", "0.1", "--m", "1"], capsys)
    assert code == 0
    recs = rows(out)
    assert len(recs) == 10 and all(r["within_bounds"] == "1" for r in recs)


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "nonlocal_dd", "version"], capture_output=True, text=True)
    assert proc.returncode == 0 and proc.stdout.startswith("nonlocal-dd")
