import numpy as np
import pytest

from oscint.cli import main


@pytest.fixture
def workspace(tmp_path):
    """Integrand table and config for a single-spherical batch job."""
    x = np.geomspace(1e-5, 100.0, 100)
    f = x**3 + x**2 + x
    integrand = tmp_path / "integrand.txt"
    np.savetxt(integrand, np.column_stack([x, f]))
    return tmp_path, integrand


def write_config(tmp_path, integrand, extra=""):
    cfg = tmp_path / "job.cfg"
    cfg.write_text(
        "integral_type = 0\n"
        f"integrand_file = {integrand}\n"
        "log_x = true\n"
        "log_y = true\n"
        + extra
    )
    return cfg


def read_output(path):
    rows = []
    for line in path.read_text().splitlines():
        if line.startswith("#"):
            continue
        rows.append([float(v) for v in line.split()])
    return np.array(rows)


class TestIntegrate:
    def test_batch_run_and_round_trip(self, workspace, capsys):
        tmp_path, integrand = workspace
        k = np.geomspace(1e-3, 1e3, 200)
        cfg = write_config(
            tmp_path, integrand,
            "a = 1e-5\nb = 100\n"
            f"k1 = {' '.join(f'{v:.17g}' for v in k)}\n"
            "ell1 = 5\n",
        )
        out = tmp_path / "result.txt"
        assert main(["integrate", "--config", str(cfg), "--out", str(out)]) == 0

        rows = read_output(out)
        assert rows.shape == (200, 6)   # a b k1 ell1 value converged
        assert np.all(rows[:, 5] == 1.0)
        assert np.all(np.isfinite(rows[:, 4]))

        # values printed with 17 significant digits must parse back exactly
        from oscint.api import BatchRequest, IntegralType, Session
        from oscint.integrand import IntegrandTable

        x = np.geomspace(1e-5, 100.0, 100)
        table = IntegrandTable(x, (x**3 + x**2 + x)[:, None], log_x=True, log_y=True)
        session = Session(IntegralType.SINGLE_SPHERICAL, table)
        req = BatchRequest(a=np.full(200, 1e-5), b=np.full(200, 100.0),
                           k=(rows[:, 2],), ell=(np.full(200, 5),))
        direct = session.integrate_batch(req)
        assert np.array_equal(rows[:, 4], direct.values[:, 0])

    def test_batch_file_and_header(self, workspace):
        tmp_path, integrand = workspace
        batch = tmp_path / "batch.txt"
        batch.write_text(
            "# a b k1 ell1\n"
            "1e-5 100 0.5 5\n"
            "1e-5 100 2.0 5\n"
        )
        cfg = write_config(tmp_path, integrand, f"batch_file = {batch}\n")
        out = tmp_path / "result.txt"
        assert main(["integrate", "--config", str(cfg), "--out", str(out)]) == 0
        text = out.read_text()
        assert text.startswith("# oscint")
        assert "config sha256" in text
        assert read_output(out).shape == (2, 6)

    def test_bad_row_cites_location(self, workspace, capsys):
        tmp_path, integrand = workspace
        rows = ["1e-5 100 1.0 5"] * 10
        rows[6] = "100 1e-5 1.0 5"     # a >= b in row 7
        batch = tmp_path / "batch.txt"
        batch.write_text("\n".join(rows) + "\n")
        cfg = write_config(tmp_path, integrand, f"batch_file = {batch}\n")
        assert main(["integrate", "--config", str(cfg)]) == 1
        err = capsys.readouterr().err
        assert "row 7" in err
        assert "a < b" in err

    def test_empty_batch(self, workspace, capsys):
        tmp_path, integrand = workspace
        batch = tmp_path / "batch.txt"
        batch.write_text("# only a header, no rows\n")
        cfg = write_config(tmp_path, integrand, f"batch_file = {batch}\n")
        assert main(["integrate", "--config", str(cfg)]) == 1
        assert "no data rows" in capsys.readouterr().err

    def test_missing_keys(self, workspace, capsys):
        tmp_path, integrand = workspace
        cfg = write_config(tmp_path, integrand)   # no batch at all
        assert main(["integrate", "--config", str(cfg)]) == 1
        assert "missing batch keys" in capsys.readouterr().err

    def test_bad_integral_type(self, workspace, capsys):
        tmp_path, integrand = workspace
        cfg = tmp_path / "job.cfg"
        cfg.write_text(
            f"integral_type = 9\nintegrand_file = {integrand}\n"
            "a = 1\nb = 2\nk1 = 1\nell1 = 0\n"
        )
        assert main(["integrate", "--config", str(cfg)]) == 1
        assert "integral_type" in capsys.readouterr().err

    def test_nonconverged_exit_code(self, workspace, capsys):
        tmp_path, integrand = workspace
        # max_bisections = 0 cannot resolve k = 300 over five decades
        cfg = write_config(
            tmp_path, integrand,
            "a = 1e-5\nb = 100\nk1 = 300\nell1 = 5\n"
            "max_bisections = 0\nrel_acc = 1e-10\n",
        )
        out = tmp_path / "result.txt"
        assert main(["integrate", "--config", str(cfg), "--out", str(out)]) == 2
        assert "did not converge" in capsys.readouterr().err
        rows = read_output(out)
        assert rows[0, 5] == 0.0


class TestSelftest:
    def test_quick_passes(self, capsys):
        assert main(["selftest", "--quick"]) == 0
        out = capsys.readouterr().out
        assert "PASS" in out
        assert "FAIL" not in out

    def test_sign_flip_injection_detected(self, capsys):
        assert main(["selftest", "--quick", "--inject-a-sign-flip"]) == 1
        assert "FAIL" in capsys.readouterr().out


class TestBench:
    def test_unknown_problem(self, capsys):
        assert main(["bench", "--problem", "nope"]) == 1
        assert "unknown benchmark" in capsys.readouterr().err

    def test_closed_form_problem_smoke(self, tmp_path):
        out = tmp_path / "bench.txt"
        assert main(["bench", "--problem", "eq6", "--n-k", "6",
                     "--oracle-every", "3", "--out", str(out)]) == 0
        text = out.read_text()
        assert "closed_form" in text
        header = next(l for l in text.splitlines() if "closed_form" in l and l.startswith("# k"))
        ncols = len(header[2:].split())
        data = [l for l in text.splitlines() if not l.startswith("#")]
        assert len(data) == 6
        assert all(len(row.split()) == ncols for row in data)
