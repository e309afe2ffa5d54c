import numpy as np
import pytest

from sphconv import tolerances
from sphconv.cli import main
from sphconv.network import loads_network
from sphconv.sphere import sample_uniform


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestCli:
    def test_factorize(self, capsys):
        code, out, _ = run(capsys, "factorize", "--taps", "1,3,3,1", "--S", "2")
        assert code == 0
        lines = out.splitlines()
        assert lines[0].startswith("# rel_error=") and lines[1] == "factor,taps"
        factors = [np.array([float(v) for v in l.split(",")[1].split(";")]) for l in lines[2:]]
        total = np.array([1.0])
        for w in factors:
            total = np.convolve(total, w)
        np.testing.assert_allclose(total, [1, 3, 3, 1], atol=1e-10)

    def test_thm2_rate_is_byte_identical(self, capsys, tmp_path):
        argv = ["thm2-rate", "--N", "8,16", "--grid-size", "300", "--seed", "3"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()
        assert b"control,sup_error" in a.read_bytes()

    def test_stdout(self, capsys):
        code, out, _ = run(capsys, "thm2-rate", "--N", "4", "--grid-size", "100", "--ridge", "zero")
        assert code == 0 and out.splitlines()[-1].startswith("4,0,")

    def test_thm1_rate(self, capsys):
        code, out, _ = run(capsys, "thm1-rate", "--J", "8,16", "--seeds", "2", "--grid-size", "200")
        assert code == 0 and "# tau=0.5" in out

    def test_discretize(self, capsys):
        code, out, _ = run(capsys, "discretize", "--m", "16,64,256,1024", "--seeds", "10", "--grid-size", "200")
        assert code == 0 and "# study=discretize" in out

    def test_bench(self, capsys):
        code, out, _ = run(capsys, "bench-factor", "--M", "5,9", "--S", "2,3", "--trials", "4")
        assert code == 0 and len(out.splitlines()) == 5

    def test_export(self, capsys):
        code, out, _ = run(capsys, "export-net", "--N", "3", "--m", "2")
        assert code == 0
        net = loads_network(out)
        assert net.flavor == "one-layer" and net.N == 3
        code, out, _ = run(capsys, "export-net", "--kind", "zonal", "--J", "8", "--N", "4", "--m", "2")
        assert code == 0 and loads_network(out).flavor == "two-layer"
        assert np.isfinite(loads_network(out)(sample_uniform(3, 5, 0))).all()

    def test_assertion_failure_exit_code(self, capsys, monkeypatch):
        monkeypatch.setattr(tolerances, "DISCRETIZATION_SLOPE_WINDOW", (0.0, 1.0))
        code, out, err = run(capsys, "discretize", "--m", "16,64", "--seeds", "2", "--grid-size", "50")
        assert code == 1 and "assertion failed" in err and out == ""

    def test_infeasible_is_usage_error(self, capsys):
        code, _, err = run(capsys, "thm1-rate", "--J", "1")
        assert code == 2 and "infeasible" in err

    def test_bad_flag(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["thm2-rate", "--N", "a,b"])
        assert info.value.code == 2

    def test_missing_command(self, capsys):
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == 2
