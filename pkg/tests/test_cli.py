"""Experiment driver: config handling, determinism, exit codes."""

import numpy as np
import pytest

from gramscope import cli


def write_config(path, text):
    path.write_text(text)
    return str(path)


SPECTRUM_CFG = """
[experiment]
name = spectrum

[data]
kind = circle
n = 10
d = 10

[net]
m = 4000
scheme = dzps
activations = relu, elu, tanh, swish

[run]
seeds = 1
"""


class TestConfigParsing:
    def test_roundtrip(self, tmp_path):
        cfg = cli.load_config(write_config(tmp_path / "c.ini", SPECTRUM_CFG))
        assert cfg.name == "spectrum"
        assert cfg.seeds == [1]

    def test_malformed_config_is_atomic(self, tmp_path):
        bad = write_config(tmp_path / "bad.ini", "name = spectrum\n")  # no section header
        out = tmp_path / "out"
        rc = cli.main(["spectrum", "--config", bad, "--out", str(out)])
        assert rc == 2
        assert not out.exists()  # no partial artifacts

    def test_unknown_experiment(self, tmp_path):
        path = write_config(tmp_path / "c.ini", "[experiment]\nname = nosuch\n")
        with pytest.raises(cli.ConfigError):
            cli.load_config(path)

    def test_seed_override(self, tmp_path):
        cfg = cli.load_config(
            write_config(tmp_path / "c.ini", SPECTRUM_CFG), seeds=[7, 8]
        )
        assert cfg.seeds == [7, 8]

    def test_bad_value_reported(self, tmp_path):
        text = SPECTRUM_CFG.replace("m = 4000", "m = many")
        cfg = cli.load_config(write_config(tmp_path / "c.ini", text))
        with pytest.raises(cli.ConfigError, match="net"):
            cfg.get("net", "m", cast=int)


class TestRun:
    def test_spectrum_run_and_exit_code(self, tmp_path):
        path = write_config(tmp_path / "c.ini", SPECTRUM_CFG)
        out = tmp_path / "out"
        rc = cli.main(["spectrum", "--config", path, "--out", str(out)])
        assert rc == 0
        assert (out / "spectrum_relu_seed1.csv").exists()
        report = (out / "report.txt").read_text()
        assert "overall = pass" in report
        manifest = (out / "manifest.txt").read_text()
        assert "config_sha256" in manifest and "seeds = 1" in manifest

    def test_byte_identical_reruns(self, tmp_path):
        path = write_config(tmp_path / "c.ini", SPECTRUM_CFG)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert cli.main(["spectrum", "--config", path, "--out", str(out1)]) == 0
        assert cli.main(["spectrum", "--config", path, "--out", str(out2)]) == 0
        for name in ("spectrum_tanh_seed1.csv", "spectrum_relu_seed1.csv"):
            assert (out1 / name).read_bytes() == (out2 / name).read_bytes()
        # reports agree up to wall-clock lines
        strip = lambda p: [
            ln for ln in (p / "report.txt").read_text().splitlines()
            if "wall_clock" not in ln
        ]
        assert strip(out1) == strip(out2)

    def test_kill_experiment(self, tmp_path):
        text = """
[experiment]
name = kill

[data]
kind = lowdim
n = 11
d_prime = 3
d = 8
min_delta = 0.05

[net]
m = 50
activations = quadratic

[run]
seeds = 2
p = 2
"""
        path = write_config(tmp_path / "c.ini", text)
        out = tmp_path / "out"
        rc = cli.main(["kill", "--config", path, "--out", str(out)])
        assert rc == 0
        rows = (out / "kill_seed2.csv").read_text().strip().splitlines()
        assert rows[0] == "p,constraint_count,nullspace_dim,residual"
        last = rows[-1].split(",")
        assert int(last[1]) == 9 and int(last[2]) >= 2

    def test_trace_experiment(self, tmp_path):
        text = """
[experiment]
name = trace

[data]
kind = circle
n = 8
d = 8

[net]
m = 20000
activations = relu

[run]
seeds = 3
"""
        path = write_config(tmp_path / "c.ini", text)
        out = tmp_path / "out"
        assert cli.main(["trace", "--config", path, "--out", str(out)]) == 0
        report = (out / "report.txt").read_text()
        assert "relu_trace_ratio" in report


class TestOrderings:
    def test_tie_reported_not_failed(self):
        lam = {"relu": 1.0, "elu": 1.0, "tanh": 0.5, "swish": 0.2}
        verdict = cli.compare_orderings(lam)
        assert not verdict["verdict"]
        assert verdict["ties"]

    def test_strict_ordering(self):
        lam = {"relu": 1.0, "elu": 0.5, "tanh": 0.1, "swish": 0.2}
        assert cli.compare_orderings(lam)["verdict"]

    def test_missing_activation_rejected(self):
        with pytest.raises(ValueError):
            cli.compare_orderings({"relu": 1.0})

    def test_majority(self):
        assert cli.majority_verdict([True, True, False])
        assert not cli.majority_verdict([True, False])


class TestCsvFormat:
    def test_17_digit_roundtrip(self, tmp_path):
        vals = np.random.default_rng(0).standard_normal(5)
        cli.write_csv(tmp_path / "x.csv", ("v",), [(v,) for v in vals])
        back = np.loadtxt(tmp_path / "x.csv", skiprows=1)
        assert np.array_equal(back, vals)
