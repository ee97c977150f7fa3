"""Command-line surface: output formats, metadata, exact/decimal
duality, error schema, exit codes."""

import csv
import io
import json
import math
from fractions import Fraction

import pytest

from mg1exact.cli import main

UNIFORM = ["--lambda", "2", "--uniform", "1/12", "7/12"]
DETERMINISTIC = ["--lambda", "2", "--deterministic", "1/3"]
MARKOV = ["--lambda", "2", "--exponential", "3"]


def run(capsys, argv):
    code = main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    lines = text.splitlines()
    assert lines[0].startswith("# ")
    meta = json.loads(lines[0][2:])
    rows = list(csv.reader(io.StringIO("\n".join(lines[1:]))))
    return meta, rows[0], rows[1:]


class TestDensity:
    def test_grid_values_and_metadata(self, capsys):
        code, out, _ = run(
            capsys, ["density", *UNIFORM, "--xmax", "1/2", "--precision", "12"]
        )
        assert code == 0
        meta, header, rows = parse_csv(out)
        assert header == ["x", "density"]
        assert meta["model"]["service"]["family"] == "uniform"
        assert meta["case"] == "uniform-positive-lower"
        assert meta["atom"]["exact"] == "1/3"
        assert meta["grid_step"] == "1/240"
        # 120 grid nodes on (0, 1/2], no jumps in this family
        assert len(rows) == 120
        table = {x: float(v) for x, v in rows}
        want = -math.exp(1 / 6) / 9 + 2 * math.exp(1 / 3) / 3
        assert table["1/6"] == pytest.approx(want, rel=1e-11)

    def test_jump_emits_both_sides(self, capsys):
        code, out, _ = run(capsys, ["density", *DETERMINISTIC, "--xmax", "2/3"])
        assert code == 0
        _, _, rows = parse_csv(out)
        at_jump = [float(v) for x, v in rows if x == "1/3"]
        assert len(at_jump) == 2
        assert at_jump[0] - at_jump[1] == pytest.approx(2 / 3, abs=1e-12)

    def test_file_output_with_sidecar(self, capsys, tmp_path):
        out_file = tmp_path / "density.csv"
        code, _, _ = run(
            capsys,
            ["density", *MARKOV, "--xmax", "1", "--out", str(out_file)],
        )
        assert code == 0
        assert out_file.exists()
        sidecar = json.loads((tmp_path / "density.csv.meta.json").read_text())
        assert sidecar["atom"]["exact"] == "1/3"
        assert sidecar["model"]["service"]["family"] == "exponential"

    def test_json_format(self, capsys):
        code, out, _ = run(
            capsys, ["density", *MARKOV, "--xmax", "1/8", "--format", "json"]
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["metadata"]["case"] == "exponential"
        assert len(doc["density"]) == 30

    def test_precision_controls_digits(self, capsys):
        _, out, _ = run(
            capsys, ["density", *MARKOV, "--xmax", "1/240", "--precision", "3"]
        )
        _, _, rows = parse_csv(out)
        mantissa = rows[0][1].replace("0.", "")
        assert len(mantissa) == 3


class TestPointQueries:
    def test_cdf_dual_fields(self, capsys):
        code, out, _ = run(
            capsys, ["cdf", *UNIFORM, "--at", "1/2", "--xmax", "1/2"]
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["atom"] == {"exact": "1/3", "approx": 1 / 3}
        assert "exp(" in doc["cdf"]["exact"]
        approx = float(doc["cdf"]["approx"])
        assert 0.70 < approx < 0.71
        assert float(doc["survival"]["approx"]) == pytest.approx(1 - approx)

    def test_quantile_median(self, capsys):
        code, out, _ = run(
            capsys, ["quantile", *UNIFORM, "-p", "0.5", "--xmax", "1"]
        )
        assert code == 0
        doc = json.loads(out)
        assert float(doc["quantile"]["approx"]) == pytest.approx(
            0.21673428, abs=1e-8
        )

    def test_quantile_inside_atom_is_exactly_zero(self, capsys):
        _, out, _ = run(capsys, ["quantile", *UNIFORM, "-p", "1/4", "--xmax", "1/2"])
        doc = json.loads(out)
        assert doc["quantile"]["exact"] == "0"
        assert float(doc["quantile"]["approx"]) == 0.0

    def test_mode(self, capsys):
        code, out, _ = run(capsys, ["mode", *UNIFORM, "--xmax", "1"])
        assert code == 0
        doc = json.loads(out)
        assert float(doc["mode"]["approx"]) == pytest.approx(0.17405980, abs=1e-7)

    def test_moments_exact_fractions(self, capsys):
        code, out, _ = run(capsys, ["moments", *UNIFORM])
        assert code == 0
        doc = json.loads(out)
        assert doc["waiting_time"]["mean"]["exact"] == "19/48"
        assert doc["waiting_time"]["variance"]["exact"] == "1883/6912"
        assert doc["queue_length"]["mean"]["exact"] == "35/24"
        assert doc["queue_length"]["variance"]["exact"] == "4547/1728"
        assert doc["utilization"] == {"exact": "2/3", "approx": 2 / 3}

    def test_tail_markovian_exact_rate(self, capsys):
        code, out, _ = run(capsys, ["tail", *MARKOV])
        assert code == 0
        doc = json.loads(out)
        assert doc["decay_rate"]["exact"] == "1"
        assert float(doc["decay_rate"]["approx"]) == pytest.approx(1.0)
        assert "tau" not in doc

    def test_tail_deterministic_tau(self, capsys):
        _, out, _ = run(capsys, ["tail", *DETERMINISTIC])
        doc = json.loads(out)
        tau = float(doc["tau"]["approx"])
        rho = 2 / 3
        assert tau * math.exp(-rho * (tau - 1)) == pytest.approx(1.0, abs=1e-12)
        assert float(doc["decay_rate"]["approx"]) == pytest.approx(2 * (tau - 1))


class TestQueueLength:
    def test_reference_decimals(self, capsys):
        code, out, _ = run(capsys, ["qlen", *DETERMINISTIC, "-L", "5"])
        assert code == 0
        meta, header, rows = parse_csv(out)
        assert header == ["level", "exact", "probability"]
        body = [r for r in rows if r and r[0].isdigit()]
        probs = [float(r[2]) for r in body]
        ref = [0.333333, 0.315911, 0.182481, 0.089494, 0.042035, 0.019607]
        assert probs == pytest.approx(ref, abs=1e-5)
        assert body[1][1] == "(-1/3) + (1/3)*exp(2/3)"
        trailer = {r[0]: r[1] for r in rows if r and not r[0].isdigit()}
        assert trailer["mean"] == "4/3"
        assert trailer["variance"] == "56/27"

    def test_json_format(self, capsys):
        code, out, _ = run(
            capsys, ["qlen", *UNIFORM, "-L", "2", "--format", "json"]
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["mean"]["exact"] == "35/24"
        assert len(doc["probabilities"]) == 3
        assert doc["probabilities"][0]["approx"].startswith("0.333333")


class TestSimulate:
    def test_summary_and_reproducibility(self, capsys):
        argv = [
            "simulate",
            *MARKOV,
            "--customers",
            "50000",
            "--replications",
            "2",
            "--seed",
            "42",
        ]
        code, out, _ = run(capsys, argv)
        assert code == 0
        doc = json.loads(out)
        assert doc["metadata"]["seed"] == 42
        assert len(doc["replications"]) == 2
        assert doc["exact"]["mean"]["exact"] == "2/3"
        assert abs(doc["pooled_mean"] - 2 / 3) < 0.1
        code2, out2, _ = run(capsys, argv)
        assert json.loads(out2) == doc


class TestVerify:
    def test_subset_passes_with_zero_exit(self, capsys):
        code, out, _ = run(
            capsys,
            ["verify", "--checks", "exponential-reference,queue-length-deterministic"],
        )
        assert code == 0
        assert "exponential-reference" in out and "PASS" in out
        assert "2/2 checks passed" in out

    def test_json_report(self, capsys):
        code, out, _ = run(
            capsys,
            ["verify", "--checks", "exponential-reference", "--format", "json"],
        )
        assert code == 0
        doc = json.loads(out)
        assert doc["all_passed"] is True
        assert doc["results"][0]["name"] == "exponential-reference"

    def test_unknown_check_is_an_error(self, capsys):
        code, out, err = run(capsys, ["verify", "--checks", "no-such-check"])
        assert code == 1
        doc = json.loads(err)
        assert doc["code"] == "value-error"
        assert "no-such-check" in doc["message"]


class TestFigures:
    def test_three_csvs_with_sidecars(self, capsys, tmp_path):
        code, out, _ = run(
            capsys, ["figures", "--out", str(tmp_path), "--xmax", "1/2"]
        )
        assert code == 0
        names = [
            "density-uniform-positive.csv",
            "density-uniform-zero.csv",
            "density-deterministic.csv",
        ]
        for name in names:
            assert (tmp_path / name).exists()
            assert (tmp_path / (name + ".meta.json")).exists()
        cases = set()
        for name in names:
            meta = json.loads(
                (tmp_path / (name + ".meta.json")).read_text()
            )
            cases.add(meta["case"])
            assert meta["model"]["arrival_rate"] == "2"
        assert cases == {
            "uniform-positive-lower",
            "uniform-zero-lower",
            "deterministic",
        }


class TestErrors:
    def test_unstable_queue_json_error(self, capsys):
        code, out, err = run(
            capsys, ["moments", "--lambda", "4", "--deterministic", "1/3"]
        )
        assert code == 1
        assert out == ""
        doc = json.loads(err)
        assert doc["code"] == "queue-parameter-error"
        assert doc["context"] == {"command": "moments"}

    def test_bad_rational_rejected(self, capsys):
        code, _, err = run(
            capsys, ["moments", "--lambda", "two", "--deterministic", "1/3"]
        )
        assert code == 1
        assert json.loads(err)["code"] in {
            "queue-parameter-error",
            "value-error",
        }

    def test_quantile_beyond_solved_range(self, capsys):
        code, _, err = run(
            capsys,
            ["quantile", *DETERMINISTIC, "-p", "0.9999999999", "--xmax", "1"],
        )
        assert code == 1
        assert json.loads(err)["code"] == "domain-error"

    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert "mg1exact" in capsys.readouterr().out


class TestEnvironmentPrecision:
    def test_env_default(self, capsys, monkeypatch):
        monkeypatch.setenv("MG1EXACT_PRECISION", "4")
        _, out, _ = run(capsys, ["density", *MARKOV, "--xmax", "1/240"])
        _, _, rows = parse_csv(out)
        mantissa = rows[0][1].replace("0.", "")
        assert len(mantissa) == 4

    def test_flag_overrides_env(self, capsys, monkeypatch):
        monkeypatch.setenv("MG1EXACT_PRECISION", "4")
        _, out, _ = run(
            capsys, ["density", *MARKOV, "--xmax", "1/240", "--precision", "7"]
        )
        _, _, rows = parse_csv(out)
        mantissa = rows[0][1].replace("0.", "")
        assert len(mantissa) == 7
