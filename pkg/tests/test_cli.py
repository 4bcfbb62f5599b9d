"""Command-line interface: exit codes, output files, and determinism."""

import json
import math

import numpy as np
import pytest

from ratefn.cli import parse_grid_spec, run
from ratefn.errors import ValidationError
from ratefn.serialize import load_cumulant_curve_csv

LN2 = math.log(2.0)


@pytest.fixture
def constant_csv(tmp_path):
    path = tmp_path / "constant.csv"
    path.write_text("sample_id,loss\ns1,0.7\ns2,0.7\ns3,0.7\n")
    return path


@pytest.fixture
def two_point_csv(tmp_path):
    path = tmp_path / "two_point.csv"
    path.write_text(f"sample_id,loss\ns1,0.0\ns2,{LN2!r}\n")
    return path


@pytest.fixture
def grouped_csv(tmp_path):
    path = tmp_path / "grouped.csv"
    path.write_text(
        "sample_id,loss,group_id\n"
        f"s1,0.0,g1\ns2,{LN2!r},g1\ns3,{LN2!r},g2\ns4,{LN2!r},g2\n"
    )
    return path


@pytest.fixture
def bern_json(tmp_path):
    path = tmp_path / "bern.json"
    path.write_text('{"values": [0.0, 1.0], "probs": [0.5, 0.5]}')
    return path


class TestGridSpec:
    def test_log(self):
        grid = parse_grid_spec("1e-3:1e3:64:log")
        assert len(grid) == 64 and grid.spacing == "log"

    def test_linear(self):
        grid = parse_grid_spec("0.5:1.5:3:linear")
        assert grid.values == (0.5, 1.0, 1.5)

    def test_rejects_malformed(self):
        for bad in ("1:2:3", "a:b:c:log", "1:2:3:cubic"):
            with pytest.raises(ValidationError):
                parse_grid_spec(bad)


class TestRateCommand:
    def test_saturated_json_to_stdout(self, constant_csv, capsys):
        assert run(["rate", "--input", str(constant_csv), "--a", "0.2"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["value"] == "inf"
        assert payload["saturated"] is True
        assert payload["schema_version"] == "1"

    def test_output_file_and_summary(self, two_point_csv, tmp_path, capsys):
        out = tmp_path / "rate.json"
        assert run(["rate", "--input", str(two_point_csv), "--a", "0.2", "--output", str(out)]) == 0
        assert "rate:" in capsys.readouterr().out
        payload = json.loads(out.read_text())
        assert payload["kind"] == "rate"
        assert not payload["saturated"]

    def test_curve_csv_with_inf_literal(self, two_point_csv, tmp_path):
        out = tmp_path / "curve.csv"
        assert (
            run(
                [
                    "rate",
                    "--input",
                    str(two_point_csv),
                    "--a-grid",
                    "0.1:0.5:5:linear",
                    "--format",
                    "csv",
                    "--output",
                    str(out),
                ]
            )
            == 0
        )
        text = out.read_text()
        assert text.startswith("# columns: a,value,lambda_star,saturated")
        assert ",inf," in text

    def test_invalid_a_is_exit_2(self, two_point_csv, capsys):
        assert run(["rate", "--input", str(two_point_csv), "--a", "-0.5"]) == 2
        assert "InvalidA" in capsys.readouterr().err

    def test_missing_file_is_exit_2(self, tmp_path, capsys):
        assert run(["rate", "--input", str(tmp_path / "nope.csv"), "--a", "0.1"]) == 2
        assert "no such file" in capsys.readouterr().err


class TestCumulantCommand:
    def test_csv_round_trip(self, two_point_csv, tmp_path):
        out = tmp_path / "curve.csv"
        assert (
            run(
                [
                    "cumulant",
                    "--input",
                    str(two_point_csv),
                    "--grid",
                    "0.5:1.5:3:linear",
                    "--format",
                    "csv",
                    "--output",
                    str(out),
                ]
            )
            == 0
        )
        lams, js, djs = load_cumulant_curve_csv(out)
        assert lams == [0.5, 1.0, 1.5]
        from ratefn import estimate_cumulant, from_losses

        ds = from_losses([0.0, LN2])
        assert js == [estimate_cumulant(ds, lam) for lam in lams]  # bitwise round trip

    def test_json_has_schema_version(self, two_point_csv, capsys):
        assert run(["cumulant", "--input", str(two_point_csv), "--grid", "0.5:1.5:3:linear"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["schema_version"] == "1"
        assert payload["kind"] == "cumulant_curve"


class TestBoundCommand:
    def test_budget_value(self, two_point_csv, capsys):
        assert (
            run(
                [
                    "bound",
                    "--input",
                    str(two_point_csv),
                    "--p",
                    "10",
                    "--n",
                    "1000",
                    "--delta",
                    "0.05",
                ]
            )
            == 0
        )
        payload = json.loads(capsys.readouterr().out)
        assert abs(payload["s"] - 0.036889) < 1e-6
        assert payload["upper_bound"] <= 2 * payload["empirical_loss"]

    def test_bad_delta_is_exit_2(self, two_point_csv, capsys):
        assert run(["bound", "--input", str(two_point_csv), "--p", "1", "--n", "10", "--delta", "1.5"]) == 2
        assert "InvalidMeta" in capsys.readouterr().err


class TestInverseRateCommands:
    def test_inverse_rate(self, two_point_csv, capsys):
        assert run(["inverse-rate", "--input", str(two_point_csv), "--s", "0.05"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["value"] <= LN2 / 2
        assert payload["b_max"] == LN2

    def test_grid_inverse_rate_dominates(self, two_point_csv, capsys):
        assert run(["grid-inverse-rate", "--input", str(two_point_csv), "--s", "0.05"]) == 0
        restricted = json.loads(capsys.readouterr().out)
        assert run(["inverse-rate", "--input", str(two_point_csv), "--s", "0.05"]) == 0
        unrestricted = json.loads(capsys.readouterr().out)
        assert restricted["value"] >= unrestricted["value"] - 1e-12


class TestAugmentAndDaCheck:
    def test_augment_writes_reduced_dataset(self, grouped_csv, tmp_path, capsys):
        out = tmp_path / "reduced.csv"
        assert run(["augment", "--input", str(grouped_csv), "--output", str(out)]) == 0
        assert "reduced to 2 groups" in capsys.readouterr().out
        text = out.read_text()
        assert text.splitlines()[0] == "sample_id,loss"
        assert len(text.splitlines()) == 3

    def test_da_check_gaps_nonnegative(self, grouped_csv, capsys):
        assert run(["da-check", "--input", str(grouped_csv), "--grid", "0.5:2.0:4:linear"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert min(payload["gaps"]) >= -1e-12
        assert payload["equal_group_sizes"] is True


class TestCompareCommands:
    def test_compare(self, constant_csv, two_point_csv, capsys):
        assert run(["compare", "--input-a", str(constant_csv), "--input-b", str(two_point_csv)]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["verdict"] == "smoother"

    def test_interpolator_check(self, two_point_csv, capsys):
        assert (
            run(
                [
                    "interpolator-check",
                    "--input-a",
                    str(two_point_csv),
                    "--input-b",
                    str(two_point_csv),
                    "--train-loss-a",
                    "0.0",
                    "--p",
                    "4",
                    "--n",
                    "100",
                    "--delta",
                    "0.1",
                    "--epsilon",
                    "0.05",
                ]
            )
            == 0
        )
        payload = json.loads(capsys.readouterr().out)
        assert payload["premise_ok"] is True
        assert payload["holdout_consistent"] is True


class TestTaylorCommands:
    def test_taylor_j(self, two_point_csv, capsys):
        assert run(["taylor", "--input", str(two_point_csv), "--mode", "j", "--x", "0.01"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert abs(payload["approx"] - 6.0055e-6) < 1e-9

    def test_taylor_covariance(self, tmp_path, capsys):
        path = tmp_path / "grads.jsonl"
        path.write_text(
            '{"sample_id": "a", "loss": 0.5, "grad_theta": [1.0]}\n'
            '{"sample_id": "b", "loss": 0.5, "grad_theta": [-1.0]}\n'
        )
        assert (
            run(
                [
                    "taylor",
                    "--input",
                    str(path),
                    "--mode",
                    "covariance",
                    "--x",
                    "0.5",
                    "--theta-delta",
                    "2.0",
                    "--s-budget",
                    "0.02",
                ]
            )
            == 0
        )
        payload = json.loads(capsys.readouterr().out)
        assert payload["quadratic_form"] == 4.0

    def test_grad_bound(self, tmp_path, capsys):
        path = tmp_path / "norms.csv"
        path.write_text("sample_id,loss,group_id,grad_norm_sq\ns1,0.5,,4.0\ns2,0.5,,4.0\n")
        assert run(["grad-bound", "--input", str(path), "--m-const", "1.0", "--s", "0.01"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert abs(payload["bound_iinv"] - 0.2) < 1e-12


class TestOracleCommands:
    def test_oracle_exact(self, bern_json, capsys):
        assert run(["oracle-exact", "--dist", str(bern_json), "--a", "0.2", "--lambda", "1.0"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert abs(payload["exact_rate"] - 0.0822829) < 1e-6

    def test_simulate_cramer_deterministic_bytes(self, bern_json, tmp_path):
        out_a = tmp_path / "a.json"
        out_b = tmp_path / "b.json"
        base = [
            "simulate-cramer",
            "--dist",
            str(bern_json),
            "--n",
            "20",
            "--a",
            "0.2",
            "--trials",
            "5000",
            "--seed",
            "7",
        ]
        assert run(base + ["--output", str(out_a)]) == 0
        assert run(base + ["--output", str(out_b)]) == 0
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_bias_probe(self, bern_json, capsys):
        assert (
            run(
                [
                    "bias-probe",
                    "--dist",
                    str(bern_json),
                    "--n",
                    "40",
                    "--lambda",
                    "2.0",
                    "--replicates",
                    "200",
                    "--seed",
                    "3",
                ]
            )
            == 0
        )
        payload = json.loads(capsys.readouterr().out)
        assert payload["underestimates"] is True

    def test_invalid_a_domain_is_exit_2(self, bern_json, capsys):
        code = run(
            ["simulate-cramer", "--dist", str(bern_json), "--n", "10", "--a", "0.7", "--trials", "10", "--seed", "1"]
        )
        assert code == 2
        assert "InvalidA" in capsys.readouterr().err


class TestConfigOverride:
    def test_config_overrides_flags(self, two_point_csv, tmp_path, capsys):
        config = tmp_path / "config.json"
        config.write_text('{"a": [0.3]}')
        assert run(
            ["rate", "--input", str(two_point_csv), "--a", "0.1", "--config", str(config)]
        ) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["a"] == 0.3

    def test_unknown_subcommand_exit_2(self, capsys):
        assert run(["no-such-command"]) == 2
