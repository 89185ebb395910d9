import json
import subprocess
import sys

import numpy as np
import pytest

from qinstrument import (
    DensityOperator,
    SharpObservable,
    instrument_from_total_operation,
    transpose_map,
)
from qinstrument import serialize
from qinstrument.cli import main


@pytest.fixture
def fixtures(tmp_path, luders_z, luders_x):
    """Valid, perturbed-invalid and malformed files plus companions."""
    paths = {}

    paths["instrument"] = tmp_path / "luders_z.json"
    serialize.write_json(paths["instrument"], serialize.instrument_to_json(luders_z))

    paths["instrument_x"] = tmp_path / "luders_x.json"
    serialize.write_json(paths["instrument_x"], serialize.instrument_to_json(luders_x))

    perturbed = serialize.instrument_to_json(luders_z)
    for entry in perturbed["maps"]["0"]["kraus"]:
        entry["data"] = [[1.1 * re, 1.1 * im] for re, im in entry["data"]]
    paths["perturbed"] = tmp_path / "perturbed.json"
    serialize.write_json(paths["perturbed"], perturbed)

    paths["malformed"] = tmp_path / "malformed.json"
    paths["malformed"].write_text("{definitely not json", encoding="utf-8")

    paths["state"] = tmp_path / "zero.json"
    serialize.write_json(
        paths["state"], serialize.state_to_json(DensityOperator.pure([1, 0]))
    )

    transpose_instrument = instrument_from_total_operation(
        SharpObservable.trivial(2), transpose_map(2)
    )
    paths["non_cp"] = tmp_path / "transpose.json"
    serialize.write_json(
        paths["non_cp"], serialize.instrument_to_json(transpose_instrument)
    )
    return paths


def run_cli(args):
    return main([str(a) for a in args])


class TestCheck:
    def test_valid_instrument(self, fixtures, capsys):
        assert run_cli(["check", fixtures["instrument"]]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["pass"] is True
        assert report["payload"]["properties"]["completely_positive"] is True
        assert report["payload"]["properties"]["decomposable"] is True

    def test_perturbed_instrument(self, fixtures, capsys):
        assert run_cli(["check", fixtures["perturbed"]]) == 1
        report = json.loads(capsys.readouterr().out)
        names = {c["name"]: c for c in report["checks"]}
        assert not names["normalized"]["pass"]
        assert names["normalized"]["max_deviation"] > 1e-3

    def test_malformed_file(self, fixtures):
        assert run_cli(["check", fixtures["malformed"]]) == 2

    def test_missing_file(self, tmp_path):
        assert run_cli(["check", str(tmp_path / "absent.json")]) == 2

    def test_valid_non_cp_instrument_still_passes(self, fixtures, capsys):
        # A non-CP instrument is a legal instrument; CP is reported, not policed.
        assert run_cli(["check", fixtures["non_cp"]]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["payload"]["properties"]["completely_positive"] is False

    def test_state_and_observable_files(self, fixtures, tmp_path, z_observable, capsys):
        assert run_cli(["check", fixtures["state"]]) == 0
        capsys.readouterr()
        obs_path = tmp_path / "z.json"
        serialize.write_json(obs_path, serialize.observable_to_json(z_observable))
        assert run_cli(["check", obs_path]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["payload"]["properties"]["nondegenerate"] is True

    def test_model_file(self, fixtures, tmp_path, capsys):
        assert run_cli(["dilate", fixtures["instrument"], "-o", tmp_path / "m.json"]) == 0
        capsys.readouterr()
        assert run_cli(["check", tmp_path / "m.json"]) == 0

    def test_remaining_document_kinds(self, fixtures, tmp_path, capsys, luders_z):
        from qinstrument.rand import random_povm, random_state_family
        from qinstrument.rand import random_nondegenerate_observable
        from qinstrument.schemes import scheme_of_instrument
        import numpy as np

        rng = np.random.default_rng(0)
        e = random_nondegenerate_observable(rng, 2)
        docs = {
            "povm.json": serialize.povm_to_json(random_povm(rng, 2, 3)),
            "family.json": serialize.state_family_to_json(
                random_state_family(rng, 2, e.outcomes)
            ),
            "superop.json": serialize.superoperator_to_json(transpose_map(2)),
            "apparatus.json": serialize.apparatus_to_json(
                scheme_of_instrument(luders_z, "z")
            ),
        }
        for name, obj in docs.items():
            path = tmp_path / name
            serialize.write_json(path, obj)
            assert run_cli(["check", path]) == 0, name
            capsys.readouterr()


class TestPovm:
    def test_extracts_and_writes(self, fixtures, tmp_path, capsys, z_observable):
        out = tmp_path / "povm.json"
        assert run_cli(["povm", fixtures["instrument"], "-o", out]) == 0
        report = json.loads(capsys.readouterr().out)
        assert report["pass"] is True
        povm = serialize.povm_from_json(serialize.read_json(out))
        for x in z_observable.outcomes:
            assert np.max(np.abs(povm.effect(x) - z_observable.projection(x))) < 1e-12


class TestDilate:
    def test_roundtrip_report(self, fixtures, tmp_path, capsys):
        out = tmp_path / "model.json"
        assert run_cli(["dilate", fixtures["instrument"], "-o", out]) == 0
        report = json.loads(capsys.readouterr().out)
        checks = {c["name"]: c for c in report["checks"]}
        assert checks["roundtrip"]["max_deviation"] < 1e-8
        assert checks["coupling_unitary"]["max_deviation"] < 1e-10

    def test_non_cp_instrument_rejected(self, fixtures, capsys):
        assert run_cli(["dilate", fixtures["non_cp"]]) == 1
        err = capsys.readouterr().err
        assert "Choi eigenvalue" in err and "-1" in err

    def test_unwritable_output(self, fixtures, tmp_path):
        target = tmp_path / "no_such_dir" / "model.json"
        assert run_cli(["dilate", fixtures["instrument"], "-o", target]) == 2


class TestSimulateAndJoint:
    def test_simulate_z_then_x(self, fixtures, capsys):
        code = run_cli(
            [
                "simulate",
                fixtures["instrument"],
                fixtures["instrument_x"],
                "--state",
                fixtures["state"],
                "--shots",
                "5000",
                "--seed",
                "7",
            ]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        rows = {tuple(r["outcomes"]): r for r in report["payload"]["results"]}
        assert rows[("0", "0")]["probability"] == pytest.approx(0.5, abs=1e-12)
        assert abs(rows[("0", "0")]["z"]) <= 4
        assert rows[("1", "0")]["count"] == 0

    def test_zero_shots_rejected(self, fixtures):
        code = run_cli(
            [
                "simulate",
                fixtures["instrument"],
                "--state",
                fixtures["state"],
                "--shots",
                "0",
            ]
        )
        assert code == 1

    def test_dimension_mismatch(self, fixtures, tmp_path):
        state3 = tmp_path / "mixed3.json"
        serialize.write_json(
            state3, serialize.state_to_json(DensityOperator.maximally_mixed(3))
        )
        assert run_cli(["joint", fixtures["instrument"], "--state", state3]) == 1

    def test_joint_single_apparatus_matches_born(self, fixtures, capsys, z_observable):
        assert run_cli(["joint", fixtures["instrument"], "--state", fixtures["state"]]) == 0
        report = json.loads(capsys.readouterr().out)
        table = {tuple(r["outcomes"]): r["probability"] for r in report["payload"]["joint"]}
        assert table[("0",)] == pytest.approx(1.0)
        assert table[("1",)] == pytest.approx(0.0)


class TestMlpd:
    def test_affine_verdict(self, fixtures, capsys):
        code = run_cli(
            [
                "mlpd",
                fixtures["instrument"],
                fixtures["instrument_x"],
                "--trials",
                "20",
                "--seed",
                "5",
            ]
        )
        assert code == 0
        report = json.loads(capsys.readouterr().out)
        assert report["payload"]["verdict"] == "affine"
        assert "affine" in report["payload"]["note"]

    def test_zero_trials_rejected(self, fixtures):
        assert run_cli(["mlpd", fixtures["instrument"], "--trials", "0"]) == 1


class TestDeterminism:
    @pytest.mark.parametrize(
        "argv",
        [
            ["check", "{instrument}"],
            ["povm", "{instrument}"],
            ["dilate", "{instrument}"],
            ["joint", "{instrument}", "--state", "{state}"],
            [
                "simulate",
                "{instrument}",
                "{instrument_x}",
                "--state",
                "{state}",
                "--shots",
                "2000",
                "--seed",
                "3",
            ],
            ["mlpd", "{instrument}", "--trials", "10", "--seed", "4"],
        ],
    )
    def test_byte_identical_reports(self, fixtures, argv):
        args = [a.format(**{k: str(v) for k, v in fixtures.items()}) for a in argv]
        runs = [
            subprocess.run(
                [sys.executable, "-m", "qinstrument", *args],
                capture_output=True,
                check=False,
            )
            for _ in range(2)
        ]
        assert runs[0].returncode == runs[1].returncode == 0
        assert runs[0].stdout == runs[1].stdout
