"""Tests for the command-line entry point, validation report and run outputs."""

import json
import pathlib

import numpy as np
import pandas as pd
import pytest

from quditsim.config import settings
from quditsim.core.operators import expectation, total_excitation
from quditsim.main import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, EXIT_PLANNER, _resolve_device, main
from quditsim.schemas.experiment import RunConfig
from quditsim.services.dynamics import Segment, run_schedule
from quditsim.services.experiments import prepare_interaction_point
from quditsim.services.hamiltonian import device_basis
from quditsim.services.report_writer import (
    CONFIG_FILE,
    DEVICE_FILE,
    SUMMARY_FILE,
    TRACE_FILE,
    resolve_output_dir,
)
from quditsim.services.validation import run_all_checks, validate

ROOT = pathlib.Path(__file__).resolve().parent.parent

JC_DEVICE = {
    "circuits": [
        {"levels": 2, "base_freq": 5.0, "anharmonicity": 0.0},
        {"levels": 2, "base_freq": 5.0},
    ],
    "couplings": [0.01],
}


@pytest.fixture
def write_config(tmp_path):
    """Write a run document to tmp_path and return its path."""

    def _write(doc: dict, name: str = "run.json") -> str:
        path = tmp_path / name
        path.write_text(json.dumps(doc), encoding="utf-8")
        return str(path)

    return _write


def _lambda_doc(**overrides) -> dict:
    doc = {
        "experiment": "lambda",
        "m": 2,
        "device": JC_DEVICE,
        "tau_grid": {"start": 0.0, "stop": 200.0, "points": 401},
    }
    doc.update(overrides)
    return doc


class TestValidateFlag:
    """--validate checks the document without simulating."""

    def test_valid_document(self, write_config, capsys):
        code = main(["--config", write_config(_lambda_doc()), "--validate"])
        report = json.loads(capsys.readouterr().out)
        assert code == EXIT_OK
        assert report["valid"] is True
        assert {c["check_id"] for c in report["checks"]} >= {"QUDIT_LEVELS", "PLANNER_ORDER"}

    def test_coherence_bound_names_circuit(self, write_config, capsys):
        device = json.loads(json.dumps(JC_DEVICE))
        device["circuits"][0].update({"t1": 100.0, "t2_star": 300.0})
        code = main(["--config", write_config(_lambda_doc(device=device)), "--validate"])
        report = json.loads(capsys.readouterr().out)
        assert code == EXIT_CONFIG
        assert any(
            issue.startswith("device.circuits.0") and "must not exceed 2*t1" in issue
            for issue in report["issues"]
        )

    def test_semantic_rule_failure(self):
        doc = {
            "experiment": "interferometer",
            "m": 2,
            "device": JC_DEVICE,
            "interferometer": {"delta_b": 0.005, "tau_b_stop": 100.0},
        }
        report = validate(doc)
        assert report["valid"] is False
        assert any(i.startswith("interferometer.tau_b_stop") for i in report["issues"])

    def test_threshold_above_anharmonicity_fails_validation(self):
        doc = {"experiment": "plan", "m": 3, "planner": {"anharmonicity": -0.04}}
        report = validate(doc)
        assert report["valid"] is False
        assert any(i.startswith("planner.threshold") for i in report["issues"])

    def test_lindblad_without_channels_is_a_warning(self):
        config = RunConfig.model_validate(_lambda_doc(mode="lindblad"))
        checks = {c["check_id"]: c for c in run_all_checks(config)}
        assert checks["LINDBLAD_CHANNELS"]["passed"] is False
        assert checks["LINDBLAD_CHANNELS"]["severity"] == "warning"
        assert validate(_lambda_doc(mode="lindblad"))["valid"] is True


class TestExitCodes:
    """Failures map to distinct exit codes with one stderr line."""

    def test_missing_config(self, tmp_path, capsys):
        missing = tmp_path / "nope.json"
        assert main(["--config", str(missing)]) == EXIT_CONFIG
        err = capsys.readouterr().err
        assert str(missing) in err
        assert err.count("\n") == 1

    def test_invalid_json(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{not json", encoding="utf-8")
        assert main(["--config", str(path)]) == EXIT_CONFIG

    def test_planner_failure(self, write_config, tmp_path, capsys):
        doc = {"experiment": "plan", "m": 3, "planner": {"threshold": 0.2, "window": 0.1, "budget": 200}}
        assert main(["--config", write_config(doc), "--out", str(tmp_path / "out")]) == EXIT_PLANNER
        assert "planner failed" in capsys.readouterr().err

    def test_numerical_failure(self, write_config, tmp_path, capsys):
        doc = _lambda_doc(experiment="rabi", tau_grid={"start": 0.0, "stop": 20.0, "points": 41})
        assert main(["--config", write_config(doc), "--out", str(tmp_path / "out")]) == EXIT_NUMERICAL
        assert "numerical failure" in capsys.readouterr().err


class TestRunOutputs:
    """Files written by a successful run."""

    def test_lambda_run(self, write_config, tmp_path):
        out = tmp_path / "lambda"
        assert main(["--config", write_config(_lambda_doc()), "--out", str(out)]) == EXIT_OK
        summary = json.loads((out / SUMMARY_FILE).read_text(encoding="utf-8"))
        assert summary["splitting"]["coupling"] == pytest.approx(0.01, rel=1e-9)
        assert summary["rabi_fit"]["coupling"] == pytest.approx(0.01, rel=1e-4)
        assert summary["perturbative"]["coupling"] == pytest.approx(0.01)
        trace = pd.read_csv(out / TRACE_FILE)
        assert list(trace.columns) == ["time_ns", "01", "10"]
        assert len(trace) == 401
        assert (out / DEVICE_FILE).is_file()

    def test_reruns_are_byte_identical(self, write_config, tmp_path):
        config = write_config(_lambda_doc())
        first, second = tmp_path / "a", tmp_path / "b"
        assert main(["--config", config, "--out", str(first)]) == EXIT_OK
        assert main(["--config", config, "--out", str(second)]) == EXIT_OK
        for name in (SUMMARY_FILE, CONFIG_FILE, DEVICE_FILE, TRACE_FILE):
            assert (first / name).read_bytes() == (second / name).read_bytes(), name

    def test_seed_and_mode_overrides(self, write_config, tmp_path):
        out = tmp_path / "plan"
        doc = {"experiment": "plan", "m": 3, "planner": {"budget": 500}}
        assert main(["--config", write_config(doc), "--out", str(out), "--seed", "5", "--mode", "lindblad"]) == EXIT_OK
        resolved = json.loads((out / CONFIG_FILE).read_text(encoding="utf-8"))
        assert resolved["seed"] == 5
        assert resolved["mode"] == "lindblad"
        device = json.loads((out / DEVICE_FILE).read_text(encoding="utf-8"))
        assert device["circuits"][0]["t1"] == 30000.0
        assert device["circuits"][1]["t2_star"] == 3000.0

    def test_plan_device_is_resonant(self, tmp_path):
        out = tmp_path / "plan_m5"
        assert main(["--config", str(ROOT / "configs" / "plan_m5.json"), "--out", str(out)]) == EXIT_OK
        device = json.loads((out / DEVICE_FILE).read_text(encoding="utf-8"))
        qudit, qubits = device["circuits"][0], device["circuits"][1:]
        lines = sum(qudit["base_freq"] + k * qudit["anharmonicity"] for k in range(4))
        assert sum(q["base_freq"] for q in qubits) == pytest.approx(lines, abs=1e-6)
        assert not (out / TRACE_FILE).exists()

    def test_rabi_m3_example(self, tmp_path):
        out = tmp_path / "rabi_m3"
        assert main(["--config", str(ROOT / "configs" / "rabi_m3.json"), "--out", str(out)]) == EXIT_OK
        summary = json.loads((out / SUMMARY_FILE).read_text(encoding="utf-8"))
        lam = summary["interaction_point"]["lambda_ghz"]
        assert summary["plan"]["lambda_target"] == 0.00225
        assert 0.00225 / 2 <= lam <= 0.00225 * 2
        assert summary["rabi_fit"]["coupling"] == pytest.approx(lam, rel=0.05)
        assert summary["contrast"] > 0.95
        trace = pd.read_csv(out / TRACE_FILE)
        assert list(trace.columns) == ["time_ns", "011", "200"]
        assert len(trace) == 301

    def test_output_dir_precedence(self, monkeypatch):
        config = RunConfig.model_validate(_lambda_doc())
        assert resolve_output_dir(config, "x") == pathlib.Path("x")
        assert resolve_output_dir(config.model_copy(update={"output_dir": "y"})) == pathlib.Path("y")
        monkeypatch.setattr(settings, "output_root", "root")
        assert resolve_output_dir(config) == pathlib.Path("root") / "lambda_m2"


RUN_CONFIGS = sorted(
    p for p in (ROOT / "configs").glob("*.json")
    if "experiment" in json.loads(p.read_text(encoding="utf-8"))
)


@pytest.mark.slow
class TestShippedConfigInvariants:
    """Solver invariants on the device of every shipped run document."""

    @pytest.mark.parametrize("path", RUN_CONFIGS, ids=lambda p: p.stem)
    def test_solver_invariants(self, path):
        config = RunConfig.model_validate_json(path.read_text(encoding="utf-8"))
        device, _ = _resolve_device(config)
        point = prepare_interaction_point(device, config.m, config.solver)
        initial = point.initial_state()
        dt = config.solver.dt or settings.dt_ns
        segments = [Segment(20.0)]
        coarse = run_schedule(point.device, segments, initial, config.mode, dt, readout=point.readout)
        fine = run_schedule(point.device, segments, initial, config.mode, dt / 2, readout=point.readout)
        assert np.max(np.abs(coarse.populations - fine.populations)) <= 1e-6

        final = coarse.final_state
        if config.mode == "pure":
            n = total_excitation(device_basis(point.device))
            assert coarse.diagnostics["max_norm_drift"] <= 1e-8
            assert expectation(final, n).real == pytest.approx(expectation(initial, n).real, abs=1e-8)
        else:
            assert coarse.diagnostics["max_trace_drift"] <= 1e-6
            assert coarse.diagnostics["min_eigenvalue"] >= -1e-6
            assert np.max(np.abs(final.data - final.data.conj().T)) <= 1e-9
