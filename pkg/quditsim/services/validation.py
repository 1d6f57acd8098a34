"""Run-document validation: schema checks plus semantic rules, no simulation.

Each rule is a pure function of a parsed RunConfig returning a check result.
validate() and parse_config() parse the raw JSON document first; schema
errors are reported with their field path and stop the semantic rules.
"""

import json
import pathlib
from typing import Any

from pydantic import ValidationError

from quditsim.config import settings
from quditsim.core.exceptions import ConfigError
from quditsim.schemas.experiment import RunConfig
from quditsim.services.planner import DEFAULT_LAMBDA_TARGET


def _check_result(check_id: str, passed: bool, message: str, severity: str = "error") -> dict:
    return {
        "check_id": check_id,
        "severity": severity,
        "passed": passed,
        "message": message,
    }


def check_qudit_levels(config: RunConfig) -> dict:
    """The qudit must keep level m-1."""
    levels = config.device.qudit.levels if config.device else config.planner.qudit_levels
    if levels < config.m:
        return _check_result(
            "QUDIT_LEVELS", False,
            f"device.circuits.0.levels: m={config.m} needs at least {config.m} levels, got {levels}",
        )
    return _check_result("QUDIT_LEVELS", True, f"qudit keeps {levels} levels")


def check_planner_order(config: RunConfig) -> dict:
    if config.planner is None:
        return _check_result("PLANNER_ORDER", True, "explicit device given")
    if config.m not in DEFAULT_LAMBDA_TARGET:
        return _check_result(
            "PLANNER_ORDER", False, f"planner.m: frequency planning supports m in 3..5, got {config.m}"
        )
    return _check_result("PLANNER_ORDER", True, f"planner supports m={config.m}")


def check_planner_anharmonicity(config: RunConfig) -> dict:
    """The spurious-detuning threshold must stay below the qudit anharmonicity."""
    if config.planner is None:
        return _check_result("PLANNER_ANHARMONICITY", True, "explicit device given")
    req = config.planner
    threshold = settings.planner_threshold_ghz if req.threshold is None else req.threshold
    if abs(req.anharmonicity) <= threshold:
        return _check_result(
            "PLANNER_ANHARMONICITY", False,
            f"planner.threshold: {threshold} GHz must be below |anharmonicity| = {abs(req.anharmonicity)} GHz",
        )
    return _check_result("PLANNER_ANHARMONICITY", True, f"threshold {threshold} GHz below |anharmonicity|")


def check_noise_widths(config: RunConfig) -> dict:
    if config.experiment != "noise":
        return _check_result("NOISE_WIDTHS", True, "not a noise run")
    n_circuits = config.m
    try:
        config.noise.widths(n_circuits)
    except ValueError as exc:
        return _check_result("NOISE_WIDTHS", False, f"noise.delta_max: {exc}")
    return _check_result("NOISE_WIDTHS", True, "one width per circuit")


def check_interferometer_grid(config: RunConfig) -> dict:
    spec = config.interferometer
    if config.experiment != "interferometer" or spec.tau_b_stop is None:
        return _check_result("INTERFEROMETER_GRID", True, "grid derived from delta_b")
    periods = spec.tau_b_stop * config.m * spec.delta_b
    if periods < 2.0:
        return _check_result(
            "INTERFEROMETER_GRID", False,
            f"interferometer.tau_b_stop: spans {periods:.2f} periods of m*delta_b, need at least 2",
        )
    return _check_result("INTERFEROMETER_GRID", True, f"grid spans {periods:.1f} periods")


def check_lindblad_decoherence(config: RunConfig) -> dict:
    """A Lindblad run without any T1/T2* is legal but equals the pure run."""
    if config.mode != "lindblad" or config.device is None:
        return _check_result("LINDBLAD_CHANNELS", True, "not applicable")
    has_channel = any(c.t1 is not None or c.t2_star is not None for c in config.device.circuits)
    if not has_channel:
        return _check_result(
            "LINDBLAD_CHANNELS", False,
            "device.circuits: lindblad mode with no t1/t2_star on any circuit", severity="warning",
        )
    return _check_result("LINDBLAD_CHANNELS", True, "decoherence channels present")


ALL_RULES = [
    check_qudit_levels,
    check_planner_order,
    check_planner_anharmonicity,
    check_noise_widths,
    check_interferometer_grid,
    check_lindblad_decoherence,
]


def run_all_checks(config: RunConfig) -> list[dict]:
    return [rule_fn(config) for rule_fn in ALL_RULES]


def _schema_issues(exc: ValidationError) -> list[str]:
    issues = []
    for err in exc.errors():
        path = ".".join(str(part) for part in err["loc"]) or "<root>"
        issues.append(f"{path}: {err['msg']}")
    return issues


def load_document(path: str | pathlib.Path) -> dict[str, Any]:
    p = pathlib.Path(path)
    if not p.is_file():
        raise ConfigError(f"Config file not found: {p}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"Config file {p} is not valid JSON: {exc}") from exc


def parse_config(raw: dict[str, Any]) -> RunConfig:
    """Parse and check a run document; raises ConfigError listing every failure."""
    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as exc:
        issues = _schema_issues(exc)
        raise ConfigError(f"Invalid run document ({len(issues)} issues): " + "; ".join(issues), issues) from exc
    failures = [r["message"] for r in run_all_checks(config) if not r["passed"] and r["severity"] == "error"]
    if failures:
        raise ConfigError("Invalid run document: " + "; ".join(failures), failures)
    return config


def validate(raw: dict[str, Any]) -> dict[str, Any]:
    """Dry run: schema and semantic checks, nothing simulated."""
    try:
        config = RunConfig.model_validate(raw)
    except ValidationError as exc:
        return {"valid": False, "issues": _schema_issues(exc), "checks": []}
    checks = run_all_checks(config)
    issues = [c["message"] for c in checks if not c["passed"] and c["severity"] == "error"]
    return {"valid": not issues, "issues": issues, "checks": checks}
