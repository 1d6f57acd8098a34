"""quditsim command-line entry point.

Usage:
    python -m quditsim.main --config configs/rabi_m3.json --out runs/rabi_m3
    python -m quditsim.main --config configs/noise_m5.json --seed 7 --mode lindblad
    python -m quditsim.main --config configs/plan_m5.json --validate

Exit codes: 0 success, 2 invalid config, 3 planner failure, 4 numerical failure.
"""

import argparse
import json
import logging
import sys
from typing import Any

from quditsim.config import settings
from quditsim.core.exceptions import ConfigError, NumericalError, PlannerError, SimulationError
from quditsim.schemas.device import DeviceSpec
from quditsim.schemas.experiment import RunConfig
from quditsim.services import experiments
from quditsim.services.dynamics import TraceResult
from quditsim.services.effective import (
    lambda_from_rabi_fit,
    lambda_from_splitting,
    lambda_perturbative,
)
from quditsim.services.planner import plan_frequencies
from quditsim.services.report_writer import resolve_output_dir, write_run_outputs
from quditsim.services.validation import load_document, parse_config, validate

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PLANNER = 3
EXIT_NUMERICAL = 4


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quditsim",
        description="Simulate qudit-mediated m-body interactions among superconducting qubits",
    )
    parser.add_argument("--config", required=True, help="Path to the JSON run document")
    parser.add_argument("--out", default=None, help="Output directory (overrides the document)")
    parser.add_argument("--seed", type=int, default=None, help="Override the document's seed")
    parser.add_argument("--mode", choices=["pure", "lindblad"], default=None, help="Override the evolution mode")
    parser.add_argument("--validate", action="store_true", help="Check the document and exit without simulating")
    return parser


def _apply_overrides(raw: dict[str, Any], args: argparse.Namespace) -> dict[str, Any]:
    raw = dict(raw)
    if args.seed is not None:
        raw["seed"] = args.seed
    if args.mode is not None:
        raw["mode"] = args.mode
    return raw


def _resolve_device(config: RunConfig) -> tuple[DeviceSpec, dict[str, Any] | None]:
    if config.device is not None:
        return config.device, None
    req = config.planner
    plan = plan_frequencies(
        config.m,
        req.qudit_base,
        req.anharmonicity,
        req.g,
        req.threshold,
        config.seed,
        budget=req.budget,
        window=req.window,
        dressing_limit=req.dressing_limit,
        lambda_target=req.lambda_target,
        min_spacing=req.min_spacing,
    )
    # Planned devices fall back to the default coherence times in lindblad mode.
    lindblad = config.mode == "lindblad"
    t1 = req.t1 if req.t1 is not None or not lindblad else settings.t1_ns
    t2_star = req.t2_star if req.t2_star is not None or not lindblad else settings.t2_star_ns
    device = plan.to_device(
        qudit_levels=req.qudit_levels,
        qubit_levels=req.qubit_levels,
        qubit_anharmonicity=req.qubit_anharmonicity,
        t1=t1,
        t2_star=t2_star,
    )
    return device, plan.to_dict()


def execute(config: RunConfig) -> tuple[dict[str, Any], DeviceSpec, TraceResult | None]:
    """Run the configured experiment; returns (summary, device, trace)."""
    device, plan = _resolve_device(config)
    summary: dict[str, Any] = {"experiment": config.experiment, "m": config.m, "mode": config.mode, "seed": config.seed}
    if plan is not None:
        summary["plan"] = plan
    if config.experiment == "plan":
        return summary, device, None

    if config.experiment == "lambda":
        summary["perturbative"] = lambda_perturbative(device, config.m).to_dict()

    options = config.solver
    point = experiments.prepare_interaction_point(device, config.m, options)
    summary["interaction_point"] = {
        "qubit_offset_ghz": point.offset,
        "lambda_ghz": point.coupling,
        "residual_detuning_ghz": point.doublet.detuning,
        "frame": point.frame,
    }
    grid = experiments.tau_grid_for(point, config.tau_grid)
    trace: TraceResult | None = None

    if config.experiment in ("rabi", "lambda"):
        trace = experiments.rabi_scan(point.device, config.m, grid, config.mode, options, point=point)
        summary["contrast"] = experiments.oscillation_contrast(trace, point.bright[1])
        summary["rabi_fit"] = lambda_from_rabi_fit(trace, point.bright).to_dict()
        if config.experiment == "lambda":
            summary["splitting"] = lambda_from_splitting(point.device, config.m).to_dict()
    elif config.experiment == "noise":
        trace = experiments.noise_scan(
            point.device, config.m, config.noise, grid, config.seed, config.mode, options, point=point
        )
        summary["contrast"] = experiments.oscillation_contrast(trace, point.bright[1], point.nominal_period)
        summary["ensemble_size"] = trace.diagnostics["ensemble_size"]
    elif config.experiment == "interferometer":
        result = experiments.interferometer_scan(
            point.device, config.m, config.interferometer, config.mode, options, point=point
        )
        trace = result.trace
        summary["interferometer"] = result.to_dict()
    elif config.experiment == "ghz":
        estimate = experiments.ghz_estimate(
            point.device, config.m, config.mode, config.ghz.tau, options,
            interferometric=config.ghz.interferometric, point=point,
        )
        summary["ghz"] = estimate.to_dict()

    if trace is not None:
        summary["solver"] = {k: v for k, v in trace.diagnostics.items() if k != "offsets"}
    return summary, point.device, trace


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=settings.log_level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        raw = _apply_overrides(load_document(args.config), args)
        if args.validate:
            report = validate(raw)
            print(json.dumps(report, indent=2, sort_keys=True))
            return EXIT_OK if report["valid"] else EXIT_CONFIG
        config = parse_config(raw)
        summary, device, trace = execute(config)
        out_dir = resolve_output_dir(config, args.out)
        write_run_outputs(out_dir, config, summary, device, trace)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except PlannerError as exc:
        print(f"error: planner failed: {exc}", file=sys.stderr)
        return EXIT_PLANNER
    except NumericalError as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
