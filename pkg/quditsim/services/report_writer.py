"""Run outputs: trace CSV, summary JSON, resolved config and device.

Everything written here is a deterministic function of the run inputs:
JSON keys are sorted and no wall-clock data is recorded, so two runs with
the same config and seed produce byte-identical files.
"""

import json
import logging
import pathlib
from typing import Any

import numpy as np

from quditsim.config import settings
from quditsim.schemas.device import DeviceSpec
from quditsim.schemas.experiment import RunConfig
from quditsim.services.dynamics import TraceResult

logger = logging.getLogger(__name__)

TRACE_FILE = "trace.csv"
SUMMARY_FILE = "summary.json"
CONFIG_FILE = "resolved_config.json"
DEVICE_FILE = "device.json"


def resolve_output_dir(config: RunConfig, override: str | None = None) -> pathlib.Path:
    """--out beats the config's output_dir, which beats <output_root>/<experiment>_m<m>."""
    if override:
        return pathlib.Path(override)
    if config.output_dir:
        return pathlib.Path(config.output_dir)
    return pathlib.Path(settings.output_root) / f"{config.experiment}_m{config.m}"


def _jsonable(value: Any) -> Any:
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (tuple, set)):
        return list(value)
    raise TypeError(f"Cannot serialise {type(value).__name__}")


def write_json(path: pathlib.Path, payload: dict[str, Any]) -> pathlib.Path:
    text = json.dumps(payload, sort_keys=True, indent=2, default=_jsonable)
    path.write_text(text + "\n", encoding="utf-8")
    return path


def write_trace_csv(trace: TraceResult, path: pathlib.Path) -> pathlib.Path:
    frame = trace.to_frame()
    frame.to_csv(path, index=False, float_format=f"%.{settings.csv_precision}g")
    return path


def write_run_outputs(
    out_dir: pathlib.Path,
    config: RunConfig,
    summary: dict[str, Any],
    device: DeviceSpec | None = None,
    trace: TraceResult | None = None,
) -> list[pathlib.Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    written = [
        write_json(out_dir / SUMMARY_FILE, summary),
        write_json(out_dir / CONFIG_FILE, config.model_dump(mode="json")),
    ]
    if device is not None:
        written.append(write_json(out_dir / DEVICE_FILE, device.model_dump(mode="json")))
    if trace is not None:
        written.append(write_trace_csv(trace, out_dir / TRACE_FILE))
    logger.info("Wrote %d files to %s", len(written), out_dir)
    return written
