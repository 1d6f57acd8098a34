"""Export the pydantic-generated JSON schemas for the device and run documents.

The hand-maintained files in configs/schema/ are the documented contract;
this script writes the machine-generated versions next to them so field
drift is easy to diff.

Usage:
    python scripts/export_schema.py
    python scripts/export_schema.py --out /tmp/schemas
"""

import argparse
import json
import pathlib

from quditsim.schemas.device import DeviceSpec
from quditsim.schemas.experiment import RunConfig

DEFAULT_OUT = pathlib.Path(__file__).resolve().parent.parent / "configs" / "schema" / "generated"

MODELS = {
    "device.schema.json": DeviceSpec,
    "run_config.schema.json": RunConfig,
}


def main() -> None:
    parser = argparse.ArgumentParser(description="Export pydantic JSON schemas")
    parser.add_argument("--out", default=str(DEFAULT_OUT), help="Destination directory")
    args = parser.parse_args()

    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for filename, model in MODELS.items():
        path = out / filename
        path.write_text(json.dumps(model.model_json_schema(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
        print(f"Wrote {path}")


if __name__ == "__main__":
    main()
