"""Result files: JSON records with an embedded run manifest, CSV curve data."""

from __future__ import annotations

import csv
import json
import platform
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

SCHEMA_VERSION = 1
CURVE_COLUMNS = ("schema_version", "snr_db", "fer", "ci_halfwidth", "frames", "errors",
                 "bit_errors", "mean_iterations", "fer_display")


def now_utc() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def build_manifest(command: str, argv: list[str], config: dict, seed: int | None = None,
                   inputs: list[str] | None = None, outputs: list[str] | None = None,
                   started_at: str | None = None) -> dict:
    from . import __version__

    return {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "argv": list(argv),
        "config": config,
        "code_version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "rng_seed": seed,
        "started_at": started_at or now_utc(),
        "finished_at": now_utc(),
        "inputs": list(inputs or []),
        "outputs": list(outputs or []),
    }


def write_record(path: str | Path, kind: str, result: dict, manifest: dict) -> None:
    record = {"schema_version": SCHEMA_VERSION, "kind": kind, "manifest": manifest, "result": result}
    Path(path).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_record(path: str | Path) -> dict:
    record = json.loads(Path(path).read_text(encoding="utf-8"))
    if record.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported schema version {record.get('schema_version')!r}")
    return record


def load_result(path: str | Path):
    """Parse a record file back into the in-memory type that produced it."""
    from .search import SearchReport
    from .simulate import SimResult
    from .spectrum import DistanceSpectrum

    record = read_record(path)
    kind = record["kind"]
    result = record["result"]
    if kind == "search":
        return SearchReport.from_dict(result)
    if kind == "spectrum":
        return DistanceSpectrum.from_dict(result["spectrum"])
    if kind == "simulate":
        return SimResult.from_dict(result)
    return result


def write_curve_csv(path: str | Path, sim) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(CURVE_COLUMNS)
        for p in sim.points:
            writer.writerow([SCHEMA_VERSION, repr(p.snr_db), repr(p.fer), repr(p.ci_halfwidth), p.frames,
                             p.frame_errors, p.bit_errors, repr(p.mean_iterations), f"{p.fer:.4e}"])


def read_curve_csv(path: str | Path) -> list[dict]:
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            rows.append({
                "schema_version": int(row["schema_version"]),
                "snr_db": float(row["snr_db"]),
                "fer": float(row["fer"]),
                "ci_halfwidth": float(row["ci_halfwidth"]),
                "frames": int(row["frames"]),
                "errors": int(row["errors"]),
                "bit_errors": int(row["bit_errors"]),
                "mean_iterations": float(row["mean_iterations"]),
            })
    return rows
