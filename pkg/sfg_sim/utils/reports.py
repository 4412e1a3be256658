import csv
import json
from pathlib import Path
from typing import Any, List, Union

from pydantic import BaseModel

from sfg_sim.models.schemas import CheckResult, SweepCurve


def to_json(payload: Any) -> str:
    """Deterministic JSON (sorted keys, fixed separators) for reports"""
    if isinstance(payload, BaseModel):
        payload = payload.model_dump(mode="json")
    return json.dumps(payload, sort_keys=True, indent=2, allow_nan=True)


def write_json(payload: Any, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(to_json(payload) + "\n")
    return path


def write_summary_json(curve: SweepCurve, checks: List[CheckResult], path: Union[str, Path]) -> Path:
    """Sweep summary: fitted slopes and alpha plus the pass/fail checks made on them"""
    summary = curve.model_dump(mode="json", exclude={"points"})
    summary["num_points"] = len(curve.points)
    summary["checks"] = [check.model_dump(mode="json") for check in checks]
    summary["passed"] = all(check.passed for check in checks)
    return write_json(summary, path)


def write_curve_csv(curve: SweepCurve, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(("drive", "mean", "std"))
        for point in curve.points:
            writer.writerow((repr(point.drive), repr(point.mean), repr(point.std)))
    return path
