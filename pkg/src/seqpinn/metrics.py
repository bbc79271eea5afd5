"""Accuracy / efficiency metrics and report emission.

Report JSON schema (``report.json``)::

    {
      "format": "seqpinn-report", "version": 1,
      "runs": [RunRecord.to_dict(), ...],
      "scores": [[FrameScore.to_dict() per frame] per run],
      "aggregate": {"rmse": {"mean", "std"}, "relative_error": {...},
                    "wall_time": {...}, "n_runs": int},
      "errors": [{"frame": int, "error": str}, ...]
    }

``aggregate`` holds mean and population std over runs of each run's
frame-averaged metric. The companion CSV has one row per (run, frame):
``run,frame,rmse,relative_error,wall_time``.
"""

from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from .errors import DegenerateInputError, StructureError

REPORT_FORMAT = "seqpinn-report"


@dataclass
class FrameScore:
    frame: int
    rmse: float
    relative_error: float
    wall_time: float
    rmse_u: float = float("nan")
    rmse_v: float = float("nan")

    def to_dict(self) -> dict:
        return asdict(self)


def _pair(pred, truth):
    pred = np.asarray(pred, dtype=np.float64).ravel()
    truth = np.asarray(truth, dtype=np.float64).ravel()
    if pred.shape != truth.shape:
        raise StructureError(f"length mismatch: {pred.shape} vs {truth.shape}")
    if pred.size == 0:
        raise DegenerateInputError("metrics need at least one value")
    return pred, truth


def rmse(pred, truth) -> float:
    pred, truth = _pair(pred, truth)
    d = pred - truth
    return float(np.sqrt(np.mean(d * d)))


def relative_error(pred, truth) -> float:
    """Mean absolute error normalised by the largest |ground truth| value."""
    pred, truth = _pair(pred, truth)
    scale = np.max(np.abs(truth))
    if scale == 0:
        raise DegenerateInputError("ground truth is identically zero")
    return float(np.mean(np.abs((pred - truth) / scale)))


def efficiency_ratio(delta_time: float, delta_rmse: float) -> float:
    """Seconds of extra training per unit of RMSE improvement; ``inf`` when
    there is no improvement."""
    if delta_rmse <= 0:
        return float("inf")
    return float(delta_time) / float(delta_rmse)


def velocity_scores(pred_uv, true_uv, unit_scale: float = 1.0) -> dict:
    """RMSE on speed and per component, plus relative error on speed.

    ``unit_scale`` converts network units to the reporting unit (e.g. U*100
    for cm/s from non-dimensional velocities); relative error is unitless.
    """
    pred_uv = np.asarray(pred_uv, dtype=np.float64) * unit_scale
    true_uv = np.asarray(true_uv, dtype=np.float64) * unit_scale
    sp = np.hypot(pred_uv[:, 0], pred_uv[:, 1])
    st = np.hypot(true_uv[:, 0], true_uv[:, 1])
    return {
        "rmse": rmse(sp, st),
        "relative_error": relative_error(sp, st),
        "rmse_u": rmse(pred_uv[:, 0], true_uv[:, 0]),
        "rmse_v": rmse(pred_uv[:, 1], true_uv[:, 1]),
    }


def aggregate(values) -> dict:
    v = np.asarray(values, dtype=np.float64)
    return {"mean": float(v.mean()), "std": float(v.std())}


def write_report(records, scores, path, errors=()) -> tuple[Path, Path]:
    """Write ``report.json`` at ``path`` (a directory) plus ``frames.csv``."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    per_run = {k: [float(np.mean([getattr(s, k) for s in run])) for run in scores if run]
               for k in ("rmse", "relative_error")}
    agg = {k: aggregate(v) for k, v in per_run.items() if v}
    agg["wall_time"] = aggregate([r.total_wall_time for r in records]) if records else None
    agg["n_runs"] = len(records)
    report = {
        "format": REPORT_FORMAT,
        "version": 1,
        "runs": [r.to_dict() for r in records],
        "scores": [[s.to_dict() for s in run] for run in scores],
        "aggregate": agg,
        "errors": list(errors),
    }
    jpath = out / "report.json"
    jpath.write_text(json.dumps(report, indent=2, sort_keys=True, allow_nan=True) + "\n")
    cpath = out / "frames.csv"
    with open(cpath, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["run", "frame", "rmse", "relative_error", "wall_time"])
        for i, run in enumerate(scores):
            for s in run:
                w.writerow([i, s.frame, repr(s.rmse), repr(s.relative_error), repr(s.wall_time)])
    return jpath, cpath


def read_report(path) -> dict:
    p = Path(path)
    if p.is_dir():
        p = p / "report.json"
    rep = json.loads(p.read_text())
    if rep.get("format") != REPORT_FORMAT:
        raise StructureError(f"{p} is not a report")
    for key in ("runs", "scores", "aggregate", "errors"):
        if key not in rep:
            raise StructureError(f"report missing {key!r}")
    return rep
