"""Artifact writers: plot-ready CSV, events JSONL, canonical JSON.

All writers are deterministic: floats are rendered with repr (shortest
round-trip form), JSON keys are sorted, and nothing time- or
environment-dependent enters the byte stream. Non-finite numbers become
JSON null; CSV keeps them as 'nan'/'inf' since CSV has no null.
"""

from __future__ import annotations

import dataclasses
import json
import os

import numpy as np

from .curve import build_geometry
from .diagnostics import CSV_HEADER

# theta_fn repeats the first frame component: consumers that only care
# about graphicality can read it without knowing the frame convention.
SNAPSHOT_HEADER = "i,theta,z,ds,a,b,theta_fn,kappa"


def json_safe(obj):
    """Recursively convert to plain JSON types; non-finite numbers -> None."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, np.ndarray):
        return [json_safe(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if hasattr(obj, "to_json_dict"):
        return json_safe(obj.to_json_dict())
    if dataclasses.is_dataclass(obj):
        return json_safe(dataclasses.asdict(obj))
    raise TypeError(f"cannot serialize {type(obj).__name__} to JSON")


def summary_json_text(d):
    return json.dumps(json_safe(d), sort_keys=True, indent=2, allow_nan=False) + "\n"


def events_jsonl_text(events):
    lines = [
        json.dumps(json_safe(ev), sort_keys=True, separators=(",", ":"))
        for ev in events
    ]
    return "\n".join(lines) + ("\n" if lines else "")


def diagnostics_csv_text(records):
    lines = [CSV_HEADER]
    lines.extend(rec.csv_row() for rec in records)
    return "\n".join(lines) + "\n"


def snapshot_csv_text(curve, w):
    g = build_geometry(curve, w)
    lines = [SNAPSHOT_HEADER]
    for i in range(curve.n):
        cells = (
            str(i),
            repr(float(curve.theta[i])),
            repr(float(curve.z[i])),
            repr(float(g.ds[i])),
            repr(float(g.a[i])),
            repr(float(g.b[i])),
            repr(float(g.a[i])),
            repr(float(g.kappa[i])),
        )
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def write_text(path, text):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_run_artifacts(out_dir, cfg_text, traj, w, summary_dict, formats, snapshot_every):
    """Write one run's artifact set under out_dir; returns written paths."""
    written = []

    def put(rel, text):
        path = os.path.join(out_dir, rel)
        write_text(path, text)
        written.append(path)

    put("scenario.cfg", cfg_text)
    if "csv" in formats:
        put("diagnostics.csv", diagnostics_csv_text(traj.records))
        idxs = _snapshot_indices(len(traj.sample_curves), snapshot_every)
        for k in idxs:
            put(
                os.path.join("snapshots", f"sample_{k:05d}.csv"),
                snapshot_csv_text(traj.sample_curves[k], w),
            )
    if "jsonl" in formats:
        put("events.jsonl", events_jsonl_text(traj.events))
    if "json" in formats:
        put("summary.json", summary_json_text(summary_dict))
    return written


def _snapshot_indices(count, every):
    if count == 0:
        return []
    if every and every > 0:
        idxs = list(range(0, count, every))
    else:
        idxs = [0]
    if count - 1 not in idxs:
        idxs.append(count - 1)
    return idxs


__all__ = [
    "SNAPSHOT_HEADER",
    "json_safe",
    "summary_json_text",
    "events_jsonl_text",
    "diagnostics_csv_text",
    "snapshot_csv_text",
    "write_text",
    "write_run_artifacts",
]
