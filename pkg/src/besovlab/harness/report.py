"""Write a :class:`ReportBundle` to disk as CSV, JSON and SVG."""

from __future__ import annotations

import csv
import hashlib
import json
import re
from pathlib import Path

import numpy as np

from ..errors import ValidationError
from .runner import ReportBundle
from .svg import line_chart

PROFILE_COLUMNS = ["replicate", "profile", "j", "A_j", "S_j"]


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _safe(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", name)


def _log2_statistic(prof, nu) -> list[tuple[float, float]]:
    stat = prof.statistic(nu)
    with np.errstate(divide="ignore"):
        y = np.log2(stat)
    return [(float(j), float(v)) for j, v in zip(prof.levels, y)]


def emit_report(bundle: ReportBundle, out_dir) -> list[dict]:
    """Write ``profiles.csv``, ``verdicts.json``, ``aggregate.json`` and one SVG per statistic.

    Returns the manifest: one ``{"path", "sha256", "bytes"}`` entry per file.
    ``S_j`` is empty for path profiles.
    """
    if not bundle.records:
        raise ValidationError("cannot emit a report for an empty bundle")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []

    p = out / "profiles.csv"
    with p.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(PROFILE_COLUMNS)
        for rec in bundle.records:
            for name, prof in rec.profiles.items():
                for row in prof.rows():
                    s = format(row["S_j"], ".17g") if "S_j" in row else ""
                    w.writerow([rec.replicate, name, row["j"], format(row["A_j"], ".17g"), s])
    written.append(p)

    p = out / "verdicts.json"
    _write_json(p, {"provenance": bundle.provenance, "records": [r.to_dict() for r in bundle.records]})
    written.append(p)

    p = out / "aggregate.json"
    _write_json(p, {"provenance": bundle.provenance, "aggregates": bundle.aggregates, "lnd": bundle.lnd})
    written.append(p)

    for name in bundle.statistic_names:
        nu = bundle.records[0].verdicts[name].nu
        series = [_log2_statistic(rec.profiles[name], nu) for rec in bundle.records]
        stats = np.array([rec.profiles[name].statistic(nu) for rec in bundle.records])
        with np.errstate(divide="ignore"):
            mean_curve = np.log2(stats.mean(axis=0))
        mean = [(float(j), float(v)) for j, v in enumerate(mean_curve)]
        svg = line_chart(series, mean, f"{name} (nu = {nu:g})", "level j", "log2 statistic")
        p = out / f"{_safe(name)}.svg"
        p.write_text(svg)
        written.append(p)

    return [{"path": str(f), "sha256": _sha256(f), "bytes": f.stat().st_size} for f in written]


def read_profiles_csv(path) -> dict[tuple[int, str], dict[str, np.ndarray]]:
    """Parse ``profiles.csv`` back into ``{(replicate, profile): {"A_j": ..., "S_j": ...}}``."""
    rows: dict = {}
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != PROFILE_COLUMNS:
            raise ValidationError(f"unexpected columns {reader.fieldnames}")
        for row in reader:
            key = (int(row["replicate"]), row["profile"])
            entry = rows.setdefault(key, {"j": [], "A_j": [], "S_j": []})
            entry["j"].append(int(row["j"]))
            entry["A_j"].append(float(row["A_j"]))
            entry["S_j"].append(float(row["S_j"]) if row["S_j"] else np.nan)
    return {k: {c: np.array(v) for c, v in e.items()} for k, e in rows.items()}
