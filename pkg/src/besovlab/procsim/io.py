"""CSV + JSON-sidecar export of sample paths."""

import csv
import json
from pathlib import Path

import numpy as np

from .types import ProcessDescriptor, SamplePath


def write_path_csv(path: SamplePath, csv_path) -> tuple[Path, Path]:
    """Write ``t,x1,...,xd`` rows (17 significant digits) plus a ``.json`` sidecar."""
    csv_path = Path(csv_path)
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t"] + [f"x{l + 1}" for l in range(path.d)])
        for t, row in zip(path.times, path.values):
            w.writerow([format(t, ".17g")] + [format(v, ".17g") for v in row])
    meta_path = csv_path.with_suffix(".json")
    meta = {
        "descriptor": path.descriptor.to_dict(),
        "seed": path.seed,
        "replicate": path.replicate,
        "n_points": path.n_points,
        **path.meta,
    }
    meta_path.write_text(json.dumps(meta, indent=2, sort_keys=True))
    return csv_path, meta_path


def read_path_csv(csv_path) -> SamplePath:
    csv_path = Path(csv_path)
    data = np.loadtxt(csv_path, delimiter=",", skiprows=1, ndmin=2)
    meta = json.loads(csv_path.with_suffix(".json").read_text())
    desc = ProcessDescriptor.from_dict(meta.pop("descriptor"))
    seed = meta.pop("seed")
    rep = meta.pop("replicate", 0)
    meta.pop("n_points", None)
    return SamplePath(data[:, 0], data[:, 1:], seed, desc, replicate=rep, meta=meta)
