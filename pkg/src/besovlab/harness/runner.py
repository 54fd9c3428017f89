"""Run an experiment: simulate replicates, compute profiles and verdicts, aggregate."""

from __future__ import annotations

import os
import platform
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .. import __version__
from ..besov import (
    DyadicProfile, RegularityVerdict, besov_pq_norm, classify_regularity, dyadic_profile,
    seminorm_from_profile, uniform_localtime_statistic,
)
from ..errors import BesovlabError, ValidationError
from ..lndcheck import LndSampleSpec, alphalnd_constant
from ..loctime import ESTIMATOR_VERSION, local_time_field
from ..procsim import simulate_array
from .config import ExperimentConfig

THREADS_ENV = "BESOVLAB_THREADS"


def max_threads() -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return os.cpu_count() or 1
    try:
        n = int(raw)
    except ValueError:
        raise ValidationError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValidationError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


@dataclass
class ReplicateRecord:
    replicate: int
    profiles: dict[str, DyadicProfile]
    verdicts: dict[str, RegularityVerdict]
    norms: dict[str, dict[str, float]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "replicate": self.replicate,
            "verdicts": {k: v.to_dict() for k, v in self.verdicts.items()},
            "norms": self.norms,
        }


@dataclass
class ReportBundle:
    config: ExperimentConfig | None
    records: list[ReplicateRecord]
    aggregates: dict[str, dict[str, Any]]
    provenance: dict[str, Any]
    lnd: dict | None = None
    timing: dict[str, float] = field(default_factory=dict)

    @property
    def statistic_names(self) -> list[str]:
        return list(self.records[0].profiles) if self.records else []

    def canonical(self) -> dict:
        """JSON-ready content without wall-clock data; equal for equal runs."""
        return {
            "provenance": self.provenance,
            "records": [r.to_dict() for r in self.records],
            "profiles": {
                name: [r.profiles[name].A.tolist() for r in self.records] for name in self.statistic_names
            },
            "aggregates": self.aggregates,
            "lnd": self.lnd,
        }


def _summary(values) -> dict[str, float]:
    x = np.asarray(values, dtype=float)
    n = x.size
    stderr = float(x.std(ddof=1) / np.sqrt(n)) if n > 1 else 0.0
    return {"mean": float(x.mean()), "stderr": stderr, "min": float(x.min()), "max": float(x.max()), "count": n}


def aggregate(records: list[ReplicateRecord]) -> dict[str, dict[str, Any]]:
    """Per-statistic summaries; a reduction over replicates sorted by index."""
    records = sorted(records, key=lambda r: r.replicate)
    out = {}
    for name in (records[0].verdicts if records else {}):
        vs = [r.verdicts[name] for r in records]
        entry = {
            "count": len(vs),
            "nu": vs[0].nu,
            "nu_hat": _summary([v.nu_hat for v in vs]),
            "slope": _summary([v.slope for v in vs]),
            "n_bounded": sum(v.bounded for v in vs),
            "n_blows_up": sum(v.blows_up for v in vs),
            "n_little_besov": sum(v.little_besov for v in vs),
        }
        for key in records[0].norms.get(name, {}):
            entry[key] = _summary([r.norms[name][key] for r in records])
        out[name] = entry
    return out


def _process_replicate(config: ExperimentConfig, r: int, values: np.ndarray) -> ReplicateRecord:
    profiles, verdicts, norms = {}, {}, {}
    for q in config.besov:
        prof = dyadic_profile(values, q.p, config.J_max)
        profiles[q.name] = prof
        verdicts[q.name] = classify_regularity(prof, q.nu, config.tau)
        norms[q.name] = {"seminorm": seminorm_from_profile(prof, q.nu)}
        if q.q is not None:
            norms[q.name]["pq_norm"] = besov_pq_norm(prof, q.nu, q.q).value
    lt = config.localtime
    if lt is not None:
        fld = local_time_field(values, lt.bin_width, dt=config.grid.spacing)
        prof = uniform_localtime_statistic(fld, lt.q, lt.nu, lt.J_max, max_shifts=lt.max_shifts)
        profiles[lt.name] = prof
        verdicts[lt.name] = classify_regularity(prof, lt.nu, config.tau)
        norms[lt.name] = {"bin_width": fld.dx}
    return ReplicateRecord(r, profiles, verdicts, norms)


def run_experiment(config: ExperimentConfig, order=None, threads: int | None = None) -> ReportBundle:
    """Simulate ``config.n_replicates`` paths and evaluate every query on each.

    ``order`` permutes the execution order of replicates (a testing hook);
    every replicate draws from its own random sub-stream, so the bundle does
    not depend on it. Worker threads are capped by ``BESOVLAB_THREADS``.
    """
    n = config.n_replicates
    order = list(range(n)) if order is None else [int(r) for r in order]
    if sorted(order) != list(range(n)):
        raise ValidationError("order must be a permutation of the replicate indices")
    t0 = time.perf_counter()
    paths, sim_meta = simulate_array(config.descriptor, config.grid, config.seed, order, config.sampler)
    t_sim = time.perf_counter() - t0

    def work(i):
        r = order[i]
        try:
            return _process_replicate(config, r, paths[i])
        except BesovlabError as err:
            raise type(err)(f"replicate {r}: {err}") from err

    n_workers = max(1, min(threads or max_threads(), n))
    if n_workers == 1:
        records = [work(i) for i in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            records = list(pool.map(work, range(n)))
    records.sort(key=lambda rec: rec.replicate)

    lnd = None
    if config.lnd is not None:
        ln = config.lnd
        spec = LndSampleSpec(n_times=ln.n_times, n_freq=ln.n_freq, seed=config.seed)
        lnd = alphalnd_constant(config.descriptor, ln.m, list(ln.k), ln.alpha, spec).to_dict()

    provenance = {
        "config_hash": config.config_hash,
        "seed": config.seed,
        "software_version": __version__,
        "numpy_version": np.__version__,
        "python_version": platform.python_version(),
        "estimator_version": ESTIMATOR_VERSION,
        "sampler": {k: v for k, v in sim_meta.items() if k in ("method", "fallback", "jitter", "substeps")},
        "descriptor": config.descriptor.to_dict(),
        "n_replicates": n,
    }
    timing = {"simulate_s": t_sim, "total_s": time.perf_counter() - t0}
    return ReportBundle(config, records, aggregate(records), provenance, lnd, timing)
