"""Experiment configuration: a flat JSON object validated into :class:`ExperimentConfig`.

Example::

    {"kind": "Fbm", "H": 0.5, "n_points": 4097, "seed": 7,
     "n_replicates": 16, "besov": [{"nu": 0.4, "p": 4}, {"nu": 0.6, "p": 4}],
     "localtime": {"q": 1, "nu": 0.5}}

Omitted keys take defaults (``tau = 0.1``, ``J_max = J - 2``, histogram bin
width from the range heuristic, one path query at ``nu = alpha``, ``p = 4``).
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

from ..errors import UnsupportedError, ValidationError
from ..procsim import METHODS
from ..procsim.types import GridSpec, ProcessDescriptor, SheSpec

TOP_KEYS = {
    "kind", "H", "K", "d", "she", "n_points", "t_max", "seed", "n_replicates", "besov",
    "J_max", "tau", "localtime", "lnd", "sampler", "out_dir",
}
# excluded from the hash: where results go does not change what they are
UNHASHED = ("out_dir",)


@dataclass(frozen=True)
class BesovQuery:
    nu: float
    p: float = 4.0
    q: float | None = None

    @property
    def name(self) -> str:
        return f"path_nu{self.nu:g}_p{self.p:g}"


@dataclass(frozen=True)
class LocalTimeSettings:
    bin_width: float | None = None
    q: float = 1.0
    nu: float = 0.5
    J_max: int | None = None
    max_shifts: int = 4

    @property
    def name(self) -> str:
        return f"localtime_nu{self.nu:g}_q{self.q:g}"


@dataclass(frozen=True)
class LndSettings:
    m: int = 2
    k: tuple = (2, 2)
    alpha: float | None = None
    n_times: int = 16
    n_freq: int = 24


@dataclass(frozen=True)
class ExperimentConfig:
    descriptor: ProcessDescriptor
    grid: GridSpec
    seed: int
    n_replicates: int = 1
    besov: tuple = ()
    J_max: int | None = None
    tau: float = 0.1
    localtime: LocalTimeSettings | None = None
    lnd: LndSettings | None = None
    sampler: str = "auto"
    out_dir: str | None = None

    def to_dict(self) -> dict:
        """Flat JSON form; ``load_config`` of this dict gives back an equal config."""
        desc = self.descriptor
        out: dict[str, Any] = {"kind": desc.kind, "d": desc.d}
        if desc.kind in ("Fbm", "BifBm"):
            out["H"] = desc.H
        if desc.kind == "BifBm":
            out["K"] = desc.K
        if desc.she is not None:
            out["she"] = desc.she.to_dict()
        out.update({
            "n_points": self.grid.n_points, "t_max": self.grid.t_max, "seed": self.seed,
            "n_replicates": self.n_replicates, "besov": [asdict(b) for b in self.besov],
            "J_max": self.J_max, "tau": self.tau,
            "localtime": asdict(self.localtime) if self.localtime else None,
            "lnd": {**asdict(self.lnd), "k": list(self.lnd.k)} if self.lnd else None,
            "sampler": self.sampler, "out_dir": self.out_dir,
        })
        return out

    @property
    def config_hash(self) -> str:
        return config_hash(self.to_dict())


def config_hash(data: dict) -> str:
    """sha256 of the canonical (sorted-key, compact) JSON, ignoring ``out_dir``."""
    clean = {k: v for k, v in data.items() if k not in UNHASHED}
    blob = json.dumps(clean, sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(blob.encode()).hexdigest()


def _num(data, key, default=None, *, integer=False, lo=None, hi=None, lo_open=False):
    val = data.get(key, default)
    if val is None:
        return None
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise ValidationError(f"field '{key}': expected a number, got {val!r}")
    if integer:
        if int(val) != val:
            raise ValidationError(f"field '{key}': expected an integer, got {val!r}")
        val = int(val)
    elif not math.isfinite(val):
        raise ValidationError(f"field '{key}': must be finite")
    if lo is not None and (val <= lo if lo_open else val < lo):
        raise ValidationError(f"field '{key}': must be {'>' if lo_open else '>='} {lo}, got {val}")
    if hi is not None and val > hi:
        raise ValidationError(f"field '{key}': must be <= {hi}, got {val}")
    return val


def _sub(data, key, prefix, exc):
    try:
        return exc()
    except ValidationError as err:
        msg = str(err)
        if not msg.startswith("field '"):
            msg = f"field '{key}': {msg}"
        elif prefix:
            msg = msg.replace("field '", f"field '{prefix}.", 1)
        raise type(err)(msg) from None


def parse_config(data: dict) -> ExperimentConfig:
    """Validate a config dict and fill defaults."""
    if not isinstance(data, dict):
        raise ValidationError("config must be a JSON object")
    unknown = set(data) - TOP_KEYS
    if unknown:
        raise ValidationError(f"field '{sorted(unknown)[0]}': unknown key")
    for key in ("kind", "n_points", "seed"):
        if key not in data:
            raise ValidationError(f"field '{key}': required")

    def build_descriptor():
        kind = data["kind"]
        d = _num(data, "d", 1, integer=True, lo=1, hi=3)
        if kind == "She":
            she = data.get("she") or {}
            if not isinstance(she, dict):
                raise ValidationError("field 'she': expected an object")
            try:
                spec = SheSpec(**she)
            except TypeError as err:
                raise ValidationError(f"field 'she': {err}") from None
            return ProcessDescriptor.she_process(spec, d)
        if "she" in data and data["she"] is not None:
            raise ValidationError("field 'she': only valid for kind She")
        H = _num(data, "H", 0.5, lo=0, lo_open=True)
        K = _num(data, "K", 1.0, lo=0, lo_open=True, hi=1)
        if H >= 1:
            raise ValidationError(f"field 'H': must be < 1, got {H}")
        return ProcessDescriptor(kind, d=d, H=H, K=K)

    descriptor = _sub(data, "kind", None, build_descriptor)
    grid = _sub(data, "n_points", None, lambda: GridSpec(
        _num(data, "n_points", integer=True), _num(data, "t_max", 1.0, lo=0, lo_open=True)))
    seed = _num(data, "seed", integer=True, lo=0, hi=2**64 - 1)
    n_rep = _num(data, "n_replicates", 1, integer=True, lo=1)
    tau = _num(data, "tau", 0.1, lo=0, lo_open=True)
    # 2^J_max <= (n_points - 1) / 4
    J_max = _num(data, "J_max", grid.J - 2, integer=True, lo=2, hi=grid.J - 2)

    raw_besov = data.get("besov")
    if raw_besov is None:
        raw_besov = [{"nu": descriptor.alpha, "p": 4}]
    if not isinstance(raw_besov, list):
        raise ValidationError("field 'besov': expected a list")
    besov = []
    for i, q in enumerate(raw_besov):
        if not isinstance(q, dict) or set(q) - {"nu", "p", "q"}:
            raise ValidationError(f"field 'besov[{i}]': expected an object with nu, p and optional q")
        nu = _sub(q, "nu", f"besov[{i}]", lambda: _num(q, "nu", lo=0, lo_open=True))
        if nu is None:
            raise ValidationError(f"field 'besov[{i}].nu': required")
        if nu >= 1:
            raise ValidationError(f"field 'besov[{i}].nu': must be < 1, got {nu}")
        p = _sub(q, "p", f"besov[{i}]", lambda: _num(q, "p", 4.0, lo=1))
        qq = _sub(q, "q", f"besov[{i}]", lambda: _num(q, "q", None, lo=1))
        besov.append(BesovQuery(float(nu), float(p), None if qq is None else float(qq)))

    localtime = None
    if data.get("localtime") is not None:
        lt = data["localtime"]
        if not isinstance(lt, dict) or set(lt) - {"bin_width", "q", "nu", "J_max", "max_shifts"}:
            raise ValidationError("field 'localtime': expected an object with bin_width, q, nu, J_max, max_shifts")
        descriptor.require_local_time_regime()
        localtime = LocalTimeSettings(
            bin_width=_sub(lt, "bin_width", "localtime", lambda: _num(lt, "bin_width", None, lo=0, lo_open=True)),
            q=float(_sub(lt, "q", "localtime", lambda: _num(lt, "q", 1.0, lo=1))),
            nu=float(_sub(lt, "nu", "localtime", lambda: _num(lt, "nu", 1 - descriptor.alpha * descriptor.d, lo=0))),
            J_max=_sub(lt, "J_max", "localtime", lambda: _num(lt, "J_max", J_max, integer=True, lo=2, hi=grid.J)),
            max_shifts=_sub(lt, "max_shifts", "localtime", lambda: _num(lt, "max_shifts", 4, integer=True, lo=0)),
        )

    lnd = None
    if data.get("lnd") is not None:
        ln = data["lnd"]
        if not isinstance(ln, dict) or set(ln) - {"m", "k", "alpha", "n_times", "n_freq"}:
            raise ValidationError("field 'lnd': expected an object with m, k, alpha, n_times, n_freq")
        if not descriptor.is_gaussian:
            raise UnsupportedError("field 'lnd': alpha-LND checks need a Gaussian process")
        m = _sub(ln, "m", "lnd", lambda: _num(ln, "m", 2, integer=True, lo=2))
        k = ln.get("k", [2] * m)
        if not isinstance(k, list) or len(k) != m or any(not isinstance(x, (int, float)) or x < 0 for x in k):
            raise ValidationError("field 'lnd.k': expected m non-negative numbers")
        alpha = _sub(ln, "alpha", "lnd", lambda: _num(ln, "alpha", descriptor.alpha, lo=0, lo_open=True, hi=1))
        lnd = LndSettings(
            m=m, k=tuple(k), alpha=float(alpha),
            n_times=_sub(ln, "n_times", "lnd", lambda: _num(ln, "n_times", 16, integer=True, lo=2)),
            n_freq=_sub(ln, "n_freq", "lnd", lambda: _num(ln, "n_freq", 24, integer=True, lo=1)),
        )

    sampler = data.get("sampler", "auto")
    if sampler not in METHODS:
        raise ValidationError(f"field 'sampler': expected one of {METHODS}, got {sampler!r}")
    out_dir = data.get("out_dir")
    if out_dir is not None and not isinstance(out_dir, str):
        raise ValidationError("field 'out_dir': expected a string")
    return ExperimentConfig(descriptor, grid, seed, n_rep, tuple(besov), J_max, float(tau),
                            localtime, lnd, sampler, out_dir)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ValidationError(f"cannot read config {path}: {err}") from None
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise ValidationError(f"config {path} is not valid JSON: {err}") from None
    return parse_config(data)
