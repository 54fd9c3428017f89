"""Value types for process simulation: grids, descriptors, sample paths."""

from __future__ import annotations

from dataclasses import dataclass, field, asdict
from typing import Any

import numpy as np

from ..errors import ValidationError, TheoremPreconditionError

KINDS = ("Bm", "Fbm", "BifBm", "She")
SIGMA_BUILTINS = ("identity", "scaled-identity", "tanh")
DRIFT_BUILTINS = ("zero", "tanh")


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid on ``[0, t_max]`` with ``2**J + 1`` points, ``J >= 3``."""

    n_points: int
    t_max: float = 1.0

    def __post_init__(self):
        n = int(self.n_points)
        if n != self.n_points or n < 9:
            raise ValidationError(f"n_points must be an integer 2**J + 1 with J >= 3, got {self.n_points}")
        m = n - 1
        if m & (m - 1):
            raise ValidationError(f"n_points - 1 must be a power of two, got n_points={n}")
        if not (self.t_max > 0 and np.isfinite(self.t_max)):
            raise ValidationError(f"t_max must be positive, got {self.t_max}")

    @property
    def J(self) -> int:
        return (self.n_points - 1).bit_length() - 1

    @property
    def spacing(self) -> float:
        return self.t_max / (self.n_points - 1)

    def times(self) -> np.ndarray:
        # exact dyadic multiples, last point equals t_max
        return np.arange(self.n_points) * self.spacing


@dataclass(frozen=True)
class SheSpec:
    """Coefficients and discretization of the stochastic heat equation system.

    ``sigma`` is one of ``identity``, ``scaled-identity`` (uses ``rho``) or
    ``tanh`` (``diag(1 + tanh(u_k) / 2)``); ``b`` is ``zero`` or ``tanh``
    (``-tanh(u_k)``). ``allow_degenerate`` skips the ellipticity check and
    exists for testing only.
    """

    sigma: str = "identity"
    rho: float = 1.0
    b: str = "zero"
    nx: int = 128
    x_probe: float = 0.5
    allow_degenerate: bool = False

    def __post_init__(self):
        if self.sigma not in SIGMA_BUILTINS:
            raise ValidationError(f"unknown sigma {self.sigma!r}; built-ins: {SIGMA_BUILTINS}")
        if self.b not in DRIFT_BUILTINS:
            raise ValidationError(f"unknown drift {self.b!r}; built-ins: {DRIFT_BUILTINS}")
        if int(self.nx) != self.nx or self.nx < 16:
            raise ValidationError(f"nx must be an integer >= 16, got {self.nx}")
        if not 0.0 < self.x_probe < 1.0:
            raise ValidationError(f"x_probe must lie strictly inside (0, 1), got {self.x_probe}")
        if not np.isfinite(self.rho):
            raise ValidationError("rho must be finite")
        if not self.allow_degenerate:
            from .she import ellipticity_constant

            if ellipticity_constant(self, d=3) <= 0.0:
                raise ValidationError("sigma is not uniformly elliptic (min singular value is 0)")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class ProcessDescriptor:
    """Which process to simulate.

    Build with the ``bm``/``fbm``/``bifbm``/``she`` constructors rather than
    directly. ``alpha`` is the regularity index of the process.
    """

    kind: str
    d: int = 1
    H: float = 0.5
    K: float = 1.0
    she: SheSpec | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown process kind {self.kind!r}; expected one of {KINDS}")
        if int(self.d) != self.d or not 1 <= self.d <= 3:
            raise ValidationError(f"d must be 1, 2 or 3, got {self.d}")
        if not 0.0 < self.H < 1.0:
            raise ValidationError(f"H must lie in (0, 1), got {self.H}")
        if not 0.0 < self.K <= 1.0:
            raise ValidationError(f"K must lie in (0, 1], got {self.K}")
        if self.kind == "Bm" and (self.H != 0.5 or self.K != 1.0):
            raise ValidationError("Bm takes no H/K parameters")
        if self.kind == "Fbm" and self.K != 1.0:
            raise ValidationError("Fbm has K = 1; use BifBm")
        if self.kind == "She" and self.she is None:
            raise ValidationError("She descriptor needs a SheSpec")
        if self.kind != "She" and self.she is not None:
            raise ValidationError("SheSpec given for a Gaussian descriptor")

    @classmethod
    def bm(cls, d: int = 1) -> "ProcessDescriptor":
        return cls("Bm", d=d)

    @classmethod
    def fbm(cls, H: float, d: int = 1) -> "ProcessDescriptor":
        return cls("Fbm", d=d, H=H)

    @classmethod
    def bifbm(cls, H: float, K: float, d: int = 1) -> "ProcessDescriptor":
        return cls("BifBm", d=d, H=H, K=K)

    @classmethod
    def she_process(cls, spec: SheSpec | None = None, d: int = 1) -> "ProcessDescriptor":
        return cls("She", d=d, she=spec or SheSpec())

    @property
    def alpha(self) -> float:
        if self.kind == "She":
            return 0.25
        return self.H * self.K

    @property
    def is_gaussian(self) -> bool:
        return self.kind != "She"

    @property
    def has_stationary_increments(self) -> bool:
        return self.kind in ("Bm", "Fbm")

    def require_local_time_regime(self) -> None:
        """Raise unless ``alpha * d < 1``, the regime where local times are jointly continuous."""
        if self.alpha * self.d >= 1.0:
            raise TheoremPreconditionError(
                f"local-time experiments need alpha*d < 1; got alpha={self.alpha:g}, d={self.d}"
            )

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "d": self.d, "alpha": self.alpha}
        if self.kind in ("Fbm", "BifBm"):
            out["H"] = self.H
        if self.kind == "BifBm":
            out["K"] = self.K
        if self.she is not None:
            out["she"] = self.she.to_dict()
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ProcessDescriptor":
        kind = data.get("kind")
        d = data.get("d", 1)
        if kind == "Bm":
            return cls.bm(d)
        if kind == "Fbm":
            return cls.fbm(data["H"], d)
        if kind == "BifBm":
            return cls.bifbm(data["H"], data["K"], d)
        if kind == "She":
            return cls.she_process(SheSpec(**data.get("she", {})), d)
        raise ValidationError(f"unknown process kind {kind!r}")


@dataclass
class SamplePath:
    """A discretized trajectory: ``values`` has shape ``(n_points, d)``."""

    times: np.ndarray
    values: np.ndarray
    seed: int
    descriptor: ProcessDescriptor
    replicate: int = 0
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        values = np.asarray(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        self.values = values
        if values.shape[0] != self.times.shape[0]:
            raise ValidationError("times and values have different lengths")
        if np.any(np.diff(self.times) <= 0):
            raise ValidationError("times must be strictly increasing")
        if not np.all(np.isfinite(values)):
            raise ValidationError("path contains non-finite values")

    @property
    def d(self) -> int:
        return self.values.shape[1]

    @property
    def n_points(self) -> int:
        return self.values.shape[0]

    @property
    def spacing(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class MomentEstimate:
    p0: float
    slope: float
    K_hat: float
    lags: tuple
    moments: tuple
