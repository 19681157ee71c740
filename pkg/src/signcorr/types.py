"""Result containers shared across estimator modules."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .numerics import SymMat2


@dataclass(frozen=True)
class CorrEstimate:
    estimator_id: str
    value: float
    n_used: int
    ci_low: float | None = None
    ci_high: float | None = None
    diagnostics: dict = field(default_factory=dict)

    def __post_init__(self):
        if not math.isfinite(self.value):
            raise ValueError(f"non-finite correlation estimate from {self.estimator_id}")
        object.__setattr__(self, "value", float(self.value))
        for k in ("ci_low", "ci_high"):
            v = getattr(self, k)
            if v is not None:
                object.__setattr__(self, k, float(v))

    @property
    def has_ci(self) -> bool:
        return self.ci_low is not None and self.ci_high is not None


@dataclass(frozen=True)
class ScaleEstimate:
    value: float
    method: str

    @property
    def degenerate(self) -> bool:
        return not self.value > 0.0


@dataclass(frozen=True)
class ScatterEstimate:
    location: np.ndarray
    cov: SymMat2
    method: str
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)
