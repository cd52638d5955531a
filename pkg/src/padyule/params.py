"""Model rates and the regime they fall into."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from .errors import DomainError

__all__ = ["ModelParams", "Regime", "classify_regime"]


class Regime(enum.Enum):
    NO_DETACHMENT = "no-detachment"
    SUPERCRITICAL = "supercritical"
    SUBCRITICAL = "subcritical"
    CRITICAL = "critical"


@dataclass(frozen=True)
class ModelParams:
    """Rate triple of the attachment-detachment graph.

    Attributes
    ----------
    lambda1 : float
        Rate at which new vertices (households) appear, > 0.
    lambda2 : float
        Edge attachment (birth) rate, > 0.
    mu2 : float
        Edge detachment (death) rate, >= 0.
    """

    lambda1: float
    lambda2: float
    mu2: float = 0.0

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "mu2"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise DomainError(f"{name} must be a real number, got {value!r}")
            if not math.isfinite(value):
                raise DomainError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.lambda1 <= 0:
            raise DomainError(f"lambda1 must be > 0, got {self.lambda1}")
        if self.lambda2 <= 0:
            raise DomainError(f"lambda2 must be > 0, got {self.lambda2}")
        if self.mu2 < 0:
            raise DomainError(f"mu2 must be >= 0, got {self.mu2}")

    @property
    def regime(self) -> Regime:
        return classify_regime(self)

    @property
    def drift(self) -> float:
        """Net per-edge growth rate ``lambda2 - mu2``."""
        return self.lambda2 - self.mu2

    def as_dict(self) -> dict:
        return {"lambda1": self.lambda1, "lambda2": self.lambda2, "mu2": self.mu2}


def classify_regime(params: ModelParams) -> Regime:
    """Regime of ``params``; the critical case uses exact equality of the rates."""
    if params.mu2 == 0.0:
        return Regime.NO_DETACHMENT
    if params.lambda2 > params.mu2:
        return Regime.SUPERCRITICAL
    if params.lambda2 < params.mu2:
        return Regime.SUBCRITICAL
    return Regime.CRITICAL
