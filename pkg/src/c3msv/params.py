"""Squeezing parameters of the coupled three-mode squeeze and their degenerate limits."""

from __future__ import annotations

import enum
import math
import numbers
from dataclasses import dataclass, field

TWO_PI = 2.0 * math.pi


class ParamError(ValueError):
    """Invalid squeezing parameter. ``field`` names the offending input."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class Reduction(enum.Enum):
    VACUUM = "Vacuum"
    TMSV_AB = "TmsvAB"
    TMSV_BC = "TmsvBC"
    COUPLED = "Coupled"


def _normalize_phase(theta: float) -> float:
    t = math.fmod(theta, TWO_PI)
    if t < 0.0:
        t += TWO_PI
    # fmod of a value just below a multiple of 2pi can round up to 2pi
    if t >= TWO_PI:
        t = 0.0
    return t


@dataclass(frozen=True)
class SqueezeParams:
    """Magnitudes ``r1``, ``r2`` and phases ``theta1``, ``theta2`` of the two
    complex squeezing parameters xi_k = r_k exp(i theta_k).

    Use :func:`make_params` to build validated instances; phases are stored
    reduced to [0, 2pi).
    """

    r1: float
    r2: float
    theta1: float
    theta2: float
    r: float = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("r1", "r2", "theta1", "theta2"):
            value = getattr(self, name)
            if not isinstance(value, numbers.Real) or not math.isfinite(value):
                raise ParamError(name, f"must be a finite real number, got {value!r}")
        if self.r1 < 0:
            raise ParamError("r1", f"must be >= 0, got {self.r1}")
        if self.r2 < 0:
            raise ParamError("r2", f"must be >= 0, got {self.r2}")
        object.__setattr__(self, "r1", float(self.r1))
        object.__setattr__(self, "r2", float(self.r2))
        object.__setattr__(self, "theta1", _normalize_phase(float(self.theta1)))
        object.__setattr__(self, "theta2", _normalize_phase(float(self.theta2)))
        object.__setattr__(self, "r", math.sqrt(self.r1 ** 2 + self.r2 ** 2))

    @property
    def xi1(self) -> complex:
        return self.r1 * complex(math.cos(self.theta1), math.sin(self.theta1))

    @property
    def xi2(self) -> complex:
        return self.r2 * complex(math.cos(self.theta2), math.sin(self.theta2))

    def with_(self, **changes) -> "SqueezeParams":
        values = dict(r1=self.r1, r2=self.r2, theta1=self.theta1, theta2=self.theta2)
        values.update(changes)
        return SqueezeParams(**values)


def make_params(r1: float, r2: float, theta1: float = 0.0, theta2: float = 0.0) -> SqueezeParams:
    return SqueezeParams(r1, r2, theta1, theta2)


def classify(params: SqueezeParams) -> Reduction:
    """Exact-zero classification of the magnitudes (no epsilon band)."""
    if params.r1 == 0.0 and params.r2 == 0.0:
        return Reduction.VACUUM
    if params.r2 == 0.0:
        return Reduction.TMSV_AB
    if params.r1 == 0.0:
        return Reduction.TMSV_BC
    return Reduction.COUPLED
