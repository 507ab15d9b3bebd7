"""Parameter containers and the speed measure."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from ..errors import NonPositiveTimeError, ParameterError, ReflectionUnsupportedError


@dataclass(frozen=True)
class SkewStickyParams:
    """Stickiness ``rho >= 0`` and skewness ``beta`` in [-1, 1] at zero."""

    rho: float
    beta: float

    def __post_init__(self):
        object.__setattr__(self, "rho", float(self.rho))
        object.__setattr__(self, "beta", float(self.beta))
        if not (math.isfinite(self.rho) and self.rho >= 0.0):
            raise ParameterError(f"rho must be finite and >= 0, got {self.rho}")
        if not -1.0 <= self.beta <= 1.0:
            raise ParameterError(f"beta must lie in [-1, 1], got {self.beta}")

    @property
    def reflected(self) -> bool:
        return abs(self.beta) == 1.0

    def require_non_reflected(self) -> None:
        if self.reflected:
            raise ReflectionUnsupportedError(
                f"beta = {self.beta}: use the reflected construction for |beta| = 1")

    def scaled(self, factor: float) -> "SkewStickyParams":
        """Same skewness with stickiness multiplied by ``factor``."""
        return SkewStickyParams(self.rho * factor, self.beta)

    @property
    def sigma_minus(self) -> float:
        return 1.0

    @property
    def sigma_plus(self) -> float:
        return 1.0

    def as_sos(self) -> "SosBmParams":
        return SosBmParams(self.rho, self.beta, 1.0, 1.0)


@dataclass(frozen=True)
class SosBmParams:
    """Skew-oscillating-sticky parameters; volatility is piecewise constant."""

    rho: float
    beta: float
    sigma_minus: float = 1.0
    sigma_plus: float = 1.0

    def __post_init__(self):
        SkewStickyParams(self.rho, self.beta)
        for name in ("rho", "beta", "sigma_minus", "sigma_plus"):
            object.__setattr__(self, name, float(getattr(self, name)))
        for name in ("sigma_minus", "sigma_plus"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0.0):
                raise ParameterError(f"{name} must be finite and > 0, got {value}")

    @property
    def reflected(self) -> bool:
        return abs(self.beta) == 1.0

    def require_non_reflected(self) -> None:
        SkewStickyParams(self.rho, self.beta).require_non_reflected()

    @property
    def skew_sticky(self) -> SkewStickyParams:
        """The (rho, beta) pair, ignoring the volatilities."""
        return SkewStickyParams(self.rho, self.beta)

    def sigma(self, x):
        """Piecewise volatility: sigma_minus on x <= 0, sigma_plus on x > 0."""
        return np.where(np.asarray(x) > 0.0, self.sigma_plus, self.sigma_minus)

    def as_sos(self) -> "SosBmParams":
        return self


AnyParams = Union[SkewStickyParams, SosBmParams]


def skew_weight(beta: float, y):
    """a(y) = 1 + sgn(y) * beta with sgn(0) = 0."""
    return 1.0 + np.sign(y) * beta


@dataclass(frozen=True)
class SpeedMeasure:
    """Density a(y)/sigma0(y)**2 on each half-line plus an atom rho at zero."""

    rho: float
    beta: float
    sigma_minus: float = 1.0
    sigma_plus: float = 1.0

    @classmethod
    def of(cls, params: AnyParams) -> "SpeedMeasure":
        return cls(params.rho, params.beta, params.sigma_minus, params.sigma_plus)

    @property
    def atom(self) -> float:
        return self.rho

    @property
    def left_density(self) -> float:
        return (1.0 - self.beta) / self.sigma_minus**2

    @property
    def right_density(self) -> float:
        return (1.0 + self.beta) / self.sigma_plus**2

    def skew_weight(self, y):
        return skew_weight(self.beta, y)

    def density(self, y):
        """Lebesgue density of the absolutely continuous part.

        The value at the single point 0 uses sgn(0) = 0 and sigma0(0) = sigma_minus.
        """
        y = np.asarray(y, dtype=float)
        at_zero = 1.0 / self.sigma_minus**2
        out = np.where(y > 0, self.right_density, np.where(y < 0, self.left_density, at_zero))
        return out[()] if out.ndim == 0 else out


def check_time(t: float) -> float:
    t = float(t)
    if not t > 0.0:
        raise NonPositiveTimeError(f"time must be > 0, got {t}")
    return t


Integrand = Callable[[np.ndarray], np.ndarray]
