"""Sampler parameters and the closed-form quantities derived from them.

Everything here is a pure function of value types: amplitude bound, firing
interval bounds, the density condition for recoverability, and the
quantization step sizes of the uniform and windowed interval quantizers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InfeasibleSamplerError

__all__ = [
    "TemParams",
    "SignalSpec",
    "TimeBounds",
    "amplitude_bound",
    "time_bounds",
    "check_density",
    "iftem_step",
    "ccif_step",
]


@dataclass(frozen=True)
class TemParams:
    """Integrate-and-fire sampler triple (bias, scale, threshold).

    The integrator accumulates (bias + x(t)) / kappa and fires when the
    state reaches delta.  ``alpha`` may record the ratio bias/c when the
    bias was chosen proportionally to the signal's amplitude bound.
    """

    bias: float
    kappa: float = 0.5
    delta: float = 0.075
    alpha: float | None = None

    def __post_init__(self):
        if not (self.bias > 0 and math.isfinite(self.bias)):
            raise ValueError(f"bias must be positive and finite, got {self.bias}")
        if not (self.kappa > 0 and math.isfinite(self.kappa)):
            raise ValueError(f"kappa must be positive and finite, got {self.kappa}")
        if not (self.delta > 0 and math.isfinite(self.delta)):
            raise ValueError(f"delta must be positive and finite, got {self.delta}")
        if self.alpha is not None and not self.alpha > 1:
            raise ValueError(f"alpha must exceed 1, got {self.alpha}")

    @property
    def kappa_delta(self) -> float:
        """Product kappa*delta; every interval formula uses only this."""
        return self.kappa * self.delta

    @classmethod
    def from_alpha(cls, alpha: float, c: float, kappa: float = 0.5,
                   delta: float = 0.075) -> "TemParams":
        """Build params with bias = alpha*c for a signal of amplitude bound c."""
        if not c > 0:
            raise ValueError(f"amplitude bound must be positive, got {c}")
        return cls(bias=alpha * c, kappa=kappa, delta=delta, alpha=alpha)

    def alpha_for(self, c: float) -> float:
        """Ratio bias/c, validated against a stored alpha if one is set."""
        if not c > 0:
            raise ValueError(f"amplitude bound must be positive, got {c}")
        ratio = self.bias / c
        if self.alpha is not None and abs(ratio - self.alpha) > 1e-12 * self.alpha:
            raise ValueError(
                f"stored alpha {self.alpha} inconsistent with bias/c = {ratio}"
            )
        return ratio


@dataclass(frozen=True)
class SignalSpec:
    """Band edge and energy of the signal class being sampled."""

    omega: float  # rad/s
    energy: float

    def __post_init__(self):
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ValueError(f"omega must be positive and finite, got {self.omega}")
        if not (self.energy >= 0 and math.isfinite(self.energy)):
            raise ValueError(f"energy must be nonnegative, got {self.energy}")

    @property
    def amplitude_bound(self) -> float:
        return amplitude_bound(self.energy, self.omega)


@dataclass(frozen=True)
class TimeBounds:
    """Interval bounds for a bias-dominated sampler.

    dt_min = kd/(b+c) and dt_max = kd/(b-c); every inter-firing interval
    lies inside [dt_min, dt_max].
    """

    dt_min: float
    dt_max: float

    def __post_init__(self):
        if not (0 < self.dt_min <= self.dt_max):
            raise ValueError(
                f"need 0 < dt_min <= dt_max, got ({self.dt_min}, {self.dt_max})"
            )

    @property
    def spread(self) -> float:
        """Width dt_max - dt_min of the interval range."""
        return self.dt_max - self.dt_min


def amplitude_bound(energy: float, omega: float) -> float:
    """Peak-amplitude bound sqrt(E*omega/pi) of an energy-E bandlimited signal."""
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    if not energy >= 0:
        raise ValueError(f"energy must be nonnegative, got {energy}")
    return math.sqrt(energy * omega / math.pi)


def time_bounds(p: TemParams, c: float) -> TimeBounds:
    """Firing-interval bounds kd/(b+c), kd/(b-c) for amplitude bound c."""
    if not c >= 0:
        raise ValueError(f"amplitude bound must be nonnegative, got {c}")
    if p.bias <= c:
        raise InfeasibleSamplerError(
            f"bias {p.bias} must strictly exceed the amplitude bound {c}"
        )
    kd = p.kappa_delta
    return TimeBounds(dt_min=kd / (p.bias + c), dt_max=kd / (p.bias - c))


def check_density(p: TemParams, c: float, omega: float) -> bool:
    """True iff the longest possible interval stays below pi/omega.

    This is the density condition under which the firing times are a
    sampling set dense enough for perfect reconstruction.
    """
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    return time_bounds(p, c).dt_max < math.pi / omega


def iftem_step(p: TemParams, c: float, levels: int) -> float:
    """Uniform quantizer step over the interval range, split into `levels` cells.

    Equals (dt_max - dt_min)/levels; written via alpha = b/c as
    kd/((alpha+1)(alpha-1)) * 2/(c*levels).
    """
    if not (isinstance(levels, int) and levels >= 1):
        raise ValueError(f"levels must be a positive integer, got {levels}")
    if not c > 0:
        raise ValueError(f"amplitude bound must be positive, got {c}")
    alpha = p.alpha_for(c)
    if not alpha > 1:
        raise InfeasibleSamplerError(
            f"bias {p.bias} must strictly exceed the amplitude bound {c}"
        )
    return p.kappa_delta / ((alpha + 1.0) * (alpha - 1.0)) * 2.0 / (c * levels)


def ccif_step(p: TemParams, c: float, levels: int, windows: int) -> float:
    """Residual step when the range is first cut into `windows` windows.

    Satisfies windows * ccif_step == iftem_step (one window spans the
    whole range, so the windowed quantizer refines the uniform one by
    exactly the window count).
    """
    if not (isinstance(windows, int) and windows >= 1):
        raise ValueError(f"windows must be a positive integer, got {windows}")
    return iftem_step(p, c, levels) / windows
