"""Random bandlimited test signals with exact evaluation and integration.

A signal is a finite sinc series x(t) = sum_k a_k * sinc((t - k*h)/h) with
h = pi/omega, so bandlimitedness and the interpolation property hold by
construction.  The running integral has a closed form in the sine integral,
which the encoder relies on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np
from scipy.special import sici

__all__ = [
    "BandlimitedSignal",
    "generate",
    "evaluate",
    "energy",
    "save_signal",
    "load_signal",
]

_EVAL_CHUNK = 8192  # rows of the sinc matrix materialized at once
_TAPER = np.arange(1, 6) / 6.0  # linear edge ramp over the outer 5 coefficients


@dataclass(eq=False)
class BandlimitedSignal:
    """Finite sinc-coefficient signal supported on [0, duration]."""

    omega: float  # rad/s band edge
    coefficients: np.ndarray
    duration: float
    energy: float

    def __post_init__(self):
        if not (self.omega > 0 and math.isfinite(self.omega)):
            raise ValueError(f"omega must be positive and finite, got {self.omega}")
        if not self.duration > 0:
            raise ValueError(f"duration must be positive, got {self.duration}")
        coeffs = np.ascontiguousarray(np.asarray(self.coefficients, dtype=float))
        coeffs.flags.writeable = False
        object.__setattr__(self, "coefficients", coeffs)

    @property
    def grid_spacing(self) -> float:
        return math.pi / self.omega

    @property
    def grid_times(self) -> np.ndarray:
        return np.arange(self.coefficients.size) * self.grid_spacing

    @property
    def amplitude_bound(self) -> float:
        """Peak bound sqrt(E*omega/pi) from the recorded energy."""
        return math.sqrt(self.energy * self.omega / math.pi)

    def evaluate(self, t):
        """Signal value at time(s) t; scalar in, scalar out."""
        tt = np.asarray(t, dtype=float)
        scalar = tt.ndim == 0
        flat = np.atleast_1d(tt).ravel()
        out = np.zeros(flat.size)
        if self.coefficients.size:
            grid = self.grid_times
            for start in range(0, flat.size, _EVAL_CHUNK):
                block = flat[start:start + _EVAL_CHUNK]
                u = (block[:, None] - grid) / self.grid_spacing
                out[start:start + _EVAL_CHUNK] = np.sinc(u) @ self.coefficients
        if scalar:
            return float(out[0])
        return out.reshape(tt.shape)

    def antiderivative(self, t):
        """Running integral of the signal, up to an additive constant.

        integral(a, b) below takes differences, so the constant never
        matters.  Closed form via the sine integral of each term.
        """
        tt = np.asarray(t, dtype=float)
        scalar = tt.ndim == 0
        flat = np.atleast_1d(tt).ravel()
        out = np.zeros(flat.size)
        if self.coefficients.size:
            grid = self.grid_times
            for start in range(0, flat.size, _EVAL_CHUNK):
                block = flat[start:start + _EVAL_CHUNK]
                si = sici(self.omega * (block[:, None] - grid))[0]
                out[start:start + _EVAL_CHUNK] = (si @ self.coefficients) / self.omega
        if scalar:
            return float(out[0])
        return out.reshape(tt.shape)

    def integral(self, a: float, b: float) -> float:
        """Exact integral of the signal over [a, b]."""
        return self.antiderivative(b) - self.antiderivative(a)


def generate(omega: float, energy: float, duration: float, seed: int) -> BandlimitedSignal:
    """Draw a random signal with exact quadrature energy over its support.

    Coefficients are i.i.d. uniform on [-1, 1], edge-tapered so the signal
    is negligible outside [0, duration], then rescaled so the measured
    energy over the support equals `energy`.  Deterministic in `seed`.
    """
    if not omega > 0:
        raise ValueError(f"omega must be positive, got {omega}")
    if not energy >= 0:
        raise ValueError(f"energy must be nonnegative, got {energy}")
    spacing = math.pi / omega
    if duration < 10 * spacing:
        raise ValueError(
            f"duration {duration} too short: need at least 10 grid spacings "
            f"({10 * spacing:.6g})"
        )
    n = int(math.floor(duration / spacing)) + 1
    rng = np.random.default_rng(seed)
    coeffs = rng.uniform(-1.0, 1.0, n)
    coeffs[:5] *= _TAPER
    coeffs[-5:] *= _TAPER[::-1]
    if energy == 0:
        coeffs = np.zeros(n)
        return BandlimitedSignal(omega, coeffs, duration, 0.0)
    sig = BandlimitedSignal(omega, coeffs, duration, energy)
    raw = _quadrature_energy(sig)
    if raw <= 0:
        raise ValueError("degenerate draw with zero energy")  # pragma: no cover
    return BandlimitedSignal(omega, coeffs * math.sqrt(energy / raw), duration, energy)


@lru_cache(maxsize=8)
def _gauss_rule(order: int):
    return np.polynomial.legendre.leggauss(order)


def _quadrature_energy(sig: BandlimitedSignal, panels_per_spacing: int = 4,
                       order: int = 10) -> float:
    """Composite Gauss-Legendre integral of x^2 over the support."""
    panels = max(1, int(math.ceil(sig.duration / sig.grid_spacing))) * panels_per_spacing
    edges = np.linspace(0.0, sig.duration, panels + 1)
    nodes, weights = _gauss_rule(order)
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    tq = (mid[:, None] + half[:, None] * nodes).ravel()
    wq = (half[:, None] * weights).ravel()
    vals = sig.evaluate(tq)
    return float(wq @ (vals * vals))


def evaluate(sig: BandlimitedSignal, t):
    """Module-level alias for BandlimitedSignal.evaluate."""
    return sig.evaluate(t)


def energy(sig: BandlimitedSignal, panels_per_spacing: int = 4, order: int = 10) -> float:
    """Measured energy of the signal over its support (composite quadrature)."""
    return _quadrature_energy(sig, panels_per_spacing, order)


def save_signal(sig: BandlimitedSignal, path) -> None:
    """Write a signal as a text file: omega,energy,duration then one coefficient per line."""
    lines = [f"{sig.omega!r},{sig.energy!r},{sig.duration!r}"]
    lines.extend(repr(float(a)) for a in sig.coefficients)
    Path(path).write_text("\n".join(lines) + "\n")


def load_signal(path) -> BandlimitedSignal:
    """Inverse of save_signal; float round-trip is exact via repr."""
    lines = Path(path).read_text().strip().splitlines()
    if not lines:
        raise ValueError(f"empty signal file: {path}")
    head = lines[0].split(",")
    if len(head) != 3:
        raise ValueError(f"malformed signal header: {lines[0]!r}")
    omega, sig_energy, duration = (float(x) for x in head)
    coeffs = np.array([float(x) for x in lines[1:]])
    return BandlimitedSignal(omega, coeffs, duration, sig_energy)
