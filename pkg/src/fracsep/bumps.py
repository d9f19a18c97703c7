"""Smooth compactly supported test functions and their derivatives.

The standard bump exp(-1/(1-s^2)) on |s| < 1 is infinitely differentiable
with compact support, the regularity class required of test functions by the
weak formulations.  Analytic second derivatives feed the Taylor correction of
the principal-value quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["Bump", "TimeModulatedBump", "bump_battery", "time_space_battery"]


@dataclass(frozen=True)
class Bump:
    """amplitude * exp(-1/(1 - s^2)) with s = (u - center)/width, zero outside."""

    center: float
    width: float
    amplitude: float = 1.0

    def __post_init__(self):
        if self.width <= 0.0:
            raise ValueError("width must be positive")

    @property
    def support(self) -> tuple[float, float]:
        return self.center - self.width, self.center + self.width

    def _s(self, u):
        return (np.asarray(u, dtype=np.float64) - self.center) / self.width

    def __call__(self, u):
        s = self._s(u)
        inside = np.abs(s) < 1.0
        out = np.zeros_like(s)
        s2 = np.where(inside, s * s, 0.0)
        out = np.where(inside, self.amplitude * np.exp(-1.0 / (1.0 - s2)), 0.0)
        return float(out) if out.ndim == 0 else out

    def d1(self, u):
        s = self._s(u)
        inside = np.abs(s) < 1.0
        s2 = np.where(inside, s * s, 0.0)
        one = 1.0 - s2
        g1 = -2.0 * s / one**2
        val = np.where(inside, self.amplitude * np.exp(-1.0 / one) * g1 / self.width, 0.0)
        return float(val) if val.ndim == 0 else val

    def d2(self, u):
        s = self._s(u)
        inside = np.abs(s) < 1.0
        s2 = np.where(inside, s * s, 0.0)
        one = 1.0 - s2
        g1 = -2.0 * s / one**2
        g2 = -2.0 * (1.0 + 3.0 * s2) / one**3
        val = np.where(
            inside,
            self.amplitude * np.exp(-1.0 / one) * (g1 * g1 + g2) / self.width**2,
            0.0,
        )
        return float(val) if val.ndim == 0 else val

    def on_grid(self, N: int) -> np.ndarray:
        return self(np.arange(1, N) / N)


@dataclass(frozen=True)
class TimeModulatedBump:
    """G(t,u) = tau(t) * phi(u) with a polynomial time factor."""

    space: Bump
    time_coeffs: tuple = (1.0,)

    def tau(self, t: float) -> float:
        return float(np.polyval(self.time_coeffs[::-1], t))

    def dtau(self, t: float) -> float:
        c = self.time_coeffs
        return float(np.polyval([k * c[k] for k in range(len(c) - 1, 0, -1)], t)) if len(c) > 1 else 0.0

    def value(self, t: float, N: int) -> np.ndarray:
        return self.tau(t) * self.space.on_grid(N)

    def dt(self, t: float, N: int) -> np.ndarray:
        return self.dtau(t) * self.space.on_grid(N)


def bump_battery() -> list[Bump]:
    """Three bumps at distinct centers and widths, all supported in (0,1)."""
    return [
        Bump(center=0.5, width=0.35),
        Bump(center=0.35, width=0.2),
        Bump(center=0.65, width=0.15),
    ]


def time_space_battery(horizon: float) -> list[TimeModulatedBump]:
    """Bumps with constant, linear and quadratic time modulation."""
    phis = bump_battery()
    mods = [(1.0,), (1.0, -0.5 / horizon), (0.5, 0.0, 0.5 / horizon**2)]
    return [TimeModulatedBump(space=p, time_coeffs=m) for p, m in zip(phis, mods)]
