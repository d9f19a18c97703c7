"""Heavy-tailed jump kernel, reservoir tail sums and continuum potentials.

The jump law is p(z) = c |z|^-(1+gamma) for z != 0, normalised so that the
total mass over the integers is 1.  The same tables feed the reservoir rates
of the lattice simulator (partial tail sums) and the singular potentials of
the limiting equations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "ModelParams",
    "JumpKernel",
    "build_kernel",
    "normalizing_constant",
    "transition_prob",
    "reservoir_rates",
    "continuum_potentials",
    "ContinuumPotentials",
]

# Tabulation horizon: beyond it the Euler-Maclaurin tail is used.
_MIN_TABLE = 100_000


@dataclass(frozen=True)
class ModelParams:
    """Microscopic/macroscopic parameter set.

    gamma : tail exponent of the jump law, in (1, 2)
    alpha : left reservoir density, in (0, 1)
    beta  : right reservoir density, in (0, 1), with alpha <= beta
    kappa : reservoir strength, > 0
    theta : reservoir scaling exponent, <= 0 (exploratory runs may use
            0 < theta < gamma - 1, see ``allow_exploratory_theta``)
    N     : lattice size, >= 2; sites are 1..N-1
    """

    gamma: float
    alpha: float
    beta: float
    kappa: float
    theta: float
    N: int
    allow_exploratory_theta: bool = False

    def __post_init__(self):
        if not 1.0 < self.gamma < 2.0:
            raise ValueError(f"gamma must lie in (1,2), got {self.gamma}")
        if not 0.0 < self.alpha <= self.beta < 1.0:
            raise ValueError(
                f"need 0 < alpha <= beta < 1, got alpha={self.alpha}, beta={self.beta}"
            )
        if not self.kappa > 0.0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if self.theta > 0.0:
            if not self.allow_exploratory_theta:
                raise ValueError(
                    f"theta must be <= 0, got {self.theta} "
                    "(pass allow_exploratory_theta=True for exploratory runs)"
                )
            if not self.theta < self.gamma - 1.0:
                raise ValueError(
                    f"exploratory theta must lie in (0, gamma-1), got {self.theta}"
                )
        if self.N < 2:
            raise ValueError(f"N must be >= 2, got {self.N}")

    @property
    def time_scale(self) -> float:
        """Speed-up factor of the chain: N^(gamma+theta)."""
        return float(self.N) ** (self.gamma + self.theta)

    @property
    def reservoir_factor(self) -> float:
        """Prefactor kappa * N^(-theta) of the reservoir generator."""
        return self.kappa * float(self.N) ** (-self.theta)


@dataclass(frozen=True)
class JumpKernel:
    """Normalised jump law plus the exact tail sums used by the reservoirs.

    cum_table[k] is the cumulative one-sided mass sum(p(z), z=1..k+1), so
    cum_table[-1] = 1/2 up to the analytic tail beyond ``max_range``.
    tail_left[x-1] = r_N^-(x/N) = sum(p(y), y >= x) and
    tail_right[x-1] = r_N^+(x/N) = sum(p(y), y <= x-N), both for x = 1..N-1.
    """

    gamma: float
    N: int
    c_gamma: float
    max_range: int
    cum_table: np.ndarray
    tail_left: np.ndarray
    tail_right: np.ndarray

    def prob(self, z) -> np.ndarray | float:
        """Jump probability p(z); vectorised over integer arrays."""
        return transition_prob(self, z)

    def bulk_mass(self, x: int) -> float:
        """Total jump mass from site x into other lattice sites.

        Complements the two reservoir tails: bulk + r^- + r^+ = 1.
        """
        r_minus, r_plus = reservoir_rates(self, x)
        return 1.0 - r_minus - r_plus


def _tail_beyond(m: float, s: float) -> float:
    """Euler-Maclaurin estimate of sum(z^-s, z >= m).

    Accurate to far below 1e-12 relative error for m >= 1e4 and s in (2, 3).
    """
    return (
        m ** (1.0 - s) / (s - 1.0)
        + 0.5 * m**-s
        + s / 12.0 * m ** (-s - 1.0)
        - s * (s + 1.0) * (s + 2.0) / 720.0 * m ** (-s - 3.0)
    )


def power_tail_sums(gamma: float, zmax: int) -> np.ndarray:
    """Backward-accumulated sums B[z] = sum(y^-(1+gamma), y >= z), z = 1..zmax.

    Accumulation runs from the analytic tail upward (small terms first), which
    avoids the cancellation a forward subtraction would incur for large z.
    Returned array has length zmax + 1; index 0 is unused.
    """
    s = 1.0 + gamma
    raw = np.arange(1, zmax + 1, dtype=np.float64) ** (-s)
    tail = _tail_beyond(float(zmax + 1), s)
    sums = np.empty(zmax + 1, dtype=np.float64)
    sums[0] = np.nan
    sums[1:] = np.cumsum(raw[::-1])[::-1] + tail
    return sums


def normalizing_constant(gamma: float) -> float:
    """c_gamma = 1 / (2 sum(z^-(1+gamma), z >= 1)), series + analytic tail."""
    if not 1.0 < gamma < 2.0:
        raise ValueError(f"gamma must lie in (1,2), got {gamma}")
    return 0.5 / power_tail_sums(gamma, _MIN_TABLE)[1]


def build_kernel(gamma: float, N: int) -> JumpKernel:
    """Construct the normalised kernel and its reservoir tail tables."""
    if not 1.0 < gamma < 2.0:
        raise ValueError(f"gamma must lie in (1,2), got {gamma}")
    if N < 2:
        raise ValueError(f"N must be >= 2, got {N}")
    zmax = max(10 * N, _MIN_TABLE)
    sums = power_tail_sums(gamma, zmax)
    c_gamma = 0.5 / sums[1]

    raw = np.arange(1, zmax + 1, dtype=np.float64) ** (-(1.0 + gamma))
    cum_table = np.cumsum(c_gamma * raw)

    tail_left = c_gamma * sums[1:N]
    # r_N^-(1/N) = sum over all positive displacements = 1/2 by symmetry.
    tail_left[0] = 0.5
    tail_right = tail_left[::-1].copy()

    for arr in (cum_table, tail_left, tail_right):
        arr.setflags(write=False)
    return JumpKernel(
        gamma=float(gamma),
        N=int(N),
        c_gamma=float(c_gamma),
        max_range=zmax,
        cum_table=cum_table,
        tail_left=tail_left,
        tail_right=tail_right,
    )


def transition_prob(kernel: JumpKernel, z) -> np.ndarray | float:
    """p(z) = c_gamma |z|^-(1+gamma) for z != 0, and 0 at z = 0."""
    z = np.asarray(z)
    az = np.abs(z).astype(np.float64)
    with np.errstate(divide="ignore"):
        out = np.where(z == 0, 0.0, kernel.c_gamma * az ** (-(1.0 + kernel.gamma)))
    if out.ndim == 0:
        return float(out)
    return out


def reservoir_rates(kernel: JumpKernel, x: int) -> tuple[float, float]:
    """Exact tail sums (r_N^-(x/N), r_N^+(x/N)) for a site x in 1..N-1."""
    if not 1 <= x <= kernel.N - 1:
        raise IndexError(f"site x={x} outside 1..{kernel.N - 1}")
    return float(kernel.tail_left[x - 1]), float(kernel.tail_right[x - 1])


@dataclass(frozen=True)
class ContinuumPotentials:
    r_minus: float
    r_plus: float
    V0: float
    V1: float
    rho_bar_inf: float

    def __iter__(self):
        yield from (self.r_minus, self.r_plus, self.V0, self.V1, self.rho_bar_inf)


def continuum_potentials(
    gamma: float, alpha: float, beta: float, u
) -> ContinuumPotentials:
    """Continuum reservoir rates and singular potentials at u in (0,1).

    r^-(u) = c u^-gamma / gamma, r^+(u) = c (1-u)^-gamma / gamma,
    V1 = r^- + r^+, V0 = alpha r^- + beta r^+, and the pure-reaction fixed
    point rho_inf = V0 / V1.  Vectorised over u.
    """
    u = np.asarray(u, dtype=np.float64)
    if np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("potentials are singular outside 0 < u < 1")
    c_gamma = normalizing_constant(gamma)
    r_minus = c_gamma / gamma * u**-gamma
    r_plus = c_gamma / gamma * (1.0 - u) ** -gamma
    v1 = r_minus + r_plus
    v0 = alpha * r_minus + beta * r_plus
    if u.ndim == 0:
        return ContinuumPotentials(
            float(r_minus), float(r_plus), float(v0), float(v1), float(v0 / v1)
        )
    return ContinuumPotentials(r_minus, r_plus, v0, v1, v0 / v1)
