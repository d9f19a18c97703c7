"""Discrete nonlocal operators, fractional norms and a quadrature oracle.

The dense matrix is the N^gamma-scaled lattice generator acting on grid
functions; ``regional`` mode keeps only interior interactions (row sums
vanish), ``pinned-boundary`` mode attaches two ghost nodes at 0 and 1 whose
values are held at the reservoir densities, the discrete analogue of the
Dirichlet trace condition.  An adaptive principal-value quadrature provides
continuum reference values independent of the grid discretisation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.integrate
import scipy.linalg

from .kernel import JumpKernel, build_kernel, continuum_potentials, normalizing_constant

__all__ = [
    "GridProfile",
    "OperatorMatrix",
    "NormsResult",
    "MODE_REGIONAL",
    "MODE_PINNED",
    "build_operator",
    "norms",
    "quadrature_regional",
    "NumericalError",
]

MODE_REGIONAL = "regional"
MODE_PINNED = "pinned-boundary"

DENSE_LIMIT = 4096


class NumericalError(RuntimeError):
    """A linear solve or adaptive refinement failed to meet its contract."""


@dataclass(frozen=True)
class GridProfile:
    """Function on the uniform interior grid i/N with attached boundary data."""

    N: int
    values: np.ndarray
    left_bc: float
    right_bc: float

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.shape != (self.N - 1,):
            raise ValueError(f"expected {self.N - 1} interior values, got {vals.shape}")
        if vals.base is not None or vals is self.values:
            vals = vals.copy()
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def u(self) -> np.ndarray:
        return np.arange(1, self.N) / self.N

    def with_values(self, values: np.ndarray) -> "GridProfile":
        return GridProfile(self.N, values, self.left_bc, self.right_bc)

    @staticmethod
    def constant(N: int, value: float, left_bc=None, right_bc=None) -> "GridProfile":
        lb = value if left_bc is None else left_bc
        rb = value if right_bc is None else right_bc
        return GridProfile(N, np.full(N - 1, float(value)), lb, rb)

    @staticmethod
    def from_function(g, N: int, left_bc: float, right_bc: float) -> "GridProfile":
        u = np.arange(1, N) / N
        try:
            vals = np.asarray(g(u), dtype=np.float64)
            if vals.shape != u.shape:
                raise TypeError
        except (TypeError, ValueError):
            vals = np.asarray([float(g(x)) for x in u])
        return GridProfile(N, vals, left_bc, right_bc)


def _interaction_kernel(kernel: JumpKernel, n: int) -> np.ndarray:
    """p(z) for z = -(n-1)..(n-1) with p(0) = 0."""
    z = np.arange(-(n - 1), n, dtype=np.float64)
    az = np.where(z == 0.0, 1.0, np.abs(z))
    return np.where(z == 0.0, 0.0, kernel.c_gamma * az ** (-(1.0 + kernel.gamma)))


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense (or matrix-free) symmetric discretisation of N^gamma L_N.

    In pinned-boundary mode ``apply`` is the linear part only; the affine
    ghost-node contribution is alpha * boundary_left + beta * boundary_right.
    """

    N: int
    gamma: float
    mode: str
    entries: np.ndarray | None
    diag: np.ndarray
    boundary_left: np.ndarray | None
    boundary_right: np.ndarray | None
    _pk: np.ndarray

    def apply(self, vec: np.ndarray) -> np.ndarray:
        vec = np.asarray(vec, dtype=np.float64)
        if self.entries is not None:
            return self.entries @ vec
        scale = float(self.N) ** self.gamma
        conv = np.convolve(vec, self._pk, mode="valid")
        return scale * conv + self.diag * vec

    def boundary_vector(self, alpha: float, beta: float) -> np.ndarray:
        if self.mode != MODE_PINNED:
            raise ValueError("boundary vector only exists in pinned-boundary mode")
        return alpha * self.boundary_left + beta * self.boundary_right

    def to_csv(self, path) -> None:
        if self.entries is None:
            raise ValueError("matrix-free operator has no dense entries to export")
        with open(path, "w") as fh:
            fh.write("row,col,value\n")
            for i in range(self.entries.shape[0]):
                for j in range(self.entries.shape[1]):
                    fh.write(f"{i},{j},{float(self.entries[i, j])!r}\n")


def build_operator(
    N: int,
    gamma: float,
    mode: str = MODE_REGIONAL,
    kernel: JumpKernel | None = None,
    dense: bool | None = None,
) -> OperatorMatrix:
    """N^gamma-scaled discrete nonlocal operator on the interior grid."""
    if N < 4:
        raise ValueError(f"N must be >= 4, got {N}")
    if not 1.0 < gamma < 2.0:
        raise ValueError(f"gamma must lie in (1,2), got {gamma}")
    if mode not in (MODE_REGIONAL, MODE_PINNED):
        raise ValueError(f"unknown operator mode {mode!r}")
    if kernel is None:
        kernel = build_kernel(gamma, N)
    elif kernel.N != N or kernel.gamma != gamma:
        raise ValueError("kernel was built for different (gamma, N)")
    if dense is None:
        dense = N <= DENSE_LIMIT

    n = N - 1
    scale = float(N) ** gamma
    pk = _interaction_kernel(kernel, n)
    # bulk mass leaving each site; complements the two reservoir tails
    d = 1.0 - kernel.tail_left - kernel.tail_right
    diag = -scale * d
    boundary_left = boundary_right = None
    if mode == MODE_PINNED:
        x = np.arange(1, N, dtype=np.float64)
        p_left = kernel.c_gamma * x ** (-(1.0 + gamma))
        p_right = p_left[::-1].copy()
        diag = diag - scale * (p_left + p_right)
        boundary_left = scale * p_left
        boundary_right = scale * p_right

    entries = None
    if dense:
        col = scale * pk[n - 1 :].copy()
        entries = scipy.linalg.toeplitz(col)
        np.fill_diagonal(entries, diag)
        entries.setflags(write=False)
    for arr in (diag, boundary_left, boundary_right, pk):
        if arr is not None:
            arr.setflags(write=False)
    return OperatorMatrix(
        N=N,
        gamma=gamma,
        mode=mode,
        entries=entries,
        diag=diag,
        boundary_left=boundary_left,
        boundary_right=boundary_right,
        _pk=pk,
    )


@dataclass(frozen=True)
class NormsResult:
    """l2 is the trapezoidal integral of rho^2 (boundary values included);
    seminorm_gamma_half and v1_weighted are norms; the Hardy entries are the
    weighted square integrals themselves."""

    l2: float
    seminorm_gamma_half: float
    v1_weighted: float
    hardy_left: float
    hardy_right: float


def norms(profile: GridProfile, gamma: float, alpha: float, beta: float) -> NormsResult:
    """Discrete L^2, Gagliardo seminorm, V1-weighted norm and Hardy integrals."""
    N = profile.N
    n = N - 1
    rho = profile.values
    u = profile.u

    grid = np.concatenate([[0.0], u, [1.0]])
    vals = np.concatenate([[profile.left_bc], rho, [profile.right_bc]])
    l2 = float(np.trapezoid(vals**2, grid))

    # (c/2) N^-2 sum_{i != j} (rho_i - rho_j)^2 / |u_i - u_j|^(1+gamma)
    # evaluated through the convolution identity
    # sum (rho_i - rho_j)^2 K_ij = 2 [sum_i rho_i^2 S_i - rho . (K rho)].
    c_gamma = normalizing_constant(gamma)
    z = np.arange(-(n - 1), n, dtype=np.float64)
    az = np.where(z == 0.0, 1.0, np.abs(z) / N)
    K = np.where(z == 0.0, 0.0, az ** (-(1.0 + gamma)))
    k_rho = np.convolve(rho, K, mode="valid")
    s_i = np.convolve(np.ones(n), K, mode="valid")
    quad = 2.0 * (float(rho**2 @ s_i) - float(rho @ k_rho))
    semi_sq = 0.5 * c_gamma * quad / N**2
    seminorm = float(np.sqrt(max(semi_sq, 0.0)))

    pots = continuum_potentials(gamma, alpha, beta, u)
    v1_weighted = float(np.sqrt(np.sum(rho**2 * pots.V1) / N))
    hardy_left = float(np.sum((alpha - rho) ** 2 * u**-gamma) / N)
    hardy_right = float(np.sum((beta - rho) ** 2 * (1.0 - u) ** -gamma) / N)
    return NormsResult(l2, seminorm, v1_weighted, hardy_left, hardy_right)


def quadrature_regional(G, u: float, gamma: float, tol: float, d2G=None) -> float:
    """Principal value of the regional nonlocal operator at an interior point.

    c_gamma lim_{eps->0} int_0^1 1_{|u-v|>=eps} (G(v)-G(u)) |u-v|^-(1+gamma) dv,
    realised by symmetric excision with a local Taylor correction
    G''(u) eps^(2-gamma)/(2-gamma) and one Richardson extrapolation step in
    the excision radius (the remainder scales like eps^(4-gamma) for C^4
    integrands).

    d2G supplies G'' analytically; the default finite-difference estimate
    limits achievable accuracy to roughly 1e-7 for well-scaled G.
    """
    if tol <= 0.0:
        raise ValueError(f"tol must be positive, got {tol}")
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must lie in (0,1), got {u}")
    c_gamma = normalizing_constant(gamma)
    gu = float(G(u))
    if d2G is not None:
        g2 = float(d2G(u))
    else:
        h = 3e-4 * min(u, 1.0 - u, 1.0)
        pts = np.array([-2, -1, 0, 1, 2], dtype=np.float64)
        w = np.array([-1.0, 16.0, -30.0, 16.0, -1.0]) / 12.0
        g2 = float(sum(wi * float(G(u + pi * h)) for wi, pi in zip(w, pts)) / h**2)

    def integrand(v):
        return (float(G(v)) - gu) / abs(v - u) ** (1.0 + gamma)

    def far(eps):
        total = 0.0
        if u - eps > 1e-300:
            val, _ = scipy.integrate.quad(
                integrand, 0.0, u - eps, epsabs=tol * 0.02, epsrel=1e-11, limit=400
            )
            total += val
        if u + eps < 1.0:
            val, _ = scipy.integrate.quad(
                integrand, u + eps, 1.0, epsabs=tol * 0.02, epsrel=1e-11, limit=400
            )
            total += val
        return total

    order = 4.0 - gamma
    weight = 2.0**order - 1.0
    eps = 0.5 * min(u, 1.0 - u)
    t_prev = c_gamma * (far(eps) + g2 * eps ** (2.0 - gamma) / (2.0 - gamma))
    r_prev = None
    for _ in range(24):
        eps *= 0.5
        t_cur = c_gamma * (far(eps) + g2 * eps ** (2.0 - gamma) / (2.0 - gamma))
        r_cur = t_cur + (t_cur - t_prev) / weight
        if r_prev is not None and abs(r_cur - r_prev) <= 0.5 * tol:
            return r_cur
        if abs(t_cur - t_prev) <= 0.25 * tol:
            return r_cur
        t_prev, r_prev = t_cur, r_cur
    raise NumericalError(
        f"principal-value refinement did not reach tol={tol} at u={u}"
    )
