"""Event-driven kinetic Monte Carlo engine with two interchangeable backends.

The chain is simulated by constant-rate proposals: pair-swap clocks ring at
rate p(y-x) per unordered pair regardless of occupancy (equal-occupancy rings
are no-ops), and reservoir flips are thinned against the bound c_x <= 1.  The
total proposal rate is therefore configuration-independent, which allows O(1)
event sampling from precomputed alias tables.  Rejected and no-op proposals
leave the law of the chain unchanged, so the generator is simulated exactly.

A Cython extension implements the hot loop; a pure-Python twin with the same
RNG and identical arithmetic is selected at import time when the extension is
unavailable (or when FRACSEP_PURE_PY is set).  Both produce bit-identical
trajectories for a given seed.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from .kernel import JumpKernel, ModelParams

__all__ = [
    "SimTables",
    "build_alias",
    "build_tables",
    "run_chain",
    "active_backend",
    "available_backends",
]

try:
    from . import _engine as _compiled
except ImportError:  # pragma: no cover - build-dependent
    _compiled = None

from . import _engine_py as _fallback


def available_backends() -> tuple[str, ...]:
    return ("compiled", "python") if _compiled is not None else ("python",)


def active_backend() -> str:
    """Backend chosen at import: compiled when built, unless overridden."""
    if os.environ.get("FRACSEP_PURE_PY"):
        return "python"
    return "compiled" if _compiled is not None else "python"


def build_alias(weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias tables (prob, alias) for O(1) categorical sampling."""
    w = np.asarray(weights, dtype=np.float64)
    n = w.size
    if n == 0:
        return np.empty(0), np.empty(0, dtype=np.int64)
    if np.any(w < 0.0) or not np.any(w > 0.0):
        raise ValueError("alias weights must be nonnegative with positive total")
    prob = np.empty(n, dtype=np.float64)
    alias = np.arange(n, dtype=np.int64)
    scaled = (w * (n / w.sum())).tolist()
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        g = large.pop()
        prob[s] = scaled[s]
        alias[s] = g
        scaled[g] = (scaled[g] + scaled[s]) - 1.0
        (small if scaled[g] < 1.0 else large).append(g)
    for rest in (small, large):
        while rest:
            prob[rest.pop()] = 1.0
    return prob, alias


@dataclass(frozen=True)
class SimTables:
    """Precomputed sampling tables and rates for one (params, kernel) pair."""

    N: int
    rate_macro: float  # total proposal rate in macroscopic time
    p_swap: float  # probability a proposal is a pair swap
    swap_prob: np.ndarray
    swap_alias: np.ndarray
    swap_dz: np.ndarray
    flip_prob: np.ndarray
    flip_alias: np.ndarray
    acc_empty: np.ndarray  # flip acceptance when the site is vacant
    acc_occupied: np.ndarray
    swap_rate_micro: float
    flip_rate_micro: float
    time_scale: float


def build_tables(
    params: ModelParams, kernel: JumpKernel, disable_reservoirs: bool = False
) -> SimTables:
    if kernel.N != params.N or kernel.gamma != params.gamma:
        raise ValueError(
            "kernel/params mismatch: kernel built for "
            f"(gamma={kernel.gamma}, N={kernel.N}), params have "
            f"(gamma={params.gamma}, N={params.N})"
        )
    N = params.N
    n_sites = N - 1

    # Signed displacements +-1..+-(N-2); proposals leaving the lattice are
    # rejected, which restores the exact pair rates.
    max_dz = N - 2
    if max_dz > 0:
        mags = np.arange(1, max_dz + 1, dtype=np.float64)
        pz = kernel.c_gamma * mags ** (-(1.0 + kernel.gamma))
        swap_dz = np.concatenate([np.arange(1, max_dz + 1), -np.arange(1, max_dz + 1)])
        weights = np.concatenate([pz, pz])
        swap_prob, swap_alias = build_alias(weights)
        trunc_mass = weights.sum()
    else:
        swap_dz = np.empty(0, dtype=np.int64)
        swap_prob = np.empty(0)
        swap_alias = np.empty(0, dtype=np.int64)
        trunc_mass = 0.0
    swap_rate = 0.5 * n_sites * trunc_mass

    r_minus = kernel.tail_left
    r_plus = kernel.tail_right
    site_weight = r_minus + r_plus
    flip_prob, flip_alias = build_alias(site_weight)
    acc_empty = (params.alpha * r_minus + params.beta * r_plus) / site_weight
    acc_occupied = ((1.0 - params.alpha) * r_minus + (1.0 - params.beta) * r_plus) / site_weight
    flip_rate = 0.0 if disable_reservoirs else params.reservoir_factor * site_weight.sum()

    total = swap_rate + flip_rate
    return SimTables(
        N=N,
        rate_macro=params.time_scale * total,
        p_swap=swap_rate / total if total > 0.0 else 0.0,
        swap_prob=swap_prob,
        swap_alias=swap_alias,
        swap_dz=np.ascontiguousarray(swap_dz, dtype=np.int64),
        flip_prob=flip_prob,
        flip_alias=flip_alias,
        acc_empty=acc_empty,
        acc_occupied=acc_occupied,
        swap_rate_micro=swap_rate,
        flip_rate_micro=flip_rate,
        time_scale=params.time_scale,
    )


def run_chain(
    occ: np.ndarray,
    t_end: float,
    obs_times: np.ndarray,
    tables: SimTables,
    seed: int,
    record_events: bool = False,
    backend: str | None = None,
) -> dict:
    """Advance one trajectory to t_end (macro time), mutating ``occ``.

    Returns snapshots at ``obs_times``, proposal/acceptance counters, and,
    when ``record_events`` is set, the full list of state-changing events.
    """
    if backend is None:
        backend = active_backend()
    occ = np.ascontiguousarray(occ, dtype=np.uint8)
    obs_times = np.ascontiguousarray(obs_times, dtype=np.float64)
    args = (
        occ,
        float(t_end),
        obs_times,
        float(tables.rate_macro),
        float(tables.p_swap),
        tables.swap_prob,
        tables.swap_alias,
        tables.swap_dz,
        tables.flip_prob,
        tables.flip_alias,
        tables.acc_empty,
        tables.acc_occupied,
        int(seed),
        bool(record_events),
    )
    if backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled engine requested but not built")
        return _compiled.run_chain(*args)
    if backend == "python":
        return _fallback.run_chain(*args)
    raise ValueError(f"unknown backend {backend!r}")
