"""Continuous-time exclusion-process simulator and empirical observables.

The chain lives on sites 1..N-1 (array index x-1), swaps unordered pairs at
rate p(y-x) and flips site x at rate kappa N^-theta [r^-(x/N) c_x(alpha) +
r^+(x/N) c_x(beta)], everything sped up by the time scale N^(gamma+theta) so
that trajectories are parametrised by macroscopic time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import engine
from .kernel import JumpKernel, ModelParams
from .rng import Xoshiro256

__all__ = [
    "Configuration",
    "SimResult",
    "MartingaleSeries",
    "sample_initial",
    "simulate",
    "empirical_pairing",
    "track_martingale",
]

# Above this lattice size snapshots are stored as binned density profiles.
FULL_SNAPSHOT_LIMIT = 4096
_BINNED_CELLS = 1024


@dataclass(frozen=True)
class Configuration:
    """Occupation state of sites 1..N-1; entry x-1 is eta_x in {0,1}."""

    occupancy: np.ndarray
    particle_count: int = field(default=-1)

    def __post_init__(self):
        occ = np.ascontiguousarray(self.occupancy, dtype=np.uint8)
        if occ.ndim != 1:
            raise ValueError("occupancy must be a 1-d array")
        if np.any(occ > 1):
            raise ValueError("occupancy entries must be 0 or 1")
        occ.setflags(write=False)
        object.__setattr__(self, "occupancy", occ)
        object.__setattr__(self, "particle_count", int(occ.sum()))

    @property
    def n_sites(self) -> int:
        return self.occupancy.shape[0]


@dataclass(frozen=True)
class SimResult:
    """One trajectory: snapshots at requested macro times plus bookkeeping.

    ``snapshots`` is (n_obs, N-1) uint8 when ``binned`` is False, otherwise
    (n_obs, n_cells) float64 cell-mean densities.  ``events`` is None unless
    the run recorded every state change (dense mode).
    """

    times: np.ndarray
    snapshots: np.ndarray
    event_count: int
    rng_seed: int
    elapsed_micro_time: float
    counters: dict
    n_sites: int
    binned: bool = False
    initial: Configuration | None = None
    events: tuple[np.ndarray, np.ndarray, np.ndarray] | None = None

    def configuration(self, i: int) -> Configuration:
        if self.binned:
            raise ValueError("trajectory stored binned profiles, not configurations")
        return Configuration(self.snapshots[i])

    def snapshot_items(self):
        """Iterate (macro_time, Configuration-or-binned-profile) pairs."""
        for i, t in enumerate(self.times):
            yield float(t), (
                self.snapshots[i] if self.binned else Configuration(self.snapshots[i])
            )


def sample_initial(g, N: int, seed: int) -> Configuration:
    """Product measure: site x occupied independently with probability g(x/N)."""
    u = np.arange(1, N, dtype=np.float64) / N
    try:
        vals = np.asarray(g(u), dtype=np.float64)
        if vals.shape != u.shape:
            raise TypeError
    except (TypeError, ValueError):
        vals = np.asarray([float(g(ui)) for ui in u])
    if np.any(vals < 0.0) or np.any(vals > 1.0):
        raise ValueError("initial profile must take values in [0,1]")
    rng = Xoshiro256(seed)
    draws = np.asarray([rng.next_double() for _ in range(N - 1)])
    return Configuration((draws < vals).astype(np.uint8))


def _bin_profile(rows: np.ndarray) -> np.ndarray:
    n_sites = rows.shape[1]
    edges = np.linspace(0, n_sites, _BINNED_CELLS + 1).astype(np.int64)
    out = np.empty((rows.shape[0], _BINNED_CELLS))
    for c in range(_BINNED_CELLS):
        out[:, c] = rows[:, edges[c] : edges[c + 1]].mean(axis=1)
    return out


def simulate(
    params: ModelParams,
    kernel: JumpKernel,
    init: Configuration,
    t_end: float,
    observe_at,
    seed: int,
    record_events: bool = False,
    disable_reservoirs: bool = False,
    backend: str | None = None,
) -> SimResult:
    """Run one trajectory; fully deterministic given the seed.

    Snapshots are the state just before any event happening exactly at an
    observation time (left limits; a measure-zero convention).
    """
    if t_end < 0.0:
        raise ValueError(f"t_end must be nonnegative, got {t_end}")
    obs = np.asarray(list(observe_at), dtype=np.float64)
    if obs.size and (np.any(obs < 0.0) or np.any(obs > t_end)):
        raise ValueError("observation times must lie in [0, t_end]")
    if obs.size > 1 and np.any(np.diff(obs) <= 0.0):
        raise ValueError("observation times must be strictly increasing")
    if init.n_sites != params.N - 1:
        raise ValueError(
            f"initial configuration has {init.n_sites} sites, expected {params.N - 1}"
        )
    tables = engine.build_tables(params, kernel, disable_reservoirs=disable_reservoirs)
    occ = init.occupancy.copy()
    out = engine.run_chain(
        occ, t_end, obs, tables, seed, record_events=record_events, backend=backend
    )
    snapshots = out["snapshots"]
    binned = params.N > FULL_SNAPSHOT_LIMIT
    if binned:
        snapshots = _bin_profile(snapshots)
    events = None
    if record_events:
        events = (out["events_t"], out["events_x"], out["events_y"])
    counters = {
        k: out[k]
        for k in (
            "proposals",
            "swap_proposals",
            "swap_applied",
            "swap_off_lattice",
            "flip_proposals",
            "flip_applied",
        )
    }
    return SimResult(
        times=obs,
        snapshots=snapshots,
        event_count=out["swap_applied"] + out["flip_applied"],
        rng_seed=int(seed),
        elapsed_micro_time=t_end * params.time_scale,
        counters=counters,
        n_sites=params.N - 1,
        binned=binned,
        initial=init,
        events=events,
    )


def empirical_pairing(config: Configuration, G: np.ndarray) -> float:
    """Pairing of the empirical measure with a grid function:
    (1/(N-1)) sum_x G(x/N) eta_x."""
    G = np.asarray(G, dtype=np.float64)
    if G.shape != (config.n_sites,):
        raise ValueError(
            f"grid function has shape {G.shape}, expected ({config.n_sites},)"
        )
    return float(G @ config.occupancy) / config.n_sites


@dataclass(frozen=True)
class MartingaleSeries:
    """Dynkin martingale M_t and its accumulated quadratic variation QV_t,
    evaluated right after every recorded event (t[0] = 0)."""

    t: np.ndarray
    M: np.ndarray
    QV: np.ndarray

    def at(self, when: float) -> tuple[float, float]:
        i = int(np.searchsorted(self.t, when, side="right") - 1)
        return float(self.M[i]), float(self.QV[i])


def track_martingale(
    params: ModelParams,
    kernel: JumpKernel,
    G: np.ndarray,
    trajectory: SimResult,
) -> MartingaleSeries:
    """Replay a dense trajectory and accumulate M_t(G) and its carre du champ.

    M_t = <pi_t, G> - <pi_0, G> - int_0^t Theta(N) L_N <pi_s, G> ds, with the
    compensator summed exactly between events (the integrand is piecewise
    constant along the jump chain).  QV_t integrates
    Theta(N) [L_N <pi,G>^2 - 2 <pi,G> L_N <pi,G>].
    """
    if trajectory.events is None:
        raise ValueError("trajectory lacks per-event resolution; rerun with record_events=True")
    if trajectory.initial is None:
        raise ValueError("trajectory does not carry its initial configuration")
    N = params.N
    n = N - 1
    G = np.asarray(G, dtype=np.float64)
    if G.shape != (n,):
        raise ValueError(f"grid function has shape {G.shape}, expected ({n},)")
    if abs(G[0]) > 0.0 or abs(G[-1]) > 0.0:
        raise ValueError("test function must vanish near the grid endpoints")

    theta_fac = params.reservoir_factor
    time_scale = params.time_scale
    r_minus = kernel.tail_left
    r_plus = kernel.tail_right

    # p(j-i) for interior pairs, and the bulk mass d_x leaving site x.
    z = np.arange(-(n - 1), n, dtype=np.float64)
    az = np.where(z == 0, 1.0, np.abs(z))
    pk = np.where(z == 0, 0.0, kernel.c_gamma * az ** (-(1.0 + kernel.gamma)))
    d = 1.0 - r_minus - r_plus
    lg = np.convolve(G, pk, mode="valid") - d * G  # (L_N G)(x/N), unscaled

    # Compensator integrand: S(eta) = a . eta + a0 (times Theta/(N-1)).
    a_lin = lg - theta_fac * G * (r_minus + r_plus)
    a_const = theta_fac * float(G @ (r_minus * params.alpha + r_plus * params.beta))

    # Carre du champ: swap part uses W[x,y] = (G_x - G_y)^2 p(y-x).
    idx = np.arange(n)
    W = (G[:, None] - G[None, :]) ** 2 * pk[idx[None, :] - idx[:, None] + (n - 1)]
    flip_w0 = G**2 * (r_minus * params.alpha + r_plus * params.beta)
    flip_w1 = G**2 * (r_minus * (1.0 - params.alpha) + r_plus * (1.0 - params.beta))

    eta = trajectory.initial.occupancy.astype(np.float64)
    q0 = float(G @ eta) / n
    s_val = (time_scale / n) * (float(a_lin @ eta) + a_const)
    swap_qv = 0.5 * float(eta @ (W @ (1.0 - eta)) + (1.0 - eta) @ (W @ eta))
    flip_qv = theta_fac * float(np.where(eta > 0.5, flip_w1, flip_w0).sum())
    gamma_val = (time_scale / n**2) * (swap_qv + flip_qv)

    ev_t, ev_x, ev_y = trajectory.events
    n_ev = ev_t.shape[0]
    t_end = trajectory.elapsed_micro_time / time_scale
    out_t = np.empty(n_ev + 2)
    out_m = np.empty(n_ev + 2)
    out_qv = np.empty(n_ev + 2)
    out_t[0] = 0.0
    out_m[0] = 0.0
    out_qv[0] = 0.0

    comp = 0.0
    qv = 0.0
    t_prev = 0.0
    for k in range(n_ev):
        te = ev_t[k]
        dt = te - t_prev
        comp += s_val * dt
        qv += gamma_val * dt
        x = int(ev_x[k])
        y = int(ev_y[k])
        row_x_old = float(W[x] @ (eta != eta[x]))
        if y < 0:  # reservoir flip at x
            eta[x] = 1.0 - eta[x]
            s_val += (time_scale / n) * a_lin[x] * (2.0 * eta[x] - 1.0)
            swap_qv += float(W[x] @ (eta != eta[x])) - row_x_old
            flip_qv += theta_fac * (
                (flip_w1[x] - flip_w0[x]) * (2.0 * eta[x] - 1.0)
            )
        else:  # swap x <-> y
            row_y_old = float(W[y] @ (eta != eta[y]))
            pair_old = W[x, y] * (eta[x] != eta[y])
            eta[x], eta[y] = eta[y], eta[x]
            s_val += (time_scale / n) * (a_lin[x] - a_lin[y]) * (eta[x] - eta[y])
            row_x_new = float(W[x] @ (eta != eta[x]))
            row_y_new = float(W[y] @ (eta != eta[y]))
            pair_new = W[x, y] * (eta[x] != eta[y])
            swap_qv += (row_x_new + row_y_new - pair_new) - (
                row_x_old + row_y_old - pair_old
            )
            flip_qv += theta_fac * (
                (flip_w1[x] - flip_w0[x]) * (eta[x] - eta[y])
                + (flip_w1[y] - flip_w0[y]) * (eta[y] - eta[x])
            )
        gamma_val = (time_scale / n**2) * (swap_qv + flip_qv)
        t_prev = te
        out_t[k + 1] = te
        out_m[k + 1] = float(G @ eta) / n - q0 - comp
        out_qv[k + 1] = qv
    # Final quiet stretch up to the end of the run.
    comp += s_val * (t_end - t_prev)
    qv += gamma_val * (t_end - t_prev)
    out_t[-1] = t_end
    out_m[-1] = float(G @ eta) / n - q0 - comp
    out_qv[-1] = qv
    return MartingaleSeries(t=out_t, M=out_m, QV=out_qv)
