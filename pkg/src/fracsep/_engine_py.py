"""Pure-Python event loop; reference twin of the Cython engine.

The xoshiro256** update is inlined for speed but follows rng.Xoshiro256
operation for operation, so the draw sequence (and hence every trajectory)
is bit-identical to the compiled backend.
"""

from __future__ import annotations

from math import log

import numpy as np

from .rng import seed_state

_MASK = 0xFFFFFFFFFFFFFFFF
_INV53 = 1.0 / 9007199254740992.0


def run_chain(
    occ,
    t_end,
    obs_times,
    rate_macro,
    p_swap,
    swap_prob,
    swap_alias,
    swap_dz,
    flip_prob,
    flip_alias,
    acc_empty,
    acc_occupied,
    seed,
    record_events,
):
    n_sites = occ.shape[0]
    n_obs = obs_times.shape[0]
    snapshots = np.zeros((n_obs, n_sites), dtype=np.uint8)

    state = [int(v) for v in occ]
    swap_prob_l = swap_prob.tolist()
    swap_alias_l = swap_alias.tolist()
    swap_dz_l = swap_dz.tolist()
    n_swap = len(swap_dz_l)
    flip_prob_l = flip_prob.tolist()
    flip_alias_l = flip_alias.tolist()
    acc0 = acc_empty.tolist()
    acc1 = acc_occupied.tolist()
    obs_l = obs_times.tolist()

    s0, s1, s2, s3 = seed_state(seed)

    def next_double():
        nonlocal s0, s1, s2, s3
        result = (((((s1 * 5) & _MASK) << 7 | ((s1 * 5) & _MASK) >> 57) & _MASK) * 9) & _MASK
        t = (s1 << 17) & _MASK
        s2 ^= s0
        s3 ^= s1
        s1 ^= s2
        s0 ^= s3
        s2 ^= t
        s3 = ((s3 << 45) | (s3 >> 19)) & _MASK
        return (result >> 11) * _INV53

    proposals = 0
    swap_proposals = 0
    swap_applied = 0
    swap_off_lattice = 0
    flip_proposals = 0
    flip_applied = 0
    ev_t = []
    ev_x = []
    ev_y = []

    t = 0.0
    obs_idx = 0
    if rate_macro > 0.0:
        while True:
            u = next_double()
            t_next = t + (-log(1.0 - u) / rate_macro)
            while obs_idx < n_obs and obs_l[obs_idx] <= t_next:
                snapshots[obs_idx, :] = state
                obs_idx += 1
            if t_next > t_end:
                break
            t = t_next
            proposals += 1
            if next_double() < p_swap:
                swap_proposals += 1
                x = int(next_double() * n_sites)  # 0-based site index
                j = int(next_double() * n_swap)
                if next_double() >= swap_prob_l[j]:
                    j = swap_alias_l[j]
                y = x + swap_dz_l[j]
                if 0 <= y < n_sites:
                    if state[x] != state[y]:
                        state[x], state[y] = state[y], state[x]
                        swap_applied += 1
                        if record_events:
                            ev_t.append(t)
                            ev_x.append(x)
                            ev_y.append(y)
                else:
                    swap_off_lattice += 1
            else:
                flip_proposals += 1
                j = int(next_double() * n_sites)
                if next_double() >= flip_prob_l[j]:
                    j = flip_alias_l[j]
                a = acc1[j] if state[j] else acc0[j]
                if next_double() < a:
                    state[j] = 1 - state[j]
                    flip_applied += 1
                    if record_events:
                        ev_t.append(t)
                        ev_x.append(j)
                        ev_y.append(-1)
    while obs_idx < n_obs:
        snapshots[obs_idx, :] = state
        obs_idx += 1

    occ[:] = state
    return {
        "snapshots": snapshots,
        "proposals": proposals,
        "swap_proposals": swap_proposals,
        "swap_applied": swap_applied,
        "swap_off_lattice": swap_off_lattice,
        "flip_proposals": flip_proposals,
        "flip_applied": flip_applied,
        "events_t": np.asarray(ev_t, dtype=np.float64) if record_events else None,
        "events_x": np.asarray(ev_x, dtype=np.int64) if record_events else None,
        "events_y": np.asarray(ev_y, dtype=np.int64) if record_events else None,
    }
