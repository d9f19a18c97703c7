# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled event loop; must mirror _engine_py.run_chain draw for draw."""

import numpy as np

cimport numpy as cnp
from libc.math cimport log

cnp.import_array()

ctypedef unsigned long long u64

cdef double INV53 = 1.0 / 9007199254740992.0
cdef u64 GOLDEN = 0x9E3779B97F4A7C15ULL


cdef inline u64 rotl(u64 x, int k) noexcept nogil:
    return (x << k) | (x >> (64 - k))


cdef inline u64 splitmix_next(u64 *state) noexcept nogil:
    cdef u64 z
    state[0] = state[0] + GOLDEN
    z = state[0]
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef struct XoState:
    u64 s0, s1, s2, s3


cdef inline void xo_seed(XoState *st, u64 seed) noexcept nogil:
    cdef u64 sm = seed
    st.s0 = splitmix_next(&sm)
    st.s1 = splitmix_next(&sm)
    st.s2 = splitmix_next(&sm)
    st.s3 = splitmix_next(&sm)
    if st.s0 == 0 and st.s1 == 0 and st.s2 == 0 and st.s3 == 0:
        st.s0 = GOLDEN


cdef inline double xo_double(XoState *st) noexcept nogil:
    cdef u64 result = rotl(st.s1 * 5ULL, 7) * 9ULL
    cdef u64 t = st.s1 << 17
    st.s2 ^= st.s0
    st.s3 ^= st.s1
    st.s1 ^= st.s2
    st.s0 ^= st.s3
    st.s2 ^= t
    st.s3 = rotl(st.s3, 45)
    return <double> (result >> 11) * INV53


def run_chain(
    cnp.uint8_t[::1] occ,
    double t_end,
    double[::1] obs_times,
    double rate_macro,
    double p_swap,
    double[::1] swap_prob,
    long long[::1] swap_alias,
    long long[::1] swap_dz,
    double[::1] flip_prob,
    long long[::1] flip_alias,
    double[::1] acc_empty,
    double[::1] acc_occupied,
    object seed,
    bint record_events,
):
    cdef Py_ssize_t n_sites = occ.shape[0]
    cdef Py_ssize_t n_obs = obs_times.shape[0]
    cdef Py_ssize_t n_swap = swap_dz.shape[0]
    snapshots_arr = np.zeros((n_obs, n_sites), dtype=np.uint8)
    cdef cnp.uint8_t[:, ::1] snapshots = snapshots_arr

    cdef XoState rng
    xo_seed(&rng, <u64> (int(seed) & 0xFFFFFFFFFFFFFFFF))

    cdef long long proposals = 0, swap_proposals = 0, swap_applied = 0
    cdef long long swap_off_lattice = 0, flip_proposals = 0, flip_applied = 0

    cdef Py_ssize_t cap = 1024 if record_events else 0
    ev_t_arr = np.empty(cap, dtype=np.float64)
    ev_x_arr = np.empty(cap, dtype=np.int64)
    ev_y_arr = np.empty(cap, dtype=np.int64)
    cdef double[::1] ev_t = ev_t_arr
    cdef long long[::1] ev_x = ev_x_arr
    cdef long long[::1] ev_y = ev_y_arr
    cdef Py_ssize_t n_ev = 0

    cdef double t = 0.0, t_next, u, a
    cdef Py_ssize_t obs_idx = 0, x, y, j
    cdef cnp.uint8_t tmp

    if rate_macro > 0.0:
        while True:
            u = xo_double(&rng)
            t_next = t + (-log(1.0 - u) / rate_macro)
            while obs_idx < n_obs and obs_times[obs_idx] <= t_next:
                snapshots[obs_idx, :] = occ
                obs_idx += 1
            if t_next > t_end:
                break
            t = t_next
            proposals += 1
            if xo_double(&rng) < p_swap:
                swap_proposals += 1
                x = <Py_ssize_t> (xo_double(&rng) * n_sites)
                j = <Py_ssize_t> (xo_double(&rng) * n_swap)
                if xo_double(&rng) >= swap_prob[j]:
                    j = swap_alias[j]
                y = x + swap_dz[j]
                if 0 <= y < n_sites:
                    if occ[x] != occ[y]:
                        tmp = occ[x]
                        occ[x] = occ[y]
                        occ[y] = tmp
                        swap_applied += 1
                        if record_events:
                            if n_ev == cap:
                                cap *= 2
                                ev_t_arr = np.resize(ev_t_arr, cap)
                                ev_x_arr = np.resize(ev_x_arr, cap)
                                ev_y_arr = np.resize(ev_y_arr, cap)
                                ev_t = ev_t_arr
                                ev_x = ev_x_arr
                                ev_y = ev_y_arr
                            ev_t[n_ev] = t
                            ev_x[n_ev] = x
                            ev_y[n_ev] = y
                            n_ev += 1
                else:
                    swap_off_lattice += 1
            else:
                flip_proposals += 1
                j = <Py_ssize_t> (xo_double(&rng) * n_sites)
                if xo_double(&rng) >= flip_prob[j]:
                    j = flip_alias[j]
                a = acc_occupied[j] if occ[j] else acc_empty[j]
                if xo_double(&rng) < a:
                    occ[j] = 1 - occ[j]
                    flip_applied += 1
                    if record_events:
                        if n_ev == cap:
                            cap *= 2
                            ev_t_arr = np.resize(ev_t_arr, cap)
                            ev_x_arr = np.resize(ev_x_arr, cap)
                            ev_y_arr = np.resize(ev_y_arr, cap)
                            ev_t = ev_t_arr
                            ev_x = ev_x_arr
                            ev_y = ev_y_arr
                        ev_t[n_ev] = t
                        ev_x[n_ev] = j
                        ev_y[n_ev] = -1
                        n_ev += 1
    while obs_idx < n_obs:
        snapshots[obs_idx, :] = occ
        obs_idx += 1

    return {
        "snapshots": snapshots_arr,
        "proposals": int(proposals),
        "swap_proposals": int(swap_proposals),
        "swap_applied": int(swap_applied),
        "swap_off_lattice": int(swap_off_lattice),
        "flip_proposals": int(flip_proposals),
        "flip_applied": int(flip_applied),
        "events_t": ev_t_arr[:n_ev].copy() if record_events else None,
        "events_x": ev_x_arr[:n_ev].copy() if record_events else None,
        "events_y": ev_y_arr[:n_ev].copy() if record_events else None,
    }
