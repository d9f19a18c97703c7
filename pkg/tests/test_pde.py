import numpy as np
import pytest
from scipy.special import betainc

from fracsep.bumps import Bump, TimeModulatedBump, time_space_battery
from fracsep.fracop import GridProfile
from fracsep.kernel import continuum_potentials
from fracsep.pde import (
    EvolutionResult,
    PdeSpec,
    reaction_solution,
    reaction_trajectory,
    solve_evolution,
    solve_stationary,
    weak_residual,
)

GAMMA, ALPHA, BETA = 1.5, 0.2, 0.8


def _spec(**kw):
    N = kw.pop("N", 128)
    base = dict(
        gamma=GAMMA,
        alpha=ALPHA,
        beta=BETA,
        kappa_hat=1.0,
        N_grid=N,
        dt=1e-3,
        T=0.05,
        initial=GridProfile.constant(N, 0.5, ALPHA, BETA),
    )
    base.update(kw)
    return PdeSpec(**base)


class TestPdeSpecValidation:
    @pytest.mark.parametrize(
        "kw",
        [
            dict(dt=0.0),
            dict(dt=-1e-3),
            dict(T=-0.1),
            dict(kappa_hat=-1.0),
            dict(gamma=2.5),
            dict(alpha=0.0),
        ],
    )
    def test_rejects(self, kw):
        with pytest.raises(ValueError):
            _spec(**kw)

    def test_rejects_out_of_range_initial(self):
        with pytest.raises(ValueError):
            _spec(initial=GridProfile.constant(128, 1.5, ALPHA, BETA))

    def test_rejects_grid_mismatch(self):
        with pytest.raises(ValueError):
            _spec(initial=GridProfile.constant(64, 0.5, ALPHA, BETA))


class TestSolveEvolution:
    def test_constant_steady_state(self):
        spec = _spec(alpha=0.3, beta=0.3, initial=GridProfile.constant(128, 0.3, 0.3, 0.3))
        res = solve_evolution(spec)
        assert np.max(np.abs(res.final().values - 0.3)) < 1e-12

    def test_stationary_self_consistency(self):
        st = solve_stationary(GAMMA, ALPHA, BETA, 1.0, 128)
        spec = _spec(initial=st, T=0.2)
        res = solve_evolution(spec)
        drift = max(np.max(np.abs(p.values - st.values)) for p in res.profiles)
        assert drift <= 1e-6

    @pytest.mark.parametrize("kappa_hat", [0.0, 1.0, 100.0])
    def test_maximum_principle(self, kappa_hat):
        rng = np.random.default_rng(5)
        init = GridProfile(128, rng.uniform(0.0, 1.0, size=127), ALPHA, BETA)
        spec = _spec(kappa_hat=kappa_hat, initial=init, T=0.1)
        res = solve_evolution(spec)
        mat = res.value_matrix()
        assert mat.min() >= -1e-8 and mat.max() <= 1.0 + 1e-8

    def test_monotone_in_initial_data(self):
        # Implicit Euler with an M-matrix system preserves pointwise order.
        rng = np.random.default_rng(17)
        for trial in range(5):
            lo = rng.uniform(0.0, 0.7, size=127)
            hi = np.clip(lo + rng.uniform(0.0, 0.3, size=127), 0.0, 1.0)
            res_lo = solve_evolution(_spec(initial=GridProfile(128, lo, ALPHA, BETA)))
            res_hi = solve_evolution(_spec(initial=GridProfile(128, hi, ALPHA, BETA)))
            diff = res_hi.value_matrix() - res_lo.value_matrix()
            assert diff.min() >= -1e-12

    def test_time_grid_hits_horizon(self):
        res = solve_evolution(_spec(T=0.0501, dt=1e-3))
        assert res.times[-1] == pytest.approx(0.0501, rel=1e-12)

    def test_store_every(self):
        res = solve_evolution(_spec(T=0.05, dt=1e-3), store_every=10)
        assert len(res.times) == 6
        assert res.times[-1] == pytest.approx(0.05)

    def test_large_dt_records_warning(self):
        # kappa dt V1(u_1) >> 1: the boundary relaxation outruns the scheme.
        quiet = solve_evolution(_spec(kappa_hat=1.0, dt=1e-3, T=0.01))
        assert quiet.metadata["warnings"] == []
        loud = solve_evolution(_spec(kappa_hat=100.0, dt=0.1, T=0.2))
        assert any("dt large" in w for w in loud.metadata["warnings"])


class TestReactionSolution:
    def test_t_zero_returns_initial(self):
        g = GridProfile.constant(64, 0.5, ALPHA, BETA)
        out = reaction_solution(g, 0.0, 1.0, GAMMA, ALPHA, BETA)
        assert np.array_equal(out.values, g.values)

    def test_constant_fixed_point(self):
        g = GridProfile.constant(64, 0.4, 0.4, 0.4)
        out = reaction_solution(g, 3.0, 2.0, GAMMA, 0.4, 0.4)
        assert np.max(np.abs(out.values - 0.4)) < 1e-14

    def test_long_time_limit_is_rho_inf(self):
        g = GridProfile.constant(256, 0.5, ALPHA, BETA)
        v1_half = continuum_potentials(GAMMA, ALPHA, BETA, 0.5).V1
        out = reaction_solution(g, 1e3 / v1_half, 1.0, GAMMA, ALPHA, BETA)
        rho_inf = continuum_potentials(GAMMA, ALPHA, BETA, g.u).rho_bar_inf
        assert np.max(np.abs(out.values - rho_inf)) <= 1e-6

    def test_errors(self):
        g = GridProfile.constant(64, 0.5, ALPHA, BETA)
        with pytest.raises(ValueError):
            reaction_solution(g, 1.0, 0.0, GAMMA, ALPHA, BETA)
        with pytest.raises(ValueError):
            reaction_solution(g, -1.0, 1.0, GAMMA, ALPHA, BETA)


class TestSolveStationary:
    @pytest.mark.parametrize("kappa_hat", [0.0, 1.0, 100.0])
    def test_constant_when_equal_densities(self, kappa_hat):
        out = solve_stationary(GAMMA, 0.35, 0.35, kappa_hat, 64)
        assert np.max(np.abs(out.values - 0.35)) < 1e-10

    def test_kappa_one_matches_incomplete_beta(self):
        # Exact NESS of the kappa = 1 chain: the harmonic profile of the
        # killed stable process, a regularized incomplete beta function.
        sups = []
        for N in (128, 256, 512):
            out = solve_stationary(GAMMA, ALPHA, BETA, 1.0, N)
            exact = ALPHA + (BETA - ALPHA) * betainc(GAMMA / 2, GAMMA / 2, out.u)
            sups.append(np.max(np.abs(out.values - exact)))
        assert sups[0] < 0.015
        assert sups[2] < sups[1] < sups[0]

    def test_large_kappa_approaches_rho_inf(self):
        out = solve_stationary(GAMMA, ALPHA, BETA, 1e4, 256)
        rho_inf = continuum_potentials(GAMMA, ALPHA, BETA, out.u).rho_bar_inf
        assert np.max(np.abs(out.values - rho_inf)) <= 0.01

    @pytest.mark.parametrize("kappa_hat", [0.0, 1.0, 100.0])
    def test_reflection_identity(self, kappa_hat):
        a = solve_stationary(GAMMA, ALPHA, BETA, kappa_hat, 128)
        b = solve_stationary(GAMMA, BETA, ALPHA, kappa_hat, 128)
        assert np.max(np.abs(b.values - a.values[::-1])) < 1e-12

    def test_regional_mode_rejected_at_zero_kappa(self):
        with pytest.raises(ValueError):
            solve_stationary(GAMMA, ALPHA, BETA, 0.0, 64, mode="regional")

    def test_bounds(self):
        for kap in (0.0, 0.01, 1.0, 1e4):
            out = solve_stationary(GAMMA, ALPHA, BETA, kap, 128)
            assert out.values.min() >= ALPHA - 1e-8
            assert out.values.max() <= BETA + 1e-8


class TestWeakResidual:
    def test_constant_solution_zero_residual(self):
        c = 0.4
        spec = _spec(alpha=c, beta=c, initial=GridProfile.constant(128, c, c, c), T=0.05)
        res = solve_evolution(spec)
        battery = time_space_battery(0.05)
        assert weak_residual("dirichlet", res, battery) < 1e-10

    def test_dirichlet_residual_first_order_in_dt(self):
        battery = time_space_battery(0.05)
        resids = []
        for dt in (4e-3, 2e-3, 1e-3):
            res = solve_evolution(_spec(N=256, dt=dt, T=0.05))
            resids.append(weak_residual("dirichlet", res, battery))
        slope = np.polyfit(np.log([4e-3, 2e-3, 1e-3]), np.log(resids), 1)[0]
        assert resids[2] < resids[1] < resids[0]
        assert 0.8 <= slope <= 1.6

    def test_perturbation_is_detected(self):
        res = solve_evolution(_spec(N=256, T=0.05))
        battery = time_space_battery(0.05)
        base = weak_residual("dirichlet", res, battery)
        bump = 0.1 * Bump(0.5, 0.3).on_grid(256)
        perturbed = EvolutionResult(
            times=res.times,
            profiles=[p.with_values(np.clip(p.values + bump, 0, 1)) for p in res.profiles],
            spec=res.spec,
            metadata=res.metadata,
        )
        assert weak_residual("dirichlet", perturbed, battery) >= 10.0 * base

    def test_reaction_residual_vanishes_for_closed_form(self):
        g = GridProfile.constant(256, 0.5, ALPHA, BETA)
        resids = []
        for n_times in (20, 40, 80):
            times = np.linspace(0.0, 0.5, n_times + 1)
            traj = reaction_trajectory(g, times, 1.0, GAMMA, ALPHA, BETA)
            resids.append(weak_residual("reaction", traj, time_space_battery(0.5)))
        assert resids[2] < resids[1] < resids[0]
        assert resids[2] < 1e-4

    def test_stationary_residual_is_roundoff(self):
        out = solve_stationary(GAMMA, ALPHA, BETA, 1.0, 128)
        battery = time_space_battery(1.0)
        resid = weak_residual(
            "stationary", out, battery, gamma=GAMMA, alpha=ALPHA, beta=BETA, kappa_hat=1.0
        )
        assert resid < 1e-10

    def test_rejects_boundary_touching_test_function(self):
        res = solve_evolution(_spec(T=0.01))
        bad = TimeModulatedBump(space=Bump(0.05, 0.2))
        with pytest.raises(ValueError):
            weak_residual("dirichlet", res, [bad])

    def test_unknown_kind(self):
        res = solve_evolution(_spec(T=0.01))
        with pytest.raises(ValueError):
            weak_residual("parabolic", res, time_space_battery(0.01))
