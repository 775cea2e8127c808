"""Fokker-Planck march: conservation, exact constant-rate decay, discrete
equilibrium, internal consistency, grid-refinement contraction, refusals.
"""
import math

import numpy as np
import pytest

from kol import ratefn
from kol.errors import ConfigurationError
from kol.pde import (
    FPGrid,
    default_domain,
    solve_fokker_planck,
    survival_from_pde,
)
from kol.sde import OUParams

NO_KILL = ratefn.PiecewiseConstant(c_plus=0.0)
UNIT_RATE = ratefn.PiecewiseConstant(c_plus=1.0)


class TestDefaultDomain:
    def test_formula(self):
        assert default_domain(1.0) == (-40.0, 40.0)
        assert default_domain(0.04) == (-200.0, 200.0)
        # the eps floor keeps the drift-free domain finite
        assert default_domain(0.0) == (-400.0, 400.0)
        assert default_domain(1e-4) == (-400.0, 400.0)


class TestPureDiffusion:
    def solve(self):
        grid = FPGrid(x_min=-12.0, x_max=12.0, n_nodes=601, dt=1e-3,
                      t_max=1.0)
        return grid, solve_fokker_planck(OUParams(eps=0.0), NO_KILL, grid)

    def test_mass_conserved(self):
        _, sol = self.solve()
        assert np.max(np.abs(sol.big_n - 1.0)) <= 1e-10
        assert sol.diagnostics["mass_residual_max"] <= 1e-12
        assert sol.diagnostics["removed_total"] == 0.0
        assert np.all(sol.n == 0.0)

    def test_variance_grows_linearly(self):
        grid, sol = self.solve()
        t_end = sol.times[-1]
        (_, x, f) = solve_fokker_planck(
            OUParams(eps=0.0), NO_KILL, grid, snapshot_times=(t_end,)
        ).snapshots[0]
        var = np.trapezoid(x * x * f, dx=grid.h)
        sigma0 = grid.effective_sigma0()
        expect = sigma0 ** 2 + 2.0 * t_end
        assert var == pytest.approx(expect, rel=1e-2)

    def test_density_stays_nonnegative(self):
        _, sol = self.solve()
        assert sol.diagnostics["min_density"] >= -1e-12


class TestConstantRateDecay:
    def test_exact_exponential(self):
        # spatially constant rate: Strang's e^{-c dt/2} factors make the
        # decay exact per step, so only roundoff accumulates
        c = 0.8
        rate = ratefn.Tabulated(knots=((-1.0, c), (1.0, c)))
        grid = FPGrid(x_min=-20.0, x_max=20.0, n_nodes=801, dt=1e-3,
                      t_max=4.0)
        sol = solve_fokker_planck(OUParams(eps=0.0), rate, grid)
        expect = np.exp(-c * sol.times)
        assert np.max(np.abs(sol.big_n / expect - 1.0)) <= 1e-9
        assert not sol.diagnostics["boundary_flagged"]
        # n = c * N for a constant rate
        assert np.max(np.abs(sol.n - c * sol.big_n)) <= 1e-9


class TestDiscreteEquilibrium:
    def test_stationary_gaussian_is_fixed_point(self):
        # the Chang-Cooper weights make the sampled stationary Gaussian an
        # exact equilibrium of the discrete flux, so the profile must not
        # drift by more than solver roundoff over thousands of steps
        eps = 0.04
        sd = 1.0 / math.sqrt(eps)
        grid = FPGrid(x_min=-30.0, x_max=30.0, n_nodes=1201, dt=1e-3,
                      t_max=2.0, sigma0=sd)
        sol = solve_fokker_planck(OUParams(eps=eps, x0=0.0), NO_KILL, grid,
                                  snapshot_times=(0.0, 2.0))
        (_, _, f0), (_, _, f1) = sol.snapshots
        drift = np.max(np.abs(f1 - f0)) / np.max(f0)
        assert drift <= 1e-9
        assert np.max(np.abs(sol.big_n - 1.0)) <= 1e-10


class TestKilledRun:
    @staticmethod
    @pytest.fixture(scope="class")
    def sol():
        # surviving mass drifts left and spreads to sd ~ sqrt(2t) ~ 7.7, so
        # the domain must reach far enough that the walls never see it
        grid = FPGrid(x_min=-60.0, x_max=60.0, n_nodes=2401, dt=1e-3,
                      t_max=30.0)
        return solve_fokker_planck(OUParams(eps=1e-2), UNIT_RATE, grid)

    def test_survival_monotone(self, sol):
        assert np.all(np.diff(sol.big_n) <= 1e-15)
        assert sol.big_n[0] == pytest.approx(1.0, abs=1e-12)

    def test_density_rate_consistency(self, sol):
        # -dN/dt == n(t): central differences on the stored series; the
        # first few steps are skipped because n(t) still has t^{-5/2}-scale
        # curvature there and the difference quotient is the limiting error
        dt = sol.times[1] - sol.times[0]
        lhs = -(sol.big_n[2:] - sol.big_n[:-2]) / (2.0 * dt)
        diff = np.abs(lhs - sol.n[1:-1])
        assert np.max(diff[5:]) <= 1e-4

    def test_mass_ledger(self, sol):
        assert sol.diagnostics["mass_residual_max"] <= 1e-8
        total = sol.big_n[-1] + sol.diagnostics["removed_total"]
        assert total == pytest.approx(1.0, abs=1e-8)
        assert not sol.diagnostics["boundary_flagged"]

    def test_survival_curve_view(self, sol):
        curve = survival_from_pde(sol)
        assert curve.times[0] == 0.0
        assert curve.survival[0] == pytest.approx(1.0, abs=1e-12)
        assert not curve.censored_mass
        # evaluate() reproduces the stored series at grid times
        k = 500
        assert curve.evaluate(float(sol.times[k])) == pytest.approx(
            min(sol.big_n[k], 1.0), abs=1e-15)


class TestRefinementContraction:
    @staticmethod
    def _survival_changes(rate, t_end=5.0, c_dt=0.4):
        values = []
        for n_nodes in (401, 801, 1601):
            grid_h = 40.0 / (n_nodes - 1)
            grid = FPGrid(x_min=-20.0, x_max=20.0, n_nodes=n_nodes,
                          dt=c_dt * grid_h ** 2, t_max=t_end, sigma0=0.5)
            sol = solve_fokker_planck(OUParams(eps=1e-2), rate, grid)
            values.append(float(sol.big_n[-1]))
        change1 = abs(values[1] - values[0])
        change2 = abs(values[2] - values[1])
        return change1, change2

    def test_smooth_rate_contracts_at_second_order(self):
        # halving h with dt proportional to h^2 should shrink successive
        # solution changes ~4x when the kill rate is smooth (measured 0.25)
        smooth = ratefn.Arctan(stiffness=1.5, offset=math.pi / 2)
        change1, change2 = self._survival_changes(smooth)
        assert change2 <= 0.4 * change1

    def test_half_space_rate_contracts_at_first_order(self):
        # a kill rate with a jump on a grid node costs one order: the node
        # at the jump kills its full trapezoid cell, an O(h) perturbation,
        # so successive changes shrink ~2x (measured 0.51), not 4x
        change1, change2 = self._survival_changes(UNIT_RATE)
        assert 0.40 * change1 <= change2 <= 0.62 * change1


class TestSnapshots:
    def test_requested_times_and_masses(self):
        grid = FPGrid(x_min=-10.0, x_max=10.0, n_nodes=401, dt=1e-3,
                      t_max=1.0)
        sol = solve_fokker_planck(OUParams(eps=0.1), UNIT_RATE, grid,
                                  snapshot_times=(0.5, 0.0, 1.0))
        assert [s[0] for s in sol.snapshots] == [0.0, 0.5, 1.0]
        for t, x, f in sol.snapshots:
            assert np.array_equal(x, grid.nodes)
            k = int(round(t / grid.dt))
            mass = np.trapezoid(f, dx=grid.h)
            assert mass == pytest.approx(float(sol.big_n[k]), abs=1e-12)
            assert np.all(f >= -1e-12)

    def test_snapshot_between_steps_snaps_to_nearest(self):
        grid = FPGrid(x_min=-10.0, x_max=10.0, n_nodes=101, dt=1e-2,
                      t_max=0.5)
        sol = solve_fokker_planck(OUParams(eps=0.0), NO_KILL, grid,
                                  snapshot_times=(0.123,))
        assert sol.snapshots[0][0] == pytest.approx(0.12)


class TestRefusals:
    def test_deep_exponential_horizon_refused(self):
        grid = FPGrid(x_min=-400.0, x_max=400.0, n_nodes=1601, dt=0.1,
                      t_max=2e5)
        with pytest.raises(ConfigurationError,
                           match="impractically wide grid"):
            solve_fokker_planck(OUParams(eps=1e-2), UNIT_RATE, grid)

    def test_narrow_mollification_refused(self):
        with pytest.raises(ConfigurationError, match="sigma0 must be >="):
            FPGrid(x_min=-10.0, x_max=10.0, n_nodes=101, dt=1e-3,
                   t_max=1.0, sigma0=0.1)  # 3h = 0.6

    def test_start_near_wall_refused(self):
        grid = FPGrid(x_min=-10.0, x_max=10.0, n_nodes=401, dt=1e-3,
                      t_max=1.0)
        with pytest.raises(ConfigurationError, match="too close to the wall"):
            solve_fokker_planck(OUParams(eps=0.0, x0=-9.9), NO_KILL, grid)

    def test_grid_validation(self):
        with pytest.raises(ConfigurationError):
            FPGrid(x_min=1.0, x_max=10.0, n_nodes=101, dt=1e-3, t_max=1.0)
        with pytest.raises(ConfigurationError):
            FPGrid(x_min=-10.0, x_max=10.0, n_nodes=8, dt=1e-3, t_max=1.0)
        with pytest.raises(ConfigurationError):
            FPGrid(x_min=-10.0, x_max=10.0, n_nodes=101, dt=0.0, t_max=1.0)
        with pytest.raises(ConfigurationError):
            FPGrid(x_min=-10.0, x_max=10.0, n_nodes=101, dt=1e-3, t_max=1e-4)

    def test_unusable_rate_refused(self):
        from kol.errors import InvalidSpecError
        grid = FPGrid(x_min=-10.0, x_max=10.0, n_nodes=101, dt=1e-3,
                      t_max=1.0)
        with pytest.raises(InvalidSpecError):
            solve_fokker_planck(OUParams(eps=0.0), object(), grid)
