import numpy as np
import pytest
from scipy.optimize import brentq

from redimlab.errors import BracketSearchError, DimensionMismatchError
from redimlab.mm import MmParams, build_scenarios, mm_equilibrium, mm_model
from redimlab.model import ModelDefinition
from redimlab.pde import (Profile1D, SolverConfig, constant_profile,
                          fast_projection, linear_ramp_profile,
                          march_to_steady, semidiscretize, simulate_transient,
                          step_implicit, uniform_grid)
from redimlab.pipeline import benchmark_decomposition, transform_profile
from redimlab.testsystems import heat_model


class TestSemidiscretize:
    def test_zero_delta_is_pure_reaction(self):
        model = mm_model()
        profile = linear_ramp_profile([0.0, 0.7, 0.7], [2.0, 0.0, 1.0], 21)
        rhs = semidiscretize(model, 0.0, profile)
        out = rhs(profile.fields)
        for i in (0, 10, 20):
            np.testing.assert_allclose(out[:, i], model.rhs(profile.fields[:, i]))

    def test_equilibrium_constant_profile_is_stationary(self):
        model = mm_model()
        eq = mm_equilibrium()
        profile = constant_profile(eq, 31)
        rhs = semidiscretize(model, 0.01, profile)
        assert np.max(np.abs(rhs(profile.fields))) < 1e-10

    def test_heat_rhs_sine(self):
        n, delta = 200, 0.01
        x = uniform_grid(n)
        profile = Profile1D(grid_x=x, fields=np.sin(np.pi * x)[None, :],
                            left_bc=[0.0], right_bc=[0.0])
        rhs = semidiscretize(heat_model(), delta, profile)
        expected = -delta * np.pi**2 * np.sin(np.pi * x)
        rel = np.max(np.abs(rhs(profile.fields)[0] - expected)) / np.max(np.abs(expected))
        assert rel < 1e-3


class TestStepImplicit:
    def test_scalar_linear_exact(self):
        lam, dt = 4.0, 0.3
        y0 = np.array([2.0])
        y1 = step_implicit(lambda y: -lam * y, y0, dt)
        np.testing.assert_allclose(y1, y0 / (1 + lam * dt), atol=1e-12)

    def test_zero_rhs_identity(self):
        y0 = np.array([[1.0, 2.0], [3.0, 4.0]])
        y1 = step_implicit(lambda y: np.zeros_like(y), y0, 0.5)
        np.testing.assert_array_equal(y1, y0)

    def test_trapezoidal_scalar(self):
        lam, dt = 4.0, 0.3
        y0 = np.array([2.0])
        y1 = step_implicit(lambda y: -lam * y, y0, dt, scheme="trapezoidal")
        expected = y0 * (1 - lam * dt / 2) / (1 + lam * dt / 2)
        np.testing.assert_allclose(y1, expected, atol=1e-12)

    def test_unconditionally_contractive(self):
        for lam in (0.5, 5.0, 500.0):
            for dt in np.logspace(-3, 3, 7):
                y1 = step_implicit(lambda y: -lam * y, np.array([1.0]), dt)
                assert abs(y1[0]) < 1.0


class TestHeatEquation:
    def run_heat(self, n, dt, t_end, scheme="implicit_euler", delta=0.01):
        x = uniform_grid(n)
        initial = Profile1D(grid_x=x, fields=np.sin(np.pi * x)[None, :],
                            left_bc=[0.0], right_bc=[0.0])
        config = SolverConfig(dt=dt, n_interior=n, delta=delta, scheme=scheme)
        final = simulate_transient(heat_model(), config, initial, [t_end])[0]
        exact = np.exp(-delta * np.pi**2 * t_end) * np.sin(np.pi * x)
        return np.max(np.abs(final.fields[0] - exact)), np.max(np.abs(exact))

    def test_transient_matches_closed_form(self):
        err, amp = self.run_heat(200, 1e-3, 0.1)
        assert err / amp < 1e-3

    def test_second_order_spatial_convergence(self):
        errors = {n: self.run_heat(n, 1e-3, 0.1, scheme="trapezoidal")[0]
                  for n in (50, 100, 200)}
        assert 3.0 <= errors[50] / errors[100] <= 5.0
        assert 3.0 <= errors[100] / errors[200] <= 5.0


class TestMarchToSteady:
    def test_already_stationary_returns_immediately(self):
        model = mm_model()
        eq = mm_equilibrium()
        profile = constant_profile(eq, 19)
        config = SolverConfig(n_interior=19)
        out = march_to_steady(model, config, profile)
        assert out.converged
        assert out.time == profile.time  # no steps taken

    def test_mm_far_scenario_converges(self):
        d = benchmark_decomposition()
        scen = build_scenarios(MmParams(), d)["far"]
        from redimlab.mm import scenario_initial_profile

        initial = scenario_initial_profile(scen, 99)
        config = SolverConfig(n_interior=99)
        steady = march_to_steady(mm_model(), config, initial)
        assert steady.converged
        # boundary data preserved exactly
        np.testing.assert_array_equal(steady.left_bc, initial.left_bc)
        np.testing.assert_array_equal(steady.right_bc, initial.right_bc)
        # fast residual small in the interior, large in the boundary layer
        dec = transform_profile(d, steady)
        sps_fast = lambda i: d.Zf_tilde @ mm_model().rhs(steady.fields[:, i])
        mid = abs(sps_fast(49)[0])
        edge = abs(sps_fast(98)[0])
        assert mid < 0.05 * edge

    def test_steady_output_feeds_back_quickly(self):
        model = mm_model()
        d = benchmark_decomposition()
        scen = build_scenarios(MmParams(), d)["far"]
        from redimlab.mm import scenario_initial_profile

        config = SolverConfig(n_interior=49)
        steady = march_to_steady(model, config, scenario_initial_profile(scen, 49))
        again = march_to_steady(model, config, steady)
        assert again.converged
        assert again.time == steady.time  # stationarity check short-circuits

    def test_non_convergence_is_flagged(self):
        d = benchmark_decomposition()
        scen = build_scenarios(MmParams(), d)["far"]
        from redimlab.mm import scenario_initial_profile

        config = SolverConfig(n_interior=29, t_max=0.01)
        out = march_to_steady(mm_model(), config, scenario_initial_profile(scen, 29))
        assert out.converged is False


class TestFastProjection:
    def setup_method(self):
        self.d = benchmark_decomposition()
        self.model = mm_model()
        self.residual = lambda s: self.d.Zf_tilde @ self.model.rhs(s)

    def test_boundary_state_lands_on_manifold(self):
        projected = fast_projection(self.d, np.array([2.0, 0.0, 1.0]),
                                    self.residual)
        assert abs(self.residual(projected)[0]) < 1e-8
        # oracle: direct 1D bisection along the fast coordinate
        from redimlab.gql import from_decomposed_coords, to_decomposed_coords
        from redimlab.model import PartitionedState

        w = to_decomposed_coords(self.d, np.array([2.0, 0.0, 1.0]))
        g = lambda U: float(self.residual(from_decomposed_coords(
            self.d, PartitionedState(slow=w.slow, fast=[U])))[0])
        lo, hi = w.fast[0] - 3.0, w.fast[0] + 3.0
        grid = np.linspace(lo, hi, 601)
        vals = [g(z) for z in grid]
        bracket = next((i for i in range(600) if vals[i] * vals[i + 1] < 0))
        U_star = brentq(g, grid[bracket], grid[bracket + 1], xtol=1e-13)
        w_proj = to_decomposed_coords(self.d, projected)
        assert abs(w_proj.fast[0] - U_star) < 1e-9

    def test_on_manifold_state_unchanged(self):
        projected = fast_projection(self.d, np.array([2.0, 0.0, 1.0]),
                                    self.residual)
        again = fast_projection(self.d, projected, self.residual)
        np.testing.assert_allclose(again, projected, atol=1e-9)

    def test_no_bracket_reports_interval(self):
        always_positive = lambda s: np.array([1.0 + s[0] ** 2])
        with pytest.raises(BracketSearchError) as info:
            fast_projection(self.d, np.array([0.5, 0.5, 0.5]), always_positive,
                            search_radius=0.5)
        assert info.value.interval is not None


class TestProfileContainer:
    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            Profile1D(grid_x=np.array([0.5]), fields=np.array([[np.nan]]),
                      left_bc=[0.0], right_bc=[0.0])

    def test_shape_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            Profile1D(grid_x=np.array([0.25, 0.5]), fields=np.zeros((2, 3)),
                      left_bc=[0.0, 0.0], right_bc=[0.0, 0.0])
