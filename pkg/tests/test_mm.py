import numpy as np
import pytest
from scipy.linalg import subspace_angles

from redimlab.calculus import fd_jacobian
from redimlab.mm import (MmParams, REFERENCE_FAST_COEFFS, REFERENCE_TRANSFORM,
                         build_scenarios, fast_quadratic_coefficients,
                         mm_equilibrium, mm_jacobian, mm_model, mm_rhs,
                         reference_coefficient_errors,
                         scenario_initial_profile)
from redimlab.pipeline import benchmark_decomposition


class TestKinetics:
    def test_equilibrium_residual(self):
        eq = mm_equilibrium()
        assert np.max(np.abs(mm_rhs(MmParams(), eq))) < 1e-12

    def test_equilibrium_closed_form(self):
        # independent algebra: at the root, L1 != 1 forces the shared
        # bracket to vanish, so Z = Y and X Z = 0, leaving Y^2 + 2Y - 2 = 0
        eq = mm_equilibrium()
        s = np.sqrt(3.0) - 1.0
        np.testing.assert_allclose(eq, [0.0, s, s], atol=1e-10)

    def test_y_equation_balance_at_root(self):
        p = MmParams()
        _, Y, Z = mm_equilibrium(p)
        np.testing.assert_allclose(p.L3 * Y * Z, (p.L4 / p.L2) * (1 - Y),
                                   atol=1e-12)

    def test_equilibrium_asymptotically_stable(self):
        eq = mm_equilibrium()
        lam = np.linalg.eigvals(mm_jacobian(MmParams(), eq))
        assert np.all(np.real(lam) < 0)

    def test_z_equation_with_zero_z(self):
        p = MmParams()
        out = mm_rhs(p, np.array([1.7, 0.4, 0.0]))
        assert out[0] == pytest.approx(p.L1 * (1 - p.mu * (1 - 0.4)))

    def test_analytic_jacobian_vs_fd_100_states(self):
        p = MmParams()
        model = mm_model(p)
        rng = np.random.default_rng(123)
        worst = 0.0
        for s in rng.uniform(0.0, 2.0, size=(100, 3)):
            diff = np.max(np.abs(fd_jacobian(model.rhs, s) - mm_jacobian(p, s)))
            worst = max(worst, diff)
        assert worst < 1e-6

    def test_reaction_part_matches_homogeneous(self):
        # delta plays no role in the kinetics
        p_diffusive = MmParams(delta=0.35)
        p_homogeneous = MmParams(delta=0.0)
        rng = np.random.default_rng(4)
        for s in rng.uniform(0.0, 2.0, size=(10, 3)):
            np.testing.assert_array_equal(mm_rhs(p_diffusive, s),
                                          mm_rhs(p_homogeneous, s))


class TestReferenceData:
    def test_transform_roundtrip_identity(self):
        M = np.asarray(REFERENCE_TRANSFORM)
        assert np.max(np.abs(M @ np.linalg.inv(M) - np.eye(3))) < 0.02

    def test_published_coefficients_reproduced(self):
        errors = reference_coefficient_errors()
        assert max(errors.values()) < 0.05

    def test_fast_quadratic_coefficients_exact_stencil(self):
        # the extraction is exact for quadratics: rebuild the fast rhs from
        # the extracted coefficients and compare at random points
        model = mm_model()
        basis = np.asarray(REFERENCE_TRANSFORM)
        c = fast_quadratic_coefficients(model, basis)
        row = np.linalg.inv(basis)[0]
        rng = np.random.default_rng(8)
        for w in rng.normal(size=(10, 3)):
            U, V, W = w
            rebuilt = (c["1"] + c["U"] * U + c["V"] * V + c["W"] * W
                       + c["U2"] * U**2 + c["V2"] * V**2 + c["W2"] * W**2
                       + c["UV"] * U * V + c["UW"] * U * W + c["VW"] * V * W)
            direct = row @ model.rhs(basis @ w)
            np.testing.assert_allclose(rebuilt, direct, atol=1e-12)

    def test_fast_subspace_close_to_reference(self):
        d = benchmark_decomposition()
        M = np.asarray(REFERENCE_TRANSFORM)
        angle = np.degrees(subspace_angles(np.asarray(d.Zf), M[:, :1])[0])
        assert angle < 5.0


class TestScenarios:
    def setup_method(self):
        self.params = MmParams()
        self.d = benchmark_decomposition(self.params)
        self.scenarios = build_scenarios(self.params, self.d)

    def test_far_right_bc_exact(self):
        np.testing.assert_array_equal(self.scenarios["far"].right_bc,
                                      [2.0, 0.0, 1.0])

    def test_near_right_bc_on_manifold(self):
        near = self.scenarios["near"]
        model = mm_model(self.params)
        residual = self.d.Zf_tilde @ model.rhs(near.right_bc)
        assert abs(residual[0]) < 1e-8

    def test_initial_ramp_endpoints(self):
        eq = mm_equilibrium(self.params)
        for name in ("far", "near"):
            scen = self.scenarios[name]
            profile = scenario_initial_profile(scen, 49)
            h = 1.0 / 50
            # interior endpoints sit one grid spacing inside the boundary line
            expected_first = eq + (scen.right_bc - eq) * h
            expected_last = eq + (scen.right_bc - eq) * (1 - h)
            np.testing.assert_allclose(profile.fields[:, 0], expected_first,
                                       atol=1e-12)
            np.testing.assert_allclose(profile.fields[:, -1], expected_last,
                                       atol=1e-12)
            np.testing.assert_allclose(profile.left_bc, eq, atol=0)
            np.testing.assert_allclose(profile.right_bc, scen.right_bc, atol=0)


class TestParams:
    def test_defaults(self):
        p = MmParams()
        assert (p.L1, p.L2, p.L3, p.L4, p.mu, p.delta) == \
            (0.99, 1.0, 0.05, 0.1, 1.0, 0.01)

    def test_validation(self):
        with pytest.raises(ValueError):
            MmParams(L1=-1.0)
        with pytest.raises(ValueError):
            MmParams(delta=-0.1)
