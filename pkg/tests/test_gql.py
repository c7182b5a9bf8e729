import numpy as np
import pytest

from redimlab.errors import (ComplexPairSplitError, NoSpectralGapError,
                             RankDeficientError)
from redimlab.gql import (build_decomposed_system, fit_global_linearization,
                          from_decomposed_coords, reconstruction_error,
                          split_spectrum, to_decomposed_coords)
from redimlab.mm import mm_equilibrium, mm_model
from redimlab.model import ModelDefinition, PartitionedState
from redimlab.pipeline import mm_sample_lattice


def linear_model(A):
    A = np.asarray(A, float)
    return ModelDefinition(dim=A.shape[0], rhs=lambda u: A @ u,
                           jacobian=lambda u: A.copy())


class TestFit:
    def test_recovers_linear_generator(self):
        rng = np.random.default_rng(1)
        A = rng.normal(size=(3, 3))
        samples = rng.normal(size=(12, 3))
        T = fit_global_linearization(linear_model(A), samples)
        np.testing.assert_allclose(T, A, atol=1e-9)

    def test_rank_deficient_samples(self):
        v = np.array([1.0, 2.0, 3.0])
        samples = np.array([c * v for c in (1.0, 2.0, -0.5, 3.0)])
        with pytest.raises(RankDeficientError) as info:
            fit_global_linearization(linear_model(np.eye(3)), samples)
        assert info.value.rank == 1

    def test_mm_lattice_has_gap(self):
        T = fit_global_linearization(mm_model(), mm_sample_lattice(4))
        lam = np.linalg.eigvals(T)
        mods = np.sort(np.abs(lam))[::-1]
        assert mods[0] / mods[1] > 5.0
        # oracle: characteristic cubic assembled from trace, principal
        # minors, and determinant, solved independently of the eigensolver
        tr = np.trace(T)
        minors = (T[1, 1] * T[2, 2] - T[1, 2] * T[2, 1]
                  + T[0, 0] * T[2, 2] - T[0, 2] * T[2, 0]
                  + T[0, 0] * T[1, 1] - T[0, 1] * T[1, 0])
        det = np.linalg.det(T)
        roots = np.sort_complex(np.roots([1.0, -tr, minors, -det]))
        np.testing.assert_allclose(np.sort_complex(lam), roots, atol=1e-10)

    def test_jacobian_mode(self):
        model = mm_model()
        eq = mm_equilibrium()
        T = fit_global_linearization(model, reference_point=eq)
        np.testing.assert_allclose(T, model.jacobian(eq), atol=1e-12)


class TestSplit:
    def test_diagonal_example(self):
        d = split_spectrum(np.diag([-100.0, -1.0, -0.5]))
        assert [x.real for x in d.lambda_fast] == [-100.0]
        assert sorted(x.real for x in d.lambda_slow) == [-1.0, -0.5]
        assert d.epsilon == pytest.approx(0.01)

    def test_identity_zero_gap(self):
        with pytest.raises(NoSpectralGapError):
            split_spectrum(np.eye(3))

    def test_manual_split_through_conjugate_pair(self):
        # modulus-10 rotation pair plus two slow modes
        T = np.zeros((4, 4))
        T[0, 1], T[1, 0] = 10.0, -10.0
        T[2, 2], T[3, 3] = -1.0, -0.1
        with pytest.raises(ComplexPairSplitError) as info:
            split_spectrum(T, m_f=1)
        assert info.value.proposed == 2
        d = split_spectrum(T, m_f=2)
        assert d.partition.m_f == 2

    def test_manual_split_requires_strict_separation(self):
        with pytest.raises(NoSpectralGapError):
            split_spectrum(np.diag([-2.0, -2.0, -0.1]), m_f=1)

    def test_split_index_scale_invariant(self):
        rng = np.random.default_rng(7)
        for _ in range(5):
            Q = np.linalg.qr(rng.normal(size=(4, 4)))[0]
            T = Q @ np.diag([-50.0, -40.0, -1.0, -0.3]) @ Q.T
            d1 = split_spectrum(T)
            d2 = split_spectrum(3.7 * T)
            assert d1.partition.m_f == d2.partition.m_f == 2
            assert d1.epsilon == pytest.approx(d2.epsilon, rel=1e-9)

    def test_epsilon_monotone_in_fast_modulus(self):
        eps = [split_spectrum(np.diag([-f, -1.0, -0.5])).epsilon
               for f in (10.0, 100.0, 1000.0)]
        assert eps[0] > eps[1] > eps[2]

    def test_block_diagonal_eigenvalues_reproduced(self):
        T = np.diag([-30.0, -20.0, -0.5, -0.2])
        d = split_spectrum(T)
        got = sorted(x.real for x in d.lambda_fast + d.lambda_slow)
        np.testing.assert_allclose(got, [-30.0, -20.0, -0.5, -0.2], atol=1e-10)

    def test_identity_and_reconstruction_invariants(self):
        rng = np.random.default_rng(13)
        for _ in range(5):
            Q = rng.normal(size=(4, 4))
            T = Q @ np.diag([-80.0, -60.0, -2.0, -1.0]) @ np.linalg.inv(Q)
            d = split_spectrum(T)
            Z = np.hstack([d.Zf, d.Zs])
            Zt = np.vstack([d.Zf_tilde, d.Zs_tilde])
            assert np.max(np.abs(Z @ Zt - np.eye(4))) < 1e-8
            assert reconstruction_error(d) < 1e-8 * max(1.0, np.max(np.abs(T)))

    def test_complex_pair_real_block_reconstruction(self):
        T = np.zeros((3, 3))
        T[0, 0], T[0, 1] = -20.0, 30.0
        T[1, 0], T[1, 1] = -30.0, -20.0
        T[2, 2] = -0.5
        d = split_spectrum(T)
        assert d.partition.m_f == 2
        assert abs(d.lambda_fast[0].imag) > 0
        assert reconstruction_error(d) < 1e-8 * np.max(np.abs(T))


class TestCoordinates:
    def setup_method(self):
        self.d = split_spectrum(np.diag([-100.0, -1.0, -0.5]))

    def test_roundtrip_random(self):
        rng = np.random.default_rng(17)
        for _ in range(10):
            s = rng.normal(size=3)
            back = from_decomposed_coords(self.d, to_decomposed_coords(self.d, s))
            np.testing.assert_allclose(back, s, atol=1e-8)

    def test_zero_state(self):
        ps = to_decomposed_coords(self.d, np.zeros(3))
        assert not ps.fast.any() and not ps.slow.any()

    def test_decomposed_fast_rhs_block_diagonalizes(self):
        rng = np.random.default_rng(23)
        Q = rng.normal(size=(3, 3))
        lam = np.array([-50.0, -1.0, -0.4])
        T = Q @ np.diag(lam) @ np.linalg.inv(Q)
        d = split_spectrum(T)
        sps = build_decomposed_system(d, linear_model(T))
        for _ in range(5):
            U = rng.normal(size=1)
            V = rng.normal(size=2)
            np.testing.assert_allclose(sps.fast_rhs(V, U), lam[0] * U, atol=1e-9)

    def test_decomposed_rhs_zero_at_transformed_equilibrium(self):
        from redimlab.pipeline import benchmark_decomposition

        d = benchmark_decomposition()
        model = mm_model()
        eq = mm_equilibrium()
        w = to_decomposed_coords(d, eq)
        sps = build_decomposed_system(d, model)
        np.testing.assert_allclose(sps.fast_rhs(w.slow, w.fast), 0.0, atol=1e-10)
        np.testing.assert_allclose(sps.slow_rhs(w.slow, w.fast), 0.0, atol=1e-10)
