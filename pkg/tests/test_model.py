import numpy as np
import pytest

from redimlab.errors import DimensionMismatchError
from redimlab.mm import MmParams, mm_equilibrium, mm_model
from redimlab.model import (ModelDefinition, Partition, PartitionedState,
                            SpsSystem, evaluate_rhs, join_state, split_state)


def test_linear_model_zero_at_origin():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    model = ModelDefinition(dim=2, rhs=lambda u: A @ u)
    np.testing.assert_array_equal(evaluate_rhs(model, np.zeros(2)), np.zeros(2))


def test_mm_rhs_hand_substitution():
    # independent re-derivation of the three kinetic lines at (2, 0, 1)
    p = MmParams()
    X, Y, Z = 2.0, 0.0, 1.0
    expected = np.array([
        -X * Z + p.L1 * (1 - Z - p.mu * (1 - Y)),          # -2 - 0.99
        -p.L3 * Y * Z + (p.L4 / p.L2) * (1 - Y),           # 0.1
        (-X * Z + 1 - Z - p.mu * (1 - Y)) / p.L2
        + p.mu * (-p.L3 * Y * Z + (p.L4 / p.L2) * (1 - Y)),
    ])
    got = evaluate_rhs(mm_model(p), np.array([X, Y, Z]))
    np.testing.assert_allclose(got, expected, rtol=0, atol=0)
    np.testing.assert_allclose(got, [-2.99, 0.1, -2.9], atol=1e-14)


def test_mm_rhs_zero_at_equilibrium():
    model = mm_model()
    eq = mm_equilibrium()
    assert np.max(np.abs(evaluate_rhs(model, eq))) < 1e-12


def test_evaluate_rhs_dimension_error_names_lengths():
    model = mm_model()
    with pytest.raises(DimensionMismatchError, match="length 2.*dimension is 3"):
        evaluate_rhs(model, np.zeros(2))


def test_evaluate_rhs_referentially_transparent():
    model = mm_model()
    state = np.array([0.3, 0.7, 0.2])
    a = evaluate_rhs(model, state)
    b = evaluate_rhs(model, state)
    assert a.tobytes() == b.tobytes()


def test_split_state_example():
    ps = split_state(np.array([1.0, 2.0, 3.0]), Partition(m_s=2, m_f=1))
    np.testing.assert_array_equal(ps.fast, [1.0])
    np.testing.assert_array_equal(ps.slow, [2.0, 3.0])


def test_split_join_roundtrip_random():
    rng = np.random.default_rng(42)
    for _ in range(20):
        n = rng.integers(2, 9)
        m_f = int(rng.integers(1, n))
        s = rng.normal(size=n)
        p = Partition(m_s=n - m_f, m_f=m_f)
        np.testing.assert_array_equal(join_state(split_state(s, p)), s)


def test_split_state_zero_vector():
    ps = split_state(np.zeros(3), Partition(m_s=1, m_f=2))
    assert not ps.fast.any() and not ps.slow.any()


def test_split_state_inconsistent_partition():
    with pytest.raises(DimensionMismatchError, match="m_s=2, m_f=2.*length 3"):
        split_state(np.zeros(3), Partition(m_s=2, m_f=2))


def test_partitioned_state_is_immutable():
    ps = PartitionedState(slow=[1.0, 2.0], fast=[3.0])
    with pytest.raises(ValueError):
        ps.slow[0] = 5.0


def test_sps_system_epsilon_bounds():
    ok = lambda u, v: u
    with pytest.raises(ValueError):
        SpsSystem(slow_rhs=ok, fast_rhs=ok, epsilon=1.5)
    with pytest.raises(ValueError):
        SpsSystem(slow_rhs=ok, fast_rhs=ok, epsilon=0.0)


def test_model_label_count_checked():
    with pytest.raises(DimensionMismatchError):
        ModelDefinition(dim=2, rhs=lambda u: u, labels=("a",))
