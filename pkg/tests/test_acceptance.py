"""Acceptance suite: every criterion runs at its stated tolerance and prints
one pass/fail line (visible with `pytest -s` or in the `redimlab validate`
output, which executes the same checks)."""

import subprocess
import sys

import pytest

from redimlab.validation import (ValidationRun, check_a1, check_a2, check_a3,
                                 check_a4, check_a5, check_a6, check_a7,
                                 check_a8)


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    return ValidationRun(seed=0, n_interior=199,
                         outdir=tmp_path_factory.mktemp("acceptance"))


def _assert_pass(result):
    print(result.line())
    assert result.passed, f"{result.criterion} failed: {result.details}"
    if result.runtime_limit is not None:
        assert result.runtime < result.runtime_limit, (
            f"{result.criterion} exceeded its runtime budget: "
            f"{result.runtime:.2f}s >= {result.runtime_limit}s"
        )


def test_a1_gql_decomposition(run):
    result = check_a1(run)
    _assert_pass(result)
    assert result.details["gap_ratio"] > 5.0
    assert result.details["epsilon"] < 1.0
    assert result.details["eigenvalue_oracle_error"] < 1e-10


def test_a2_transform_consistency(run):
    result = check_a2(run)
    _assert_pass(result)
    assert result.details["roundtrip_maxnorm"] < 0.02
    assert result.details["fast_subspace_angle_deg"] < 5.0
    assert result.details["slow_coordinate_angle_deg"] < 5.0


def test_a3_h0_coefficients(run):
    result = check_a3(run)
    _assert_pass(result)
    assert result.details["max_abs_error"] < 0.05


def test_a4_order_of_accuracy(run):
    result = check_a4(run)
    _assert_pass(result)
    assert result.details["ode_H1"] >= 1.8
    assert result.details["ode_H2"] >= 2.8
    assert result.details["rd_H1"] >= 1.8
    assert result.details["rd_H2"] >= 2.8


def test_a5_first_order_improvement(run):
    result = check_a5(run)
    _assert_pass(result)
    assert result.details["improved_fraction"] >= 0.80


def test_a6_near_vs_far(run):
    result = check_a6(run)
    _assert_pass(result)
    assert result.details["max_H0_near"] < result.details["max_H0_far"]
    assert result.details["max_H1_near"] < result.details["max_H1_far"]


def test_a7_solver_verification(run):
    result = check_a7(run)
    _assert_pass(result)


def test_a8_differentiation_verification(run):
    result = check_a8(run)
    _assert_pass(result)


def test_a9_validate_is_deterministic(tmp_path):
    """Two CLI `validate` runs with the same seed emit byte-identical files."""
    dirs = [tmp_path / "run1", tmp_path / "run2"]
    for d in dirs:
        proc = subprocess.run(
            [sys.executable, "-m", "redimlab.cli", "validate",
             "--seed", "7", "--out", str(d)],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0, proc.stdout + proc.stderr
    files1 = sorted(p.relative_to(dirs[0]) for p in dirs[0].rglob("*")
                    if p.is_file())
    files2 = sorted(p.relative_to(dirs[1]) for p in dirs[1].rglob("*")
                    if p.is_file())
    assert files1 == files2
    mismatched = [str(f) for f in files1
                  if (dirs[0] / f).read_bytes() != (dirs[1] / f).read_bytes()]
    assert mismatched == []
    print("[PASS] A9 - repeated validate runs are byte-identical "
          f"({len(files1)} files)")
