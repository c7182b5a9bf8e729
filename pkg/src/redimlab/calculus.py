"""Finite-difference differential operators and the 1D discrete Laplacian.

Default steps: 1e-5 for first derivatives, 1e-4 for second derivatives
(truncation vs. roundoff balance); both overridable per call.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DimensionMismatchError, NonFiniteEvaluationError, TurningPointError
from .model import Array, SpsSystem, frozen_array

DEFAULT_JACOBIAN_STEP = 1e-5
DEFAULT_HESSIAN_STEP = 1e-4

# |det dFf_dv| below this multiple of (max-norm)^m flags a turning point.
TURNING_POINT_RTOL = 1e-10


def _eval_checked(f: Callable[[Array], Array], point: Array, coordinate: int) -> Array:
    out = np.asarray(f(point), dtype=float)
    if not np.all(np.isfinite(out)):
        raise NonFiniteEvaluationError(
            f"non-finite function value at perturbation of coordinate {coordinate}",
            coordinate=coordinate,
        )
    return out


def fd_jacobian(f: Callable[[Array], Array], point: Array,
                step: float = DEFAULT_JACOBIAN_STEP) -> Array:
    """Central-difference Jacobian of a vector function.

    Entry (i, j) is (f_i(p + h e_j) - f_i(p - h e_j)) / (2 h).  Exact up to
    roundoff for affine fields.

    Raises
    ------
    NonFiniteEvaluationError
        If an evaluation returns NaN/inf; carries the perturbed coordinate.
    """
    p = np.asarray(point, dtype=float)
    d = p.size
    cols = []
    for j in range(d):
        e = np.zeros(d)
        e[j] = step
        fp = _eval_checked(f, p + e, j)
        fm = _eval_checked(f, p - e, j)
        cols.append((fp - fm) / (2.0 * step))
    return np.column_stack(cols)


def fd_hessian(f: Callable[[Array], Array], point: Array,
               step: float = DEFAULT_HESSIAN_STEP) -> Array:
    """Second-order central-difference Hessian tensor of a vector function.

    Returns an array H of shape (m, d, d) with H[k, i, j] the second partial
    of f_k with respect to coordinates i and j.  Mixed partials are
    symmetrized by averaging H[k, i, j] and H[k, j, i].
    """
    p = np.asarray(point, dtype=float)
    d = p.size
    f0 = _eval_checked(f, p, -1)
    m = f0.size
    H = np.zeros((m, d, d))
    h2 = step * step
    for i in range(d):
        ei = np.zeros(d)
        ei[i] = step
        fp = _eval_checked(f, p + ei, i)
        fm = _eval_checked(f, p - ei, i)
        H[:, i, i] = (fp - 2.0 * f0 + fm) / h2
    for i in range(d):
        for j in range(i + 1, d):
            ei = np.zeros(d)
            ej = np.zeros(d)
            ei[i] = step
            ej[j] = step
            fpp = _eval_checked(f, p + ei + ej, j)
            fpm = _eval_checked(f, p + ei - ej, j)
            fmp = _eval_checked(f, p - ei + ej, j)
            fmm = _eval_checked(f, p - ei - ej, j)
            mixed = (fpp - fpm - fmp + fmm) / (4.0 * h2)
            H[:, i, j] = mixed
            H[:, j, i] = mixed
    H = 0.5 * (H + np.transpose(H, (0, 2, 1)))
    return H


@dataclass(frozen=True)
class JacobianBlocks:
    """Partial derivatives of a fast/slow system at one evaluation point.

    Shapes follow the partition: dFf_du is m_f x m_s, dFf_dv is m_f x m_f,
    dFs_du is m_s x m_s, dFs_dv is m_s x m_f.  Every correction formula
    requires det dFf_dv != 0; the invertibility verdict is recorded here.
    """

    dFf_du: Array
    dFf_dv: Array
    dFs_du: Array
    dFs_dv: Array
    det_dFf_dv: float
    is_turning_point: bool

    def require_invertible(self) -> None:
        if self.is_turning_point:
            raise TurningPointError(
                f"fast-block Jacobian is numerically singular "
                f"(|det| = {abs(self.det_dFf_dv):.3e})",
                det=abs(self.det_dFf_dv),
            )


def _is_turning(dFf_dv: Array) -> tuple[float, bool]:
    det = float(np.linalg.det(dFf_dv)) if dFf_dv.size else 1.0
    scale = float(np.max(np.abs(dFf_dv))) if dFf_dv.size else 1.0
    if scale == 0.0:
        return det, True
    m_f = dFf_dv.shape[0]
    return det, abs(det) < TURNING_POINT_RTOL * scale**m_f


def sps_jacobian_blocks(sps: SpsSystem, slow: Array, fast: Array,
                        step: float = DEFAULT_JACOBIAN_STEP) -> JacobianBlocks:
    """Finite-difference Jacobian blocks of an SpsSystem at (slow, fast)."""
    u = np.asarray(slow, dtype=float)
    v = np.asarray(fast, dtype=float)
    m_s, m_f = u.size, v.size

    dFf_du = (fd_jacobian(lambda uu: sps.fast_rhs(uu, v), u, step)
              if m_s else np.zeros((m_f, 0)))
    dFf_dv = fd_jacobian(lambda vv: sps.fast_rhs(u, vv), v, step)
    dFs_du = (fd_jacobian(lambda uu: sps.slow_rhs(uu, v), u, step)
              if m_s else np.zeros((0, 0)))
    dFs_dv = (fd_jacobian(lambda vv: sps.slow_rhs(u, vv), v, step)
              if m_s else np.zeros((0, m_f)))
    det, turning = _is_turning(dFf_dv)
    return JacobianBlocks(dFf_du=dFf_du, dFf_dv=dFf_dv, dFs_du=dFs_du,
                          dFs_dv=dFs_dv, det_dFf_dv=det, is_turning_point=turning)


@dataclass(frozen=True)
class SecondDerivTensor:
    """Second partials of the fast right-hand side, indexed
    component x direction x direction.

    d2Ff_duu : (m_f, m_s, m_s), d2Ff_duv : (m_f, m_s, m_f),
    d2Ff_dvv : (m_f, m_f, m_f).  The uu and vv blocks are symmetric in
    their trailing indices up to finite-difference truncation.
    """

    d2Ff_duu: Array
    d2Ff_duv: Array
    d2Ff_dvv: Array


def sps_hessian_tensor(sps: SpsSystem, slow: Array, fast: Array,
                       step: float = DEFAULT_HESSIAN_STEP) -> SecondDerivTensor:
    """Finite-difference second derivatives of the fast rhs at (slow, fast).

    Differentiates the joint map z = (u, v) |-> fast_rhs(u, v) and slices the
    resulting tensor by block.
    """
    u = np.asarray(slow, dtype=float)
    v = np.asarray(fast, dtype=float)
    m_s = u.size

    def joint(z: Array) -> Array:
        return sps.fast_rhs(z[:m_s], z[m_s:])

    H = fd_hessian(joint, np.concatenate([u, v]), step)
    return SecondDerivTensor(
        d2Ff_duu=H[:, :m_s, :m_s],
        d2Ff_duv=H[:, :m_s, m_s:],
        d2Ff_dvv=H[:, m_s:, m_s:],
    )


@dataclass(frozen=True)
class Laplacian1D:
    """Three-point discrete Laplacian on a uniform interior grid over (0, 1).

    Grid spacing is h = 1 / (n_interior + 1); `left` and `right` hold the
    Dirichlet values used as ghost points at the two ends.
    """

    n_interior: int
    left: float | None = None
    right: float | None = None

    def __post_init__(self):
        if self.n_interior < 1:
            raise ValueError("n_interior must be at least 1")

    @property
    def h(self) -> float:
        return 1.0 / (self.n_interior + 1)


def apply_laplacian(op: Laplacian1D, field: Array) -> Array:
    """Apply the standard stencil (f_{i-1} - 2 f_i + f_{i+1}) / h^2.

    Boundary neighbours are taken from the operator's Dirichlet data.
    """
    if op.left is None or op.right is None:
        raise ValueError("Laplacian1D boundary values are not set")
    f = np.asarray(field, dtype=float)
    if f.size != op.n_interior:
        raise DimensionMismatchError(
            f"field has length {f.size}, operator grid has {op.n_interior}"
        )
    out = np.empty_like(f)
    if f.size == 1:
        out[0] = op.left - 2.0 * f[0] + op.right
    else:
        out[0] = op.left - 2.0 * f[0] + f[1]
        out[-1] = f[-2] - 2.0 * f[-1] + op.right
        out[1:-1] = f[:-2] - 2.0 * f[1:-1] + f[2:]
    return out / op.h**2


def laplacian_fields(fields: Array, left: Array, right: Array) -> Array:
    """Row-wise discrete Laplacian of an (n_fields, n_interior) array."""
    fields = np.atleast_2d(np.asarray(fields, dtype=float))
    left = np.atleast_1d(np.asarray(left, dtype=float))
    right = np.atleast_1d(np.asarray(right, dtype=float))
    n = fields.shape[1]
    out = np.empty_like(fields)
    for k in range(fields.shape[0]):
        op = Laplacian1D(n, left=float(left[k]), right=float(right[k]))
        out[k] = apply_laplacian(op, fields[k])
    return out
