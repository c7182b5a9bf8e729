"""Implicit slow-invariant-manifold approximations of orders 0, 1, 2.

All formulas act on a system in standard singularly perturbed form

    du/dt = F_s(u, v) + L1(u-fields)          (slow block u)
    dv/dt = (1/eps) F_f(u, v) + L2(v-fields)  (fast block v)

with optional linear transport operators L1, L2 applied along a 1D profile.
The implicit approximations of the slow invariant manifold are

    order 0:  H0 = F_f = 0
    order 1:  H1 = F_f + eps h1 = 0,
              h1 = (dFf/dv)^-1 (dFf/du) (F_s + L1) + L2
    order 2:  H2 = F_f + eps h1 + eps^2 h2 = 0,

where h2 collects the transports of the time derivatives, the slow-Jacobian
terms, and quadratic forms of the fast-block second derivatives in the
excitations (F_s + L1) and (L2 - h1).

Transport operators act blockwise: the slow operator receives the slow
field rows with their Dirichlet data, the fast operator the fast rows.
Only linear operators are supported.  In `order_epsilon` scaling the
transports carry an extra factor eps in the governing equations, so only
L1 enters h1 at first order and the L2 summand is dropped.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .calculus import (DEFAULT_HESSIAN_STEP, DEFAULT_JACOBIAN_STEP,
                       JacobianBlocks, SecondDerivTensor, fd_jacobian,
                       laplacian_fields, sps_hessian_tensor,
                       sps_jacobian_blocks)
from .errors import DimensionMismatchError, TurningPointError
from .model import Array, Partition, PartitionedState, SpsSystem
from .pde import Profile1D

TransportOperator = Callable[[Array, Array, Array], Array]


@dataclass(frozen=True)
class DiffusiveTransport:
    """delta times the discrete 1D Laplacian, applied row-wise to a block."""

    delta: float

    def __call__(self, fields: Array, left: Array, right: Array) -> Array:
        return self.delta * laplacian_fields(fields, left, right)


@dataclass(frozen=True)
class CorrectionContext:
    """Everything needed to evaluate correction formulas along a profile.

    transport_slow / transport_fast must both be present or both absent;
    absent transports reduce the profile formulas to their homogeneous (ODE)
    counterparts.  `partition` fixes how profile field rows split into the
    fast block (first m_f rows) and slow block; it is required for profile
    operations.  Jacobian blocks and second-derivative tensors are
    recomputed per evaluation state by central differences with the
    recorded steps.
    """

    sps: SpsSystem
    partition: Partition | None = None
    transport_slow: TransportOperator | None = None
    transport_fast: TransportOperator | None = None
    transport_scaling: str = "order_one"  # or "order_epsilon"
    jacobian_step: float = DEFAULT_JACOBIAN_STEP
    hessian_step: float = DEFAULT_HESSIAN_STEP
    composed_step: float = 1e-4  # for derivatives of the composed map N

    def __post_init__(self):
        if (self.transport_slow is None) != (self.transport_fast is None):
            raise ValueError("transport operators must both be present or both absent")
        if self.transport_scaling not in ("order_one", "order_epsilon"):
            raise ValueError(f"unknown transport_scaling {self.transport_scaling!r}")

    @property
    def has_transport(self) -> bool:
        return self.transport_slow is not None


@dataclass(frozen=True)
class ResidualReport:
    """Per-grid-point residual norms along a profile.

    H0, H1 and (optionally) H2 hold max-norms over the fast block of the
    order-0/1/2 implicit residuals.  Grid indices where the fast-block
    Jacobian failed the invertibility threshold are listed in
    `turning_points`; their H1/H2 entries are NaN, never silently evaluated.
    """

    grid_x: Array
    H0: Array
    H1: Array
    H2: Array | None
    turning_points: tuple[int, ...]


def jacobian_blocks(ctx: CorrectionContext, state: PartitionedState) -> JacobianBlocks:
    return sps_jacobian_blocks(ctx.sps, state.slow, state.fast, ctx.jacobian_step)


def hessian_tensor(ctx: CorrectionContext, state: PartitionedState) -> SecondDerivTensor:
    return sps_hessian_tensor(ctx.sps, state.slow, state.fast, ctx.hessian_step)


def h0_residual(sps: SpsSystem, state: PartitionedState) -> Array:
    """Zero-order residual F_f(u, v); zero exactly on the slow manifold."""
    return np.atleast_1d(np.asarray(sps.fast_rhs(state.slow, state.fast), dtype=float))


def _correction_core(blocks: JacobianBlocks, rhs_slow: Array) -> Array:
    """(dFf/dv)^-1 (dFf/du) rhs_slow, the recurring first-order kernel."""
    blocks.require_invertible()
    if rhs_slow.size == 0:
        return np.zeros(blocks.dFf_dv.shape[0])
    return np.linalg.solve(blocks.dFf_dv, blocks.dFf_du @ rhs_slow)


def h1_ode(ctx: CorrectionContext, state: PartitionedState) -> Array:
    """First-order correction h1 = (dFf/dv)^-1 (dFf/du) F_s for the
    homogeneous system; the order-1 implicit manifold is F_f + eps h1 = 0.

    Raises
    ------
    TurningPointError
        If dFf/dv fails the invertibility threshold at `state`.
    """
    blocks = jacobian_blocks(ctx, state)
    F_s = np.atleast_1d(ctx.sps.slow_rhs(state.slow, state.fast))
    return _correction_core(blocks, F_s)


def _n_map(ctx: CorrectionContext, slow: Array, fast: Array) -> Array:
    blocks = sps_jacobian_blocks(ctx.sps, slow, fast, ctx.jacobian_step)
    F_s = np.atleast_1d(ctx.sps.slow_rhs(slow, fast))
    return _correction_core(blocks, F_s)


def h2_ode(ctx: CorrectionContext, state: PartitionedState) -> tuple[Array, Array]:
    """Second-order coefficients for the homogeneous system.

    With N = (dFf/dv)^-1 (dFf/du) F_s, returns the pair

        c1 = N + (dFf/dv)^-1 (dN/dv) F_f     (order-eps coefficient)
        c2 = (dFf/dv)^-1 (dN/du) F_s         (order-eps^2 coefficient)

    so the order-2 implicit manifold is F_f + eps c1 + eps^2 c2 = 0.
    dN/du and dN/dv are central differences of the composed map N.
    """
    u, v = state.slow, state.fast
    blocks = jacobian_blocks(ctx, state)
    blocks.require_invertible()
    F_s = np.atleast_1d(ctx.sps.slow_rhs(u, v))
    F_f = np.atleast_1d(ctx.sps.fast_rhs(u, v))
    N = _correction_core(blocks, F_s)

    dN_dv = fd_jacobian(lambda vv: _n_map(ctx, u, vv), v, ctx.composed_step)
    c1 = N + np.linalg.solve(blocks.dFf_dv, dN_dv @ F_f)
    if u.size:
        dN_du = fd_jacobian(lambda uu: _n_map(ctx, uu, v), u, ctx.composed_step)
        c2 = np.linalg.solve(blocks.dFf_dv, dN_du @ F_s)
    else:
        c2 = np.zeros_like(N)
    return c1, c2


def _split_profile(ctx: CorrectionContext, profile: Profile1D):
    """Split field rows by the context partition: fast block first."""
    if ctx.partition is None:
        raise ValueError("CorrectionContext.partition is required for profile operations")
    m_f, m_s = ctx.partition.m_f, ctx.partition.m_s
    if profile.fields.shape[0] != m_f + m_s:
        raise DimensionMismatchError(
            f"profile has {profile.fields.shape[0]} field rows, partition needs "
            f"{m_f + m_s}"
        )
    bc = dict(
        fast_left=profile.left_bc[:m_f], fast_right=profile.right_bc[:m_f],
        slow_left=profile.left_bc[m_f:], slow_right=profile.right_bc[m_f:],
    )
    return profile.fields[:m_f], profile.fields[m_f:], bc


def _transport_values(ctx: CorrectionContext, fast_f: Array, slow_f: Array, bc):
    """L1 applied to the slow rows and L2 to the fast rows (zeros if absent)."""
    n = fast_f.shape[1]
    if not ctx.has_transport:
        return np.zeros((slow_f.shape[0], n)), np.zeros((fast_f.shape[0], n))
    if slow_f.shape[0]:
        L1 = np.atleast_2d(ctx.transport_slow(slow_f, bc["slow_left"], bc["slow_right"]))
    else:
        L1 = np.zeros((0, n))
    L2 = np.atleast_2d(ctx.transport_fast(fast_f, bc["fast_left"], bc["fast_right"]))
    return L1, L2


def _h1_at(ctx: CorrectionContext, u: Array, v: Array,
           L1_i: Array, L2_i: Array) -> Array:
    blocks = sps_jacobian_blocks(ctx.sps, u, v, ctx.jacobian_step)
    F_s = np.atleast_1d(ctx.sps.slow_rhs(u, v)) if u.size else np.zeros(0)
    core = _correction_core(blocks, F_s + L1_i)
    if ctx.transport_scaling == "order_epsilon":
        return core
    return core + L2_i


def h1_profile(ctx: CorrectionContext, profile: Profile1D, grid_index: int) -> Array:
    """First-order correction at one grid point of a profile.

    h1 = (dFf/dv)^-1 (dFf/du) (F_s + L1) + L2 in order-one transport
    scaling; in order-epsilon scaling the L2 summand is dropped and only L1
    enters at this order.  With no transports configured this reduces to
    h1_ode at the same state.
    """
    fast_f, slow_f, bc = _split_profile(ctx, profile)
    L1, L2 = _transport_values(ctx, fast_f, slow_f, bc)
    return _h1_at(ctx, slow_f[:, grid_index], fast_f[:, grid_index],
                  L1[:, grid_index], L2[:, grid_index])


def profile_time_derivatives(ctx: CorrectionContext, profile: Profile1D) -> Profile1D:
    """Time-derivative fields from the governing right-hand sides.

    du/dt = F_s + L1 (with the eps factor on L1 in order-epsilon scaling)
    and dv/dt = (1/eps) F_f + L2, evaluated pointwise on the profile.  The
    Dirichlet data is constant in time, so the derivative fields carry zero
    boundary values.  Exact on stationary profiles, with no stacked
    time-differencing error.
    """
    fast_f, slow_f, bc = _split_profile(ctx, profile)
    m_f = fast_f.shape[0]
    L1, L2 = _transport_values(ctx, fast_f, slow_f, bc)
    eps = ctx.sps.epsilon
    n = profile.fields.shape[1]
    dfields = np.zeros_like(profile.fields)
    for i in range(n):
        u, v = slow_f[:, i], fast_f[:, i]
        F_f = np.atleast_1d(ctx.sps.fast_rhs(u, v))
        dfields[:m_f, i] = F_f / eps + L2[:, i]
        if u.size:
            F_s = np.atleast_1d(ctx.sps.slow_rhs(u, v))
            if ctx.transport_scaling == "order_epsilon":
                dfields[m_f:, i] = F_s + eps * L1[:, i]
            else:
                dfields[m_f:, i] = F_s + L1[:, i]
    zeros = np.zeros(profile.fields.shape[0])
    return Profile1D(grid_x=profile.grid_x, fields=dfields,
                     left_bc=zeros, right_bc=zeros.copy(), time=profile.time)


def _h2_at(ctx: CorrectionContext, u: Array, v: Array,
           L1_i: Array, L2_i: Array, L1d_i: Array, L2d_i: Array) -> Array:
    blocks = sps_jacobian_blocks(ctx.sps, u, v, ctx.jacobian_step)
    blocks.require_invertible()
    hess = sps_hessian_tensor(ctx.sps, u, v, ctx.hessian_step)
    F_s = np.atleast_1d(ctx.sps.slow_rhs(u, v)) if u.size else np.zeros(0)

    h1_i = _h1_at(ctx, u, v, L1_i, L2_i)
    a = F_s + L1_i          # slow-direction excitation
    b = L2_i - h1_i         # fast-direction excitation

    quad = (np.einsum("kij,i,j->k", hess.d2Ff_dvv, b, b)
            + 2.0 * np.einsum("kij,i,j->k", hess.d2Ff_duv, a, b)
            + np.einsum("kij,i,j->k", hess.d2Ff_duu, a, a))

    inner = blocks.dFf_dv @ L2d_i + quad
    if u.size:
        inner = inner + blocks.dFf_du @ (blocks.dFs_dv @ b
                                         + blocks.dFs_du @ a + L1d_i)
    return np.linalg.solve(blocks.dFf_dv,
                           np.linalg.solve(blocks.dFf_dv, np.atleast_1d(inner)))


def h2_profile(ctx: CorrectionContext, profile: Profile1D,
               time_derivs: Profile1D) -> Array:
    """Second-order correction along a whole profile, shape (m_f, n).

    Assembles, per grid point,

        h2 = (dFf/dv)^-2 [ dFf/dv . L2(du/dt, dv/dt)
                           + dFf/du . ( dFs/dv (L2 - h1)
                                        + dFs/du (F_s + L1)
                                        + L1(du/dt, dv/dt) )
                           + d2Ff/dv2 (L2 - h1, L2 - h1)
                           + 2 d2Ff/dudv (F_s + L1, L2 - h1)
                           + d2Ff/du2 (F_s + L1, F_s + L1) ]

    where L(du/dt, dv/dt) denotes the transports applied to the supplied
    time-derivative fields.  Raises TurningPointError where dFf/dv fails
    the invertibility threshold.
    """
    fast_f, slow_f, bc = _split_profile(ctx, profile)
    L1, L2 = _transport_values(ctx, fast_f, slow_f, bc)
    dfast, dslow, dbc = _split_profile(ctx, time_derivs)
    L1d, L2d = _transport_values(ctx, dfast, dslow, dbc)

    n = profile.fields.shape[1]
    out = np.empty((fast_f.shape[0], n))
    for i in range(n):
        out[:, i] = _h2_at(ctx, slow_f[:, i], fast_f[:, i],
                           L1[:, i], L2[:, i], L1d[:, i], L2d[:, i])
    return out


def laplacian_context(sps: SpsSystem, partition: Partition, delta: float,
                      transport_scaling: str = "order_one",
                      **kwargs) -> CorrectionContext:
    """Context whose transports are delta times the discrete Laplacian."""
    op = DiffusiveTransport(delta)
    return CorrectionContext(sps=sps, partition=partition, transport_slow=op,
                             transport_fast=op,
                             transport_scaling=transport_scaling, **kwargs)


def h1_laplacian(ctx: CorrectionContext, profile: Profile1D, grid_index: int) -> Array:
    """h1_profile specialized to Laplacian transports on both blocks."""
    _require_laplacian(ctx)
    return h1_profile(ctx, profile, grid_index)


def h2_laplacian(ctx: CorrectionContext, profile: Profile1D,
                 time_derivs: Profile1D) -> Array:
    """h2_profile specialized to Laplacian transports on both blocks."""
    _require_laplacian(ctx)
    return h2_profile(ctx, profile, time_derivs)


def _require_laplacian(ctx: CorrectionContext) -> None:
    if not (isinstance(ctx.transport_slow, DiffusiveTransport)
            and isinstance(ctx.transport_fast, DiffusiveTransport)):
        raise ValueError("context transports are not discrete Laplacians")


def residual_report(ctx: CorrectionContext, profile: Profile1D,
                    *, max_order: int = 1,
                    time_derivs: Profile1D | None = None) -> ResidualReport:
    """Residual norms |H0|, |F_f + eps h1| (and optionally the order-2 sum)
    per grid point, as max-norms over the fast block.

    Turning points are flagged, not evaluated: their H1/H2 entries are NaN
    and their indices are listed in the report.
    """
    if max_order not in (0, 1, 2):
        raise ValueError(f"max_order must be 0, 1 or 2, got {max_order}")
    fast_f, slow_f, bc = _split_profile(ctx, profile)
    L1, L2 = _transport_values(ctx, fast_f, slow_f, bc)
    eps = ctx.sps.epsilon
    n = profile.fields.shape[1]

    if max_order >= 2:
        if time_derivs is None:
            time_derivs = profile_time_derivatives(ctx, profile)
        dfast, dslow, dbc = _split_profile(ctx, time_derivs)
        L1d, L2d = _transport_values(ctx, dfast, dslow, dbc)

    H0 = np.empty(n)
    H1 = np.full(n, np.nan)
    H2 = np.full(n, np.nan) if max_order >= 2 else None
    turning: list[int] = []
    for i in range(n):
        u, v = slow_f[:, i], fast_f[:, i]
        F_f = np.atleast_1d(ctx.sps.fast_rhs(u, v))
        H0[i] = np.max(np.abs(F_f))
        if max_order < 1:
            continue
        try:
            h1_i = _h1_at(ctx, u, v, L1[:, i], L2[:, i])
            H1[i] = np.max(np.abs(F_f + eps * h1_i))
            if max_order >= 2:
                h2_i = _h2_at(ctx, u, v, L1[:, i], L2[:, i], L1d[:, i], L2d[:, i])
                H2[i] = np.max(np.abs(F_f + eps * h1_i + eps * eps * h2_i))
        except TurningPointError:
            turning.append(i)
            continue

    return ResidualReport(grid_x=profile.grid_x.copy(), H0=H0, H1=H1, H2=H2,
                          turning_points=tuple(turning))


def report_to_csv_rows(report: ResidualReport) -> tuple[list[str], list[list]]:
    """Column names and rows for CSV serialization of a residual report."""
    header = ["x", "H0", "H1"]
    if report.H2 is not None:
        header.append("H2")
    header.append("turning_flag")
    turning = set(report.turning_points)
    rows = []
    for i, x in enumerate(report.grid_x):
        row = [x, report.H0[i], report.H1[i]]
        if report.H2 is not None:
            row.append(report.H2[i])
        row.append(1 if i in turning else 0)
        rows.append(row)
    return header, rows
