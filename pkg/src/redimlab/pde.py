"""Method-of-lines integrator for 1D reaction-diffusion systems with
Dirichlet boundaries, plus the fast-fiber projection onto implicit manifolds.

Spatial discretization is the 3-point Laplacian on a uniform interior grid
over (0, 1).  Time stepping is A-stable implicit Euler by default, with the
trapezoidal rule available for accuracy studies.  The Newton systems of the
reaction-diffusion march are solved in banded form (point-major unknown
ordering, bandwidth = number of species).
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .calculus import fd_jacobian, laplacian_fields
from .errors import (BracketSearchError, DimensionMismatchError,
                     NewtonDivergenceError)
from .gql import GqlDecomposition, from_decomposed_coords, to_decomposed_coords
from .model import Array, ModelDefinition, PartitionedState, frozen_array


@dataclass(frozen=True)
class Profile1D:
    """Discretized fields on a uniform interior grid over (0, 1).

    `fields` has shape (n_species, n_interior); `left_bc` / `right_bc` hold
    the time-independent Dirichlet data.  `converged` is set by
    march_to_steady on its result.
    """

    grid_x: Array
    fields: Array
    left_bc: Array
    right_bc: Array
    time: float = 0.0
    converged: bool | None = None

    def __post_init__(self):
        fields = np.atleast_2d(np.asarray(self.fields, dtype=float))
        if not np.all(np.isfinite(fields)):
            raise ValueError("profile fields contain non-finite values")
        object.__setattr__(self, "grid_x", frozen_array(self.grid_x))
        object.__setattr__(self, "fields", frozen_array(fields))
        object.__setattr__(self, "left_bc", frozen_array(np.atleast_1d(self.left_bc)))
        object.__setattr__(self, "right_bc", frozen_array(np.atleast_1d(self.right_bc)))
        if self.fields.shape[1] != self.grid_x.size:
            raise DimensionMismatchError(
                f"{self.fields.shape[1]} field columns for {self.grid_x.size} grid points"
            )

    @property
    def n_interior(self) -> int:
        return self.grid_x.size

    @property
    def n_species(self) -> int:
        return self.fields.shape[0]

    def state_at(self, i: int) -> Array:
        return self.fields[:, i].copy()


def uniform_grid(n_interior: int) -> Array:
    h = 1.0 / (n_interior + 1)
    return np.linspace(h, 1.0 - h, n_interior)


def linear_ramp_profile(left: Array, right: Array, n_interior: int) -> Profile1D:
    """Straight-line initial profile joining the two boundary values."""
    left = np.atleast_1d(np.asarray(left, dtype=float))
    right = np.atleast_1d(np.asarray(right, dtype=float))
    x = uniform_grid(n_interior)
    fields = left[:, None] + (right - left)[:, None] * x[None, :]
    return Profile1D(grid_x=x, fields=fields, left_bc=left, right_bc=right)


def constant_profile(value: Array, n_interior: int) -> Profile1D:
    value = np.atleast_1d(np.asarray(value, dtype=float))
    x = uniform_grid(n_interior)
    fields = np.repeat(value[:, None], n_interior, axis=1)
    return Profile1D(grid_x=x, fields=fields, left_bc=value, right_bc=value.copy())


@dataclass(frozen=True)
class SolverConfig:
    """Controls for the method-of-lines march."""

    dt: float = 1e-3            # initial time step
    t_max: float = 5000.0       # integration horizon for the steady march
    steady_tol: float = 1e-9    # stationarity threshold on max |d fields/dt|
    newton_tol: float = 1e-10   # inner nonlinear solve tolerance
    newton_max_iter: int = 25
    n_interior: int = 199       # h = 0.005; resolves the delta = 0.01 layer
    delta: float = 0.01         # diffusion constant
    scheme: str = "implicit_euler"  # or "trapezoidal"
    dt_growth: float = 1.4      # growth per accepted step during the march
    dt_max: float = 50.0
    dt_min: float = 1e-12       # below this a rejected step is a hard error

    def __post_init__(self):
        if self.dt <= 0 or self.steady_tol <= 0 or self.n_interior < 3:
            raise ValueError("SolverConfig requires dt > 0, steady_tol > 0, "
                             "n_interior >= 3")
        if self.scheme not in ("implicit_euler", "trapezoidal"):
            raise ValueError(f"unknown scheme {self.scheme!r}")


def semidiscretize(model: ModelDefinition, delta: float,
                   profile: Profile1D) -> Callable[[Array], Array]:
    """Stacked ODE right-hand side: pointwise reaction plus delta times the
    discrete Laplacian per species, with the profile's Dirichlet data."""
    left = profile.left_bc.copy()
    right = profile.right_bc.copy()

    def rhs(fields: Array) -> Array:
        out = np.empty_like(fields)
        for i in range(fields.shape[1]):
            out[:, i] = model.rhs(fields[:, i])
        if delta != 0.0:
            out = out + delta * laplacian_fields(fields, left, right)
        return out

    return rhs


def _newton(residual: Callable[[Array], Array],
            solve: Callable[[Array, Array], Array],
            y0: Array, tol: float, max_iter: int) -> Array:
    """Damped Newton on residual(y) = 0 starting from y0.

    `solve(y, g)` returns the Newton step for residual value g at iterate y.
    The step is halved (up to 6 times) while it fails to reduce the
    residual norm.
    """
    y = y0.copy()
    g = residual(y)
    gnorm = np.max(np.abs(g))
    for _ in range(max_iter):
        if gnorm < tol:
            return y
        step = solve(y, g)
        lam = 1.0
        for _ in range(6):
            y_new = y - lam * step
            g_new = residual(y_new)
            gnorm_new = np.max(np.abs(g_new))
            if np.isfinite(gnorm_new) and gnorm_new < gnorm:
                break
            lam *= 0.5
        else:
            raise NewtonDivergenceError(
                f"damping failed to reduce the residual below {gnorm:.3e}"
            )
        y, g, gnorm = y_new, g_new, gnorm_new
    if gnorm < tol:
        return y
    raise NewtonDivergenceError(
        f"Newton did not reach tolerance {tol:.1e} in {max_iter} iterations "
        f"(residual {gnorm:.3e})"
    )


def step_implicit(rhs: Callable[[Array], Array], fields: Array, dt: float,
                  *, scheme: str = "implicit_euler",
                  jac: Callable[[Array], Array] | None = None,
                  newton_tol: float = 1e-10,
                  newton_max_iter: int = 25) -> Array:
    """One A-stable implicit step on arbitrarily shaped fields.

    implicit_euler:  y+ = y + dt f(y+)
    trapezoidal:     y+ = y + dt/2 (f(y) + f(y+))

    The inner solve is damped Newton with a dense Jacobian (finite
    differences unless `jac` maps a flat state to the rhs Jacobian).

    Raises
    ------
    NewtonDivergenceError
        If the nonlinear solve fails; the caller owns step-size control.
    """
    if dt <= 0:
        raise ValueError(f"dt must be positive, got {dt}")
    shape = np.shape(fields)
    y0 = np.asarray(fields, dtype=float).ravel().copy()

    def flat_rhs(y: Array) -> Array:
        return np.asarray(rhs(y.reshape(shape)), dtype=float).ravel()

    gamma = 1.0 if scheme == "implicit_euler" else 0.5
    f0 = flat_rhs(y0) if scheme == "trapezoidal" else None

    def residual(y: Array) -> Array:
        if scheme == "implicit_euler":
            return y - y0 - dt * flat_rhs(y)
        return y - y0 - 0.5 * dt * (f0 + flat_rhs(y))

    def solve(y: Array, g: Array) -> Array:
        J = jac(y) if jac is not None else fd_jacobian(flat_rhs, y)
        A = np.eye(y.size) - gamma * dt * np.asarray(J, dtype=float)
        return np.linalg.solve(A, g)

    y1 = _newton(residual, solve, y0, newton_tol, newton_max_iter)
    return y1.reshape(shape)


def _banded_newton_matrix(model: ModelDefinition, delta: float, fields: Array,
                          coeff: float, h: float,
                          jac_point: Callable[[Array], Array]) -> Array:
    """Banded form of I - coeff * J(rhs) for point-major unknown ordering.

    The reaction couples species within a grid point (offsets < s) and the
    Laplacian couples the same species of neighbouring points (offset s),
    so the matrix has s sub- and superdiagonals.
    """
    s = fields.shape[0]
    n = fields.shape[1]
    nu = s * n
    ab = np.zeros((2 * s + 1, nu))
    lap_diag = -2.0 * delta / h**2
    lap_off = delta / h**2
    for i in range(n):
        J = jac_point(fields[:, i])
        base = s * i
        for a in range(s):
            for b in range(s):
                entry = J[a, b] + (lap_diag if a == b else 0.0)
                ab[s + a - b, base + b] += -coeff * entry
        ab[s, base:base + s] += 1.0
    for i in range(n - 1):
        for a in range(s):
            row, col = s * i + a, s * (i + 1) + a
            ab[s + row - col, col] += -coeff * lap_off
            ab[s + col - row, row] += -coeff * lap_off
    return ab


def _rd_step(model: ModelDefinition, rhs: Callable[[Array], Array],
             jac_point: Callable[[Array], Array], delta: float, h: float,
             fields: Array, dt: float, config: SolverConfig) -> Array:
    """One implicit step of the reaction-diffusion system, banded Newton."""
    shape = fields.shape
    s = shape[0]
    gamma = 1.0 if config.scheme == "implicit_euler" else 0.5
    f0 = rhs(fields) if config.scheme == "trapezoidal" else None

    def residual(y: Array) -> Array:
        F = y.reshape(shape, order="F")
        if config.scheme == "implicit_euler":
            r = F - fields - dt * rhs(F)
        else:
            r = F - fields - 0.5 * dt * (f0 + rhs(F))
        return r.ravel(order="F")

    def solve(y: Array, g: Array) -> Array:
        F = y.reshape(shape, order="F")
        ab = _banded_newton_matrix(model, delta, F, gamma * dt, h, jac_point)
        return solve_banded((s, s), ab, g)

    y1 = _newton(residual, solve, fields.ravel(order="F"),
                 config.newton_tol, config.newton_max_iter)
    return y1.reshape(shape, order="F")


def _point_jacobian(model: ModelDefinition) -> Callable[[Array], Array]:
    if model.jacobian is not None:
        return lambda state: np.asarray(model.jacobian(state), dtype=float)
    return lambda state: fd_jacobian(model.rhs, state)


def march_to_steady(model: ModelDefinition, config: SolverConfig,
                    initial: Profile1D) -> Profile1D:
    """Integrate until max |d fields/dt| < steady_tol or t_max is reached.

    The time step grows by `dt_growth` per accepted step (capped at dt_max)
    and halves on Newton failure; falling below dt_min is a hard error.
    Returns the final profile tagged converged / not converged, never
    silently.
    """
    rhs = semidiscretize(model, config.delta, initial)
    jac_point = _point_jacobian(model)
    h = 1.0 / (initial.n_interior + 1)
    fields = initial.fields.copy()
    t = initial.time
    dt = config.dt
    converged = bool(np.max(np.abs(rhs(fields))) < config.steady_tol)
    while not converged and t < config.t_max:
        dt = min(dt, config.t_max - t)
        while True:
            try:
                new_fields = _rd_step(model, rhs, jac_point, config.delta, h,
                                      fields, dt, config)
                break
            except NewtonDivergenceError:
                dt *= 0.5
                if dt < config.dt_min:
                    raise NewtonDivergenceError(
                        f"time step fell below dt_min = {config.dt_min} "
                        f"at t = {t:.6g}"
                    ) from None
        fields = new_fields
        t += dt
        dt = min(dt * config.dt_growth, config.dt_max)
        converged = bool(np.max(np.abs(rhs(fields))) < config.steady_tol)
    return replace(initial, fields=fields, time=t, converged=converged)


def simulate_transient(model: ModelDefinition, config: SolverConfig,
                       initial: Profile1D,
                       times: Sequence[float]) -> list[Profile1D]:
    """Fixed-step transient integration, capturing the profile at `times`.

    Steps with config.dt (shortened to land exactly on each capture time)
    using the configured scheme.  Times must be increasing.
    """
    rhs = semidiscretize(model, config.delta, initial)
    jac_point = _point_jacobian(model)
    h = 1.0 / (initial.n_interior + 1)
    fields = initial.fields.copy()
    t = initial.time
    out: list[Profile1D] = []
    for target in times:
        if target < t - 1e-15:
            raise ValueError("capture times must be increasing")
        while t < target - 1e-12:
            dt = min(config.dt, target - t)
            fields = _rd_step(model, rhs, jac_point, config.delta, h,
                              fields, dt, config)
            t += dt
        out.append(replace(initial, fields=fields, time=target))
    return out


def fast_projection(d: GqlDecomposition, state: Array,
                    manifold_residual: Callable[[Array], Array],
                    *, search_radius: float = 3.0, scan_step: float = 0.02,
                    xtol: float = 1e-13) -> Array:
    """Project a state onto a manifold along the fast subspace.

    Moves the state along span(Zf) (the fast coordinate axis in decomposed
    coordinates) to the nearest root of `manifold_residual`, found by an
    outward bracket scan plus 1D root refinement.  Only one fast direction
    is supported.

    Raises
    ------
    BracketSearchError
        If no sign change is found within `search_radius` of the state; the
        error records the searched interval.
    """
    if d.partition.m_f != 1:
        raise NotImplementedError(
            f"fast projection supports m_f = 1, decomposition has m_f = "
            f"{d.partition.m_f}"
        )
    w = to_decomposed_coords(d, np.asarray(state, dtype=float))
    slow = w.slow

    def g(U: float) -> float:
        s = from_decomposed_coords(d, PartitionedState(slow=slow, fast=[U]))
        return float(np.atleast_1d(manifold_residual(s))[0])

    U0 = float(w.fast[0])
    g0 = g(U0)
    if g0 == 0.0:
        return from_decomposed_coords(d, PartitionedState(slow=slow, fast=[U0]))

    bracket = None
    r = scan_step
    prev_lo, prev_hi = U0, U0
    g_lo_prev, g_hi_prev = g0, g0
    while r <= search_radius + 1e-12:
        for side, prev, g_prev in (("+", prev_hi, g_hi_prev),
                                   ("-", prev_lo, g_lo_prev)):
            U = U0 + r if side == "+" else U0 - r
            gU = g(U)
            if np.isfinite(gU) and gU * g_prev < 0.0:
                bracket = (min(prev, U), max(prev, U))
                break
            if side == "+":
                prev_hi, g_hi_prev = U, gU
            else:
                prev_lo, g_lo_prev = U, gU
        if bracket is not None:
            break
        r += scan_step
    if bracket is None:
        raise BracketSearchError(
            f"no sign change of the manifold residual along the fast fiber in "
            f"[{U0 - search_radius:.6g}, {U0 + search_radius:.6g}]",
            interval=(U0 - search_radius, U0 + search_radius),
        )
    U_star = brentq(g, bracket[0], bracket[1], xtol=xtol)
    return from_decomposed_coords(d, PartitionedState(slow=slow, fast=[U_star]))
