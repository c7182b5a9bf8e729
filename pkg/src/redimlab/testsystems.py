"""Built-in verification systems: linear spectral-gap models, the scalar
heat equation, and two fast/slow systems with exactly known slow invariant
manifolds (one homogeneous, one reaction-diffusion)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import Array, ModelDefinition, SpsSystem

LINEAR_TEST_DIAG = (-100.0, -1.0, -0.5)


def linear_model(matrix: Array) -> ModelDefinition:
    """F(u) = A u with analytic Jacobian."""
    A = np.asarray(matrix, dtype=float)
    n = A.shape[0]
    return ModelDefinition(
        dim=n,
        rhs=lambda u: A @ u,
        jacobian=lambda u: A.copy(),
        labels=tuple(f"u{i}" for i in range(n)),
    )


def heat_model() -> ModelDefinition:
    """Single species, zero reaction; diffusion comes from the solver config."""
    return ModelDefinition(dim=1, rhs=lambda u: np.zeros(1),
                           jacobian=lambda u: np.zeros((1, 1)), labels=("u",))


@dataclass(frozen=True)
class LinearSps:
    """The scalar fast/slow pair  u' = -u,  eps v' = -(v - u).

    Its slow invariant manifold is the slow eigenline of the equivalent
    linear system, v = slope(eps) * u, computed from the 2x2 eigenproblem
    rather than hardcoded.
    """

    epsilon: float

    def system(self) -> SpsSystem:
        return SpsSystem(
            slow_rhs=lambda u, v: -np.atleast_1d(u),
            fast_rhs=lambda u, v: -(np.atleast_1d(v) - np.atleast_1d(u)),
            epsilon=self.epsilon,
        )

    def manifold_slope(self) -> float:
        """v/u on the slow eigenvector of [[-1, 0], [1/eps, -1/eps]]."""
        eps = self.epsilon
        A = np.array([[-1.0, 0.0], [1.0 / eps, -1.0 / eps]])
        lam, V = np.linalg.eig(A)
        i = int(np.argmin(np.abs(lam)))
        return float(V[1, i] / V[0, i])


@dataclass(frozen=True)
class LinearReactionDiffusion:
    """Linear two-species reaction-diffusion system with commuting blocks.

        du/dt = a u + b v + Lap u          (slow)
        dv/dt = (c u + d v)/eps + Lap v    (fast)

    Because the reaction matrix acts identically on every spatial mode of
    the common Laplacian, the slow eigenline v = m(eps) u of the 2x2
    reaction matrix [[a, b], [c/eps, d/eps]] is an exactly invariant
    manifold of the full semi-discrete system, and the on-manifold
    stationary profile solves a single linear system.
    """

    epsilon: float
    a: float = -1.0
    b: float = 0.5
    c: float = 0.4
    d: float = -1.0

    def system(self) -> SpsSystem:
        a, b, c, d = self.a, self.b, self.c, self.d
        return SpsSystem(
            slow_rhs=lambda u, v: a * np.atleast_1d(u) + b * np.atleast_1d(v),
            fast_rhs=lambda u, v: c * np.atleast_1d(u) + d * np.atleast_1d(v),
            epsilon=self.epsilon,
        )

    def slow_eigenpair(self) -> tuple[float, float]:
        """(lambda_slow, m) with v = m u the slow eigenline."""
        eps = self.epsilon
        A = np.array([[self.a, self.b], [self.c / eps, self.d / eps]])
        lam, V = np.linalg.eig(A)
        i = int(np.argmin(np.abs(lam)))
        return float(lam[i].real), float(V[1, i].real / V[0, i].real)

    def stationary_slow_field(self, n_interior: int,
                              u_left: float, u_right: float) -> Array:
        """Exact stationary slow field of the semi-discrete on-manifold
        dynamics u' = lambda_slow u + Lap u, by a direct linear solve."""
        lam_s, _ = self.slow_eigenpair()
        h = 1.0 / (n_interior + 1)
        D = np.zeros((n_interior, n_interior))
        np.fill_diagonal(D, -2.0)
        idx = np.arange(n_interior - 1)
        D[idx, idx + 1] = 1.0
        D[idx + 1, idx] = 1.0
        D /= h * h
        bvec = np.zeros(n_interior)
        bvec[0] = u_left / h**2
        bvec[-1] = u_right / h**2
        return np.linalg.solve(lam_s * np.eye(n_interior) + D, -bvec)
