"""Global quasi-linearization: global linear approximation of a vector field,
spectral fast/slow splitting, and the induced coordinate decomposition.

The decomposition represents T as Z . B . Z^{-1} with Z = (Zf | Zs) built
from real invariant subspaces (complex-conjugate pairs contribute 2x2
rotation blocks to B) and estimates the timescale-separation parameter as

    epsilon = max |lambda_slow| / min |lambda_fast|.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .calculus import fd_jacobian
from .errors import (ComplexPairSplitError, DimensionMismatchError,
                     NoSpectralGapError, RankDeficientError)
from .model import Array, ModelDefinition, Partition, PartitionedState, SpsSystem

# Auto gap detection refuses splits whose consecutive-modulus ratio is below
# this; otherwise the system is declared non-decomposable at this T.
MIN_GAP_RATIO = 2.0

_RECONSTRUCTION_TOL = 1e-8


@dataclass(frozen=True)
class GqlDecomposition:
    """Result of splitting the spectrum of a global linearization T.

    Zf (n x m_f) and Zs (n x m_s) hold the fast and slow column subspaces;
    Zf_tilde (m_f x n) and Zs_tilde (m_s x n) are the corresponding rows of
    (Zf | Zs)^{-1}.  lambda_fast and lambda_slow are the eigenvalue groups,
    sorted by modulus descending.
    """

    T: Array
    Zf: Array
    Zs: Array
    Zf_tilde: Array
    Zs_tilde: Array
    lambda_fast: tuple[complex, ...]
    lambda_slow: tuple[complex, ...]
    epsilon: float
    gap_ratio: float
    mode: str  # "auto" or "manual"

    def __post_init__(self):
        for name in ("T", "Zf", "Zs", "Zf_tilde", "Zs_tilde"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n(self) -> int:
        return self.T.shape[0]

    @property
    def partition(self) -> Partition:
        return Partition(m_s=len(self.lambda_slow), m_f=len(self.lambda_fast))


def fit_global_linearization(model: ModelDefinition,
                             samples: Sequence[Array] | None = None,
                             *,
                             reference_point: Array | None = None,
                             step: float = 1e-5) -> Array:
    """Build the global linear approximation T with T u ~ F(u).

    Two modes:

    * least squares (default): T minimizes sum_k ||T u_k - F(u_k)||^2 over
      the given samples, which must span the state space;
    * reference point: T is the Jacobian of F at `reference_point`
      (analytic if the model carries one, finite differences otherwise).

    Raises
    ------
    RankDeficientError
        If the sample matrix has numerical rank below the state dimension.
    """
    if reference_point is not None:
        point = np.asarray(reference_point, dtype=float)
        if model.jacobian is not None:
            return np.asarray(model.jacobian(point), dtype=float)
        return fd_jacobian(model.rhs, point, step)

    if samples is None:
        raise ValueError("either samples or reference_point must be given")
    S = np.asarray(samples, dtype=float)
    if S.ndim != 2 or S.shape[1] != model.dim:
        raise DimensionMismatchError(
            f"samples must be K x {model.dim}, got shape {S.shape}"
        )
    F = np.array([model.rhs(s) for s in S], dtype=float)
    Tt, _, rank, _ = np.linalg.lstsq(S, F, rcond=None)
    if rank < model.dim:
        raise RankDeficientError(
            f"sample matrix has numerical rank {rank} < {model.dim}", rank=rank
        )
    return Tt.T


def _sorted_eigensystem(T: Array) -> tuple[Array, Array]:
    lam, W = np.linalg.eig(T)
    # modulus descending, then real part descending, then imag descending so
    # that conjugate pairs are adjacent with the +imag member first
    order = np.lexsort((-lam.imag, -lam.real, -np.abs(lam)))
    return lam[order], W[:, order]


def _real_basis_columns(lam: Array, W: Array) -> tuple[Array, list[tuple[int, int]]]:
    """Real basis columns for the (sorted) eigensystem.

    Real eigenvalues contribute their unit eigenvector with the
    largest-magnitude entry made positive.  A conjugate pair (lam, conj lam)
    contributes [Re w, Im w] of the +imag member after a deterministic phase
    normalization.  Returns the column matrix and the list of (start, size)
    blocks.
    """
    n = lam.size
    cols = np.zeros((n, n))
    blocks: list[tuple[int, int]] = []
    j = 0
    while j < n:
        if abs(lam[j].imag) <= 1e-12 * max(1.0, abs(lam[j])):
            w = np.real(W[:, j])
            w = w / np.linalg.norm(w)
            if w[int(np.argmax(np.abs(w)))] < 0:
                w = -w
            cols[:, j] = w
            blocks.append((j, 1))
            j += 1
        else:
            if j + 1 >= n or not np.isclose(lam[j + 1], np.conj(lam[j]),
                                            rtol=1e-9, atol=1e-12):
                raise np.linalg.LinAlgError(
                    "complex eigenvalue without adjacent conjugate partner"
                )
            w = W[:, j]
            w = w / np.linalg.norm(w)
            k = int(np.argmax(np.abs(w)))
            w = w * np.exp(-1j * np.angle(w[k]))  # fix the free phase
            cols[:, j] = np.real(w)
            cols[:, j + 1] = np.imag(w)
            blocks.append((j, 2))
            j += 2
    return cols, blocks


def _real_block_diagonal(lam: Array, blocks: list[tuple[int, int]]) -> Array:
    n = lam.size
    B = np.zeros((n, n))
    for start, size in blocks:
        if size == 1:
            B[start, start] = lam[start].real
        else:
            a, b = lam[start].real, lam[start].imag
            B[start:start + 2, start:start + 2] = [[a, b], [-b, a]]
    return B


def split_spectrum(T: Array, m_f: int | None = None,
                   *, min_gap_ratio: float = MIN_GAP_RATIO) -> GqlDecomposition:
    """Split the spectrum of T into fast and slow groups.

    Eigenvalues are sorted by modulus descending.  In auto mode (m_f None)
    the split is placed at the largest consecutive-modulus ratio, which must
    exceed `min_gap_ratio`; in manual mode it is placed after the m_f-th
    eigenvalue.  Either way the groups must satisfy
    max |lambda_slow| < min |lambda_fast| strictly, and the split may not
    separate a complex-conjugate pair.

    Raises
    ------
    NoSpectralGapError
        Auto mode with no usable gap (e.g. all moduli equal), or a manual
        split without strict modulus separation.
    ComplexPairSplitError
        The requested split falls inside a conjugate pair; the error
        proposes the nearest valid split index.
    """
    T = np.asarray(T, dtype=float)
    n = T.shape[0]
    if T.shape != (n, n):
        raise DimensionMismatchError(f"T must be square, got shape {T.shape}")
    lam, W = _sorted_eigensystem(T)
    mods = np.abs(lam)

    with np.errstate(divide="ignore"):
        ratios = np.where(mods[1:] > 0.0, mods[:-1] / np.where(mods[1:] > 0, mods[1:], 1.0),
                          np.inf)

    def straddles_pair(k: int) -> bool:
        return (abs(lam[k - 1].imag) > 0 and
                np.isclose(lam[k], np.conj(lam[k - 1]), rtol=1e-9, atol=1e-12))

    if m_f is None:
        mode = "auto"
        best = int(np.argmax(ratios)) + 1  # split after `best` eigenvalues
        gap = float(ratios[best - 1])
        if not np.isfinite(gap) and mods[best] == 0.0 and mods[best - 1] == 0.0:
            raise NoSpectralGapError("all eigenvalue moduli are zero", ratios=ratios)
        if gap <= min_gap_ratio:
            raise NoSpectralGapError(
                f"largest consecutive-modulus ratio {gap:.3g} does not exceed "
                f"{min_gap_ratio:.3g}; spectrum has no usable gap "
                f"(ratios: {np.array2string(ratios, precision=3)})",
                ratios=ratios,
            )
        if straddles_pair(best):
            # by construction a conjugate pair has ratio 1, never the argmax
            raise ComplexPairSplitError(
                "auto split landed inside a conjugate pair", proposed=best + 1
            )
        m_f = best
    else:
        mode = "manual"
        if not 1 <= m_f <= n - 1:
            raise ValueError(f"m_f must be in [1, {n - 1}], got {m_f}")
        if straddles_pair(m_f):
            nearest = m_f + 1 if (m_f + 1 <= n - 1) else m_f - 1
            raise ComplexPairSplitError(
                f"split after {m_f} eigenvalues separates a complex-conjugate "
                f"pair; nearest valid split is m_f = {nearest}",
                proposed=nearest,
            )
        gap = float(ratios[m_f - 1])
        if not mods[m_f - 1] > mods[m_f]:
            raise NoSpectralGapError(
                f"groups are not strictly separated: min fast modulus "
                f"{mods[m_f - 1]:.6g} vs max slow modulus {mods[m_f]:.6g}",
                ratios=ratios,
            )

    cols, blocks = _real_basis_columns(lam, W)
    Z = cols
    try:
        Z_inv = np.linalg.inv(Z)
    except np.linalg.LinAlgError as exc:
        raise NoSpectralGapError(
            f"eigenvector matrix is numerically singular ({exc}); "
            "the spectrum is defective at this linearization"
        ) from exc

    B = _real_block_diagonal(lam, blocks)
    scale = max(1.0, float(np.max(np.abs(T))))
    recon_err = float(np.max(np.abs(Z @ B @ Z_inv - T)))
    if recon_err > _RECONSTRUCTION_TOL * scale:
        raise NoSpectralGapError(
            f"invariant-subspace reconstruction error {recon_err:.3e} exceeds "
            f"tolerance; the eigenbasis is too ill-conditioned"
        )

    epsilon = float(mods[m_f] / mods[m_f - 1])
    return GqlDecomposition(
        T=T,
        Zf=Z[:, :m_f],
        Zs=Z[:, m_f:],
        Zf_tilde=Z_inv[:m_f, :],
        Zs_tilde=Z_inv[m_f:, :],
        lambda_fast=tuple(complex(x) for x in lam[:m_f]),
        lambda_slow=tuple(complex(x) for x in lam[m_f:]),
        epsilon=epsilon,
        gap_ratio=gap,
        mode=mode,
    )


def to_decomposed_coords(d: GqlDecomposition, state: Array) -> PartitionedState:
    """Map a state into decomposed coordinates: fast = Zf_tilde u, slow = Zs_tilde u."""
    u = np.asarray(state, dtype=float)
    if u.size != d.n:
        raise DimensionMismatchError(f"state has length {u.size}, expected {d.n}")
    return PartitionedState(fast=d.Zf_tilde @ u, slow=d.Zs_tilde @ u)


def from_decomposed_coords(d: GqlDecomposition, state: PartitionedState) -> Array:
    """Inverse of to_decomposed_coords: u = Zf fast + Zs slow."""
    return d.Zf @ state.fast + d.Zs @ state.slow


def build_decomposed_system(d: GqlDecomposition, model: ModelDefinition) -> SpsSystem:
    """Express the model in decomposed coordinates as a fast/slow system.

    fast_rhs(V, U) = Zf_tilde . F(Zf U + Zs V) and correspondingly for the
    slow block, with epsilon taken from the decomposition.
    """
    Zf, Zs = d.Zf, d.Zs
    Zft, Zst = d.Zf_tilde, d.Zs_tilde

    def fast_rhs(slow: Array, fast: Array) -> Array:
        return Zft @ model.rhs(Zf @ np.atleast_1d(fast) + Zs @ np.atleast_1d(slow))

    def slow_rhs(slow: Array, fast: Array) -> Array:
        return Zst @ model.rhs(Zf @ np.atleast_1d(fast) + Zs @ np.atleast_1d(slow))

    return SpsSystem(slow_rhs=slow_rhs, fast_rhs=fast_rhs, epsilon=d.epsilon)


def reconstruction_error(d: GqlDecomposition) -> float:
    """Max-norm error of (Zf | Zs) . B . (Zf_tilde ; Zs_tilde) against T."""
    lam = np.array(d.lambda_fast + d.lambda_slow)
    blocks = []
    j = 0
    while j < lam.size:
        if abs(lam[j].imag) > 1e-12 * max(1.0, abs(lam[j])):
            blocks.append((j, 2))
            j += 2
        else:
            blocks.append((j, 1))
            j += 1
    B = _real_block_diagonal(lam, blocks)
    Z = np.hstack([d.Zf, d.Zs])
    Zt = np.vstack([d.Zf_tilde, d.Zs_tilde])
    return float(np.max(np.abs(Z @ B @ Zt - d.T)))


def format_decomposition(d: GqlDecomposition) -> str:
    """Structured text record: matrices row-major, eigenvalues as (re, im)."""
    lines = [
        "# gql decomposition",
        f"mode: {d.mode}",
        f"n: {d.n}",
        f"m_fast: {d.partition.m_f}",
        f"m_slow: {d.partition.m_s}",
        f"epsilon: {d.epsilon:.16e}",
        f"gap_ratio: {d.gap_ratio:.16e}",
        "lambda_fast: " + " ".join(f"({x.real:.16e}, {x.imag:.16e})"
                                   for x in d.lambda_fast),
        "lambda_slow: " + " ".join(f"({x.real:.16e}, {x.imag:.16e})"
                                   for x in d.lambda_slow),
    ]
    for name in ("T", "Zf", "Zs", "Zf_tilde", "Zs_tilde"):
        mat = getattr(d, name)
        flat = " ".join(f"{x:.16e}" for x in np.asarray(mat).ravel(order="C"))
        lines.append(f"{name} ({mat.shape[0]}x{mat.shape[1]}, row-major): {flat}")
    return "\n".join(lines) + "\n"
