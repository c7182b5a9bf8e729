"""Vector-field models, state partitioning, and fast/slow system containers."""

from __future__ import annotations

import types
from dataclasses import dataclass, field
from typing import Callable, Mapping

import numpy as np

from .errors import DimensionMismatchError

Array = np.ndarray


def frozen_array(values, dtype=float) -> Array:
    """Copy `values` into a read-only ndarray."""
    arr = np.array(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ModelDefinition:
    """An autonomous vector field du/dt = F(u) with optional analytic Jacobian.

    Parameters
    ----------
    dim : int
        Full state dimension n.
    rhs : callable
        Maps a state vector of length `dim` to a vector of length `dim`.
    jacobian : callable, optional
        Maps a state vector to the dim x dim Jacobian of `rhs`.
    params : mapping, optional
        Named real parameters, kept for reporting and reproducibility.
    labels : tuple of str, optional
        One name per state component.
    """

    dim: int
    rhs: Callable[[Array], Array]
    jacobian: Callable[[Array], Array] | None = None
    params: Mapping[str, float] = field(default_factory=dict)
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        if self.dim <= 0:
            raise ValueError(f"dim must be a positive integer, got {self.dim}")
        if self.labels and len(self.labels) != self.dim:
            raise DimensionMismatchError(
                f"{len(self.labels)} labels for a model of dimension {self.dim}"
            )
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "params", types.MappingProxyType(dict(self.params)))


@dataclass(frozen=True)
class Partition:
    """Sizes of the slow and fast state blocks, m_s + m_f = n."""

    m_s: int
    m_f: int

    def __post_init__(self):
        if self.m_s < 0 or self.m_f < 0 or self.m_s + self.m_f == 0:
            raise ValueError(f"invalid partition (m_s={self.m_s}, m_f={self.m_f})")

    @property
    def dim(self) -> int:
        return self.m_s + self.m_f


@dataclass(frozen=True)
class PartitionedState:
    """A state split into a slow block and a fast block.

    The canonical concatenation order puts the fast block first, so
    ``join_state(split_state(s, p), p) == s`` holds exactly.
    """

    slow: Array
    fast: Array

    def __post_init__(self):
        object.__setattr__(self, "slow", frozen_array(np.atleast_1d(self.slow)))
        object.__setattr__(self, "fast", frozen_array(np.atleast_1d(self.fast)))

    @property
    def partition(self) -> Partition:
        return Partition(m_s=self.slow.size, m_f=self.fast.size)


@dataclass(frozen=True)
class SpsSystem:
    """A system in standard singularly perturbed form.

    du/dt = slow_rhs(u, v)            (slow block u, length m_s)
    eps dv/dt = fast_rhs(u, v)        (fast block v, length m_f)

    Both right-hand sides take (slow, fast) and return a vector of their
    own block size.  `epsilon` is the timescale-separation parameter.
    """

    slow_rhs: Callable[[Array, Array], Array]
    fast_rhs: Callable[[Array, Array], Array]
    epsilon: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError(f"epsilon must lie in (0, 1), got {self.epsilon}")


def evaluate_rhs(model: ModelDefinition, state: Array) -> Array:
    """Evaluate F(state), checking dimensions.

    Raises
    ------
    DimensionMismatchError
        If `state` or the rhs output has the wrong length.
    """
    arr = np.array(state, dtype=float)
    if arr.size != model.dim:
        raise DimensionMismatchError(
            f"state has length {arr.size}, model dimension is {model.dim}"
        )
    arr.setflags(write=False)
    out = np.asarray(model.rhs(arr), dtype=float)
    if out.size != model.dim:
        raise DimensionMismatchError(
            f"rhs returned length {out.size}, model dimension is {model.dim}"
        )
    return out.copy()


def split_state(state: Array, partition: Partition) -> PartitionedState:
    """Split a full state: fast block = first m_f entries, slow block = rest."""
    arr = np.asarray(state, dtype=float)
    if partition.m_s + partition.m_f != arr.size:
        raise DimensionMismatchError(
            f"partition (m_s={partition.m_s}, m_f={partition.m_f}) is inconsistent "
            f"with a state of length {arr.size}"
        )
    m_f = partition.m_f
    return PartitionedState(fast=arr[:m_f].copy(), slow=arr[m_f:].copy())


def join_state(state: PartitionedState) -> Array:
    """Concatenate fast block then slow block into a full state vector."""
    return np.concatenate([state.fast, state.slow])
