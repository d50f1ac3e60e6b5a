"""Pure states as complex amplitude vectors over a tensor product of subsystems.

A state is a flat vector of amplitudes in the computational basis, row-major
(big-endian) over the declared subsystem dimensions. A split groups the
subsystems into two or more factors; multi-indices over the factors are
plain tuples, bijective with flat indices in row-major order with the factor
order as declared. Amplitudes are never normalized implicitly; callers opt in.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

NORMALIZATION_TOL = 1e-8


@dataclass(frozen=True)
class StateVector:
    """Complex amplitude vector with declared subsystem dimensions."""

    dims: tuple[int, ...]
    amps: np.ndarray

    def __init__(self, dims: Sequence[int], amps: Sequence[complex] | np.ndarray):
        dims = tuple(int(d) for d in dims)
        if not dims or any(d < 1 for d in dims):
            raise ValueError(f"subsystem dimensions must be positive, got {dims}")
        amps = np.asarray(amps, dtype=complex).reshape(-1).copy()
        if math.prod(dims) != amps.size:
            raise ValueError(
                f"product of dims {dims} is {math.prod(dims)}, "
                f"but {amps.size} amplitudes were given"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "amps", amps)

    @property
    def n(self) -> int:
        return self.amps.size

    def norm_sq(self) -> float:
        return float(np.real(np.vdot(self.amps, self.amps)))

    def is_normalized(self, tol: float = NORMALIZATION_TOL) -> bool:
        return abs(self.norm_sq() - 1.0) <= tol

    def normalized(self) -> "StateVector":
        """Rescaled copy with unit norm. Raises on the zero vector."""
        nrm = math.sqrt(self.norm_sq())
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero state")
        return StateVector(self.dims, self.amps / nrm)

    def require_normalized(self, tol: float = NORMALIZATION_TOL) -> None:
        if not self.is_normalized(tol):
            raise ValueError(
                f"state is not normalized: |amps|^2 = {self.norm_sq():.12g}"
            )


@dataclass(frozen=True)
class SubsystemSplit:
    """Ordered partition of a state's subsystems into m >= 2 factors.

    ``groups`` lists, per factor, the subsystem indices it contains; every
    subsystem must appear in exactly one group. Factors of dimension 1 are
    rejected because they make the product-state problem degenerate.
    """

    dims: tuple[int, ...]
    groups: tuple[tuple[int, ...], ...]

    def __init__(self, dims: Sequence[int], groups: Sequence[Sequence[int]]):
        dims = tuple(int(d) for d in dims)
        groups = tuple(tuple(int(s) for s in g) for g in groups)
        if len(groups) < 2:
            raise ValueError("a split needs at least two factors")
        flat = [s for g in groups for s in g]
        if sorted(flat) != list(range(len(dims))):
            raise ValueError(
                f"groups {groups} must partition the subsystem indices 0..{len(dims) - 1}"
            )
        for g in groups:
            fdim = math.prod(dims[s] for s in g)
            if fdim < 2:
                raise ValueError(f"factor {g} has dimension {fdim}; need >= 2")
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "groups", groups)

    @property
    def num_factors(self) -> int:
        return len(self.groups)

    @property
    def factor_dims(self) -> tuple[int, ...]:
        return tuple(math.prod(self.dims[s] for s in g) for g in self.groups)

    @property
    def factor_labels(self) -> tuple[str, ...]:
        return tuple(chr(ord("A") + f) for f in range(len(self.groups)))

    def label_index(self, label: str) -> int:
        try:
            return self.factor_labels.index(label)
        except ValueError:
            raise ValueError(
                f"unknown factor label {label!r}; this split has {self.factor_labels}"
            ) from None

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)

    def subsystem_order(self) -> tuple[int, ...]:
        """Subsystem indices in the order the factors traverse them."""
        return tuple(s for g in self.groups for s in g)

    def tensor_of(self, psi: StateVector) -> np.ndarray:
        """Amplitudes of psi as a tensor with one axis per factor."""
        if psi.dims != self.dims:
            raise ValueError(f"state dims {psi.dims} do not match split dims {self.dims}")
        t = psi.amps.reshape(self.dims)
        t = np.transpose(t, self.subsystem_order())
        return t.reshape(self.factor_dims)

    def state_from_tensor(self, tensor: np.ndarray) -> StateVector:
        """Inverse of tensor_of: reassemble a factor-indexed tensor into a state."""
        order = self.subsystem_order()
        per_subsystem = tensor.reshape(tuple(self.dims[s] for s in order))
        inverse = np.argsort(order)
        return StateVector(self.dims, np.transpose(per_subsystem, inverse).reshape(-1))


def flat_index(mi: Sequence[int], split: SubsystemSplit) -> int:
    """Row-major flat index of a factor multi-index, factor order as declared."""
    fdims = split.factor_dims
    if len(mi) != len(fdims):
        raise ValueError(f"multi-index {tuple(mi)} has {len(mi)} components; split has {len(fdims)} factors")
    flat = 0
    for component, d in zip(mi, fdims):
        if not 0 <= component < d:
            raise IndexError(f"multi-index component {component} out of range [0, {d})")
        flat = flat * d + component
    return flat


def multi_index(flat: int, split: SubsystemSplit) -> tuple[int, ...]:
    """Inverse of flat_index."""
    if not 0 <= flat < split.total_dim:
        raise IndexError(f"flat index {flat} out of range [0, {split.total_dim})")
    out = []
    for d in reversed(split.factor_dims):
        out.append(flat % d)
        flat //= d
    return tuple(reversed(out))


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>, conjugate-linear in the first argument."""
    if a.dims != b.dims:
        raise ValueError(f"dims mismatch: {a.dims} vs {b.dims}")
    return complex(np.vdot(a.amps, b.amps))


def assemble_product(factors: Sequence[np.ndarray], split: SubsystemSplit) -> StateVector:
    """Tensor product of per-factor coefficient vectors as a full state.

    The amplitude at factor multi-index (i, j, k, ...) is the product of the
    i-th, j-th, k-th, ... coefficients of the respective factors.
    """
    fdims = split.factor_dims
    if len(factors) != len(fdims):
        raise ValueError(f"{len(factors)} factor vectors for a {len(fdims)}-factor split")
    vecs = []
    for f, (vec, d) in enumerate(zip(factors, fdims)):
        vec = np.asarray(vec, dtype=complex).reshape(-1)
        if vec.size != d:
            raise ValueError(f"factor {f} has length {vec.size}, expected {d}")
        vecs.append(vec)
    tensor = vecs[0]
    for vec in vecs[1:]:
        tensor = np.multiply.outer(tensor, vec)
    return split.state_from_tensor(tensor)


def distance_squared(phi: StateVector, psi: StateVector) -> float:
    """Squared Euclidean distance |phi - psi|^2."""
    if phi.dims != psi.dims:
        raise ValueError(f"dims mismatch: {phi.dims} vs {psi.dims}")
    d = phi.amps - psi.amps
    return float(np.real(np.vdot(d, d)))
