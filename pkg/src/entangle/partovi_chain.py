"""Sequential Schmidt decomposition: peel one factor at a time and recurse.

Each stage splits the current state across (peeled factor | everything else),
yielding stage coefficients, an orthonormal basis in the peeled space, and one
normalized remainder state per branch. Recursing over the surviving branches
expands the state as a sum over branch multi-indices whose joint coefficients
multiply along the path; the expansion reassembles the state exactly. The
product state used for the chain angle takes the largest-coefficient branch at
every stage. The result depends on the peel order, so the minimizer evaluates
every permutation of the factors.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .tensor_state import StateVector, SubsystemSplit, assemble_product, inner_product
from .schmidt_core import schmidt_decompose

BRANCH_CUTOFF = 1e-12
MAX_EXHAUSTIVE_FACTORS = 8


@dataclass(frozen=True)
class ChainStage:
    """One peel event: the decomposition of a single branch's state.

    ``branch`` is the parent branch multi-index this stage decomposes (empty
    for the first stage). remainder_split is None once a single factor is
    left; remainder_labels names the factors remaining after the peel.
    """

    peeled_factor: str
    branch: tuple[int, ...]
    coefficients: np.ndarray
    peeled_basis: np.ndarray
    remainder_states: tuple[StateVector, ...]
    remainder_split: SubsystemSplit | None
    remainder_labels: tuple[str, ...]


@dataclass(frozen=True)
class PartoviChainResult:
    """Full sequential decomposition along one factor ordering."""

    ordering: tuple[str, ...]
    stages: tuple[ChainStage, ...]
    joint_coefficients: dict[tuple[int, ...], float]
    chain_cos_theta: float
    chain_sin2_theta: float
    reconstruction_fidelity: float


def _peel_once(
    state: StateVector,
    groups: tuple[tuple[int, ...], ...],
    labels: tuple[str, ...],
    peel: str,
    branch: tuple[int, ...],
) -> ChainStage:
    if peel not in labels:
        raise ValueError(f"factor {peel!r} is not one of {labels}")
    pos = labels.index(peel)
    rest_groups = [g for j, g in enumerate(groups) if j != pos]
    rest_concat = tuple(s for g in rest_groups for s in g)
    bsplit = SubsystemSplit(state.dims, (groups[pos], rest_concat))
    sr = schmidt_decompose(state, bsplit)

    new_dims = tuple(state.dims[s] for s in rest_concat)
    new_groups = []
    offset = 0
    for g in rest_groups:
        new_groups.append(tuple(range(offset, offset + len(g))))
        offset += len(g)
    new_labels = tuple(l for j, l in enumerate(labels) if j != pos)
    remainders = tuple(
        StateVector(new_dims, sr.right_basis[:, k]) for k in range(len(sr.coefficients))
    )
    return ChainStage(
        peeled_factor=peel,
        branch=branch,
        coefficients=sr.coefficients,
        peeled_basis=sr.left_basis,
        remainder_states=remainders,
        remainder_split=SubsystemSplit(new_dims, new_groups) if len(new_groups) >= 2 else None,
        remainder_labels=new_labels,
    )


def peel_stage(state: StateVector, split: SubsystemSplit, peel: str) -> ChainStage:
    """Decompose a state across (peeled factor | all remaining factors)."""
    return _peel_once(state, split.groups, split.factor_labels, peel, branch=())


def build_chain(
    psi: StateVector, split: SubsystemSplit, ordering: tuple[str, ...] | list[str]
) -> PartoviChainResult:
    """Run the sequential decomposition along the given factor ordering."""
    labels = split.factor_labels
    ordering = tuple(ordering)
    if sorted(ordering) != sorted(labels):
        raise ValueError(f"ordering {ordering} is not a permutation of {labels}")
    psi.require_normalized()

    stages: list[ChainStage] = []
    leaves: list[tuple[tuple[int, ...], float, dict[str, np.ndarray]]] = []

    def recurse(state, groups, labs, order_rest, branch, acc, path_vectors):
        stage = _peel_once(state, groups, labs, order_rest[0], branch)
        stages.append(stage)
        for i, p in enumerate(stage.coefficients):
            if p <= BRANCH_CUTOFF:
                continue
            vectors = dict(path_vectors)
            vectors[stage.peeled_factor] = stage.peeled_basis[:, i]
            child = stage.remainder_states[i]
            if stage.remainder_split is None:
                vectors[stage.remainder_labels[0]] = child.amps
                leaves.append((branch + (i,), acc * float(p), vectors))
            else:
                recurse(
                    child,
                    stage.remainder_split.groups,
                    stage.remainder_labels,
                    order_rest[1:],
                    branch + (i,),
                    acc * float(p),
                    vectors,
                )

    recurse(psi, split.groups, labels, ordering, (), 1.0, {})

    ordered_split = SubsystemSplit(
        psi.dims, tuple(split.groups[split.label_index(lab)] for lab in ordering)
    )

    def assemble(vectors: dict[str, np.ndarray]) -> StateVector:
        return assemble_product([vectors[lab] for lab in ordering], ordered_split)

    rebuilt = np.zeros(psi.n, dtype=complex)
    for _, joint_p, vectors in leaves:
        rebuilt += math.sqrt(joint_p) * assemble(vectors).amps
    fidelity = abs(inner_product(psi, StateVector(psi.dims, rebuilt))) ** 2

    # Stage coefficients are sorted descending, so the largest-coefficient
    # branch at every stage is the all-zeros multi-index.
    top_branch = (0,) * (split.num_factors - 1)
    top_vectors = next(v for b, _, v in leaves if b == top_branch)
    cos = abs(inner_product(psi, assemble(top_vectors)))
    return PartoviChainResult(
        ordering=ordering,
        stages=tuple(stages),
        joint_coefficients={b: p for b, p, _ in leaves},
        chain_cos_theta=cos,
        chain_sin2_theta=1.0 - cos * cos,
        reconstruction_fidelity=fidelity,
    )


def minimize_over_orderings(psi: StateVector, split: SubsystemSplit):
    """Evaluate every peel ordering and return the one minimizing the measure.

    Returns (best result, table of (ordering, chain_sin2_theta) for all m!
    orderings). Ties are broken by lexicographic ordering label. Splits with
    more than 8 factors are rejected; sample orderings with build_chain
    instead.
    """
    if split.num_factors > MAX_EXHAUSTIVE_FACTORS:
        raise ValueError(
            f"{split.num_factors} factors means {math.factorial(split.num_factors)} "
            "orderings; evaluate chosen orderings directly with build_chain"
        )
    table: list[tuple[tuple[str, ...], float]] = []
    best: PartoviChainResult | None = None
    for ordering in itertools.permutations(split.factor_labels):
        result = build_chain(psi, split, ordering)
        table.append((ordering, result.chain_sin2_theta))
        if best is None or (result.chain_sin2_theta, result.ordering) < (
            best.chain_sin2_theta,
            best.ordering,
        ):
            best = result
    return best, table
