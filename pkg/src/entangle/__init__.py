"""Entanglement measures of pure quantum states.

Schmidt decomposition under arbitrary bipartitions, nearest (unnormalized)
product states over arbitrary multipartite splits, and sequential peel-one-
factor decomposition chains, with the identities relating them verified.
"""

from .tensor_state import (
    StateVector,
    SubsystemSplit,
    assemble_product,
    distance_squared,
    flat_index,
    inner_product,
    multi_index,
)
from .schmidt_core import (
    DensityMatrix,
    QubitSplitResult,
    SchmidtResult,
    entropy_bits,
    entropy_nats,
    hermitian_eig,
    participation,
    qubit_split_closed_form,
    reduced_density_matrix,
    schmidt_decompose,
)
from .geometric_nearest import (
    ConvergenceError,
    GeometricResult,
    ProductState,
    SolverConfig,
    ZeroContractionError,
    bipartite_closed_form,
    fixed_point_residual,
    nearest_product_state,
    normalized_variant,
    sweep_update,
)
from .partovi_chain import (
    ChainStage,
    PartoviChainResult,
    build_chain,
    minimize_over_orderings,
    peel_stage,
)

__version__ = "0.1.0"

__all__ = [
    "StateVector",
    "SubsystemSplit",
    "assemble_product",
    "distance_squared",
    "flat_index",
    "inner_product",
    "multi_index",
    "DensityMatrix",
    "QubitSplitResult",
    "SchmidtResult",
    "entropy_bits",
    "entropy_nats",
    "hermitian_eig",
    "participation",
    "qubit_split_closed_form",
    "reduced_density_matrix",
    "schmidt_decompose",
    "ConvergenceError",
    "GeometricResult",
    "ProductState",
    "SolverConfig",
    "ZeroContractionError",
    "bipartite_closed_form",
    "fixed_point_residual",
    "nearest_product_state",
    "normalized_variant",
    "sweep_update",
    "ChainStage",
    "PartoviChainResult",
    "build_chain",
    "minimize_over_orderings",
    "peel_stage",
    "__version__",
]
