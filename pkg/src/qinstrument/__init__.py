"""Finite-dimensional quantum measurement toolkit.

Construct, validate and transform quantum instruments (outcome-indexed
superoperator families), extract their POVMs and total operations, test
decomposability and observable compatibility, realize completely positive
instruments by indirect measurement models and back, and simulate
successive measurements with exact joint statistics, affinity probing and
seeded Monte Carlo sampling.
"""

from .linalg import (
    is_psd,
    partial_trace_ancilla,
    tensor_product,
    unitary_completion,
)
from .objects import (
    DensityOperator,
    OutcomeDistribution,
    OutcomeSpace,
    Povm,
    SharpObservable,
    born_distribution,
    is_nondegenerate,
    luders_pinching,
)
from .superop import (
    KrausSet,
    PositivityVerdict,
    Superoperator,
    transpose_map,
)
from .instruments import (
    DecompositionReport,
    Instrument,
    StateFamily,
    check_decomposition_identities,
    family_from_operation,
    instrument_from_state_family,
    instrument_from_total_operation,
    is_e_compatible_operation,
    luders_instrument,
    operation_from_state_family,
)
from .dilation import (
    IndirectModel,
    RealizationReport,
    dilate,
    instrument_of_model,
    verify_realization,
)
from .schemes import (
    Apparatus,
    CollectiveScheme,
    JointDistribution,
    MixingLawVerdict,
    MixingLawWitness,
    TrajectoryResult,
    check_mlpd,
    collective_of,
    eigenbasis_apparatus,
    joint_distribution,
    povm_from_affine_scheme,
    sample_trajectory,
    scheme_of_instrument,
)
from .validation import (
    AffinityError,
    FormatError,
    InvariantViolation,
    ZeroProbabilityError,
)

__version__ = "0.1.0"

__all__ = [
    "AffinityError",
    "Apparatus",
    "CollectiveScheme",
    "DecompositionReport",
    "DensityOperator",
    "FormatError",
    "IndirectModel",
    "Instrument",
    "InvariantViolation",
    "JointDistribution",
    "KrausSet",
    "MixingLawVerdict",
    "MixingLawWitness",
    "OutcomeDistribution",
    "OutcomeSpace",
    "PositivityVerdict",
    "Povm",
    "RealizationReport",
    "SharpObservable",
    "StateFamily",
    "Superoperator",
    "TrajectoryResult",
    "ZeroProbabilityError",
    "born_distribution",
    "check_decomposition_identities",
    "check_mlpd",
    "collective_of",
    "dilate",
    "eigenbasis_apparatus",
    "family_from_operation",
    "instrument_from_state_family",
    "instrument_from_total_operation",
    "instrument_of_model",
    "is_e_compatible_operation",
    "is_nondegenerate",
    "is_psd",
    "joint_distribution",
    "luders_instrument",
    "luders_pinching",
    "operation_from_state_family",
    "partial_trace_ancilla",
    "povm_from_affine_scheme",
    "sample_trajectory",
    "scheme_of_instrument",
    "tensor_product",
    "transpose_map",
    "unitary_completion",
    "verify_realization",
]
