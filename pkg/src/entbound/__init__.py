"""Certified lower bounds on entanglement measures from collective-spin moments.

The package turns measured or simulated first and second moments of
collective spin observables into lower bounds on the best separable
approximation (BSA) and the generalized robustness (GR), with a built-in
Dicke-basis simulator and small-dimension oracles that verify every bound.
"""

from .bounds import (
    BoundResult,
    GiovannettiReport,
    WinelandReport,
    bsa_from_product,
    bsa_from_sum,
    giovannetti_bounds,
    giovannetti_g2,
    gr_from_product,
    gr_from_sum,
    wineland_bounds,
    wineland_moment_data,
    wineland_moment_data_from_xi2,
    wineland_xi2,
    xi2_db,
)
from .criteria import (
    ConstantVariance,
    OperatorContext,
    OperatorRole,
    ProductCriterion,
    SpectralConstants,
    SumCriterion,
    WitnessParams,
    bipartite_dicke_context,
    bipartite_qubit_context,
    criterion_from_config,
    dicke_context,
    giovannetti_criterion,
    product_value,
    qubit_context,
    spectral_constants,
    sum_value,
    tangent_sum_criterion,
    wineland_criterion,
    witness_product,
    witness_sum,
)
from .errors import (
    ConvergenceError,
    DegenerateCriterionError,
    DimensionError,
    EntboundError,
    EstimationError,
    NormalizationError,
    SchemaError,
    UnmeasuredMomentError,
    ValidationError,
)
from .moments import (
    BipartiteMomentData,
    MomentData,
    ShotRecord,
    estimate_bipartite_moments,
    estimate_moments,
    load_moments,
    load_shots,
    save_moments,
    save_shots,
)
from .operators import (
    DickeBasis,
    HermitianOperator,
    SpectralBounds,
    collective_spectral_bounds,
    collective_spin,
    collective_spin_embedded,
    eigen_bounds,
    partial_transpose,
    tensor_embed,
)
from .oracle import (
    DensityMatrix,
    ProductStateSample,
    bsa_upper,
    gr_ppt,
    gr_ppt_bisect,
    membership_check,
    min_over_product_states,
    schmidt_robustness,
    symmetric_embedding,
)
from .simulator import (
    SpinEnsembleState,
    SplitConfig,
    css_x,
    exact_moments,
    exact_raw_moments,
    oat_evolve,
    optimal_squeezing_rotation,
    rotate_x,
    sample_shots,
    split_moments,
    split_state_moments,
)

__version__ = "0.1.0"
