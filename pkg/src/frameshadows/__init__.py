"""Shadow tomography on general measurement frames.

POVM construction and validation, frame superoperators and their dual-frame
(unbiased estimator) families, exact and averaged estimation variances with
spectral and tightness bounds, and a Monte Carlo shot simulator.
"""

__version__ = "0.1.0"

from .operators import (
    hs_inner,
    hs_norm,
    random_haar_unitary,
    random_state,
    standard_herm_basis,
    vectorize,
    devectorize,
)
from .povms import (
    CovariantSampler,
    Povm,
    is_2design,
    is_3design,
    mub_povm,
    projective,
    random_rank1,
    toy_qubit_povm,
    validate,
)
from .frames import (
    DualFrame,
    FrameOperator,
    brute_force_min_variance_oracle,
    canonical_dual,
    canonical_estimator,
    canonical_frame_superop,
    estimator_bound,
    frame_superop,
    is_informationally_complete,
    is_tight,
    min_variance_dual,
    rescaled_frame_superop,
)
from .variance import (
    a_operator,
    build_variance_report,
    mse_matrix,
    shadow_norm_sq,
    state_error,
    variance_3design,
    variance_averaged,
    variance_double_averaged,
    variance_exact,
    variance_eig_bounds,
    variance_minmax,
    worst_case_lower_bound,
)
from .shots import (
    RunSummary,
    covariant_run,
    evaluate_estimator,
    histogram_export,
    sample_outcomes,
    summarize,
)
