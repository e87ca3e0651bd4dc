"""k-means solvers paired with a quasilinear certificate of global optimality.

The pipeline: sample (or load) points, run a fast solver, then certify the
returned partition by testing whether the all-ones vector spans the unique
leading eigenspace of an implicitly applied certificate operator.
"""

from .model import (
    BallModelConfig,
    Dataset,
    DISTRIBUTIONS,
    Partition,
    PointSet,
    TWO_POINT_SYM,
    UNIFORM_BALL,
    UNIFORM_SPHERE,
    counterexample_1d_objectives,
    kmeans_objective,
    normalized_partition_matrix,
    pairwise_sq_distances,
    partition_from_labels,
    partitions_equal,
    read_dataset_csv,
    sample_stochastic_ball_model,
    standard_centers,
    write_dataset_csv,
)
from .certificate import (
    CertificateContext,
    CertificateUndefinedError,
    CertifyDecision,
    CertifyOutcome,
    ImplicitOperator,
    apply_A,
    build_certificate_context,
    certify_partition,
    corollary_check,
    dense_A,
    diagnostics_csv,
    recover_alpha,
)
from .detector import (
    DetectorConfig,
    DetectorDecision,
    DetectorOutcome,
    EigenvectorMismatchError,
    default_epsilon,
    pi_epsilon_bound,
    power_iteration_detect,
)
from .solvers import (
    EigenResult,
    SolveResult,
    ThresholdScan,
    exact_kmeans_bruteforce,
    leading_eigenvector,
    lloyd,
    optimal_threshold_split,
    spectral_two_means,
)
from .cli import TrialRecord, run_sweep, run_trial

__all__ = [name for name in dir() if not name.startswith("_")]
