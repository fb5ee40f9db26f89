"""Rank hashing of real-valued feature templates with a polynomial product
kernel, plus matching, evaluation and security-analysis tooling."""

__version__ = "0.1.0"

from .errors import (
    DataError,
    DimensionError,
    IncompatibleTemplateError,
    ParameterError,
    RankHashError,
    SeedReuseError,
)
from .hashing import (
    HashParams,
    HashedCode,
    PermutationSet,
    derive_permutations,
    hash_indices,
    hash_template,
    hash_templates,
    pack_indices,
    product_code,
    reissue,
    single_permutation,
    unpack_indices,
    windowed_argmax,
)
from .matching import MatchScore, RankAgreement, collision_probability, collision_score, pairwise_order
from .evaluation import (
    Dataset,
    EerResult,
    ScoreSet,
    SyntheticSpec,
    cancellability_experiment,
    compute_eer,
    ks_statistic,
    run_protocol,
    sweep,
    synthesize_dataset,
)
from .security import (
    ComplexityReport,
    FeatureStats,
    OrderConstraintGraph,
    arm_order_attack,
    attack_success_rate,
    brute_force_complexity,
    observe,
)
from .store import TemplateRecord, read_store, write_store

__all__ = [
    "__version__",
    "RankHashError", "ParameterError", "DimensionError", "SeedReuseError",
    "IncompatibleTemplateError", "DataError",
    "HashParams", "PermutationSet", "HashedCode",
    "derive_permutations", "single_permutation", "product_code",
    "windowed_argmax", "hash_template", "hash_templates", "hash_indices",
    "reissue", "pack_indices", "unpack_indices",
    "MatchScore", "RankAgreement", "collision_score", "pairwise_order",
    "collision_probability",
    "SyntheticSpec", "Dataset", "ScoreSet", "EerResult",
    "synthesize_dataset", "run_protocol", "compute_eer", "sweep",
    "cancellability_experiment", "ks_statistic",
    "FeatureStats", "ComplexityReport", "OrderConstraintGraph",
    "brute_force_complexity", "arm_order_attack", "attack_success_rate",
    "observe",
    "TemplateRecord", "write_store", "read_store",
]
