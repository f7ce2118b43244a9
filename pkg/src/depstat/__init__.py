"""Dependence measures and independence tests.

Distance covariance/correlation, biased and unbiased HSIC with Gaussian
kernels, and Feuerverger's rank-score statistic; permutation and Gamma null
distributions; and the rotation-mixing benchmark used to compare their power.
"""
from .benchgen import MixConfig, SourceDensity, embed_mix, generate_instance, random_orthogonal, rotate_pair, sample_source
from .errors import (
    CellFailure,
    DegenerateNullError,
    DepstatError,
    InsufficientSampleError,
    InvalidBandwidthError,
    InvalidInputError,
    OracleFailureError,
    UnsupportedDimensionError,
    UnsupportedStatisticError,
)
from .experiment import ExperimentGrid, GridPoint, PowerCell, PowerReport, TestSpec, emit_report, run_cell, run_grid
from .null import (
    NullEstimate,
    NullModel,
    TestConfig,
    TestResult,
    empirical_quantile,
    gamma_test,
    permutation_null,
    permutation_test,
    run_test,
)
from .sample import PairedSample, gaussian_gram, median_heuristic, pairwise_distances, rank_normal_scores
from .stats import StatKind, StatValue, dcor_r2, dcov_v2, feuerverger_t1, hsic, hsic_biased, hsic_unbiased, prepare

__version__ = "0.1.0"
