"""Likelihood-free Bayesian model selection via rejection ABC.

Candidate models are compared by simulating from their priors and measuring
how close simulated datasets fall to the observed data, either through
summary statistics or through full-data statistical distances (Wasserstein-1,
Cramér-von Mises, MMD); acceptance frequencies under a quantile threshold
estimate posterior model probabilities.
"""

__version__ = "0.1.0"

from .discrepancies import (
    DistanceRecord,
    EmpiricalSample,
    KernelSpec,
    combine_distances,
    cvm,
    cvm_general,
    median_heuristic,
    mmd2_fast,
    mmd2_unbiased,
    summary_distance,
    wasserstein1,
    wasserstein1_general,
)
from .engine import (
    AbcMethod,
    AbcRun,
    IidAdapter,
    PosteriorEstimate,
    ThresholdPolicy,
    ToadAdapter,
    apply_threshold,
    estimate_mad_weights,
    load_run,
    posterior_param_summary,
    run_abc,
    run_abc_multi,
    save_run,
)
from .models import (
    ModelSpec,
    expo_family_models,
    gandk_models,
    normal_mean_models,
)
from .oracles import (
    ExactPosterior,
    MethodScore,
    bayes_factor_normal_known,
    exact_posterior_expo,
    exact_posterior_normal_known,
    marginal_likelihood_expo,
    score_method,
)
from .reporting import emit_outputs
from .samplers import (
    GandKParams,
    StableParams,
    gandk_quantile,
    sample_gandk,
    sample_stable,
)
from .seeding import DrawStreams, SeedSpec, derive_seed
from .studies import ExperimentConfig, ResultTable, parse_config, run_study
from .toads import (
    LagFeatures,
    ToadConfig,
    extract_lag_features,
    load_toad_matrix,
    simulate_toads,
    toad_models,
    toad_summary_stats,
)
