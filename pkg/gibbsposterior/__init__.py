# gibbsposterior
# Gibbs measures on mixing shifts of finite type, Gibbs and Bayes posteriors over a
# parameter grid, and desk-scale checks of their limit and consistency theorems

from .errors import (
    ConfigError,
    DomainError,
    EmptyShift,
    GibbsPosteriorError,
    InadmissibleObservation,
    KindMismatch,
    LengthMismatch,
    NoConvergence,
    NonFinite,
    NotMixing,
    ResourceLimit,
    ShapeMismatch,
    UnknownGenerator,
)
from .models import (
    LossKind,
    LossSpec,
    PotentialFamily,
    ThetaGrid,
    bernoulli_family,
    discrete_loss,
    family_from_tables,
    gaussian_loss,
    linear_gaussian_loss,
    loss_eval,
    loss_path_sum,
    markov_family,
    regularity_report,
    squared_loss,
    zero_loss,
)
from .posterior import (
    PosteriorGrid,
    RateTable,
    bayes_posterior_direct,
    bayes_posterior_hidden,
    concentration_report,
    direct_loss,
    gibbs_posterior,
    ground_state_rates,
    identifiability_class,
    log_partition_curves,
    log_partition_theta,
    partition_bounds,
    partition_rate_direct,
    posterior_sandwich,
    rate_closed_form_direct,
    rate_estimate,
    rate_table,
    theta_min,
)
from .scenarios import (
    DirectGibbsScenario,
    HiddenGibbsScenario,
    MisspecifiedScenario,
    PartitionLimitScenario,
    PosteriorConcentrationScenario,
)
from .sft import Sft, build_sft, count_words, enumerate_words, is_mixing, reblock, topological_entropy
from .simulate import EmissionSequence, Trajectory, emit, misspecified_source, observe, sample_trajectory
from .thermo import (
    GibbsModel,
    MarkovMeasure,
    Potential,
    cylinder_prob,
    divergence_rate,
    entropy,
    expectation,
    gibbs_constant_audit,
    kl_rate_empirical,
    kl_rate_extrapolated,
    solve_gibbs,
    transfer_matrix,
)

__version__ = "0.1.0"

# Scenario runner mappings, keyed by the config's "scenario" field
SCENARIO_CLASS_MAPPINGS = {
    "partition_limit": PartitionLimitScenario,
    "posterior_concentration": PosteriorConcentrationScenario,
    "direct_gibbs": DirectGibbsScenario,
    "hidden_gibbs": HiddenGibbsScenario,
    "misspecified": MisspecifiedScenario,
}

SCENARIO_DISPLAY_NAME_MAPPINGS = {
    "partition_limit": "Partition Function Limit",
    "posterior_concentration": "Posterior Concentration on Theta_min",
    "direct_gibbs": "Direct Observation Gibbs Consistency",
    "hidden_gibbs": "Hidden Gibbs Emission Consistency",
    "misspecified": "Misspecified Source",
}

__all__ = [
    "SCENARIO_CLASS_MAPPINGS",
    "SCENARIO_DISPLAY_NAME_MAPPINGS",
    "ConfigError",
    "DomainError",
    "EmptyShift",
    "GibbsPosteriorError",
    "InadmissibleObservation",
    "KindMismatch",
    "LengthMismatch",
    "NoConvergence",
    "NonFinite",
    "NotMixing",
    "ResourceLimit",
    "ShapeMismatch",
    "UnknownGenerator",
    "Sft",
    "build_sft",
    "count_words",
    "enumerate_words",
    "is_mixing",
    "reblock",
    "topological_entropy",
    "GibbsModel",
    "MarkovMeasure",
    "Potential",
    "cylinder_prob",
    "divergence_rate",
    "entropy",
    "expectation",
    "gibbs_constant_audit",
    "kl_rate_empirical",
    "kl_rate_extrapolated",
    "solve_gibbs",
    "transfer_matrix",
    "LossKind",
    "LossSpec",
    "PotentialFamily",
    "ThetaGrid",
    "bernoulli_family",
    "discrete_loss",
    "family_from_tables",
    "gaussian_loss",
    "linear_gaussian_loss",
    "loss_eval",
    "loss_path_sum",
    "markov_family",
    "regularity_report",
    "squared_loss",
    "zero_loss",
    "EmissionSequence",
    "Trajectory",
    "emit",
    "misspecified_source",
    "observe",
    "sample_trajectory",
    "PosteriorGrid",
    "RateTable",
    "bayes_posterior_direct",
    "bayes_posterior_hidden",
    "concentration_report",
    "direct_loss",
    "gibbs_posterior",
    "ground_state_rates",
    "identifiability_class",
    "log_partition_curves",
    "log_partition_theta",
    "partition_bounds",
    "partition_rate_direct",
    "posterior_sandwich",
    "rate_closed_form_direct",
    "rate_estimate",
    "rate_table",
    "theta_min",
    "DirectGibbsScenario",
    "HiddenGibbsScenario",
    "MisspecifiedScenario",
    "PartitionLimitScenario",
    "PosteriorConcentrationScenario",
]
