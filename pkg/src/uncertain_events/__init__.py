"""Plausible-fatality distributions for reported conflict events.

Two-stage pipeline: fit reported-value-inflated parametric families to
elicited coder beliefs with a genetic algorithm, generalize the fitted
parameters across reported values by regression, then predict, draw, and
aggregate plausible fatality counts for arbitrary event sets.
"""

from .crossval import LocoResult, loco, rank_configurations, write_ranking_csv
from .errors import UncertainEventsError
from .families import (
    EULER_GAMMA,
    DistributionSpec,
    FamilyId,
    TruncatedDiscreteView,
    cdf,
    density,
    discretize,
    mean,
    quantile,
    sample,
    variance,
)
from .fitting import (
    FitResults,
    FittedTheta,
    GaConfig,
    bad,
    bad_score,
    bin_mass,
    default_bounds,
    fit_all,
    fit_theta,
    read_fits_csv,
    write_fits_csv,
)
from .predictor import (
    EventRecord,
    conditional,
    event_draws,
    pmf_table,
    read_events_csv,
    underreporting_curve,
)
from .regression import (
    CoefficientBundle,
    CovariateSet,
    ModelSpec,
    design_row,
    fit_bundle,
    fit_fractional_logit,
    fit_linear,
    load_bundle,
    predict_theta,
)
from .simulate import AggregateResult, aggregate, summarize
from .survey import (
    CoderDistribution,
    FatalityBin,
    SurveyDesign,
    default_bins,
    ingest_survey,
    likert_to_weight,
    normalize,
)

__version__ = "0.1.0"
