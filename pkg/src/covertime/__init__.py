"""Cover time of a circle by Brownian motion, and the Poisson law of range switchbacks."""

from .analytic import (
    AccuracyError,
    DomainError,
    PgfQuery,
    RangeState,
    SeriesControl,
    TransformQuery,
    cdf_theta1,
    cdf_thetaL,
    conditional_laplace,
    density_theta1,
    density_thetaL,
    invert_laplace,
    laplace_theta,
    max_before_hit_cdf,
    moments_theta1,
    moments_thetaL,
    poisson_rate,
    quantile_theta1,
    switchback_pgf,
    switchback_pmf,
    transform_F,
    transform_G,
)
from .simulate import (
    CoverTimeSample,
    SimPlan,
    SwitchbackChain,
    estimate_transform,
    sample_cover_time,
    sample_cover_times,
    sample_switchback_counts,
    sample_switchbacks,
)
from .stats import GofReport, chi_square_poisson, ks_2samp, ks_test, moment_report

__version__ = "0.1.0"
