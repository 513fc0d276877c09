"""Temporal moments of wideband radio channels and their joint log-normal model.

Typical flow::

    freqs = [read_frequency_response(p) for p in paths]
    M = batch_moments(freqs)              # (N, 3) raw moments, SI units
    res = fit_mvln(M)                     # closed-form MLE + Fisher CIs
    table = compare(M)                    # AIC/BIC against competing families
    sim = sample_standardized(res.model, 10_000, seed=1)
"""

__version__ = "0.1.0"

from .errors import *  # noqa: F401,F403
from .signal import (
    FrequencyResponse,
    TimeSignal,
    energy,
    inverse_transform,
    read_frequency_response,
    write_frequency_response,
)
from .moments import (
    MomentMatrix,
    RawMoments,
    StandardizedMoments,
    batch_moments,
    raw_moments,
    read_moment_matrix,
    standardize,
    write_moment_matrix,
)
from .models import (
    MarginalParams,
    MvlnParams,
    MvnParams,
    load_params,
    model_log_likelihood,
    mvln_cov,
    mvln_log_density,
    mvln_mean,
    save_params,
)
from .inference import (
    CorrelationReport,
    FitResult,
    bootstrap_corr_ci,
    fisher_ci,
    fit,
    fit_independent,
    fit_mvln,
    fit_mvn,
    pearson,
)
from .selection import ComparisonTable, aic, bic, compare
from .simulate import (
    SynthChannelConfig,
    generate_channels,
    sample_mvln,
    sample_standardized,
)
from .report import density_grid, ecdf, qq_data
from .datasets import campaign_params
