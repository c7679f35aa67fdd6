"""Adaptive mini-batch scan Gibbs sampling.

The package selects the mini-batch size m for a two-block Gibbs sampler by
minimizing measured cost per effective sample, (m w_z + w_theta) tau_int(m),
and ships three reference models (probit regression with a lasso prior, a
Dirichlet-process Gaussian mixture, latent Dirichlet allocation) plus chain
diagnostics, evaluation metrics and an experiment CLI.
"""

from .adapt import (AdaptationResult, ArmResult, BatchGrid, TwoPhaseBudgets,
                    adapt_batch_size, make_log_grid, objective, run_two_phase)
from .diagnostics import (AcfSeries, DiagnosticsReport, acf, asymptotic_variance,
                          autocorrelation, effective_sample_size, epsr,
                          integrated_autocorrelation_time, report_for)
from .errors import (AdaptationError, AdascanError, DataFormatError,
                     DegenerateSeriesError, NotPositiveDefiniteError, NumericError,
                     ScanError, UnknownWordError)
from .rng import (RandomStream, sample_categorical, sample_categorical_log,
                  sample_dirichlet, sample_inverse_gamma, sample_inverse_gaussian,
                  sample_mvn, sample_truncated_normal)
from .scan import (ChainTrace, GibbsModel, IndexPolicy, IndexSelector, ScanSchedule,
                   run_scan)

__version__ = "0.1.0"

__all__ = [
    "AdaptationError", "AdaptationResult", "AdascanError", "AcfSeries", "ArmResult",
    "BatchGrid", "ChainTrace", "DataFormatError", "DegenerateSeriesError",
    "DiagnosticsReport", "GibbsModel", "IndexPolicy", "IndexSelector",
    "NotPositiveDefiniteError", "NumericError", "RandomStream", "ScanError",
    "ScanSchedule", "TwoPhaseBudgets", "UnknownWordError", "acf",
    "adapt_batch_size", "asymptotic_variance", "autocorrelation",
    "effective_sample_size", "epsr", "integrated_autocorrelation_time",
    "make_log_grid", "objective", "report_for", "run_scan", "run_two_phase",
    "sample_categorical", "sample_categorical_log", "sample_dirichlet",
    "sample_inverse_gamma", "sample_inverse_gaussian", "sample_mvn",
    "sample_truncated_normal",
]
