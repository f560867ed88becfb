"""Hilbert coresets: sparse weighted summaries of a dataset whose weighted
log-likelihood approximates the full log-likelihood in a Hilbert norm."""

from .bounds import (BoundParams, bennett_H, bennett_H_inv, fw_bound, is_bound, is_bound_simple,
                     logistic_recursion_bound, logistic_recursion_check, projection_bound)
from .constructors import (FWTrace, frank_wolfe, importance_sampling, merge_distributed,
                           uniform_coreset, uniform_random)
from .errors import ConfigError, DataError, DegenerateProblemError, NumericalError
from .geometry import AlignmentDiagnostics, approximation_error, compute_diagnostics, kernel, weighted_sum
from .models import (Dataset, GaussianMeanModel, GaussianPosterior, LogisticRegression, PoissonRegression,
                     gaussian_coreset_posterior, gaussian_exact_posterior, gaussian_kl, gaussian_sensitivity)
from .projection import (GaussianWeighting, ProjectionConfig, exact_gaussian_embedding, laplace_weighting,
                         project)

__all__ = [
    "AlignmentDiagnostics", "BoundParams", "ConfigError", "DataError", "Dataset", "DegenerateProblemError",
    "FWTrace", "GaussianMeanModel", "GaussianPosterior", "GaussianWeighting", "LogisticRegression",
    "NumericalError", "PoissonRegression", "ProjectionConfig", "approximation_error", "bennett_H",
    "bennett_H_inv", "compute_diagnostics", "exact_gaussian_embedding", "frank_wolfe", "fw_bound",
    "gaussian_coreset_posterior", "gaussian_exact_posterior", "gaussian_kl", "gaussian_sensitivity",
    "importance_sampling", "is_bound", "is_bound_simple", "kernel", "laplace_weighting",
    "logistic_recursion_bound", "logistic_recursion_check", "merge_distributed", "project",
    "projection_bound", "uniform_coreset", "uniform_random", "weighted_sum",
]
