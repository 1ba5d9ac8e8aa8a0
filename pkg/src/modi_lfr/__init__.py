"""Modi linear failure rate (MLFR) distribution: functions, fitting and model comparison."""

__version__ = "0.1.0"

from .core import MlfrParams, RNG_ALGORITHM, cdf, hazard, log_pdf, median, pdf, quantile, sample, survival
from .estimation import FitConfig, FitResult, fit_mle, log_likelihood, observed_information, wald_intervals
from .estimators import ModiDistribution
from .exceptions import (
    DegenerateDataError,
    DivergenceError,
    DomainError,
    FitError,
    InvalidParameterError,
    MissingCovarianceError,
    ModiError,
    NonFiniteLikelihoodError,
    QuadratureError,
    ScenarioInfeasibleError,
    SingularInformationError,
    UnderflowError,
)
from .family import MEParams, MFParams, ModelId, MRParams, MWParams, get_model
from .gof import GofReport, InfoCriteria, gof_report, info_criteria, rank_models
from .study import Dataset, DescriptiveStats, load_dataset

__all__ = [
    "__version__",
    "MlfrParams", "MRParams", "MWParams", "MEParams", "MFParams", "ModelId", "get_model",
    "RNG_ALGORITHM", "cdf", "survival", "pdf", "log_pdf", "hazard", "quantile", "median", "sample",
    "FitConfig", "FitResult", "fit_mle", "log_likelihood", "observed_information", "wald_intervals",
    "ModiDistribution",
    "GofReport", "InfoCriteria", "gof_report", "info_criteria", "rank_models",
    "Dataset", "DescriptiveStats", "load_dataset",
    "ModiError", "InvalidParameterError", "DomainError", "DegenerateDataError", "QuadratureError",
    "DivergenceError", "UnderflowError", "NonFiniteLikelihoodError", "FitError",
    "SingularInformationError", "MissingCovarianceError", "ScenarioInfeasibleError",
]
