"""Parametric quantile regression for right-censored data under dependent censoring.

The survival time follows an enriched asymmetric Laplace location-scale
model, the censoring time a normal regression, and a copula couples the two.
"""

from .copula import CopulaSpec, h_c_given_t, h_t_given_c, inverse_h, tau_to_theta, theta_to_tau
from .fitter import FitConfig, FitError, FitResult, fit
from .inference import (
    QuantileRequest,
    bootstrap_se,
    h_limit_diagnostic,
    lrt,
    lrt_from_aic,
    predict_quantile,
    predict_quantiles,
)
from .laguerre_eal import EalParams, eal_cdf, eal_pdf, eal_quantile
from .likelihood import Dataset, PackedParams, ParamLayout, loglik
from .margins import CMarginParams, NormalTMargin, TMarginParams
from .simulate import SCENARIOS, ScenarioConfig, generate_dataset, get_scenario, run_scenario

__version__ = "0.1.0"

__all__ = [
    "CopulaSpec",
    "CMarginParams",
    "Dataset",
    "EalParams",
    "FitConfig",
    "FitError",
    "FitResult",
    "NormalTMargin",
    "PackedParams",
    "ParamLayout",
    "QuantileRequest",
    "SCENARIOS",
    "ScenarioConfig",
    "TMarginParams",
    "bootstrap_se",
    "eal_cdf",
    "eal_pdf",
    "eal_quantile",
    "fit",
    "generate_dataset",
    "get_scenario",
    "h_c_given_t",
    "h_limit_diagnostic",
    "h_t_given_c",
    "inverse_h",
    "loglik",
    "lrt",
    "lrt_from_aic",
    "predict_quantile",
    "predict_quantiles",
    "run_scenario",
    "tau_to_theta",
    "theta_to_tau",
]
