"""Signature-transform forecasting toolkit."""

from .errors import ConfigError, ConvergenceError, DataError, RankDeficientError, SigcastError
from .pipeline import (
    FactorPanel,
    ForecastConfig,
    ForecastPanel,
    ForecastRow,
    backtest,
    build_features,
    fit_horizon,
    forecast,
    horizon_weights,
    monthly_means,
    percent_display,
    relative_error,
    screen_factors,
    select_lambda,
)
from .regression import (
    LinearModelFit,
    WeightedDesign,
    fit_lasso,
    fit_ols,
    fit_ridge,
    fit_two_step,
    predict,
)
from .sig_kernel import KernelConfig, WeightVector, ada_weights, sig_distance, sig_kernel
from .signature import DataStream, augment_time, flatten, sig_dim, signature, signature_update
from .synthetic import RegimeSpec, SyntheticSpec, gen_synthetic
from .tensor_algebra import GradedTensor, boxtimes, exp_map, fused_mul_exp, tensor_product

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ConvergenceError",
    "DataError",
    "RankDeficientError",
    "SigcastError",
    "FactorPanel",
    "ForecastConfig",
    "ForecastPanel",
    "ForecastRow",
    "backtest",
    "build_features",
    "fit_horizon",
    "forecast",
    "horizon_weights",
    "monthly_means",
    "percent_display",
    "relative_error",
    "screen_factors",
    "select_lambda",
    "LinearModelFit",
    "WeightedDesign",
    "fit_lasso",
    "fit_ols",
    "fit_ridge",
    "fit_two_step",
    "predict",
    "KernelConfig",
    "WeightVector",
    "ada_weights",
    "sig_distance",
    "sig_kernel",
    "DataStream",
    "augment_time",
    "flatten",
    "sig_dim",
    "signature",
    "signature_update",
    "RegimeSpec",
    "SyntheticSpec",
    "gen_synthetic",
    "GradedTensor",
    "boxtimes",
    "exp_map",
    "fused_mul_exp",
    "tensor_product",
    "__version__",
]
