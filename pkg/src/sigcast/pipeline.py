"""End-to-end multi-horizon forecasting.

Workflow: screen factors by correlation, build per-time feature vectors
[x_tau, flattened depth-N signature of the trailing target window], weight
training samples by signature-kernel similarity to the most recent window,
fit a weighted two-step LASSO per horizon, and forecast or backtest from
rolling origins. Everything downstream of ingestion is a pure function of
the panel and the configuration; forecasts at origin t use rows 0..t only.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import DataError
from .regression import LinearModelFit, WeightedDesign, fit_two_step, predict
from .sig_kernel import KernelConfig, WeightVector, ada_weights
from .signature import (
    DataStream,
    augment_time,
    flatten,
    multi_indices,
    sig_dim,
    signature,
    signature_batch,
)


@dataclass(frozen=True)
class FactorPanel:
    """Aligned target and factor series with a date index.

    No missing values: gaps are an ingestion error, never imputed.
    """

    dates: tuple[str, ...]
    target: np.ndarray
    factors: np.ndarray
    factor_names: tuple[str, ...]
    target_name: str = "y"

    def __post_init__(self) -> None:
        y = np.asarray(self.target, dtype=np.float64)
        X = np.asarray(self.factors, dtype=np.float64)
        if X.size == 0:
            X = X.reshape(y.size, 0)
        if X.ndim != 2 or X.shape[0] != y.size or y.ndim != 1:
            raise ValueError(
                f"misaligned panel: target {y.shape}, factors {X.shape}"
            )
        if len(self.dates) != y.size:
            raise ValueError(f"{len(self.dates)} dates for {y.size} observations")
        if len(self.factor_names) != X.shape[1]:
            raise ValueError(
                f"{len(self.factor_names)} factor names for {X.shape[1]} factor columns"
            )
        if len(set(self.factor_names)) != len(self.factor_names):
            raise ValueError("factor names must be distinct")
        if not (np.all(np.isfinite(y)) and np.all(np.isfinite(X))):
            raise DataError("panel contains non-finite values; ingestion must reject gaps")
        y = y.copy()
        y.flags.writeable = False
        X = X.copy()
        X.flags.writeable = False
        object.__setattr__(self, "target", y)
        object.__setattr__(self, "factors", X)
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "factor_names", tuple(self.factor_names))

    @property
    def length(self) -> int:
        return self.target.size

    @property
    def n_factors(self) -> int:
        return self.factors.shape[1]

    def truncate(self, end: int) -> "FactorPanel":
        """Panel restricted to rows 0..end inclusive."""
        if not 0 <= end < self.length:
            raise ValueError(f"end index {end} out of range 0..{self.length - 1}")
        return FactorPanel(
            self.dates[: end + 1],
            self.target[: end + 1],
            self.factors[: end + 1],
            self.factor_names,
            self.target_name,
        )


@dataclass(frozen=True)
class ForecastConfig:
    """Pipeline hyper-parameters (see README for the config-file mirror)."""

    horizons: int = 12
    window: int = 8
    depth: int = 2
    gamma: float = 1.0
    lambda_grid: tuple[float, ...] = (1e-4, 1e-3, 1e-2, 1e-1)
    rho_min: float = 0.2
    rho_max: float = 0.95
    augment_features: bool = False
    augment_kernel: bool = True
    weight_windows: str = "z"

    def __post_init__(self) -> None:
        if self.horizons < 1:
            raise ValueError(f"horizons must be >= 1, got {self.horizons}")
        if self.window < 1:
            raise ValueError(f"window must be >= 1, got {self.window}")
        if self.depth < 1:
            raise ValueError(f"depth must be >= 1, got {self.depth}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        grid = tuple(float(v) for v in self.lambda_grid)
        if not grid or any(v < 0 for v in grid):
            raise ValueError("lambda_grid must be non-empty with nonnegative entries")
        object.__setattr__(self, "lambda_grid", grid)
        if not 0.0 <= self.rho_min <= 1.0:
            raise ValueError(f"rho_min must lie in [0, 1], got {self.rho_min}")
        if not 0.0 < self.rho_max <= 1.0:
            raise ValueError(f"rho_max must lie in (0, 1], got {self.rho_max}")
        if self.weight_windows not in ("z", "y"):
            raise ValueError(f"weight_windows must be 'z' or 'y', got {self.weight_windows!r}")

    def kernel_config(self) -> KernelConfig:
        return KernelConfig(
            depth=self.depth, window=self.window, gamma=self.gamma, augment=self.augment_kernel
        )


@dataclass(frozen=True)
class ForecastRow:
    origin_date: str
    horizon: int
    forecast: float
    actual: float | None = None
    relative_error: float | None = None  # fraction; formatters turn it into percent
    lam: float | None = None
    weights: WeightVector | None = None


@dataclass(frozen=True)
class ForecastPanel:
    """Forecast rows, one per (origin, horizon), with backtest realizations."""

    rows: tuple[ForecastRow, ...] = field(default_factory=tuple)

    def aggregates(self) -> list[tuple[int, float | None, int, int]]:
        """Per horizon: (horizon, mean relative error, n defined, n undefined).

        Rows whose actual value is 0 have undefined relative error and are
        excluded from the mean but counted.
        """
        horizons = sorted({r.horizon for r in self.rows})
        out = []
        for h in horizons:
            errs = [r.relative_error for r in self.rows if r.horizon == h]
            defined = [e for e in errs if e is not None]
            mean = float(np.mean(defined)) if defined else None
            out.append((h, mean, len(defined), len(errs) - len(defined)))
        return out


@dataclass(frozen=True)
class ScreeningDecision:
    factor: str
    kept: bool
    correlation: float | None
    reason: str
    detail: str = ""


def relative_error(actual: float, forecast: float) -> float | None:
    """|actual - forecast| / |actual|, or None when the actual value is 0."""
    if actual == 0:
        return None
    return abs(actual - forecast) / abs(actual)


def percent_display(fraction: float, decimals: int = 0) -> str:
    """Render a fractional error as a percentage, rounding half up.

    Full precision is kept internally everywhere; this is the one place
    display rounding happens (e.g. 0.02049 -> "2%", 0.2749 -> "27%",
    decimals=2 -> "2.05%").
    """
    from decimal import ROUND_HALF_UP, Decimal

    quantum = Decimal(1).scaleb(-decimals)
    value = (Decimal(repr(100.0 * fraction))).quantize(quantum, rounding=ROUND_HALF_UP)
    return f"{value}%"


def monthly_means(dates: Sequence[str], values: Sequence[float]) -> list[tuple[str, float]]:
    """Mean value per calendar month, chronologically ordered.

    Turns weekly forecasts into monthly ones: each ISO date lands in its
    YYYY-MM bucket and the bucket mean is reported. Independent of input
    order.
    """
    if len(dates) != len(values):
        raise ValueError(f"{len(dates)} dates for {len(values)} values")
    buckets: dict[str, list[float]] = {}
    for date, value in zip(dates, values):
        buckets.setdefault(date[:7], []).append(float(value))
    return [(month, float(np.mean(buckets[month]))) for month in sorted(buckets)]


def _pearson(a: np.ndarray, b: np.ndarray) -> float | None:
    sa, sb = a.std(), b.std()
    if sa == 0 or sb == 0:
        return None
    return float(np.corrcoef(a, b)[0, 1])


def screen_factors(
    panel: FactorPanel, rho_min: float, rho_max: float
) -> tuple[FactorPanel, list[ScreeningDecision]]:
    """Correlation screening of the factor set.

    Drops factors whose |Pearson correlation| with the target falls below
    rho_min (zero-variance factors are dropped, not errors). Among factors
    that are mutually correlated beyond rho_max, the one more correlated with
    the target survives; candidates are considered in decreasing |correlation
    with target| so collinear chains resolve deterministically. Every
    decision lands in the report.
    """
    if panel.length < 3:
        raise DataError(f"screening needs at least 3 observations, got {panel.length}")
    y = panel.target
    decisions: dict[str, ScreeningDecision] = {}
    candidates: list[tuple[float, int, str]] = []
    for i, name in enumerate(panel.factor_names):
        corr = _pearson(panel.factors[:, i], y)
        if corr is None:
            decisions[name] = ScreeningDecision(name, False, None, "zero_variance")
        elif abs(corr) < rho_min:
            decisions[name] = ScreeningDecision(
                name, False, corr, "low_correlation", f"|r|={abs(corr):.4f} < {rho_min}"
            )
        else:
            candidates.append((abs(corr), i, name))
            decisions[name] = ScreeningDecision(name, True, corr, "kept")
    # strongest target correlation first; original order breaks exact ties
    candidates.sort(key=lambda t: (-t[0], t[1]))
    kept_idx: list[int] = []
    for _, i, name in candidates:
        clash = None
        for j in kept_idx:
            pair = _pearson(panel.factors[:, i], panel.factors[:, j])
            if pair is not None and abs(pair) > rho_max:
                clash = j
                break
        if clash is None:
            kept_idx.append(i)
        else:
            decisions[name] = ScreeningDecision(
                name,
                False,
                decisions[name].correlation,
                "collinear",
                f"|r|>{rho_max} with kept factor {panel.factor_names[clash]!r}",
            )
    kept_idx.sort()
    screened = FactorPanel(
        panel.dates,
        panel.target,
        panel.factors[:, kept_idx],
        tuple(panel.factor_names[i] for i in kept_idx),
        panel.target_name,
    )
    report = [decisions[name] for name in panel.factor_names]
    return screened, report


def _target_window_stream(panel: FactorPanel, tau: int, cfg: ForecastConfig) -> DataStream:
    window = panel.target[tau - cfg.window : tau + 1]
    stream = DataStream(window[:, None])
    return augment_time(stream) if cfg.augment_features else stream


def feature_dim(panel: FactorPanel, cfg: ForecastConfig) -> int:
    sig_d = 2 if cfg.augment_features else 1
    return panel.n_factors + sig_dim(sig_d, cfg.depth)


def feature_names(panel: FactorPanel, cfg: ForecastConfig) -> list[str]:
    """Names aligned with build_features: factors, then signature entries."""
    sig_d = 2 if cfg.augment_features else 1
    names = list(panel.factor_names)
    for mi in multi_indices(sig_d, cfg.depth):
        names.append("sig_" + (".".join(str(i) for i in mi) if mi else "const"))
    return names


def constant_feature_index(panel: FactorPanel, cfg: ForecastConfig) -> int:
    """Position of the always-1 signature level-0 entry in the feature vector."""
    return panel.n_factors


def build_features(panel: FactorPanel, tau: int, cfg: ForecastConfig) -> np.ndarray:
    """Feature vector at row tau: current factors plus the signature of the
    trailing target window y[tau-window .. tau]."""
    if not cfg.window <= tau < panel.length:
        raise DataError(
            f"tau={tau} out of range: need window={cfg.window} <= tau < {panel.length}"
        )
    sig_part = flatten(signature(_target_window_stream(panel, tau, cfg), cfg.depth))
    return np.concatenate([panel.factors[tau], sig_part])


def _weight_samples(
    panel: FactorPanel, horizon: int, cfg: ForecastConfig
) -> tuple[np.ndarray, np.ndarray | None]:
    """Sample matrix and reference window for the weighter.

    "z" joins (x_tau, y_{tau+horizon}) and compares trailing windows to the
    newest joined window (its own last row). "y" compares the feature-side
    target windows y[tau-l..tau] to the current window y[t-l..t], whose
    future is the thing being predicted.
    """
    m = panel.length - horizon
    if cfg.weight_windows == "y":
        return panel.target[:m][:, None], panel.target[-(cfg.window + 1) :][:, None]
    future_y = panel.target[horizon:][:, None]
    return np.hstack([panel.factors[:m], future_y]), None


def _min_length(horizon: int, cfg: ForecastConfig) -> int:
    return cfg.window + horizon + 5


# Sharp kernel weights can concentrate mass on a handful of samples, leaving
# near-duplicate effective columns that coordinate descent resolves slowly;
# the pipeline therefore runs the solver with a deeper sweep budget.
_CD_BUDGET = 100_000


def _structural_keep_mask(features: np.ndarray, constant_index: int) -> np.ndarray:
    """Columns to keep after removing exact linear dependences.

    Time-augmented window signatures of fixed-length windows contain
    deterministic columns (pure-time entries are constants) and exact shuffle
    relations (e.g. the two order-2 time/target cross entries sum to the
    level-1 target entry), which break OLS refits and stall the penalized
    solver at tiny penalties. Columns are centered against the always-kept
    constant and pruned to a full-rank set by pivoted QR at rounding-level
    tolerance; genuine near-collinearity is left for the model to arbitrate.
    """
    m, p = features.shape
    keep = np.ones(p, dtype=bool)
    others = [j for j in range(p) if j != constant_index]
    if not others:
        return keep
    centered = features[:, others] - features[:, others].mean(axis=0)
    _, R, piv = scipy.linalg.qr(centered, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    if diag.size == 0 or diag[0] == 0.0:
        keep[others] = False
        return keep
    tol = max(m, len(others)) * np.finfo(np.float64).eps * diag[0]
    rank = int(np.sum(diag > tol))
    for k in piv[rank:]:
        keep[others[k]] = False
    return keep


def _fit_design(prep: "_HorizonDesign", lam: float, initial=None) -> LinearModelFit:
    kept = np.flatnonzero(prep.keep_mask)
    reduced = WeightedDesign(
        prep.design.features[:, kept], prep.design.targets, prep.design.weights
    )
    constant_pos = int(np.searchsorted(kept, prep.constant_index))
    initial_reduced = None if initial is None else np.asarray(initial)[kept]
    fit = fit_two_step(
        reduced,
        lam,
        unpenalized=(constant_pos,),
        max_sweeps=_CD_BUDGET,
        initial=initial_reduced,
    )
    if kept.size == prep.design.n_features:
        return fit
    theta = np.zeros(prep.design.n_features)
    theta[kept] = fit.coefficients
    meta = dict(fit.meta)
    meta["stage1_support"] = tuple(int(kept[j]) for j in meta["stage1_support"])
    stage1_full = np.zeros(prep.design.n_features)
    stage1_full[kept] = meta["stage1_coefficients"]
    meta["stage1_coefficients"] = stage1_full
    meta["refit_columns"] = tuple(int(kept[j]) for j in meta["refit_columns"])
    meta["dropped_columns"] = tuple(
        int(j) for j in range(prep.design.n_features) if j not in set(kept)
    )
    return LinearModelFit(
        coefficients=theta,
        support=tuple(int(i) for i in np.flatnonzero(theta)),
        model_kind=fit.model_kind,
        lam=fit.lam,
        weighted_loss=fit.weighted_loss,
        meta=meta,
    )


@dataclass(frozen=True)
class _HorizonDesign:
    design: WeightedDesign
    weight_vector: WeightVector
    predict_features: np.ndarray
    constant_index: int
    keep_mask: np.ndarray


def _prepare_horizon(panel: FactorPanel, horizon: int, cfg: ForecastConfig) -> _HorizonDesign:
    n = panel.length
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    wv = horizon_weights(panel, horizon, cfg)
    taus = np.arange(cfg.window, n - horizon)
    window_rows = taus[:, None] + np.arange(-cfg.window, 1)[None, :]
    sig_features = signature_batch(
        panel.target[window_rows][:, :, None], cfg.depth, augment=cfg.augment_features
    )
    features = np.hstack([panel.factors[taus], sig_features])
    targets = panel.target[cfg.window + horizon : n]
    design = WeightedDesign(features, targets, wv.weights[cfg.window :])
    constant_index = constant_feature_index(panel, cfg)
    return _HorizonDesign(
        design=design,
        weight_vector=wv,
        predict_features=build_features(panel, n - 1, cfg),
        constant_index=constant_index,
        keep_mask=_structural_keep_mask(features, constant_index),
    )


def fit_horizon(
    panel: FactorPanel, horizon: int, cfg: ForecastConfig, lam: float
) -> tuple[LinearModelFit, WeightVector]:
    """Adaptive weights plus a weighted two-step LASSO for one horizon."""
    prep = _prepare_horizon(panel, horizon, cfg)
    return _fit_design(prep, lam), prep.weight_vector


def horizon_weights(panel: FactorPanel, horizon: int, cfg: ForecastConfig) -> WeightVector:
    """Just the adaptive weight vector for one horizon, no model fit."""
    if horizon < 1:
        raise ValueError(f"horizon must be >= 1, got {horizon}")
    n = panel.length
    if n < _min_length(horizon, cfg):
        raise DataError(
            f"insufficient history: need at least {_min_length(horizon, cfg)} observations "
            f"for window {cfg.window} and horizon {horizon}, got {n}"
        )
    samples, reference = _weight_samples(panel, horizon, cfg)
    return ada_weights(samples, cfg.kernel_config(), horizon, reference_window=reference)


def select_lambda(panel: FactorPanel, horizon: int, cfg: ForecastConfig) -> float:
    """Pick lam from the grid by rolling-origin validation.

    The last 20% of eligible origins (at least one) are scored by mean
    relative error; the smallest lam within one standard error of the best
    wins. Falls back to the smallest grid value when the history cannot stage
    a single validation origin. Single-value grids return immediately.
    """
    grid = sorted(set(cfg.lambda_grid))
    if len(grid) == 1:
        return grid[0]
    n = panel.length
    first = _min_length(horizon, cfg) - 1
    last = n - 1 - horizon
    if first > last:
        return grid[0]
    eligible = list(range(first, last + 1))
    k = max(1, math.ceil(0.2 * len(eligible)))
    val_origins = eligible[-k:]

    errors: dict[float, list[float]] = {lam: [] for lam in grid}
    for origin in val_origins:
        sub = panel.truncate(origin)
        prep = _prepare_horizon(sub, horizon, cfg)
        actual = float(panel.target[origin + horizon])
        warm = None
        for lam in reversed(grid):  # descending lam: warm starts stay cheap
            fit = _fit_design(prep, lam, initial=warm)
            warm = fit.meta["stage1_coefficients"]
            err = relative_error(actual, predict(fit, prep.predict_features))
            if err is not None:
                errors[lam].append(err)

    stats: list[tuple[float, float, float]] = []  # (lam, mean, se)
    for lam in grid:
        errs = errors[lam]
        if not errs:
            stats.append((lam, float("inf"), 0.0))
            continue
        mean = float(np.mean(errs))
        se = float(np.std(errs, ddof=1) / math.sqrt(len(errs))) if len(errs) > 1 else 0.0
        stats.append((lam, mean, se))
    best_lam, best_mean, best_se = min(stats, key=lambda t: (t[1], t[0]))
    for lam, mean, _ in stats:  # grid is ascending: first hit is the smallest
        if mean <= best_mean + best_se:
            return lam
    return best_lam


def forecast(panel: FactorPanel, cfg: ForecastConfig) -> ForecastPanel:
    """One fit and one prediction per horizon 1..horizons from the last row."""
    rows = []
    origin_date = panel.dates[-1]
    for horizon in range(1, cfg.horizons + 1):
        lam = select_lambda(panel, horizon, cfg)
        prep = _prepare_horizon(panel, horizon, cfg)
        fit = _fit_design(prep, lam)
        rows.append(
            ForecastRow(
                origin_date=origin_date,
                horizon=horizon,
                forecast=predict(fit, prep.predict_features),
                lam=lam,
                weights=prep.weight_vector,
            )
        )
    return ForecastPanel(tuple(rows))


def backtest(
    panel: FactorPanel, cfg: ForecastConfig, origins: Sequence[int]
) -> ForecastPanel:
    """Rolling-origin evaluation at the given 0-based origin rows.

    Each origin forecasts horizons 1..horizons using rows 0..origin only and
    scores against the realized values. Origins must leave `horizons` future
    observations.
    """
    n = panel.length
    rows: list[ForecastRow] = []
    for origin in origins:
        origin = int(origin)
        if origin + cfg.horizons > n - 1:
            raise DataError(
                f"origin {origin} too late: needs {cfg.horizons} future rows, "
                f"panel has {n - 1 - origin}"
            )
        fc = forecast(panel.truncate(origin), cfg)
        for row in fc.rows:
            actual = float(panel.target[origin + row.horizon])
            rows.append(replace(row, actual=actual, relative_error=relative_error(actual, row.forecast)))
    return ForecastPanel(tuple(rows))
