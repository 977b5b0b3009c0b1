"""Shared computation layer behind the HTTP endpoints and the CLI.

Handlers turn validated payloads into core calls and core results back into
payloads; the CLI and the FastAPI routes both delegate here, so both front
ends run one code path.
"""
from __future__ import annotations

import numpy as np

from .. import synthetic
from ..errors import DataError
from ..pipeline import (
    FactorPanel,
    ForecastConfig,
    ForecastPanel,
    backtest,
    feature_names,
    fit_horizon,
    forecast,
    horizon_weights,
    screen_factors,
    select_lambda,
)
from ..sig_kernel import KernelConfig, sig_distance, sig_kernel
from ..signature import DataStream, augment_time, flatten, multi_indices, signature
from . import schemas


def stream_from_payload(payload: schemas.SeriesPayload) -> DataStream:
    values = np.asarray(payload.values, dtype=np.float64)
    ts = None if payload.timestamps is None else np.asarray(payload.timestamps, dtype=np.float64)
    return DataStream(values, ts)


def panel_from_payload(payload: schemas.PanelPayload) -> FactorPanel:
    names = tuple(payload.factors.keys())
    n = len(payload.dates)
    for name, series in payload.factors.items():
        if len(series) != n:
            raise DataError(f"factor {name!r} has {len(series)} values for {n} dates")
    if len(payload.target) != n:
        raise DataError(f"target has {len(payload.target)} values for {n} dates")
    factors = (
        np.column_stack([payload.factors[name] for name in names])
        if names
        else np.zeros((n, 0))
    )
    return FactorPanel(
        dates=tuple(payload.dates),
        target=np.asarray(payload.target, dtype=np.float64),
        factors=factors,
        factor_names=names,
        target_name=payload.target_name,
    )


def payload_from_panel(panel: FactorPanel) -> schemas.PanelPayload:
    return schemas.PanelPayload(
        dates=list(panel.dates),
        target=[float(v) for v in panel.target],
        factors={
            name: [float(v) for v in panel.factors[:, j]]
            for j, name in enumerate(panel.factor_names)
        },
        target_name=panel.target_name,
    )


def settings_to_config(settings: schemas.ModelSettings) -> ForecastConfig:
    return ForecastConfig(
        horizons=settings.horizons,
        window=settings.window,
        depth=settings.depth,
        gamma=settings.gamma,
        lambda_grid=tuple(settings.lambda_grid),
        rho_min=settings.rho_min,
        rho_max=settings.rho_max,
        augment_features=settings.augment_features,
        augment_kernel=settings.augment_kernel,
        weight_windows=settings.weight_windows,
    )


def screen_if_enabled(
    panel: FactorPanel, settings: schemas.ModelSettings
) -> tuple[FactorPanel, list[str]]:
    """Apply correlation screening when enabled; report one line per decision."""
    if not settings.screen or panel.n_factors == 0:
        return panel, []
    screened, report = screen_factors(panel, settings.rho_min, settings.rho_max)
    lines = []
    for d in report:
        corr = "n/a" if d.correlation is None else f"{d.correlation:.4f}"
        action = "kept" if d.kept else f"dropped ({d.reason}{': ' + d.detail if d.detail else ''})"
        lines.append(f"{d.factor}: corr={corr} {action}")
    return screened, lines


def handle_signature(req: schemas.SignatureRequest) -> schemas.SignatureResponse:
    stream = stream_from_payload(req.series)
    signed = augment_time(stream) if req.augment else stream
    tensor = signature(signed, req.depth)
    values = flatten(tensor)
    entries = [
        schemas.SignatureEntry(
            level=len(mi), multi_index=".".join(str(i) for i in mi), value=float(v)
        )
        for mi, v in zip(multi_indices(tensor.dim, tensor.depth), values)
    ]
    return schemas.SignatureResponse(
        dim=tensor.dim, depth=tensor.depth, length=len(entries), entries=entries
    )


def handle_kernel(req: schemas.KernelRequest) -> schemas.KernelResponse:
    cfg = KernelConfig(depth=req.depth, window=0, gamma=0.0, augment=req.augment)
    a = stream_from_payload(req.a)
    b = stream_from_payload(req.b)
    return schemas.KernelResponse(
        kernel=sig_kernel(a, b, cfg), distance=sig_distance(a, b, cfg)
    )


def handle_weights(req: schemas.WeightsRequest) -> schemas.WeightsResponse:
    panel = panel_from_payload(req.panel)
    panel, screening = screen_if_enabled(panel, req.settings)
    cfg = settings_to_config(req.settings)
    wv = horizon_weights(panel, req.horizon, cfg)
    return schemas.WeightsResponse(
        horizon=req.horizon,
        dates=list(panel.dates[: len(wv)]),
        weights=[float(w) for w in wv.weights],
        screening=screening,
    )


def handle_fit(req: schemas.FitRequest) -> schemas.FitResponse:
    panel = panel_from_payload(req.panel)
    panel, screening = screen_if_enabled(panel, req.settings)
    cfg = settings_to_config(req.settings)
    names = feature_names(panel, cfg)
    fits = []
    for horizon in range(1, cfg.horizons + 1):
        lam = select_lambda(panel, horizon, cfg)
        fit, _ = fit_horizon(panel, horizon, cfg, lam)
        fits.append(
            schemas.HorizonFit(
                horizon=horizon,
                lam=fit.lam,
                support=[
                    schemas.CoefficientEntry(
                        feature=names[j], coefficient=float(fit.coefficients[j])
                    )
                    for j in fit.support
                ],
                weighted_loss=fit.weighted_loss,
                constant_only=bool(fit.meta.get("constant_only", False)),
            )
        )
    return schemas.FitResponse(fits=fits, screening=screening)


def _rows_payload(result: ForecastPanel) -> list[schemas.ForecastRowPayload]:
    return [
        schemas.ForecastRowPayload(
            origin_date=r.origin_date,
            horizon=r.horizon,
            forecast=float(r.forecast),
            actual=None if r.actual is None else float(r.actual),
            relative_error=None if r.relative_error is None else float(r.relative_error),
        )
        for r in result.rows
    ]


def handle_forecast(req: schemas.ForecastServiceRequest) -> schemas.ForecastResponse:
    panel = panel_from_payload(req.panel)
    panel, screening = screen_if_enabled(panel, req.settings)
    result = forecast(panel, settings_to_config(req.settings))
    return schemas.ForecastResponse(rows=_rows_payload(result), screening=screening)


def resolve_origins(panel: FactorPanel, origins: list[str]) -> list[int]:
    """Map origin dates to panel row indices."""
    index = {date: i for i, date in enumerate(panel.dates)}
    out = []
    for date in origins:
        if date not in index:
            raise DataError(f"origin date {date!r} not present in the panel")
        out.append(index[date])
    return out


def handle_backtest(req: schemas.BacktestRequest) -> schemas.BacktestResponse:
    panel = panel_from_payload(req.panel)
    panel, screening = screen_if_enabled(panel, req.settings)
    result = backtest(
        panel, settings_to_config(req.settings), resolve_origins(panel, req.origins)
    )
    aggregates = [
        schemas.AggregatePayload(
            horizon=h, mean_relative_error=mean, n=n, n_undefined=n_undef
        )
        for h, mean, n, n_undef in result.aggregates()
    ]
    return schemas.BacktestResponse(
        rows=_rows_payload(result), aggregates=aggregates, screening=screening
    )


def spec_from_payload(payload: schemas.SynthSpecPayload) -> synthetic.SyntheticSpec:
    return synthetic.SyntheticSpec(
        regimes=tuple(
            synthetic.RegimeSpec(
                length=r.length,
                trend=r.trend,
                season_amplitude=r.season_amplitude,
                season_period=r.season_period,
                season_phase=r.season_phase,
                noise_scale=r.noise_scale,
                factor_loadings=tuple(r.factor_loadings),
            )
            for r in payload.regimes
        ),
        n_factors=payload.n_factors,
        base_level=payload.base_level,
        factor_persistence=payload.factor_persistence,
        start=payload.start,
        frequency=payload.frequency,
        target_name=payload.target_name,
    )


def handle_synth(req: schemas.SynthRequest) -> schemas.PanelPayload:
    spec = synthetic.demo_spec() if req.spec is None else spec_from_payload(req.spec)
    panel, _ = synthetic.gen_synthetic(req.seed, spec)
    return payload_from_panel(panel)
