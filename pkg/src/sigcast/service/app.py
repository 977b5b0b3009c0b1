"""FastAPI application exposing the forecasting engine.

Run with: uvicorn sigcast.service.app:app
"""
from __future__ import annotations

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..errors import ConfigError, ConvergenceError, DataError
from . import handlers, schemas

app = FastAPI(
    title="sigcast",
    version=__version__,
    description=(
        "Signature-transform forecasting: signatures, signature-kernel "
        "similarity weights, and adaptive two-step LASSO forecasts."
    ),
)


@app.exception_handler(ConfigError)
async def _config_error(_: Request, exc: ConfigError) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.exception_handler(ValueError)
async def _value_error(_: Request, exc: ValueError) -> JSONResponse:
    return JSONResponse(status_code=400, content={"detail": str(exc)})


@app.exception_handler(DataError)
async def _data_error(_: Request, exc: DataError) -> JSONResponse:
    return JSONResponse(status_code=422, content={"detail": str(exc)})


@app.exception_handler(ConvergenceError)
async def _convergence_error(_: Request, exc: ConvergenceError) -> JSONResponse:
    return JSONResponse(status_code=500, content={"detail": str(exc)})


@app.get("/health", response_model=schemas.HealthResponse)
def health() -> schemas.HealthResponse:
    return schemas.HealthResponse(status="ok", version=__version__)


@app.post("/signature", response_model=schemas.SignatureResponse)
def compute_signature(req: schemas.SignatureRequest) -> schemas.SignatureResponse:
    return handlers.handle_signature(req)


@app.post("/kernel", response_model=schemas.KernelResponse)
def compute_kernel(req: schemas.KernelRequest) -> schemas.KernelResponse:
    return handlers.handle_kernel(req)


@app.post("/weights", response_model=schemas.WeightsResponse)
def compute_weights(req: schemas.WeightsRequest) -> schemas.WeightsResponse:
    return handlers.handle_weights(req)


@app.post("/fit", response_model=schemas.FitResponse)
def fit_models(req: schemas.FitRequest) -> schemas.FitResponse:
    return handlers.handle_fit(req)


@app.post("/forecast", response_model=schemas.ForecastResponse)
def run_forecast(req: schemas.ForecastServiceRequest) -> schemas.ForecastResponse:
    return handlers.handle_forecast(req)


@app.post("/backtest", response_model=schemas.BacktestResponse)
def run_backtest(req: schemas.BacktestRequest) -> schemas.BacktestResponse:
    return handlers.handle_backtest(req)


@app.post("/synthetic", response_model=schemas.PanelPayload)
def make_synthetic(req: schemas.SynthRequest) -> schemas.PanelPayload:
    return handlers.handle_synth(req)
