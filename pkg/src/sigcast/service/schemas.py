"""Pydantic request/response models for the HTTP service and the CLI config.

These are the wire formats; unknown keys are rejected everywhere so typos in
threshold names fail loudly instead of silently using defaults.
"""
from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SCHEMA_VERSION = 1


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SeriesPayload(StrictModel):
    """A data stream: n points of equal dimension, optional timestamps."""

    values: list[float] | list[list[float]]
    timestamps: list[float] | None = None


class PanelPayload(StrictModel):
    """Aligned panel: dates, target series and named factor series."""

    dates: list[str]
    target: list[float]
    factors: dict[str, list[float]] = Field(default_factory=dict)
    target_name: str = "y"


class ModelSettings(StrictModel):
    """Forecasting hyper-parameters shared by service requests and RunConfig."""

    horizons: int = 12
    window: int = 8
    depth: int = 2
    gamma: float = 1.0
    lambda_grid: list[float] = Field(default_factory=lambda: [1e-4, 1e-3, 1e-2, 1e-1])
    rho_min: float = 0.2
    rho_max: float = 0.95
    augment_features: bool = False
    augment_kernel: bool = True
    weight_windows: Literal["z", "y"] = "z"
    screen: bool = True

    @field_validator("horizons", "window", "depth")
    @classmethod
    def _positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError("must be >= 1")
        return v

    @field_validator("gamma")
    @classmethod
    def _nonnegative(cls, v: float) -> float:
        if v < 0:
            raise ValueError("must be >= 0")
        return v

    @field_validator("lambda_grid")
    @classmethod
    def _grid(cls, v: list[float]) -> list[float]:
        if not v or any(x < 0 for x in v):
            raise ValueError("lambda_grid must be non-empty with nonnegative entries")
        return v

    @field_validator("rho_min")
    @classmethod
    def _rho_min_range(cls, v: float) -> float:
        if not 0.0 <= v <= 1.0:
            raise ValueError("rho_min must lie in [0, 1]")
        return v

    @field_validator("rho_max")
    @classmethod
    def _rho_max_range(cls, v: float) -> float:
        if not 0.0 < v <= 1.0:
            raise ValueError("rho_max must lie in (0, 1]")
        return v


class RunConfig(ModelSettings):
    """CLI configuration file (JSON), schema version 1."""

    schema_version: int = Field(alias="schema")
    input: str
    output: str | None = None
    date_column: str = "date"
    target_column: str = "y"
    factor_columns: list[str] | None = None
    exclude_columns: list[str] = Field(default_factory=list)
    frequency: Literal["daily", "weekly", "monthly"] | None = None
    seed: int | None = None
    verbosity: int = 0

    @field_validator("schema_version")
    @classmethod
    def _schema(cls, v: int) -> int:
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {v}, expected {SCHEMA_VERSION}")
        return v

    @field_validator("input")
    @classmethod
    def _nonempty_input(cls, v: str) -> str:
        if not v:
            raise ValueError("input path must be nonempty")
        return v

    @field_validator("output")
    @classmethod
    def _nonempty_output(cls, v: str | None) -> str | None:
        if v is not None and not v:
            raise ValueError("output path must be nonempty when given")
        return v

    @model_validator(mode="after")
    def _distinct_columns(self) -> "RunConfig":
        if self.date_column == self.target_column:
            raise ValueError("date and target columns must be distinct")
        return self


class SignatureRequest(StrictModel):
    series: SeriesPayload
    depth: int = 2
    augment: bool = False

    @field_validator("depth")
    @classmethod
    def _depth(cls, v: int) -> int:
        if v < 0:
            raise ValueError("depth must be >= 0")
        return v


class SignatureEntry(StrictModel):
    level: int
    multi_index: str
    value: float


class SignatureResponse(StrictModel):
    dim: int
    depth: int
    length: int
    entries: list[SignatureEntry]


class KernelRequest(StrictModel):
    a: SeriesPayload
    b: SeriesPayload
    depth: int = 2
    augment: bool = True


class KernelResponse(StrictModel):
    kernel: float
    distance: float


class WeightsRequest(StrictModel):
    panel: PanelPayload
    settings: ModelSettings = Field(default_factory=ModelSettings)
    horizon: int = 1


class WeightsResponse(StrictModel):
    horizon: int
    dates: list[str]
    weights: list[float]
    screening: list[str]


class CoefficientEntry(StrictModel):
    feature: str
    coefficient: float


class HorizonFit(StrictModel):
    horizon: int
    lam: float
    support: list[CoefficientEntry]
    weighted_loss: float
    constant_only: bool


class FitRequest(StrictModel):
    panel: PanelPayload
    settings: ModelSettings = Field(default_factory=ModelSettings)


class FitResponse(StrictModel):
    fits: list[HorizonFit]
    screening: list[str]


class ForecastServiceRequest(StrictModel):
    panel: PanelPayload
    settings: ModelSettings = Field(default_factory=ModelSettings)


class ForecastRowPayload(StrictModel):
    origin_date: str
    horizon: int
    forecast: float
    actual: float | None = None
    relative_error: float | None = None


class ForecastResponse(StrictModel):
    rows: list[ForecastRowPayload]
    screening: list[str]


class AggregatePayload(StrictModel):
    horizon: int
    mean_relative_error: float | None
    n: int
    n_undefined: int


class BacktestRequest(StrictModel):
    panel: PanelPayload
    settings: ModelSettings = Field(default_factory=ModelSettings)
    origins: list[str]


class BacktestResponse(StrictModel):
    rows: list[ForecastRowPayload]
    aggregates: list[AggregatePayload]
    screening: list[str]


class RegimePayload(StrictModel):
    length: int
    trend: float = 0.0
    season_amplitude: float = 0.0
    season_period: int = 12
    season_phase: float = 0.0
    noise_scale: float = 0.0
    factor_loadings: list[float] = Field(default_factory=list)


class SynthSpecPayload(StrictModel):
    regimes: list[RegimePayload]
    n_factors: int = 0
    base_level: float = 10.0
    factor_persistence: float = 0.8
    start: str = "2018-01-07"
    frequency: Literal["daily", "weekly", "monthly"] = "weekly"
    target_name: str = "y"


class SynthRequest(StrictModel):
    seed: int
    spec: SynthSpecPayload | None = None


class HealthResponse(StrictModel):
    status: str
    version: str
