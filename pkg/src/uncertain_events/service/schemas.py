"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import Literal, Optional

from pydantic import BaseModel, Field

ViolenceType = Literal["sb", "ns", "os"]


class EventIn(BaseModel):
    event_id: str
    reported_value: int = Field(ge=0)
    violence_type: ViolenceType = "sb"
    country: Optional[str] = None
    year: Optional[int] = None
    context: Optional[Literal["good", "bad"]] = None


class HealthResponse(BaseModel):
    status: str
    version: str
    default_bundle: str


class ParametersRequest(BaseModel):
    reported_value: int = Field(ge=0)
    violence_type: ViolenceType = "sb"
    context: Optional[Literal["good", "bad"]] = None
    bundle: Optional[dict] = None


class ParametersResponse(BaseModel):
    family: str
    mixture: bool
    shifted: bool
    theta: list[float]
    anchor: Optional[int]
    mean_untruncated: float
    mean_truncated: float


class PmfRequest(ParametersRequest):
    max_quantile: float = Field(default=0.9999, gt=0.0, lt=1.0)


class PmfResponse(BaseModel):
    values: list[int]
    pmf: list[float]
    csv: str


class QuantilesRequest(ParametersRequest):
    probs: list[float] = Field(default=[0.025, 0.5, 0.975])


class QuantilesResponse(BaseModel):
    probs: list[float]
    quantiles: list[float]


class CurveRequest(BaseModel):
    grid: list[int] = Field(min_length=1)
    context: Optional[Literal["good", "bad"]] = None
    bundle: Optional[dict] = None


class CurveResponse(BaseModel):
    csv: str


class DrawsRequest(BaseModel):
    events: list[EventIn] = Field(min_length=1)
    n: int = Field(ge=1)
    seed: int
    integer: bool = True
    bundle: Optional[dict] = None


class DrawsResponse(BaseModel):
    csv: str


class SimulateRequest(BaseModel):
    events: list[EventIn]
    replicates: int = Field(default=1000, ge=1)
    seed: int
    bundle: Optional[dict] = None


class SimulateResponse(BaseModel):
    totals_csv: str
    summary_csv: str
    summary: dict


class FitRequest(BaseModel):
    survey_csv: str
    families: list[str] = Field(min_length=1)
    seed: int
    population_size: int = Field(default=100, ge=2)
    generations: int = Field(default=100, ge=1)
    threads: int = Field(default=1, ge=1)


class FamilyFitSummary(BaseModel):
    family: str
    n: int
    median_bad: float


class FitResponse(BaseModel):
    fits_csv: str
    n_fits: int
    failures: list
    summary: list[FamilyFitSummary]


class CrossvalRequest(BaseModel):
    survey_csv: str
    fits_csv: str
    tov: Literal["sb", "ns", "os", "all"] = "sb"
    families: Optional[list[str]] = None
    ivs: str = "y+D"
    enumerate_covariates: bool = False
    with_context: bool = False
    w_method: Literal["irls", "ols"] = "irls"


class CrossvalResponse(BaseModel):
    ranking_csv: str
    n_configurations: int
    skipped: list
