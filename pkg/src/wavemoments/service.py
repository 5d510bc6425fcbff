"""HTTP service exposing the pipeline operations.

Stateless wrapper around the same operations layer the CLI uses: clients
post series values inline and get the versioned JSON payloads back. Run it
with ``wavemoments serve`` (or any ASGI server pointing at
``wavemoments.service:app``).
"""

from __future__ import annotations

from typing import Optional

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__, ops
from .errors import DataError, ModelError, NumericalError

app = FastAPI(
    title="wavemoments",
    version=__version__,
    description="Wavelet-variance estimation and model fitting as a service",
)


class SimulateRequest(BaseModel):
    model: str = Field(description='model grammar, e.g. "AR1(0.9,1)+WN(1)"')
    n: int = Field(ge=2, le=50_000_000)
    seed: int = 1337
    latent: bool = False


class SimulateResponse(BaseModel):
    schema_: int = Field(alias="schema")
    version: str
    command: str
    config: dict
    columns: list[str]
    values: dict[str, list[float]]

    model_config = {"populate_by_name": True}


class WvarRequest(BaseModel):
    values: list[float] = Field(min_length=2)
    robust: bool = False
    eff: float = Field(default=0.6, gt=0.0, le=1.0)
    alpha: float = Field(default=0.05, gt=0.0, lt=1.0)
    max_scales: Optional[int] = Field(default=None, ge=1)


class WvCurve(BaseModel):
    scales: list[int]
    nu2: list[float]
    ci_low: list[float]
    ci_high: list[float]
    counts: list[int]
    estimator: str
    alpha: float
    eff: Optional[float] = None
    fallback_scales: list[int] = []
    label: Optional[str] = None


class WvarResponse(WvCurve):
    schema_: int = Field(alias="schema")
    version: str
    command: str
    config: dict
    warnings: list[str]

    model_config = {"populate_by_name": True}


class CompareRequest(BaseModel):
    series: list[dict] = Field(
        min_length=1,
        description="objects with a label and a values array")
    both: bool = False
    robust: bool = False
    eff: float = Field(default=0.6, gt=0.0, le=1.0)
    alpha: float = Field(default=0.05, gt=0.0, lt=1.0)
    max_scales: Optional[int] = Field(default=None, ge=1)


class CompareResponse(BaseModel):
    schema_: int = Field(alias="schema")
    version: str
    command: str
    config: dict
    curves: list[WvCurve]
    deltas: list[dict]
    warnings: list[str]

    model_config = {"populate_by_name": True}


class FitRequest(BaseModel):
    values: list[float] = Field(min_length=2)
    model: str
    robust: bool = False
    eff: float = Field(default=0.6, gt=0.0, le=1.0)
    b: int = Field(default=100, ge=0, le=10_000)
    alpha: float = Field(default=0.05, gt=0.0, lt=1.0)
    seed: int = 1337
    gof: bool = False
    decomp: bool = False
    max_scales: Optional[int] = Field(default=None, ge=1)


class ParamEstimate(BaseModel):
    label: str
    term: str
    param: str
    estimate: float
    ci_low: float
    ci_high: float
    se: float


class FitResponse(BaseModel):
    schema_: int = Field(alias="schema")
    version: str
    command: str
    config: dict
    model: str
    estimates: list[ParamEstimate]
    objective: float
    converged: bool
    iterations: int
    n_obs: int
    n_boot: int
    n_boot_failed: int
    wv: WvCurve
    omega: dict
    implied: dict
    gof: Optional[dict] = None
    warnings: list[str]

    model_config = {"populate_by_name": True}


class RankRequest(BaseModel):
    values: list[float] = Field(min_length=2)
    models: list[str] = Field(min_length=2)
    b: int = Field(default=100, ge=2, le=10_000)
    seed: int = 1337
    alpha: float = Field(default=0.05, gt=0.0, lt=1.0)
    robust: bool = False
    eff: float = Field(default=0.6, gt=0.0, le=1.0)
    max_scales: Optional[int] = Field(default=None, ge=1)


class RankResponse(BaseModel):
    schema_: int = Field(alias="schema")
    version: str
    command: str
    config: dict
    rows: list[dict]
    warnings: list[str]

    model_config = {"populate_by_name": True}


def _translate(exc):
    if isinstance(exc, (ModelError, DataError)):
        return HTTPException(status_code=400, detail=str(exc))
    if isinstance(exc, NumericalError):
        return HTTPException(status_code=500, detail=str(exc))
    raise exc


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/simulate", response_model=SimulateResponse)
def simulate(request: SimulateRequest):
    try:
        return ops.op_simulate(request.model, request.n, request.seed,
                               latent=request.latent)
    except (ModelError, DataError, NumericalError) as exc:
        raise _translate(exc) from exc


@app.post("/wvar", response_model=WvarResponse)
def wvar(request: WvarRequest):
    try:
        return ops.op_wvar(request.values, robust=request.robust,
                           eff=request.eff, alpha=request.alpha,
                           n_levels=request.max_scales)
    except (ModelError, DataError, NumericalError) as exc:
        raise _translate(exc) from exc


@app.post("/compare", response_model=CompareResponse)
def compare(request: CompareRequest):
    try:
        series = []
        for i, entry in enumerate(request.series):
            if "values" not in entry:
                raise DataError("every series needs a values array")
            series.append((str(entry.get("label", f"series{i + 1}")),
                           entry["values"]))
        return ops.op_compare(series, both=request.both,
                              robust=request.robust, eff=request.eff,
                              alpha=request.alpha,
                              n_levels=request.max_scales)
    except (ModelError, DataError, NumericalError) as exc:
        raise _translate(exc) from exc


@app.post("/fit", response_model=FitResponse)
def fit(request: FitRequest):
    try:
        payload, _ = ops.op_fit(
            request.values, request.model, robust=request.robust,
            eff=request.eff, n_boot=request.b, alpha=request.alpha,
            seed=request.seed, gof=request.gof, decomp=request.decomp,
            n_levels=request.max_scales)
        return payload
    except (ModelError, DataError, NumericalError) as exc:
        raise _translate(exc) from exc


@app.post("/rank", response_model=RankResponse)
def rank(request: RankRequest):
    try:
        payload, _ = ops.op_rank(
            request.values, request.models, n_boot=request.b,
            seed=request.seed, alpha=request.alpha, robust=request.robust,
            eff=request.eff, n_levels=request.max_scales)
        return payload
    except (ModelError, DataError, NumericalError) as exc:
        raise _translate(exc) from exc
