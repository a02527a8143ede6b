"""FastAPI service wrapping the core package.

Query endpoints (parameters, pmf, quantiles, curve, draws, simulate) serve
the prediction layer; fit/crossval run the two modelling stages on uploaded
CSV content. All tabular payloads travel as CSV text so clients can persist
byte-identical outputs.
"""

from __future__ import annotations

import itertools
import json
import warnings

import numpy as np
from fastapi import FastAPI, HTTPException

from .. import __version__
from ..crossval import loco, rank_configurations, write_ranking_csv
from ..errors import (
    BundleError,
    InsufficientCodersError,
    InsufficientDataError,
    ParameterError,
    SchemaError,
    UncertainEventsError,
)
from ..families import FamilyId, discretize, mean, quantile
from ..fitting import GaConfig, fit_all, read_fits_csv, write_fits_csv
from ..predictor import (
    EventRecord,
    conditional,
    event_draws,
    pmf_table,
    underreporting_curve,
    write_curve_csv,
    write_draws_csv,
    write_pmf_csv,
)
from ..regression import (
    CoefficientBundle,
    CovariateSet,
    ModelSpec,
    default_bundle_path,
    load_bundle,
    predict_theta,
)
from ..simulate import aggregate, summarize, write_summary_csv, write_totals_csv
from ..survey import ingest_survey_text
from . import schemas


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status,
                         detail={"code": code, "message": message})


def create_app() -> FastAPI:
    app = FastAPI(title="uncertain-events", version=__version__)

    def resolve_bundle(inline: dict | None):
        try:
            if inline is not None:
                return CoefficientBundle.from_json(json.dumps(inline))
            return load_bundle()
        except BundleError as exc:
            raise _error(400, "bad-bundle", str(exc))

    def to_event(event: schemas.EventIn) -> EventRecord:
        return EventRecord(event.event_id, event.reported_value,
                           event.violence_type, country=event.country,
                           year=event.year, context=event.context)

    @app.get("/health", response_model=schemas.HealthResponse)
    def health():
        return schemas.HealthResponse(status="ok", version=__version__,
                                      default_bundle=str(default_bundle_path()))

    @app.post("/predict/parameters", response_model=schemas.ParametersResponse)
    def parameters(request: schemas.ParametersRequest):
        bundle = resolve_bundle(request.bundle)
        event = EventRecord("query", request.reported_value,
                            request.violence_type, context=request.context)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            spec = conditional(bundle, event)
        return schemas.ParametersResponse(
            family=spec.family.base, mixture=spec.family.mixture,
            shifted=spec.family.shifted, theta=list(spec.theta),
            anchor=spec.anchor, mean_untruncated=mean(spec),
            mean_truncated=discretize(spec).mean(),
        )

    @app.post("/predict/pmf", response_model=schemas.PmfResponse)
    def pmf(request: schemas.PmfRequest):
        bundle = resolve_bundle(request.bundle)
        event = EventRecord("query", request.reported_value,
                            request.violence_type, context=request.context)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            table = pmf_table(bundle, event, max_quantile=request.max_quantile)
        return schemas.PmfResponse(values=[k for k, _ in table],
                                   pmf=[p for _, p in table],
                                   csv=write_pmf_csv(table))

    @app.post("/predict/quantiles", response_model=schemas.QuantilesResponse)
    def quantiles(request: schemas.QuantilesRequest):
        bundle = resolve_bundle(request.bundle)
        z = {"context": request.context} if request.context else None
        try:
            spec = predict_theta(bundle, request.reported_value, z)
            values = [quantile(spec, p) for p in request.probs]
        except ParameterError as exc:
            raise _error(400, "bad-request", str(exc))
        return schemas.QuantilesResponse(probs=request.probs, quantiles=values)

    @app.post("/predict/curve", response_model=schemas.CurveResponse)
    def curve(request: schemas.CurveRequest):
        bundle = resolve_bundle(request.bundle)
        z = {"context": request.context} if request.context else None
        rows = underreporting_curve(bundle, request.grid, z)
        return schemas.CurveResponse(csv=write_curve_csv(rows))

    @app.post("/draws", response_model=schemas.DrawsResponse)
    def draws(request: schemas.DrawsRequest):
        bundle = resolve_bundle(request.bundle)
        events = [to_event(e) for e in request.events]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rows = event_draws(bundle, events, request.n, request.seed,
                               integer=request.integer)
        return schemas.DrawsResponse(csv=write_draws_csv(rows))

    @app.post("/simulate", response_model=schemas.SimulateResponse)
    def simulate(request: schemas.SimulateRequest):
        if not request.events:
            raise _error(400, "empty-events", "event set is empty")
        bundle = resolve_bundle(request.bundle)
        events = [to_event(e) for e in request.events]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            result = aggregate(bundle, events, replicates=request.replicates,
                               seed=request.seed)
        return schemas.SimulateResponse(totals_csv=write_totals_csv(result),
                                        summary_csv=write_summary_csv(result),
                                        summary=summarize(result))

    @app.post("/fit", response_model=schemas.FitResponse)
    def fit(request: schemas.FitRequest):
        try:
            families = [FamilyId.from_label(text) for text in request.families]
            coders = ingest_survey_text(request.survey_csv)
        except (SchemaError, ParameterError) as exc:
            raise _error(400, "bad-survey", str(exc))
        if not coders:
            raise _error(400, "bad-survey", "survey contains no coder distributions")
        cfg = GaConfig(population_size=request.population_size,
                       generations=request.generations, seed=request.seed)
        results = fit_all(families, coders, cfg, threads=request.threads)
        summary = []
        for family in sorted({f.family for f in results.fits},
                             key=lambda f: f.label()):
            scores = [f.bad for f in results.fits if f.family == family]
            summary.append(schemas.FamilyFitSummary(
                family=family.label(), n=len(scores),
                median_bad=float(np.median(scores))))
        return schemas.FitResponse(fits_csv=write_fits_csv(results.fits),
                                   n_fits=len(results.fits),
                                   failures=[list(f) for f in results.failures],
                                   summary=summary)

    @app.post("/crossval", response_model=schemas.CrossvalResponse)
    def crossval(request: schemas.CrossvalRequest):
        try:
            coders = ingest_survey_text(request.survey_csv)
            fits = read_fits_csv(request.fits_csv)
        except SchemaError as exc:
            raise _error(400, "bad-survey", str(exc))
        if not fits:
            raise _error(400, "insufficient-coders", "no stage-1 fits supplied")
        families = sorted({f.family for f in fits}, key=lambda f: f.label())
        if request.families:
            wanted = {FamilyId.from_label(t) for t in request.families}
            families = [f for f in families if f in wanted]
        w_method = "irls" if request.w_method == "irls" else "ols_logit"
        results, skipped = [], []
        try:
            for family in families:
                for combo in _covariate_combos(family, request):
                    model = ModelSpec(family, request.tov, combo)
                    try:
                        results.append(loco(fits, coders, model,
                                            w_method=w_method))
                    except InsufficientDataError as exc:
                        skipped.append([family.label(),
                                        [cs.label() for cs in combo], str(exc)])
        except InsufficientCodersError as exc:
            raise _error(400, "insufficient-coders", str(exc))
        if not results:
            raise _error(400, "insufficient-coders",
                         "no configuration could be evaluated")
        ranking = write_ranking_csv(rank_configurations(results))
        return schemas.CrossvalResponse(ranking_csv=ranking,
                                        n_configurations=len(results),
                                        skipped=skipped)

    @app.exception_handler(UncertainEventsError)
    async def domain_error(request, exc: UncertainEventsError):
        from fastapi.responses import JSONResponse

        return JSONResponse(status_code=400,
                            content={"detail": {"code": "bad-request",
                                                "message": str(exc)}})

    return app


def _covariate_combos(family: FamilyId, request: schemas.CrossvalRequest):
    if not request.enumerate_covariates:
        try:
            cs = CovariateSet.from_label(request.ivs)
        except UncertainEventsError as exc:
            raise _error(400, "bad-request", str(exc))
        return [(cs,) * family.n_params]
    labels = ["none", "y", "D", "y+D"]
    if request.with_context:
        labels += ["z", "y+z", "D+z", "y+D+z"]
    choices = [CovariateSet.from_label(label) for label in labels]
    return list(itertools.product(choices, repeat=family.n_params))


app = create_app()
