"""JSON-over-HTTP service feeding the analyst UI.

Read endpoints serve cached pipeline artifacts; PUT /clusters is the single
mutable surface and persists to the period's cluster CSV.  Errors carry a
machine-readable ``code`` alongside the message.
"""

from __future__ import annotations

import threading

from fastapi import FastAPI, HTTPException, Query
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from corrnet.marketdata import ValidationError
from corrnet.pipeline import Pipeline, PipelineConfig, STRATEGY_ORDER
from corrnet.portfolio import Strategy
from corrnet import clustering


class BoundariesBody(BaseModel):
    boundaries: list[int] = Field(min_length=1)


class SimulateBody(BaseModel):
    estimation: str
    evaluation: str | None = None
    strategies: list[str] | None = None
    sizes: list[int] | None = None
    iterations: int | None = None
    seed: int | None = None


def _error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


def create_app(config: PipelineConfig, pipeline: Pipeline | None = None) -> FastAPI:
    app = FastAPI(title="corrnet", version="0.1.0")
    pipeline = pipeline if pipeline is not None else Pipeline(config)
    app.state.pipeline = pipeline
    locks: dict[str, threading.Lock] = {}
    locks_guard = threading.Lock()

    def period_lock(label: str) -> threading.Lock:
        with locks_guard:
            return locks.setdefault(label, threading.Lock())

    def known_period(label: str):
        try:
            return pipeline.period(label)
        except KeyError:
            raise _error(404, "unknown_period", f"no period {label!r}") from None

    @app.get("/periods")
    def periods():
        return {
            "periods": [
                {
                    "label": p.label,
                    "start": p.start_date.isoformat(),
                    "end": p.end_date.isoformat(),
                }
                for p in pipeline.periods()
            ]
        }

    @app.get("/network")
    def network(period: str = Query(...)):
        known_period(period)
        ordering, system = pipeline.network(period)
        tickers = pipeline.tickers
        n = system.n
        return {
            "period": period,
            "n": n,
            "candidate_splits": n * (n - 1) // 2,
            "ordering": list(ordering.taxa),
            "tickers": [tickers[t] for t in ordering.taxa],
            "industry": {t: pipeline.industry[t] for t in tickers},
            "splits": [
                {"arc": [s.lo, s.hi], "weight": w}
                for s, w in zip(system.splits, system.weights)
            ],
            "residual": system.fit_residual,
        }

    @app.get("/clusters")
    def get_clusters(period: str = Query(...)):
        known_period(period)
        assignment = pipeline.clusters(period)
        tickers = pipeline.tickers
        return {
            "period": period,
            "k": assignment.k,
            "boundaries": list(assignment.boundaries),
            "labels": {tickers[t]: assignment.labels[t] for t in range(len(tickers))},
        }

    @app.put("/clusters")
    def put_clusters(body: BoundariesBody, period: str = Query(...)):
        known_period(period)
        with period_lock(period):
            try:
                pipeline.set_clusters(period, body.boundaries)
            except ValidationError as exc:
                raise _error(422, "invalid_boundaries", str(exc)) from None
        return get_clusters(period)

    @app.post("/simulate")
    def simulate(body: SimulateBody):
        known_period(body.estimation)
        try:
            expected_eval = pipeline.next_period(body.estimation).label
        except KeyError:
            raise _error(
                422, "no_evaluation_period", f"{body.estimation!r} has no out-of-sample successor"
            ) from None
        if body.evaluation is not None and body.evaluation != expected_eval:
            raise _error(
                422,
                "bad_period_pair",
                f"evaluation must be {expected_eval!r} for estimation {body.estimation!r}",
            )
        strategies = STRATEGY_ORDER
        if body.strategies:
            try:
                strategies = tuple(Strategy(s) for s in body.strategies)
            except ValueError as exc:
                raise _error(422, "unknown_strategy", str(exc)) from None
        with period_lock(body.estimation):
            report = pipeline.simulate_pair(
                body.estimation,
                sizes=tuple(body.sizes) if body.sizes else None,
                iterations=body.iterations,
                seed=body.seed,
                strategies=strategies,
            )
        return {
            "estimation": report["estimation"],
            "evaluation": report["evaluation"],
            "seed": report["seed"],
            "iterations": report["iterations"],
            "results": [r.to_dict() for r in report["results"]],
            "tests": [
                {
                    "size": t["size"],
                    "anova": {
                        "statistic": t["anova"].statistic,
                        "df1": t["anova"].df1,
                        "df2": t["anova"].df2,
                        "p_value": t["anova"].p_value,
                    },
                    "levene": {
                        "statistic": t["levene"].statistic,
                        "df1": t["levene"].df1,
                        "df2": t["levene"].df2,
                        "p_value": t["levene"].p_value,
                        "center": t["levene"].center,
                    },
                }
                for t in report["tests"]
            ],
            "table": report["table"],
        }

    @app.get("/track")
    def track(period: str = Query(...), subset: str = Query(...)):
        known_period(period)
        tickers = pipeline.tickers
        names = [tok.strip() for tok in subset.split(",") if tok.strip()]
        unknown = [t for t in names if t not in tickers]
        if not names or unknown:
            raise _error(
                422, "bad_subset", f"unknown or empty subset tickers: {unknown or 'empty'}"
            )
        ordering, _ = pipeline.network(period)
        taxa = {tickers.index(t) for t in names}
        report = clustering.track_membership(pipeline.clusters(period), ordering, taxa)
        return {
            "period": period,
            "subset": names,
            "arcs": [list(arc) for arc in report.arcs],
            "n_arcs": report.n_arcs,
            "score": report.score,
        }

    @app.exception_handler(ValidationError)
    def handle_validation(_request, exc: ValidationError):
        return JSONResponse(
            status_code=422, content={"detail": {"code": "validation", "message": str(exc)}}
        )

    return app
