"""HTTP interface: one POST endpoint per command plus a health probe.

The service runs computations in-process and writes output files on the
host it runs on; the CLI talks to it either over a real socket or, by
default, through an in-process ASGI transport.
"""

from __future__ import annotations

from fastapi import FastAPI, HTTPException, Query

from .. import __version__
from .models import (
    EnsembleRequest,
    KurRequest,
    PrecisionSweepRequest,
    RunResult,
    SemiclassicalRequest,
    SteadyStateRequest,
    ThermoRequest,
    TrajectoryRequest,
)
from .runners import execute

REQUEST_TYPES = {
    "steady-state": SteadyStateRequest,
    "semiclassical": SemiclassicalRequest,
    "trajectory": TrajectoryRequest,
    "ensemble": EnsembleRequest,
    "precision-sweep": PrecisionSweepRequest,
    "kur": KurRequest,
    "thermo": ThermoRequest,
}


def create_app() -> FastAPI:
    app = FastAPI(title="spinclock", version=__version__)

    @app.get("/health")
    def health() -> dict:
        return {"status": "ok", "version": __version__}

    def _run(command: str, request, output_dir: str, table_format: str) -> RunResult:
        try:
            return execute(command, request, output_dir, table_format=table_format)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc

    @app.post("/run/steady-state", response_model=RunResult)
    def steady_state(request: SteadyStateRequest, output_dir: str = Query(),
                     table_format: str = Query(default="csv")) -> RunResult:
        return _run("steady-state", request, output_dir, table_format)

    @app.post("/run/semiclassical", response_model=RunResult)
    def semiclassical(request: SemiclassicalRequest, output_dir: str = Query(),
                      table_format: str = Query(default="csv")) -> RunResult:
        return _run("semiclassical", request, output_dir, table_format)

    @app.post("/run/trajectory", response_model=RunResult)
    def trajectory(request: TrajectoryRequest, output_dir: str = Query(),
                   table_format: str = Query(default="csv")) -> RunResult:
        return _run("trajectory", request, output_dir, table_format)

    @app.post("/run/ensemble", response_model=RunResult)
    def ensemble(request: EnsembleRequest, output_dir: str = Query(),
                 table_format: str = Query(default="csv")) -> RunResult:
        return _run("ensemble", request, output_dir, table_format)

    @app.post("/run/precision-sweep", response_model=RunResult)
    def precision_sweep(request: PrecisionSweepRequest, output_dir: str = Query(),
                        table_format: str = Query(default="csv")) -> RunResult:
        return _run("precision-sweep", request, output_dir, table_format)

    @app.post("/run/kur", response_model=RunResult)
    def kur(request: KurRequest, output_dir: str = Query(),
            table_format: str = Query(default="csv")) -> RunResult:
        return _run("kur", request, output_dir, table_format)

    @app.post("/run/thermo", response_model=RunResult)
    def thermo(request: ThermoRequest, output_dir: str = Query(),
               table_format: str = Query(default="csv")) -> RunResult:
        return _run("thermo", request, output_dir, table_format)

    return app
