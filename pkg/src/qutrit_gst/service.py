"""HTTP service exposing the tomography pipeline.

Every endpoint is a stateless wrapper over the library: requests carry the
same JSON payloads the file formats use, responses return them.  Domain
errors (bad designs, non-CPTP noise, estimation failures) surface as 422
with the underlying message; nothing is cached between calls.
"""

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from . import __version__
from .design import design_from_json, design_to_json
from .errorgen import BranchError, DegenerateError
from .estimation import estimate_from_json, estimate_to_json
from .gates import GateSetModel, build_native_gateset, gateset_from_json
from .noise import CountRecord, NoiseSpec, apply_noise
from .pipeline import (
    merge_config,
    run_pipeline,
    stage_analyze,
    stage_design,
    stage_estimate,
    stage_rb,
    stage_simulate,
)
from .rb import rb_fit_to_json

app = FastAPI(title="qutrit-gst", version=__version__)

_DOMAIN_ERRORS = (ValueError, RuntimeError, ArithmeticError, KeyError)


class DesignRequest(BaseModel):
    gateset: dict | None = None
    minimal_fiducials: bool = True
    max_length: int = Field(default=16, ge=0)
    germs: list[list[str]] | None = None


class SimulateRequest(BaseModel):
    design: dict
    gateset: dict | None = None
    noise: dict = Field(default_factory=dict)
    shots: int = Field(default=10_000, ge=1)
    seed: int = 0


class EstimateRequest(BaseModel):
    design: dict
    counts: list[dict]
    gateset: dict | None = None
    max_iter: int = Field(default=1000, ge=1)


class AnalyzeRequest(BaseModel):
    estimate: dict
    gateset: dict | None = None
    threads: int = Field(default=1, ge=1)


class RbRequest(BaseModel):
    gateset: dict | None = None
    noise: dict = Field(default_factory=dict)
    lengths: list[int] = Field(default_factory=lambda: [1, 2, 4, 8, 16, 32])
    sequences_per_length: int = Field(default=30, ge=1)
    shots: int = Field(default=10_000, ge=1)
    seed: int = 0


class PipelineRequest(BaseModel):
    config: dict = Field(default_factory=dict)


def _model(gateset: dict | None) -> GateSetModel:
    if gateset is None:
        return build_native_gateset()
    return gateset_from_json(gateset)


def _noise(payload: dict) -> NoiseSpec:
    return NoiseSpec.from_json(payload) if payload else NoiseSpec.ideal()


def _records(counts: list[dict]) -> list[CountRecord]:
    return [
        CountRecord(
            circuit_id=int(r["circuit_id"]),
            counts=tuple(int(c) for c in r["counts"]),
            shots=int(r["shots"]),
        )
        for r in counts
    ]


def _record_json(records: list[CountRecord]) -> list[dict]:
    return [
        {"circuit_id": r.circuit_id, "counts": list(r.counts), "shots": r.shots}
        for r in records
    ]


@app.get("/health")
def health():
    return {"status": "ok", "version": __version__}


@app.post("/design")
def design_endpoint(req: DesignRequest):
    try:
        design, summary = stage_design(
            _model(req.gateset),
            minimal_fiducials=req.minimal_fiducials,
            max_length=req.max_length,
            germs=req.germs,
        )
    except _DOMAIN_ERRORS as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return {"design": design_to_json(design), "summary": summary}


@app.post("/simulate")
def simulate_endpoint(req: SimulateRequest):
    try:
        design = design_from_json(req.design)
        _, records = stage_simulate(
            design, _model(req.gateset), _noise(req.noise), req.shots, req.seed
        )
    except _DOMAIN_ERRORS as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return {"counts": _record_json(records)}


@app.post("/estimate")
def estimate_endpoint(req: EstimateRequest):
    try:
        design = design_from_json(req.design)
        est = stage_estimate(
            design, _records(req.counts), _model(req.gateset), max_iter=req.max_iter
        )
    except _DOMAIN_ERRORS as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return {"estimate": estimate_to_json(est)}


@app.post("/analyze")
def analyze_endpoint(req: AnalyzeRequest):
    try:
        est = estimate_from_json(req.estimate)
        gates = stage_analyze(est.model, _model(req.gateset), threads=req.threads)
    except (DegenerateError, BranchError, *_DOMAIN_ERRORS) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    return {"gates": gates}


@app.post("/rb")
def rb_endpoint(req: RbRequest):
    try:
        target = _model(req.gateset)
        noisy = apply_noise(target, _noise(req.noise))
        result, _ = stage_rb(
            noisy,
            target,
            lengths=req.lengths,
            sequences_per_length=req.sequences_per_length,
            shots=req.shots,
            seed=req.seed,
        )
    except _DOMAIN_ERRORS as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    payload = rb_fit_to_json(result)
    payload["survivals"] = {
        str(m): list(vals) for m, vals in sorted(result.survivals.items())
    }
    return {"rb": payload}


@app.post("/pipeline")
def pipeline_endpoint(req: PipelineRequest):
    try:
        report, artifacts = run_pipeline(req.config)
    except (DegenerateError, BranchError, *_DOMAIN_ERRORS) as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    rb_result = artifacts["rb_result"]
    return {
        "report": report,
        "design": design_to_json(artifacts["design"]),
        "counts": _record_json(artifacts["records"]),
        "estimate": estimate_to_json(artifacts["estimate"]),
        "rb_survivals": {
            str(m): list(vals) for m, vals in sorted(rb_result.survivals.items())
        },
        "config": merge_config(req.config),
    }
