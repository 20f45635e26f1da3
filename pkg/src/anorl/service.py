"""FastAPI service wrapping the experiment harness.

The CLI is a thin client of these endpoints; they can also be served
standalone with ``uvicorn anorl.service:app``.
"""

from __future__ import annotations

import tempfile
from pathlib import Path
from typing import List

import numpy as np
from fastapi import FastAPI, HTTPException

from . import harness
from .errors import NumericError, ValidationError
from .schemas import (
    HealthResponse,
    PlotRequest,
    PlotResponse,
    RunRequest,
    RunSummary,
    SweepRequest,
    SweepResponse,
    ValidateRequest,
    ValidateResponse,
)

app = FastAPI(title="anorl", version=harness.CODE_VERSION)


def _summary(record: harness.RunRecord) -> RunSummary:
    rewards = record.rewards()
    return RunSummary(
        label=record.label(),
        csv_path=record.csv_path or "",
        episodes=len(record.rows),
        duration_s=record.duration_s,
        header=record.header,
        final_reward=rewards[-1] if rewards else None,
        mean_reward=float(np.mean(rewards)) if rewards else None,
    )


def _run(config_text: str, seed, out_dir) -> harness.RunRecord:
    try:
        config = harness.parse_config(config_text, seed_override=seed)
    except ValidationError as exc:
        raise HTTPException(status_code=422, detail=exc.violations) from exc
    try:
        return harness.run_experiment(config, out_dir=out_dir)
    except (NumericError, FloatingPointError) as exc:
        raise HTTPException(
            status_code=500, detail=f"numeric failure: {exc}"
        ) from exc


@app.get("/health", response_model=HealthResponse)
def health() -> HealthResponse:
    return HealthResponse(version=harness.CODE_VERSION)


@app.post("/validate", response_model=ValidateResponse)
def validate(req: ValidateRequest) -> ValidateResponse:
    try:
        config = harness.parse_config(req.config_text, seed_override=req.seed)
    except ValidationError as exc:
        return ValidateResponse(valid=False, violations=exc.violations)
    return ValidateResponse(valid=True, rendered=harness.render_config(config))


@app.post("/runs", response_model=RunSummary)
def run(req: RunRequest) -> RunSummary:
    return _summary(_run(req.config_text, req.seed, req.out_dir))


@app.post("/sweep", response_model=SweepResponse)
def sweep(req: SweepRequest) -> SweepResponse:
    if not req.seeds:
        raise HTTPException(status_code=422, detail="sweep needs at least one seed")
    for mode in req.modes or []:
        if mode not in harness._MODE_ALIASES:
            raise HTTPException(status_code=422, detail=f"unknown mode {mode!r}")
    runs: List[RunSummary] = []
    mode_lines = req.modes if req.modes else [None]
    for mode in mode_lines:
        text = req.config_text
        if mode is not None:
            try:
                config = harness.parse_config(text, seed_override=req.seeds[0])
            except ValidationError as exc:
                raise HTTPException(status_code=422, detail=exc.violations) from exc
            config.mode = harness.Mode(mode)
            if not config.mode.uses_ano:
                config.locality = 1
            text = harness.render_config(config)
        for seed in req.seeds:
            runs.append(_summary(_run(text, seed, req.out_dir)))
    return SweepResponse(runs=runs)


@app.post("/plot", response_model=PlotResponse)
def plot(req: PlotRequest) -> PlotResponse:
    if not req.csv_paths:
        raise HTTPException(status_code=422, detail="no CSV inputs given")
    try:
        records = [harness.read_csv_record(p) for p in req.csv_paths]
    except FileNotFoundError as exc:
        raise HTTPException(status_code=422, detail=str(exc)) from exc
    if req.out_path:
        harness.emit_plot(records, req.out_path, window=req.window)
        svg = Path(req.out_path).read_text()
        return PlotResponse(svg=svg, out_path=req.out_path)
    with tempfile.NamedTemporaryFile("r", suffix=".svg") as tmp:
        harness.emit_plot(records, tmp.name, window=req.window)
        svg = Path(tmp.name).read_text()
    return PlotResponse(svg=svg)
