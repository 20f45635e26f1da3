"""Pydantic request/response models for the HTTP service."""

from __future__ import annotations

from typing import List, Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str = "ok"
    version: str


class ValidateRequest(BaseModel):
    config_text: str
    seed: Optional[int] = None


class ValidateResponse(BaseModel):
    valid: bool
    violations: List[str] = Field(default_factory=list)
    rendered: Optional[str] = None


class RunRequest(BaseModel):
    config_text: str
    seed: Optional[int] = None
    out_dir: Optional[str] = None


class RunSummary(BaseModel):
    label: str
    csv_path: str
    episodes: int
    duration_s: float
    header: List[str]
    final_reward: Optional[float] = None
    mean_reward: Optional[float] = None


class SweepRequest(BaseModel):
    config_text: str
    seeds: List[int]
    modes: Optional[List[str]] = None
    out_dir: Optional[str] = None


class SweepResponse(BaseModel):
    runs: List[RunSummary]


class PlotRequest(BaseModel):
    csv_paths: List[str]
    window: int = 100
    out_path: Optional[str] = None


class PlotResponse(BaseModel):
    svg: str
    out_path: Optional[str] = None
