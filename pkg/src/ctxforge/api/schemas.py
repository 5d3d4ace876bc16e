"""Request/response bodies for the HTTP service."""

from __future__ import annotations

from typing import Any, Optional

from pydantic import BaseModel, Field


class ProblemIn(BaseModel):
    id: str
    body: str
    title: Optional[str] = None
    formula: Optional[str] = None
    sub_questions: list[str] = Field(default_factory=list)
    variable_note: Optional[str] = None


class ProblemOut(ProblemIn):
    pass


class InterestIn(BaseModel):
    label: str
    keywords: list[str] = Field(default_factory=list)


class PolicyIn(BaseModel):
    max_attempts: int = 3
    parallelism: int = 4
    accept_on: str = "pass_or_warn"


class ContextualizeIn(BaseModel):
    problem_ids: list[str]
    interests: list[str]
    policy: Optional[PolicyIn] = None


class JobOut(BaseModel):
    job_id: str
    phase: str  # queued | running | done | aborted
    table: Optional[dict[str, Any]] = None


class VariantOut(BaseModel):
    id: str
    problem_id: str
    interest_label: str
    state: str
    overall: Optional[str] = None
    text: str
    attempt: int
    report: Optional[dict[str, Any]] = None


class PatchVariantIn(BaseModel):
    text: str


class DecisionIn(BaseModel):
    decision: str  # accept | reject


class ErrorBody(BaseModel):
    error_code: str
    message: str
