"""HTTP service exposing the authoring workflow.

Contextualization runs as an asynchronous job (generation can take a while
against a real model); edits revalidate synchronously because validation is
pure and fast. All mutations go through the workspace store, so a restart
loses nothing but in-flight job bookkeeping.
"""

from __future__ import annotations

import tempfile
import threading
import uuid
from pathlib import Path
from typing import Optional

from fastapi import FastAPI, Query, Request, Response
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .. import massprod, model, prompting, validation
from ..generation import Backend
from ..massprod import BackendUnavailable, BatchPolicy, MassProductionTable, TableRow
from ..model import IllegalTransition, Interest, LifecycleState, ModelError
from ..prompting import PromptTemplate
from ..store import NotFound, StoreError, Workspace
from .schemas import (
    ContextualizeIn,
    DecisionIn,
    InterestIn,
    JobOut,
    PatchVariantIn,
    ProblemIn,
    ProblemOut,
    VariantOut,
)


class ApiError(Exception):
    def __init__(self, status: int, error_code: str, message: str):
        super().__init__(message)
        self.status = status
        self.error_code = error_code
        self.message = message


class Job:
    def __init__(self, job_id: str):
        self.job_id = job_id
        self.phase = "queued"
        self.table: Optional[MassProductionTable] = None
        self.error: Optional[str] = None


def _variant_out(variant: model.ContextVariant) -> VariantOut:
    return VariantOut(
        id=variant.id,
        problem_id=variant.problem_id,
        interest_label=variant.interest_label,
        state=variant.state.value,
        overall=variant.report.overall if variant.report else None,
        text=variant.text,
        attempt=variant.attempt,
        report=variant.report.to_dict() if variant.report else None,
    )


def create_app(
    workspace: Workspace,
    backend: Backend,
    template: Optional[PromptTemplate] = None,
    ui_dir: Optional[str | Path] = None,
) -> FastAPI:
    app = FastAPI(title="ctxforge", version="0.1.0")
    template = template or prompting.default_template()
    jobs: dict[str, Job] = {}
    job_lock = threading.Lock()

    @app.exception_handler(ApiError)
    async def handle_api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"error_code": exc.error_code, "message": exc.message},
        )

    @app.exception_handler(RequestValidationError)
    async def handle_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error_code": "bad_request", "message": str(exc.errors()[:3])},
        )

    @app.exception_handler(Exception)
    async def handle_internal(request: Request, exc: Exception):
        return JSONResponse(
            status_code=500,
            content={"error_code": "internal", "message": str(exc)},
        )

    # -- problems -----------------------------------------------------------

    @app.get("/api/problems")
    def list_problems() -> list[ProblemOut]:
        return [ProblemOut(**p.to_dict()) for p in workspace.problems.values()]

    @app.post("/api/problems", status_code=201)
    def create_problem(body: ProblemIn) -> dict:
        try:
            problem = model.new_problem(
                id=body.id,
                body=body.body,
                formula=body.formula,
                sub_questions=body.sub_questions,
                title=body.title,
                variable_note=body.variable_note,
            )
        except ModelError as exc:
            raise ApiError(400, "bad_request", str(exc))
        workspace.put_problem(problem, actor="api")
        return {"id": problem.id}

    # -- interests ----------------------------------------------------------

    @app.get("/api/interests")
    def list_interests() -> list[InterestIn]:
        return [InterestIn(label=i.label, keywords=list(i.keywords)) for i in workspace.interests.values()]

    @app.post("/api/interests", status_code=201)
    def create_interest(body: InterestIn) -> dict:
        try:
            interest = Interest(label=body.label, keywords=tuple(body.keywords))
        except ModelError as exc:
            raise ApiError(400, "bad_request", str(exc))
        try:
            workspace.put_interest(interest, actor="api")
        except StoreError as exc:
            raise ApiError(409, "conflict", str(exc))
        return {"label": interest.label}

    # -- contextualization jobs ----------------------------------------------

    def _run_job(job: Job, problems, interests, policy: BatchPolicy) -> None:
        try:
            job.table = massprod.run_batch(
                problems, interests, policy, backend, template, store=workspace, actor="api"
            )
            job.phase = "done"
        except BackendUnavailable as exc:
            job.table = exc.table
            job.error = str(exc)
            job.phase = "done" if exc.table is not None else "aborted"
        except Exception as exc:  # noqa: BLE001 - job must never hang in "running"
            job.error = str(exc)
            job.phase = "aborted"

    @app.post("/api/contextualize", status_code=202)
    def contextualize(body: ContextualizeIn) -> dict:
        if not body.problem_ids or not body.interests:
            raise ApiError(400, "bad_request", "problem_ids and interests must be nonempty")
        try:
            problems = [workspace.get_problem(pid) for pid in body.problem_ids]
            interests = [workspace.get_interest(label) for label in body.interests]
        except NotFound as exc:
            raise ApiError(404, "not_found", str(exc))
        try:
            policy = (
                BatchPolicy(**body.policy.model_dump()) if body.policy else BatchPolicy()
            )
        except ValueError as exc:
            raise ApiError(400, "bad_request", str(exc))
        with job_lock:
            if any(j.phase in ("queued", "running") for j in jobs.values()):
                raise ApiError(409, "conflict", "a batch job is already running for this workspace")
            job = Job(job_id=uuid.uuid4().hex)
            jobs[job.job_id] = job
            job.phase = "running"
        thread = threading.Thread(
            target=_run_job, args=(job, problems, interests, policy), daemon=True
        )
        thread.start()
        return {"job_id": job.job_id}

    @app.get("/api/jobs/{job_id}")
    def job_status(job_id: str) -> JobOut:
        job = jobs.get(job_id)
        if job is None:
            raise ApiError(404, "not_found", f"job '{job_id}' not found")
        table = None
        if job.phase == "done" and job.table is not None:
            table = {**job.table.to_dict(), "summary": job.table.summary()}
        return JobOut(job_id=job.job_id, phase=job.phase, table=table)

    # -- variants -----------------------------------------------------------

    @app.get("/api/variants")
    def list_variants(
        problem_id: Optional[str] = Query(default=None),
        interest: Optional[str] = Query(default=None),
        state: Optional[str] = Query(default=None),
    ) -> list[VariantOut]:
        state_filter = None
        if state is not None:
            try:
                state_filter = LifecycleState(state)
            except ValueError:
                raise ApiError(400, "bad_request", f"unknown state '{state}'")
        variants = workspace.list_variants(problem_id=problem_id, interest=interest, state=state_filter)
        return [_variant_out(v) for v in variants]

    @app.patch("/api/variants/{variant_id}")
    def edit_variant(variant_id: str, body: PatchVariantIn) -> VariantOut:
        try:
            variant = workspace.get_variant(variant_id)
        except NotFound as exc:
            raise ApiError(404, "not_found", str(exc))
        try:
            edited = workspace.record_edit(variant_id, body.text, actor="api")
        except IllegalTransition as exc:
            raise ApiError(409, "conflict", str(exc))
        problem = workspace.get_problem(edited.problem_id)
        interest = workspace.get_interest(edited.interest_label)
        report = validation.validate(problem, edited.text, interest)
        updated = workspace.record_validation(variant_id, report, actor="api")
        return _variant_out(updated)

    @app.post("/api/variants/{variant_id}/decision")
    def decide_variant(variant_id: str, body: DecisionIn) -> VariantOut:
        if body.decision not in ("accept", "reject"):
            raise ApiError(400, "bad_request", "decision must be accept or reject")
        try:
            updated = workspace.record_decision(variant_id, body.decision, actor="api")
        except NotFound as exc:
            raise ApiError(404, "not_found", str(exc))
        except (IllegalTransition, StoreError) as exc:
            raise ApiError(409, "conflict", str(exc))
        return _variant_out(updated)

    # -- export ---------------------------------------------------------------

    def _current_table() -> MassProductionTable:
        latest = workspace.latest_variants_by_pair()
        if not latest:
            raise ApiError(404, "not_found", "no variants to export")
        rows = tuple(
            TableRow(
                problem_id=v.problem_id,
                interest_label=v.interest_label,
                variant_id=v.id,
                state=v.state,
                attempt=v.attempt,
                overall_outcome=v.report.overall if v.report else "error",
            )
            for v in latest.values()
        )
        return MassProductionTable(rows=rows, created_at=model.now_iso(), policy=BatchPolicy())

    @app.get("/api/export")
    def export(format: str = Query(default="csv")) -> Response:
        if format not in ("csv", "json"):
            raise ApiError(400, "bad_request", "format must be csv or json")
        table = _current_table()
        with tempfile.TemporaryDirectory() as tmp:
            destination = Path(tmp) / f"export.{format}"
            massprod.export_table(table, workspace, format, destination)
            data = destination.read_bytes()
        media = "text/csv" if format == "csv" else "application/json"
        return Response(
            content=data,
            media_type=media,
            headers={"Content-Disposition": f'attachment; filename="ctxforge-export.{format}"'},
        )

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
