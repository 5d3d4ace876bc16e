"""Batch orchestration over the problem x interest matrix.

Each cell is generated, validated and retried on hard failures up to the
policy's attempt budget, with a bounded worker pool. The result is a
complete table (every pair present, failures included) plus CSV/JSON
export.
"""

from __future__ import annotations

import csv
import json
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .generation import (
    FALLBACK_BACKEND_ID,
    AuthError,
    Backend,
    GenerationError,
    GenerationRequest,
)
from .model import (
    ContextVariant,
    Interest,
    LifecycleEvent,
    LifecycleState,
    ProblemTemplate,
    now_iso,
    transition,
)
from .prompting import PromptTemplate, build_prompt
from .store import Workspace
from .validation import validate

ACCEPT_MODES = ("pass_only", "pass_or_warn")
EXPORT_COLUMNS = ("problem_id", "interest", "state", "overall", "attempt", "variant_text")


class BatchError(Exception):
    pass


class BackendUnavailable(BatchError):
    """The backend cannot serve the batch at all. The partially completed
    table (remaining cells marked failed) rides along on ``table``."""

    def __init__(self, message: str, table: Optional["MassProductionTable"] = None):
        super().__init__(message)
        self.table = table


class UnresolvedVariant(BatchError):
    pass


@dataclass(frozen=True)
class BatchPolicy:
    max_attempts: int = 3
    parallelism: int = 4
    accept_on: str = "pass_or_warn"

    def __post_init__(self):
        if self.max_attempts < 1:
            raise ValueError("max_attempts must be >= 1")
        if self.parallelism < 1:
            raise ValueError("parallelism must be >= 1")
        if self.accept_on not in ACCEPT_MODES:
            raise ValueError(f"accept_on must be one of {ACCEPT_MODES}")

    def to_dict(self) -> dict:
        return {
            "max_attempts": self.max_attempts,
            "parallelism": self.parallelism,
            "accept_on": self.accept_on,
        }


@dataclass(frozen=True)
class TableRow:
    problem_id: str
    interest_label: str
    variant_id: str
    state: LifecycleState
    attempt: int
    overall_outcome: str  # report overall, or "error" when generation broke


@dataclass(frozen=True)
class MassProductionTable:
    rows: tuple[TableRow, ...]
    created_at: str
    policy: BatchPolicy

    def summary(self) -> dict:
        counts = {"validated": 0, "needs_review": 0, "failed": 0}
        for row in self.rows:
            if row.state is LifecycleState.FAILED:
                counts["failed"] += 1
            elif row.state is LifecycleState.VALIDATED:
                counts["validated"] += 1
            else:
                counts["needs_review"] += 1
        return {"total": len(self.rows), **counts}

    def to_dict(self) -> dict:
        return {
            "created_at": self.created_at,
            "policy": self.policy.to_dict(),
            "rows": [
                {
                    "problem_id": r.problem_id,
                    "interest": r.interest_label,
                    "variant_id": r.variant_id,
                    "state": r.state.value,
                    "overall": r.overall_outcome,
                    "attempt": r.attempt,
                }
                for r in self.rows
            ],
        }


def _new_variant_id() -> str:
    return f"var-{uuid.uuid4().hex[:12]}"


def _finalize(variant: ContextVariant, policy: BatchPolicy, fallback_used: bool) -> ContextVariant:
    """Route a generated-and-validated variant to its final state."""
    report = variant.report
    assert report is not None
    if report.overall == "fail":
        return transition(variant, LifecycleEvent.ATTEMPTS_EXHAUSTED)
    if report.overall == "pass" and not fallback_used:
        return transition(variant, LifecycleEvent.VALIDATION_PASSED)
    return transition(variant, LifecycleEvent.VALIDATION_FLAGGED)


def _run_cell(
    problem: ProblemTemplate,
    interest: Interest,
    policy: BatchPolicy,
    backend: Backend,
    template: PromptTemplate,
) -> ContextVariant:
    prompt = build_prompt(template, problem, interest)
    request = GenerationRequest(
        prompt=prompt,
        metadata={
            "problem_id": problem.id,
            "interest": interest.label,
            "problem_text": problem.full_text(),
        },
    )
    last: Optional[ContextVariant] = None
    for attempt in range(1, policy.max_attempts + 1):
        try:
            result = backend.generate(request)
        except AuthError:
            raise
        except GenerationError:
            last = ContextVariant(
                id=_new_variant_id(),
                problem_id=problem.id,
                interest_label=interest.label,
                text="",
                state=LifecycleState.GENERATED,
                attempt=attempt,
            )
            continue
        report = validate(problem, result.text, interest)
        variant = ContextVariant(
            id=_new_variant_id(),
            problem_id=problem.id,
            interest_label=interest.label,
            text=result.text,
            state=LifecycleState.GENERATED,
            attempt=attempt,
            report=report,
        )
        if report.overall == "fail" and attempt < policy.max_attempts:
            last = variant
            continue
        if report.overall == "warn" and policy.accept_on == "pass_only" and attempt < policy.max_attempts:
            last = variant
            continue
        return _finalize(variant, policy, result.backend_id == FALLBACK_BACKEND_ID)
    # Loop can only fall through when the final attempt's generation failed.
    assert last is not None
    return transition(last, LifecycleEvent.ATTEMPTS_EXHAUSTED)


def run_batch(
    problems: list[ProblemTemplate],
    interests: list[Interest],
    policy: BatchPolicy,
    backend: Backend,
    template: PromptTemplate,
    store: Optional[Workspace] = None,
    actor: str = "batch",
) -> MassProductionTable:
    """Generate and validate every (problem, interest) cell.

    The table always contains |problems| x |interests| rows. Per-cell
    validation failures land in the row as state=failed; an authentication
    failure aborts everything still pending (BackendUnavailable semantics),
    with those rows marked failed as well.
    """
    if not problems:
        raise BatchError("no problems given")
    if not interests:
        raise BatchError("no interests given")
    created_at = now_iso()
    cells = [(p, i) for p in problems for i in interests]
    variants: dict[tuple[str, str], ContextVariant] = {}
    abort_reason: Optional[str] = None

    def worker(cell: tuple[ProblemTemplate, Interest]) -> tuple[tuple[str, str], ContextVariant]:
        problem, interest = cell
        return (problem.id, interest.label), _run_cell(problem, interest, policy, backend, template)

    with ThreadPoolExecutor(max_workers=policy.parallelism) as pool:
        futures = [pool.submit(worker, cell) for cell in cells]
        for future in futures:
            try:
                key, variant = future.result()
            except AuthError as exc:
                abort_reason = str(exc)
                break
            variants[key] = variant
        if abort_reason is not None:
            for future in futures:
                future.cancel()

    rows = []
    for problem, interest in sorted(cells, key=lambda c: (c[0].id, c[1].label)):
        key = (problem.id, interest.label)
        variant = variants.get(key)
        if variant is None:
            # Aborted before this cell produced anything.
            variant = ContextVariant(
                id=_new_variant_id(),
                problem_id=problem.id,
                interest_label=interest.label,
                text="",
                state=LifecycleState.FAILED,
                attempt=policy.max_attempts,
            )
        if store is not None:
            store.put_variant(variant, actor=actor)
        rows.append(
            TableRow(
                problem_id=problem.id,
                interest_label=interest.label,
                variant_id=variant.id,
                state=variant.state,
                attempt=variant.attempt,
                overall_outcome=variant.report.overall if variant.report else "error",
            )
        )
    table = MassProductionTable(rows=tuple(rows), created_at=created_at, policy=policy)
    if abort_reason is not None:
        raise BackendUnavailable(f"batch aborted: {abort_reason}", table=table)
    return table


def batch_summary(table: MassProductionTable, wall_time_seconds: float) -> dict:
    summary = table.summary()
    summary["wall_time_seconds"] = round(wall_time_seconds, 3)
    return summary


def export_table(
    table: MassProductionTable,
    store: Workspace,
    format: str,
    destination: str | Path,
) -> Path:
    """Write the table as CSV (RFC 4180) or JSON, deterministically ordered."""
    if format not in ("csv", "json"):
        raise ValueError(f"format must be csv or json, not {format!r}")
    destination = Path(destination)
    rows = sorted(table.rows, key=lambda r: (r.problem_id, r.interest_label))
    records = []
    for row in rows:
        try:
            variant = store.get_variant(row.variant_id)
        except Exception as exc:
            raise UnresolvedVariant(f"variant {row.variant_id} not in store: {exc}") from exc
        records.append(
            {
                "problem_id": row.problem_id,
                "interest": row.interest_label,
                "state": row.state.value,
                "overall": row.overall_outcome,
                "attempt": row.attempt,
                "variant_text": variant.text,
            }
        )
    if format == "csv":
        with open(destination, "w", encoding="utf-8", newline="") as handle:
            writer = csv.DictWriter(handle, fieldnames=EXPORT_COLUMNS, lineterminator="\r\n")
            writer.writeheader()
            writer.writerows(records)
    else:
        destination.write_text(
            json.dumps({"rows": records}, indent=2, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )
    return destination
