"""Shared domain types: problems, interests, variants and their lifecycle.

All values are immutable; state changes go through :func:`transition`, which
returns a new variant. JSON field names follow the on-disk schema exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Any, Optional

from . import mathtext
from .mathtext import Equation, Expr, ParseError


class ModelError(Exception):
    pass


class EmptyField(ModelError):
    def __init__(self, field_name: str):
        super().__init__(f"field '{field_name}' must not be empty")
        self.field_name = field_name


class FormulaParseError(ModelError):
    def __init__(self, message: str, offset: int):
        super().__init__(f"formula does not parse: {message}")
        self.offset = offset


class IllegalTransition(ModelError):
    def __init__(self, state: "LifecycleState", event: "LifecycleEvent", reason: str = ""):
        detail = f": {reason}" if reason else ""
        super().__init__(f"event '{event.value}' is not legal from state '{state.value}'{detail}")
        self.state = state
        self.event = event


class LifecycleState(str, Enum):
    GENERATED = "generated"
    VALIDATED = "validated"
    NEEDS_REVIEW = "needs_review"
    EDITED = "edited"
    ACCEPTED = "accepted"
    REJECTED = "rejected"
    FAILED = "failed"


class LifecycleEvent(str, Enum):
    VALIDATION_PASSED = "validation_passed"
    VALIDATION_FLAGGED = "validation_flagged"
    EDIT = "edit"
    ACCEPT = "accept"
    REJECT = "reject"
    ATTEMPTS_EXHAUSTED = "attempts_exhausted"


# accepted/rejected/failed are terminal; edits must revalidate before any
# decision.
_TRANSITIONS: dict[tuple[LifecycleState, LifecycleEvent], LifecycleState] = {
    (LifecycleState.GENERATED, LifecycleEvent.VALIDATION_PASSED): LifecycleState.VALIDATED,
    (LifecycleState.GENERATED, LifecycleEvent.VALIDATION_FLAGGED): LifecycleState.NEEDS_REVIEW,
    (LifecycleState.GENERATED, LifecycleEvent.ATTEMPTS_EXHAUSTED): LifecycleState.FAILED,
    (LifecycleState.VALIDATED, LifecycleEvent.ACCEPT): LifecycleState.ACCEPTED,
    (LifecycleState.VALIDATED, LifecycleEvent.EDIT): LifecycleState.EDITED,
    (LifecycleState.VALIDATED, LifecycleEvent.REJECT): LifecycleState.REJECTED,
    (LifecycleState.NEEDS_REVIEW, LifecycleEvent.EDIT): LifecycleState.EDITED,
    (LifecycleState.NEEDS_REVIEW, LifecycleEvent.ACCEPT): LifecycleState.ACCEPTED,
    (LifecycleState.NEEDS_REVIEW, LifecycleEvent.REJECT): LifecycleState.REJECTED,
    (LifecycleState.EDITED, LifecycleEvent.VALIDATION_PASSED): LifecycleState.VALIDATED,
    (LifecycleState.EDITED, LifecycleEvent.VALIDATION_FLAGGED): LifecycleState.NEEDS_REVIEW,
}


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat()


@dataclass(frozen=True)
class ProblemTemplate:
    id: str
    body: str
    title: Optional[str] = None
    formula: Optional[str] = None
    sub_questions: tuple[str, ...] = ()
    variable_note: Optional[str] = None

    def full_text(self) -> str:
        """Body, variable note, formula and enumerated sub-questions joined
        with single blank lines. This is the text sent to prompts and
        validation."""
        parts = [self.body]
        if self.variable_note:
            parts.append(self.variable_note)
        if self.formula:
            parts.append(self.formula)
        parts.extend(f"{i}. {q}" for i, q in enumerate(self.sub_questions, 1))
        return "\n\n".join(parts)

    def formula_expressions(self) -> list[Expr]:
        """Comparison targets parsed from the declared formula, if any."""
        if not self.formula:
            return []
        return parse_formula(self.formula)

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "title": self.title,
            "body": self.body,
            "formula": self.formula,
            "sub_questions": list(self.sub_questions),
            "variable_note": self.variable_note,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ProblemTemplate":
        return new_problem(
            id=data["id"],
            body=data["body"],
            formula=data.get("formula"),
            sub_questions=data.get("sub_questions") or [],
            title=data.get("title"),
            variable_note=data.get("variable_note"),
        )


def parse_formula(src: str) -> list[Expr]:
    """Parse a declared formula into its comparison targets.

    Accepts a bare expression ("1000 - 2.50(C+15)") or an equation line. A
    descriptive left-hand side ("The amount of money left = ...") is
    tolerated; only sides with actual operations become targets.
    """
    if "=" not in src:
        return [mathtext.parse_expression(src)]
    hits = mathtext.find_expressions(src)
    targets: list[Expr] = []
    for _, found in hits:
        if isinstance(found, Equation):
            sides = [found.lhs, found.rhs]
        else:
            sides = [found]
        targets.extend(s for s in sides if isinstance(s, (mathtext.Binary, mathtext.Unary)))
    if not targets:
        raise ParseError("no expression found in formula", 0, "an expression or equation")
    return targets


def new_problem(
    id: str,
    body: str,
    formula: Optional[str] = None,
    sub_questions: Optional[list[str]] = None,
    title: Optional[str] = None,
    variable_note: Optional[str] = None,
) -> ProblemTemplate:
    if not id or not id.strip():
        raise EmptyField("id")
    if not body or not body.strip():
        raise EmptyField("body")
    problem = ProblemTemplate(
        id=id,
        body=body,
        title=title,
        formula=formula,
        sub_questions=tuple(sub_questions or []),
        variable_note=variable_note,
    )
    if formula is not None:
        try:
            problem.formula_expressions()
        except ParseError as exc:
            raise FormulaParseError(str(exc), exc.offset) from exc
    return problem


@dataclass(frozen=True)
class Interest:
    label: str
    keywords: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.label or not self.label.strip():
            raise EmptyField("label")

    def match_terms(self) -> list[str]:
        return [self.label] + list(self.keywords)

    def to_dict(self) -> dict[str, Any]:
        return {"label": self.label, "keywords": list(self.keywords)}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "Interest":
        return cls(label=data["label"], keywords=tuple(data.get("keywords") or ()))


@dataclass(frozen=True)
class EditRecord:
    timestamp: str
    prior_text: str

    def to_dict(self) -> dict[str, Any]:
        return {"timestamp": self.timestamp, "prior_text": self.prior_text}


@dataclass(frozen=True)
class ContextVariant:
    id: str
    problem_id: str
    interest_label: str
    text: str
    state: LifecycleState = LifecycleState.GENERATED
    attempt: int = 1
    report: Optional[Any] = None  # validation.ValidationReport
    edit_history: tuple[EditRecord, ...] = ()

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "problem_id": self.problem_id,
            "interest_label": self.interest_label,
            "text": self.text,
            "state": self.state.value,
            "attempt": self.attempt,
            "report": self.report.to_dict() if self.report else None,
            "edit_history": [e.to_dict() for e in self.edit_history],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ContextVariant":
        from .validation import ValidationReport

        report = data.get("report")
        return cls(
            id=data["id"],
            problem_id=data["problem_id"],
            interest_label=data["interest_label"],
            text=data["text"],
            state=LifecycleState(data["state"]),
            attempt=data.get("attempt", 1),
            report=ValidationReport.from_dict(report) if report else None,
            edit_history=tuple(
                EditRecord(e["timestamp"], e["prior_text"]) for e in data.get("edit_history", [])
            ),
        )


def transition(variant: ContextVariant, event: LifecycleEvent) -> ContextVariant:
    """Apply a lifecycle event, returning the updated variant.

    Accepting requires a report whose overall outcome is pass or warn; a
    variant whose last validation failed outright cannot be accepted.
    """
    key = (variant.state, event)
    if key not in _TRANSITIONS:
        raise IllegalTransition(variant.state, event)
    if event is LifecycleEvent.ACCEPT:
        if variant.report is None:
            raise IllegalTransition(variant.state, event, "no validation report")
        if variant.report.overall == "fail":
            raise IllegalTransition(variant.state, event, "last validation failed")
    return replace(variant, state=_TRANSITIONS[key])


def record_edit(variant: ContextVariant, new_text: str, timestamp: Optional[str] = None) -> ContextVariant:
    """Replace the text, archiving the prior text. Revalidation is the
    caller's job; until then the variant sits in the edited state."""
    if variant.state not in (
        LifecycleState.VALIDATED,
        LifecycleState.NEEDS_REVIEW,
        LifecycleState.EDITED,
    ):
        raise IllegalTransition(variant.state, LifecycleEvent.EDIT)
    updated = variant if variant.state is LifecycleState.EDITED else transition(variant, LifecycleEvent.EDIT)
    record = EditRecord(timestamp=timestamp or now_iso(), prior_text=variant.text)
    return replace(updated, text=new_text, edit_history=variant.edit_history + (record,))


def load_problem_set(path: str | Path) -> tuple[list[ProblemTemplate], list[Interest]]:
    """Load {"problems": [...], "interests": [...]} from one JSON file."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    problems = [ProblemTemplate.from_dict(p) for p in data.get("problems", [])]
    ids = [p.id for p in problems]
    if len(set(ids)) != len(ids):
        raise ModelError("duplicate problem ids in problem set")
    interests = [Interest.from_dict(i) for i in data.get("interests", [])]
    labels = [i.label.strip().lower() for i in interests]
    if len(set(labels)) != len(labels):
        raise ModelError("duplicate interest labels in problem set")
    return problems, interests


def load_problem(path: str | Path) -> ProblemTemplate:
    """Load a single problem from a JSON file."""
    return ProblemTemplate.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
