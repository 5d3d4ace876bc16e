"""Mechanical checks that a rewritten problem preserves the original.

Three error-severity checks cover what is machine-decidable: the numbers,
the formula and the question structure must survive the rewrite. Two
warning-severity heuristics (interest presence, rewrite depth) flag output
for human review; deep-contextualization quality itself is a judgment call
and stays with the reviewer.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from decimal import Decimal
from typing import Any

from . import mathtext
from .mathtext import Equation
from .model import Interest, ProblemTemplate

CHECK_IDS = (
    "value_preservation",
    "expression_preservation",
    "structure_preservation",
    "interest_presence",
    "nontrivial_rewrite",
)

# error-severity failures block acceptance; warning-severity ones route the
# variant to human review.
SEVERITY = {
    "value_preservation": "error",
    "expression_preservation": "error",
    "structure_preservation": "error",
    "interest_presence": "warning",
    "nontrivial_rewrite": "warning",
}

DEFAULT_REWRITE_THRESHOLD = Decimal("0.30")


@dataclass(frozen=True)
class CheckResult:
    check_id: str
    outcome: str  # pass | fail | warn | skipped
    details: str
    evidence: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "check_id": self.check_id,
            "outcome": self.outcome,
            "details": self.details,
            "evidence": self.evidence,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "CheckResult":
        return cls(
            check_id=data["check_id"],
            outcome=data["outcome"],
            details=data["details"],
            evidence=data.get("evidence") or {},
        )


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[CheckResult, ...]
    overall: str  # pass | warn | fail

    def check(self, check_id: str) -> CheckResult:
        for c in self.checks:
            if c.check_id == check_id:
                return c
        raise KeyError(check_id)

    def to_dict(self) -> dict[str, Any]:
        return {"checks": [c.to_dict() for c in self.checks], "overall": self.overall}

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ValidationReport":
        return cls(
            checks=tuple(CheckResult.from_dict(c) for c in data["checks"]),
            overall=data["overall"],
        )


def _decimal_str(value: Decimal) -> str:
    return format(value.normalize(), "f")


def _sorted_values(values: set[Decimal]) -> list[str]:
    return [_decimal_str(v) for v in sorted(values)]


def check_values(original: ProblemTemplate, variant_text: str) -> CheckResult:
    """Rule 1: the variant must use exactly the original's distinct values."""
    want = mathtext.distinct_values(original.full_text())
    got = mathtext.distinct_values(variant_text)
    missing = want - got
    extraneous = got - want
    if not missing and not extraneous:
        return CheckResult(
            "value_preservation",
            "pass",
            f"all {len(want)} distinct values preserved",
            {"values": _sorted_values(want)},
        )
    return CheckResult(
        "value_preservation",
        "fail",
        "variant changes the problem's values",
        {"missing": _sorted_values(missing), "extraneous": _sorted_values(extraneous)},
    )


def _candidate_sides(found: list) -> list:
    """Sides worth comparing: drop bare variables picked up from prose
    labels around an '='."""
    sides = []
    for _, hit in found:
        parts = [hit.lhs, hit.rhs] if isinstance(hit, Equation) else [hit]
        sides.extend(p for p in parts if not isinstance(p, mathtext.Variable))
    return sides


def check_expression(original: ProblemTemplate, variant_text: str) -> CheckResult:
    """Rule 1 + 3 for the formula: preserved up to renaming the variable."""
    if not original.formula:
        return CheckResult(
            "expression_preservation",
            "skipped",
            "original declares no formula",
        )
    targets = original.formula_expressions()
    found = _candidate_sides(mathtext.find_expressions(variant_text))
    if not found:
        structure = mathtext.count_questions(variant_text)
        if structure.imperative_tasks >= 1:
            return CheckResult(
                "expression_preservation",
                "skipped",
                "variant asks the student to write the equation",
                {"imperative_tasks": structure.imperative_tasks},
            )
        return CheckResult(
            "expression_preservation",
            "fail",
            "no expression found in variant",
            {"expected": [mathtext.to_text(t) for t in targets]},
        )
    for side in found:
        for target in targets:
            if mathtext.alpha_equivalent(side, target):
                return CheckResult(
                    "expression_preservation",
                    "pass",
                    "formula preserved up to variable renaming",
                    {"matched": mathtext.to_text(side)},
                )
    return CheckResult(
        "expression_preservation",
        "fail",
        "variant's expressions do not match the original formula",
        {
            "expected": [mathtext.to_text(t) for t in targets],
            "found": [mathtext.to_text(s) for s in found],
        },
    )


def check_structure(original: ProblemTemplate, variant_text: str) -> CheckResult:
    """Rule 3: same question structure, no additional questions."""
    qo = mathtext.count_questions(original.full_text())
    qv = mathtext.count_questions(variant_text)
    evidence = {
        "original": [qo.enumerated_items, qo.question_marks, qo.imperative_tasks],
        "variant": [qv.enumerated_items, qv.question_marks, qv.imperative_tasks],
    }
    if qo.total() == 0:
        # Bare-equation original: the rewrite must pose the task somehow.
        if qv.total() >= 1:
            return CheckResult(
                "structure_preservation", "pass", "variant states a task for the bare equation", evidence
            )
        return CheckResult(
            "structure_preservation", "fail", "variant poses no question or task", evidence
        )
    same_enumeration = qv.enumerated_items == qo.enumerated_items
    same_tasks = (qv.question_marks + qv.imperative_tasks) == (qo.question_marks + qo.imperative_tasks)
    if same_enumeration and same_tasks:
        return CheckResult("structure_preservation", "pass", "question structure preserved", evidence)
    return CheckResult(
        "structure_preservation",
        "fail",
        "variant changes the question structure",
        evidence,
    )


def check_interest_presence(variant_text: str, interest: Interest) -> CheckResult:
    """Rule 2 proxy: the interest (or a keyword) must actually appear."""
    for term in interest.match_terms():
        if re.search(rf"(?<!\w){re.escape(term)}(?!\w)", variant_text, re.IGNORECASE):
            return CheckResult(
                "interest_presence",
                "pass",
                f"found '{term}' in variant",
                {"matched": term},
            )
    return CheckResult(
        "interest_presence",
        "warn",
        f"neither '{interest.label}' nor its keywords appear in the variant",
        {"terms": interest.match_terms()},
    )


_WORD_RE = re.compile(r"[a-z0-9']+")


def _tokens(text: str) -> list[str]:
    return _WORD_RE.findall(text.lower())


def _lcs_length(a: list[str], b: list[str]) -> int:
    # Two-row dynamic program; fixture texts are a few hundred tokens.
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        row = [0]
        for j, y in enumerate(b):
            row.append(prev[j] + 1 if x == y else max(prev[j + 1], row[j]))
        prev = row
    return prev[len(b)]


def rewrite_ratio(original_text: str, variant_text: str) -> Decimal:
    """Token-level difference: 1 - |LCS| / max(len, len)."""
    a = _tokens(original_text)
    b = _tokens(variant_text)
    if not a and not b:
        return Decimal(0)
    lcs = _lcs_length(a, b)
    return Decimal(1) - Decimal(lcs) / Decimal(max(len(a), len(b)))


def check_nontrivial_rewrite(
    original: ProblemTemplate,
    variant_text: str,
    threshold: Decimal = DEFAULT_REWRITE_THRESHOLD,
) -> CheckResult:
    """Rule 2 proxy: reject near-identical texts (surface-detail swaps)."""
    ratio = rewrite_ratio(original.full_text(), variant_text)
    evidence = {"ratio": f"{ratio:.4f}", "threshold": str(threshold)}
    if ratio >= threshold:
        return CheckResult("nontrivial_rewrite", "pass", "substantial rewrite", evidence)
    return CheckResult(
        "nontrivial_rewrite",
        "warn",
        "variant is nearly identical to the original",
        evidence,
    )


def validate(
    original: ProblemTemplate,
    variant_text: str,
    interest: Interest,
    rewrite_threshold: Decimal = DEFAULT_REWRITE_THRESHOLD,
) -> ValidationReport:
    """Run all five checks and aggregate.

    overall is "fail" if any error-severity check failed, "warn" if any
    check warned, otherwise "pass". Skipped checks do not count.
    """
    checks = (
        check_values(original, variant_text),
        check_expression(original, variant_text),
        check_structure(original, variant_text),
        check_interest_presence(variant_text, interest),
        check_nontrivial_rewrite(original, variant_text, rewrite_threshold),
    )
    if any(c.outcome == "fail" for c in checks):
        overall = "fail"
    elif any(c.outcome == "warn" for c in checks):
        overall = "warn"
    else:
        overall = "pass"
    return ValidationReport(checks=checks, overall=overall)
