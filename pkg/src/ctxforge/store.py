"""File-backed workspace: problems, interests, variants and an audit log.

Layout under the workspace root:
    problems.json       {"version": 1, "problems": [...]}
    interests.json      {"version": 1, "interests": [...]}
    variants/<id>.json  one ContextVariant each
    audit.log           one JSON event per line, strictly ordered
    .lock               advisory single-writer lock

All writes go through write-temp-then-rename so an interrupted process never
leaves a half-written file behind.
"""

from __future__ import annotations

import json
import os
import tempfile
import threading
from dataclasses import replace
from pathlib import Path
from typing import Iterator, Optional

from . import model
from .model import (
    ContextVariant,
    Interest,
    LifecycleEvent,
    LifecycleState,
    ProblemTemplate,
)
from .validation import ValidationReport

SCHEMA_VERSION = 1


class StoreError(Exception):
    pass


class NotFound(StoreError):
    def __init__(self, kind: str, key: str):
        super().__init__(f"{kind} '{key}' not found")
        self.kind = kind
        self.key = key


class CorruptWorkspace(StoreError):
    pass


class WorkspaceLocked(StoreError):
    pass


def _atomic_write(path: Path, text: str) -> None:
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as handle:
            handle.write(text)
            handle.flush()
            os.fsync(handle.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Workspace:
    """Single-writer persistent state. Use :func:`open_workspace`."""

    def __init__(self, root: Path, readonly: bool = False):
        self.root = Path(root)
        self.readonly = readonly
        self._mutex = threading.Lock()
        self._locked = False
        self.problems: dict[str, ProblemTemplate] = {}
        self.interests: dict[str, Interest] = {}
        self.variants: dict[str, ContextVariant] = {}
        self._audit_seq = 0
        self._variant_order: list[str] = []
        if not readonly:
            self.root.mkdir(parents=True, exist_ok=True)
            (self.root / "variants").mkdir(exist_ok=True)
            self._acquire_lock()
        self._load()

    # -- locking ------------------------------------------------------------

    def _acquire_lock(self) -> None:
        lock = self.root / ".lock"
        try:
            fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError:
            raise WorkspaceLocked(f"workspace {self.root} is locked by another writer") from None
        with os.fdopen(fd, "w") as handle:
            handle.write(str(os.getpid()))
        self._locked = True

    def close(self) -> None:
        if self._locked:
            (self.root / ".lock").unlink(missing_ok=True)
            self._locked = False

    def __enter__(self) -> "Workspace":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    # -- loading ------------------------------------------------------------

    def _load_collection(self, name: str, key: str) -> list[dict]:
        path = self.root / f"{name}.json"
        if not path.exists():
            return []
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise CorruptWorkspace(f"{path.name}: {exc}") from exc
        if data.get("version") != SCHEMA_VERSION:
            raise CorruptWorkspace(f"{path.name}: unsupported version {data.get('version')!r}")
        return data.get(key, [])

    def _load(self) -> None:
        try:
            for item in self._load_collection("problems", "problems"):
                problem = ProblemTemplate.from_dict(item)
                self.problems[problem.id] = problem
            for item in self._load_collection("interests", "interests"):
                interest = Interest.from_dict(item)
                self.interests[interest.label] = interest
            variants_dir = self.root / "variants"
            if variants_dir.exists():
                for path in sorted(variants_dir.glob("*.json")):
                    variant = ContextVariant.from_dict(
                        json.loads(path.read_text(encoding="utf-8"))
                    )
                    self.variants[variant.id] = variant
        except CorruptWorkspace:
            raise
        except (KeyError, ValueError, TypeError, json.JSONDecodeError, model.ModelError) as exc:
            raise CorruptWorkspace(str(exc)) from exc
        self._variant_order = []
        audit_path = self.root / "audit.log"
        if audit_path.exists():
            try:
                events = list(self.audit_events())
            except (json.JSONDecodeError, KeyError) as exc:
                raise CorruptWorkspace(f"audit.log: {exc}") from exc
            self._audit_seq = len(events)
            seqs = [e["seq"] for e in events]
            if seqs != sorted(set(seqs)):
                raise CorruptWorkspace("audit.log: sequence numbers not strictly increasing")
            for event in events:
                if event["action"] == "put_variant":
                    self._variant_order.append(event["subject"])
        for variant_id in self.variants:
            if variant_id not in self._variant_order:
                self._variant_order.append(variant_id)

    # -- audit --------------------------------------------------------------

    def _append_audit(self, actor: str, action: str, subject: str) -> None:
        self._audit_seq += 1
        event = {
            "seq": self._audit_seq,
            "timestamp": model.now_iso(),
            "actor": actor,
            "action": action,
            "subject": subject,
        }
        with open(self.root / "audit.log", "a", encoding="utf-8") as handle:
            handle.write(json.dumps(event, ensure_ascii=False) + "\n")
            handle.flush()
            os.fsync(handle.fileno())

    def audit_events(self) -> Iterator[dict]:
        path = self.root / "audit.log"
        if not path.exists():
            return iter(())
        with open(path, encoding="utf-8") as handle:
            lines = handle.readlines()
        return iter(json.loads(line) for line in lines if line.strip())

    # -- persistence --------------------------------------------------------

    def _check_writable(self) -> None:
        if self.readonly:
            raise StoreError("workspace opened read-only")

    def _flush_problems(self) -> None:
        payload = {
            "version": SCHEMA_VERSION,
            "problems": [p.to_dict() for p in self.problems.values()],
        }
        _atomic_write(self.root / "problems.json", json.dumps(payload, indent=2, ensure_ascii=False))

    def _flush_interests(self) -> None:
        payload = {
            "version": SCHEMA_VERSION,
            "interests": [i.to_dict() for i in self.interests.values()],
        }
        _atomic_write(self.root / "interests.json", json.dumps(payload, indent=2, ensure_ascii=False))

    def _flush_variant(self, variant: ContextVariant) -> None:
        path = self.root / "variants" / f"{variant.id}.json"
        _atomic_write(path, json.dumps(variant.to_dict(), indent=2, ensure_ascii=False))

    # -- mutations ----------------------------------------------------------

    def put_problem(self, problem: ProblemTemplate, actor: str = "system") -> str:
        self._check_writable()
        with self._mutex:
            self.problems[problem.id] = problem
            self._flush_problems()
            self._append_audit(actor, "put_problem", problem.id)
        return problem.id

    def put_interest(self, interest: Interest, actor: str = "system") -> str:
        self._check_writable()
        with self._mutex:
            existing = {label.strip().lower() for label in self.interests}
            if interest.label.strip().lower() in existing and interest.label not in self.interests:
                raise StoreError(f"interest label '{interest.label}' already exists (case-insensitive)")
            self.interests[interest.label] = interest
            self._flush_interests()
            self._append_audit(actor, "put_interest", interest.label)
        return interest.label

    def put_variant(self, variant: ContextVariant, actor: str = "system") -> str:
        self._check_writable()
        with self._mutex:
            if variant.problem_id not in self.problems:
                raise NotFound("problem", variant.problem_id)
            self.variants[variant.id] = variant
            self._flush_variant(variant)
            self._append_audit(actor, "put_variant", variant.id)
            if variant.id not in self._variant_order:
                self._variant_order.append(variant.id)
        return variant.id

    def get_problem(self, problem_id: str) -> ProblemTemplate:
        try:
            return self.problems[problem_id]
        except KeyError:
            raise NotFound("problem", problem_id) from None

    def get_variant(self, variant_id: str) -> ContextVariant:
        try:
            return self.variants[variant_id]
        except KeyError:
            raise NotFound("variant", variant_id) from None

    def get_interest(self, label: str) -> Interest:
        for interest in self.interests.values():
            if interest.label.strip().lower() == label.strip().lower():
                return interest
        raise NotFound("interest", label)

    def record_edit(self, variant_id: str, new_text: str, actor: str) -> ContextVariant:
        """Archive the old text and move the variant to the edited state.
        The caller must revalidate before any decision."""
        self._check_writable()
        with self._mutex:
            variant = self.get_variant(variant_id)
            updated = model.record_edit(variant, new_text)
            self.variants[variant_id] = updated
            self._flush_variant(updated)
            self._append_audit(actor, "edit", variant_id)
        return updated

    def record_validation(self, variant_id: str, report: ValidationReport, actor: str = "system") -> ContextVariant:
        """Attach a fresh report and route by its overall outcome."""
        self._check_writable()
        with self._mutex:
            variant = self.get_variant(variant_id)
            event = (
                LifecycleEvent.VALIDATION_PASSED
                if report.overall == "pass"
                else LifecycleEvent.VALIDATION_FLAGGED
            )
            updated = model.transition(replace(variant, report=report), event)
            self.variants[variant_id] = updated
            self._flush_variant(updated)
            self._append_audit(actor, "validate", variant_id)
        return updated

    def record_decision(self, variant_id: str, decision: str, actor: str) -> ContextVariant:
        """Accept or reject a reviewed variant."""
        self._check_writable()
        if decision not in ("accept", "reject"):
            raise StoreError(f"decision must be accept or reject, not {decision!r}")
        with self._mutex:
            variant = self.get_variant(variant_id)
            event = LifecycleEvent.ACCEPT if decision == "accept" else LifecycleEvent.REJECT
            updated = model.transition(variant, event)
            self.variants[variant_id] = updated
            self._flush_variant(updated)
            self._append_audit(actor, f"decision:{decision}", variant_id)
        return updated

    # -- queries ------------------------------------------------------------

    def list_variants(
        self,
        problem_id: Optional[str] = None,
        interest: Optional[str] = None,
        state: Optional[LifecycleState] = None,
    ) -> list[ContextVariant]:
        out = []
        for variant_id in self._variant_order:
            variant = self.variants.get(variant_id)
            if variant is None:
                continue
            if problem_id and variant.problem_id != problem_id:
                continue
            if interest and variant.interest_label.lower() != interest.lower():
                continue
            if state and variant.state is not state:
                continue
            out.append(variant)
        return out

    def latest_variants_by_pair(self) -> dict[tuple[str, str], ContextVariant]:
        """Most recently stored variant per (problem, interest) pair."""
        latest: dict[tuple[str, str], ContextVariant] = {}
        for variant in self.list_variants():
            latest[(variant.problem_id, variant.interest_label)] = variant
        return latest


def open_workspace(root: str | Path, readonly: bool = False) -> Workspace:
    return Workspace(Path(root), readonly=readonly)
