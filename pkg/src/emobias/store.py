"""Submission store for the annotation service.

State lives in memory and every mutation is written ahead to an
append-only JSONL event log, so replaying the log reconstructs the exact
state. Review verdicts are the only mutation a persisted submission ever
receives, and they are themselves appended as events.
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, IO, Sequence

from .corpus import Annotation, Corpus, SOURCE_CONTRASTIVE, corpus_from_annotations
from .emotions import EmotionLabel
from .selection import (
    AnnotationTask,
    STATUS_COMPLETE,
    STATUS_OPEN,
    STATUS_RETIRED,
)

NO_IMAGE = "NO_IMAGE"

REVIEW_PENDING = "pending"
REVIEW_APPROVED = "approved"
REVIEW_REJECTED = "rejected"

DEFAULT_LEASE_SECONDS = 30 * 60
GRACE_SECONDS = 5 * 60
MIN_UTTERANCE_WORDS = 5


class StoreError(Exception):
    """Base class; http_status tells the service layer what to answer."""

    http_status = 400


class ValidationError(StoreError):
    http_status = 400


class UnknownIdError(StoreError):
    http_status = 404


class ConflictError(StoreError):
    http_status = 409


@dataclass
class Submission:
    submission_id: str
    task_id: str
    worker_id: str
    selection: str  # painting id or NO_IMAGE
    emotion: EmotionLabel | None
    utterance: str | None
    timestamp: float
    review_status: str = REVIEW_PENDING

    def to_dict(self) -> dict:
        return {
            "submission_id": self.submission_id,
            "task_id": self.task_id,
            "worker_id": self.worker_id,
            "selection": self.selection,
            "emotion": self.emotion.value if self.emotion else None,
            "utterance": self.utterance,
            "timestamp": self.timestamp,
            "review_status": self.review_status,
        }

    @classmethod
    def from_dict(cls, record: dict) -> "Submission":
        return cls(
            submission_id=record["submission_id"],
            task_id=record["task_id"],
            worker_id=record["worker_id"],
            selection=record["selection"],
            emotion=EmotionLabel.parse(record["emotion"])
            if record.get("emotion")
            else None,
            utterance=record.get("utterance"),
            timestamp=record["timestamp"],
            review_status=record.get("review_status", REVIEW_PENDING),
        )


@dataclass
class AssignmentLease:
    task_id: str
    worker_id: str
    lease_expiry: float


class AnnotationStore:
    """Single-writer task/submission state guarded by one lock."""

    def __init__(
        self,
        tasks: Sequence[AnnotationTask],
        log_path: str | Path | None = None,
        clock: Callable[[], float] = time.time,
        lease_seconds: float = DEFAULT_LEASE_SECONDS,
    ):
        self._lock = threading.Lock()
        self._clock = clock
        self._lease_seconds = lease_seconds
        self.tasks: dict[str, AnnotationTask] = {}
        for task in tasks:
            if task.task_id in self.tasks:
                raise ValueError(f"duplicate task id {task.task_id!r}")
            self.tasks[task.task_id] = task
        self.workers: set[str] = set()
        self.submissions: dict[str, Submission] = {}
        self.leases: dict[tuple[str, str], AssignmentLease] = {}
        self._submitted_pairs: set[tuple[str, str]] = set()
        self._log_path = Path(log_path) if log_path else None
        self._log_fh: IO[str] | None = None
        if self._log_path is not None:
            self._log_path.parent.mkdir(parents=True, exist_ok=True)
            self._log_fh = open(self._log_path, "a", encoding="utf-8")

    # ---- log plumbing ----------------------------------------------------

    def _append_event(self, event: dict) -> None:
        if self._log_fh is not None:
            self._log_fh.write(json.dumps(event, ensure_ascii=False) + "\n")
            self._log_fh.flush()

    def close(self) -> None:
        if self._log_fh is not None:
            self._log_fh.close()
            self._log_fh = None

    # ---- operations -------------------------------------------------------

    def register_worker(self, worker_id: str | None = None) -> str:
        with self._lock:
            wid = worker_id or f"w-{uuid.uuid4().hex[:12]}"
            if wid not in self.workers:
                self._append_event(
                    {"type": "worker_registered", "worker_id": wid, "ts": self._clock()}
                )
                self.workers.add(wid)
            return wid

    def next_task(
        self, worker_id: str
    ) -> tuple[AnnotationTask, AssignmentLease] | None:
        """Open task this worker has not submitted to, fewest completions first.

        Outstanding leases count toward a task's load so concurrent workers
        spread over distinct tasks. Returns None when the worker is exhausted.
        """
        with self._lock:
            if worker_id not in self.workers:
                raise UnknownIdError(f"unknown worker: {worker_id!r}")
            now = self._clock()
            active_leases: dict[str, int] = {}
            for lease in self.leases.values():
                if lease.lease_expiry > now:
                    active_leases[lease.task_id] = (
                        active_leases.get(lease.task_id, 0) + 1
                    )
            candidates = [
                task
                for task in self.tasks.values()
                if task.status == STATUS_OPEN
                and (worker_id, task.task_id) not in self._submitted_pairs
            ]
            if not candidates:
                return None
            candidates.sort(
                key=lambda t: (
                    t.completed_submissions + active_leases.get(t.task_id, 0),
                    t.task_id,
                )
            )
            task = candidates[0]
            lease = AssignmentLease(
                task_id=task.task_id,
                worker_id=worker_id,
                lease_expiry=now + self._lease_seconds,
            )
            self._append_event(
                {
                    "type": "lease_granted",
                    "task_id": task.task_id,
                    "worker_id": worker_id,
                    "lease_expiry": lease.lease_expiry,
                    "ts": now,
                }
            )
            self.leases[(task.task_id, worker_id)] = lease
            return task, lease

    def _validate_submission(
        self,
        task: AnnotationTask,
        worker_id: str,
        selection: str,
        emotion: EmotionLabel | None,
        utterance: str | None,
    ) -> None:
        if selection == NO_IMAGE:
            if emotion is not None or (utterance or "").strip():
                raise ValidationError(
                    "a NO_IMAGE submission must carry no emotion or utterance"
                )
            return
        candidate_ids = {s.painting_id for s in task.candidate_set.slots}
        if selection not in candidate_ids:
            raise ValidationError(
                f"selection {selection!r} is not among the task's candidates"
            )
        if emotion is None:
            raise ValidationError("an emotion is required when a painting is selected")
        expected = task.candidate_set.query_sentiment.opposite
        if emotion.sentiment is not expected:
            raise ValidationError(
                f"emotion {emotion.value!r} must carry the {expected.value} "
                f"sentiment, opposite to the query"
            )
        words = (utterance or "").split()
        if len(words) < MIN_UTTERANCE_WORDS:
            raise ValidationError(
                f"utterance needs at least {MIN_UTTERANCE_WORDS} words, "
                f"got {len(words)}"
            )

    def submit(
        self,
        task_id: str,
        worker_id: str,
        selection: str,
        emotion: EmotionLabel | None = None,
        utterance: str | None = None,
    ) -> Submission:
        with self._lock:
            task = self.tasks.get(task_id)
            if task is None:
                raise UnknownIdError(f"unknown task: {task_id!r}")
            if worker_id not in self.workers:
                raise UnknownIdError(f"unknown worker: {worker_id!r}")
            if task.status == STATUS_RETIRED:
                raise ConflictError(f"task {task_id!r} is retired")
            if (worker_id, task_id) in self._submitted_pairs:
                raise ConflictError(
                    f"worker {worker_id!r} already submitted to task {task_id!r}"
                )
            lease = self.leases.get((task_id, worker_id))
            now = self._clock()
            if lease is None:
                raise ConflictError(
                    f"worker {worker_id!r} holds no lease on task {task_id!r}"
                )
            if now > lease.lease_expiry + GRACE_SECONDS:
                raise ConflictError(f"lease on task {task_id!r} expired")
            self._validate_submission(task, worker_id, selection, emotion, utterance)

            submission = Submission(
                submission_id=f"s-{uuid.uuid4().hex[:16]}",
                task_id=task_id,
                worker_id=worker_id,
                selection=selection,
                emotion=emotion,
                utterance=utterance.strip() if utterance else None,
                timestamp=now,
            )
            self._append_event(
                {"type": "submission", "submission": submission.to_dict(), "ts": now}
            )
            self.submissions[submission.submission_id] = submission
            self._submitted_pairs.add((worker_id, task_id))
            del self.leases[(task_id, worker_id)]
            task.completed_submissions += 1
            if task.completed_submissions >= task.required_submissions:
                task.status = STATUS_COMPLETE
            return submission

    def review(self, submission_id: str, verdict: str, reason: str = "") -> Submission:
        if verdict not in (REVIEW_APPROVED, REVIEW_REJECTED):
            raise ValidationError(f"verdict must be approved or rejected: {verdict!r}")
        with self._lock:
            submission = self.submissions.get(submission_id)
            if submission is None:
                raise UnknownIdError(f"unknown submission: {submission_id!r}")
            if submission.review_status != REVIEW_PENDING:
                raise ConflictError(
                    f"submission {submission_id!r} was already reviewed "
                    f"({submission.review_status})"
                )
            self._append_event(
                {
                    "type": "review",
                    "submission_id": submission_id,
                    "verdict": verdict,
                    "reason": reason,
                    "ts": self._clock(),
                }
            )
            submission.review_status = verdict
            if verdict == REVIEW_REJECTED:
                task = self.tasks[submission.task_id]
                task.completed_submissions -= 1
                if (
                    task.status == STATUS_COMPLETE
                    and task.completed_submissions < task.required_submissions
                ):
                    task.status = STATUS_OPEN
            return submission

    # ---- export & introspection -------------------------------------------

    def export_contrastive(self, corpus: Corpus | None = None) -> tuple[Corpus, int]:
        """Corpus of approved painting-selections, plus the NO_IMAGE count.

        NO_IMAGE submissions are counted among all non-rejected ones; they
        never become annotations. Painting metadata is pulled from the
        given corpus when available.
        """
        with self._lock:
            annotations: list[Annotation] = []
            no_image = 0
            for submission in self.submissions.values():
                if submission.review_status == REVIEW_REJECTED:
                    continue
                if submission.selection == NO_IMAGE:
                    no_image += 1
                    continue
                if submission.review_status != REVIEW_APPROVED:
                    continue
                task = self.tasks[submission.task_id]
                annotations.append(
                    Annotation(
                        painting_id=submission.selection,
                        emotion=submission.emotion,
                        utterance=submission.utterance,
                        source=SOURCE_CONTRASTIVE,
                        worker_id=submission.worker_id,
                        query_painting_id=task.candidate_set.query_id,
                    )
                )
        exported = corpus_from_annotations(annotations, name="contrastive")
        if corpus is not None:
            for pid, painting in exported.paintings.items():
                known = corpus.paintings.get(pid)
                if known is not None:
                    painting.art_style = known.art_style
                    painting.image_ref = known.image_ref
        return exported, no_image

    def stats(self) -> dict:
        with self._lock:
            by_status: dict[str, int] = {}
            no_image = 0
            for submission in self.submissions.values():
                by_status[submission.review_status] = (
                    by_status.get(submission.review_status, 0) + 1
                )
                if (
                    submission.selection == NO_IMAGE
                    and submission.review_status != REVIEW_REJECTED
                ):
                    no_image += 1
            open_tasks = sum(
                1 for t in self.tasks.values() if t.status == STATUS_OPEN
            )
            complete = sum(
                1 for t in self.tasks.values() if t.status == STATUS_COMPLETE
            )
            return {
                "tasks": {
                    "total": len(self.tasks),
                    "open": open_tasks,
                    "complete": complete,
                    "retired": len(self.tasks) - open_tasks - complete,
                },
                "submissions": {
                    "total": len(self.submissions),
                    **{s: by_status.get(s, 0) for s in ("pending", "approved", "rejected")},
                },
                "no_image_count": no_image,
                "workers": len(self.workers),
                "expected_submissions": sum(
                    t.required_submissions for t in self.tasks.values()
                ),
            }

    def state_dict(self) -> dict:
        """Canonical state for replay comparisons."""
        with self._lock:
            return {
                "workers": sorted(self.workers),
                "tasks": {
                    tid: {
                        "completed": task.completed_submissions,
                        "status": task.status,
                    }
                    for tid, task in sorted(self.tasks.items())
                },
                "submissions": {
                    sid: sub.to_dict() for sid, sub in sorted(self.submissions.items())
                },
                "leases": {
                    f"{tid}|{wid}": lease.lease_expiry
                    for (tid, wid), lease in sorted(self.leases.items())
                },
            }


def replay_log(
    log_path: str | Path,
    tasks: Sequence[AnnotationTask],
    clock: Callable[[], float] = time.time,
) -> AnnotationStore:
    """Rebuild store state from an event log without re-appending to it."""
    from dataclasses import replace

    fresh = [
        replace(task, completed_submissions=0, status=STATUS_OPEN) for task in tasks
    ]
    store = AnnotationStore(fresh, log_path=None, clock=clock)
    with open(log_path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            event = json.loads(line)
            kind = event.get("type")
            if kind == "worker_registered":
                store.workers.add(event["worker_id"])
            elif kind == "lease_granted":
                store.leases[(event["task_id"], event["worker_id"])] = AssignmentLease(
                    task_id=event["task_id"],
                    worker_id=event["worker_id"],
                    lease_expiry=event["lease_expiry"],
                )
            elif kind == "submission":
                submission = Submission.from_dict(event["submission"])
                # replayed submissions start pending; review events re-apply
                submission.review_status = REVIEW_PENDING
                store.submissions[submission.submission_id] = submission
                store._submitted_pairs.add(
                    (submission.worker_id, submission.task_id)
                )
                store.leases.pop(
                    (submission.task_id, submission.worker_id), None
                )
                task = store.tasks[submission.task_id]
                task.completed_submissions += 1
                if task.completed_submissions >= task.required_submissions:
                    task.status = STATUS_COMPLETE
            elif kind == "review":
                submission = store.submissions[event["submission_id"]]
                submission.review_status = event["verdict"]
                if event["verdict"] == REVIEW_REJECTED:
                    task = store.tasks[submission.task_id]
                    task.completed_submissions -= 1
                    if (
                        task.status == STATUS_COMPLETE
                        and task.completed_submissions < task.required_submissions
                    ):
                        task.status = STATUS_OPEN
            else:
                raise ValueError(f"{log_path}:{line_no}: unknown event type {kind!r}")
    return store
