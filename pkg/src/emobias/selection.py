"""Contrastive candidate assembly and annotation-task generation.

For every emotionally biased painting we build a 24-slot candidate set:
the 12 visually nearest neighbors plus, from the remainder of the 100
retrieved, the 12 paintings with the largest-magnitude emotional score
whose score sign matches the query's. Annotators are then asked to pick
the candidate that evokes the *opposite* emotion, so the pool sharing
the query's sentiment is what creates the contrast.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .bias import EmotionalScore, corpus_scores, dominant_emotion
from .corpus import Corpus
from .emotions import EmotionLabel, Sentiment
from .knn import SimilarityIndex, query

PROVENANCE_NEAREST = "nearest"
PROVENANCE_HIGH_SCORE = "high-score"

STATUS_OPEN = "open"
STATUS_COMPLETE = "complete"
STATUS_RETIRED = "retired"


@dataclass(frozen=True)
class SelectorConfig:
    neighbors: int = 100
    near: int = 12
    high_score: int = 12
    threshold: float = 0.3
    required_submissions: int = 5

    def __post_init__(self):
        for name in ("neighbors", "near", "high_score", "required_submissions"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.near + self.high_score > self.neighbors:
            raise ValueError("candidate slots cannot exceed retrieved neighbors")

    @property
    def slot_count(self) -> int:
        return self.near + self.high_score


@dataclass(frozen=True)
class CandidateSlot:
    painting_id: str
    provenance: str  # nearest | high-score


@dataclass(frozen=True)
class CandidateSet:
    query_id: str
    query_sentiment: Sentiment
    slots: tuple[CandidateSlot, ...]
    includes_no_image: bool = True


@dataclass
class AnnotationTask:
    task_id: str
    candidate_set: CandidateSet
    required_submissions: int = 5
    completed_submissions: int = 0
    status: str = STATUS_OPEN
    query_dominant_emotion: EmotionLabel | None = None


def assemble_candidates(
    query_id: str,
    corpus: Corpus,
    index: SimilarityIndex,
    config: SelectorConfig = SelectorConfig(),
    scores: Mapping[str, EmotionalScore] | None = None,
) -> CandidateSet:
    """Build the candidate set for one biased query painting.

    Slot ordering is fully deterministic: the first ``near`` slots follow
    neighbor order; the high-score slots are ranked by |score| descending
    with ties broken by distance rank, then painting id. When fewer than
    ``high_score`` same-sign candidates exist among the remaining
    neighbors, the open slots fall back to the next-nearest unused
    neighbors and keep the ``nearest`` provenance.
    """
    if len(corpus.paintings) < config.slot_count + 1:
        raise ValueError(
            f"corpus holds {len(corpus.paintings)} paintings; "
            f"need at least {config.slot_count + 1}"
        )
    if query_id not in index:
        raise KeyError(f"query painting {query_id!r} missing from the index")
    if scores is None:
        scores = corpus_scores(corpus)
    query_score = scores.get(query_id)
    if query_score is None or abs(query_score.score) <= config.threshold:
        raise ValueError(
            f"query painting {query_id!r} is not emotionally biased "
            f"(threshold {config.threshold})"
        )
    query_sign = 1 if query_score.score > 0 else -1
    query_sentiment = Sentiment.POSITIVE if query_sign > 0 else Sentiment.NEGATIVE

    k = min(config.neighbors, len(index) - 1)
    neighbor_list = query(index, query_id, k)
    neighbors = neighbor_list.ids()

    near_ids = neighbors[: config.near]
    remaining = neighbors[config.near :]

    def sign_of(pid: str) -> int:
        s = scores.get(pid)
        if s is None or s.score == 0.0:
            return 0
        return 1 if s.score > 0 else -1

    same_sign = [
        (rank, pid) for rank, pid in enumerate(remaining) if sign_of(pid) == query_sign
    ]
    # |score| descending; ties by distance rank, then id
    same_sign.sort(key=lambda rp: (-abs(scores[rp[1]].score), rp[0], rp[1]))
    high_ids = [pid for _, pid in same_sign[: config.high_score]]

    slots = [CandidateSlot(pid, PROVENANCE_NEAREST) for pid in near_ids]
    slots += [CandidateSlot(pid, PROVENANCE_HIGH_SCORE) for pid in high_ids]

    shortfall = config.slot_count - len(slots)
    if shortfall > 0:
        used = {slot.painting_id for slot in slots}
        fill = [pid for pid in remaining if pid not in used][:shortfall]
        slots += [CandidateSlot(pid, PROVENANCE_NEAREST) for pid in fill]
    if len(slots) < config.slot_count:
        raise ValueError(
            f"only {len(slots)} candidates available for {query_id!r}; "
            f"need {config.slot_count}"
        )
    return CandidateSet(
        query_id=query_id,
        query_sentiment=query_sentiment,
        slots=tuple(slots),
    )


def generate_tasks(
    corpus: Corpus,
    index: SimilarityIndex,
    required_submissions: int = 5,
    seed: int = 0,
    config: SelectorConfig | None = None,
) -> list[AnnotationTask]:
    """One task per biased painting, shuffled deterministically by seed."""
    if config is None:
        config = SelectorConfig(required_submissions=required_submissions)
    scores = corpus_scores(corpus)
    biased = sorted(
        pid for pid, s in scores.items() if abs(s.score) > config.threshold
    )
    missing = [pid for pid in biased if pid not in index]
    if missing:
        raise ValueError(
            f"{len(missing)} biased paintings lack feature vectors "
            f"(e.g. {missing[:3]})"
        )
    tasks = [
        AnnotationTask(
            task_id=f"task-{pid}",
            candidate_set=assemble_candidates(pid, corpus, index, config, scores),
            required_submissions=required_submissions,
            query_dominant_emotion=dominant_emotion(
                corpus.paintings[pid].annotations
            ),
        )
        for pid in biased
    ]
    random.Random(seed).shuffle(tasks)
    return tasks


def write_task_manifest(tasks: list[AnnotationTask], path: str | Path) -> None:
    """One task per JSONL line with the full slot list and provenance tags."""
    with open(path, "w", encoding="utf-8") as fh:
        for task in tasks:
            cs = task.candidate_set
            fh.write(
                json.dumps(
                    {
                        "task_id": task.task_id,
                        "query_painting_id": cs.query_id,
                        "query_sentiment": cs.query_sentiment.value,
                        "query_dominant_emotion": task.query_dominant_emotion.value
                        if task.query_dominant_emotion
                        else None,
                        "required_submissions": task.required_submissions,
                        "includes_no_image": cs.includes_no_image,
                        "slots": [
                            {"painting_id": s.painting_id, "provenance": s.provenance}
                            for s in cs.slots
                        ],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def load_task_manifest(path: str | Path) -> list[AnnotationTask]:
    tasks = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            dominant = record.get("query_dominant_emotion")
            tasks.append(
                AnnotationTask(
                    task_id=record["task_id"],
                    candidate_set=CandidateSet(
                        query_id=record["query_painting_id"],
                        query_sentiment=Sentiment(record["query_sentiment"]),
                        slots=tuple(
                            CandidateSlot(s["painting_id"], s["provenance"])
                            for s in record["slots"]
                        ),
                        includes_no_image=record.get("includes_no_image", True),
                    ),
                    required_submissions=record.get("required_submissions", 5),
                    query_dominant_emotion=EmotionLabel.parse(dominant)
                    if dominant
                    else None,
                )
            )
    return tasks
