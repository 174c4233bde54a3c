"""Core corpus model: annotations, paintings, features, ingestion and export.

A Corpus is treated as immutable after construction; operations that
"modify" one (subsample, merge) return a new Corpus.
"""

from __future__ import annotations

import csv
import json
import logging
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .emotions import EmotionLabel

logger = logging.getLogger(__name__)

#: Default column names of the published annotation CSV release.
DEFAULT_COLUMNS = {
    "painting_id": "painting",
    "art_style": "art_style",
    "emotion": "emotion",
    "utterance": "utterance",
    "worker_id": "worker_id",
    "query_painting_id": "query_painting_id",
}

SOURCE_ORIGINAL = "original"
SOURCE_CONTRASTIVE = "contrastive"


@dataclass(frozen=True)
class Annotation:
    painting_id: str
    emotion: EmotionLabel
    utterance: str
    source: str = SOURCE_ORIGINAL
    worker_id: str | None = None
    query_painting_id: str | None = None

    def __post_init__(self):
        if not self.utterance.strip():
            raise ValueError("utterance must be non-empty after trimming")
        if self.source not in (SOURCE_ORIGINAL, SOURCE_CONTRASTIVE):
            raise ValueError(f"unknown source tag: {self.source!r}")
        if self.source == SOURCE_CONTRASTIVE and self.query_painting_id is None:
            raise ValueError("contrastive annotations require query_painting_id")


@dataclass
class Painting:
    id: str
    art_style: str = ""
    image_ref: str = ""
    annotations: list[Annotation] = field(default_factory=list)


@dataclass(frozen=True)
class FeatureVector:
    painting_id: str
    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        object.__setattr__(
            self, "values", np.asarray(self.values, dtype=np.float32).reshape(-1)
        )
        if self.normalized:
            norm = float(np.linalg.norm(self.values))
            if abs(norm - 1.0) > 1e-6:
                raise ValueError(
                    f"vector for {self.painting_id!r} marked normalized but |v|={norm}"
                )

    @property
    def dim(self) -> int:
        return int(self.values.shape[0])


@dataclass
class Corpus:
    paintings: dict[str, Painting] = field(default_factory=dict)
    features: dict[str, FeatureVector] | None = None
    name: str = ""

    def __post_init__(self):
        if self.features:
            missing = [pid for pid in self.features if pid not in self.paintings]
            if missing:
                raise ValueError(
                    f"feature vectors reference unknown paintings: {missing[:5]}"
                )

    def annotations(self) -> Iterable[Annotation]:
        for painting in self.paintings.values():
            yield from painting.annotations

    @property
    def annotation_count(self) -> int:
        return sum(len(p.annotations) for p in self.paintings.values())

    def annotations_of(self, painting_id: str) -> list[Annotation]:
        return self.paintings[painting_id].annotations


@dataclass(frozen=True)
class SkippedRow:
    line_number: int
    reason: str


def ingest_annotations(
    path: str | Path,
    source_tag: str = SOURCE_ORIGINAL,
    columns: Mapping[str, str] | None = None,
    name: str | None = None,
) -> tuple[Corpus, list[SkippedRow]]:
    """Load an annotation CSV into a Corpus.

    Malformed rows (unknown emotion, blank utterance, short rows) are
    skipped and reported with their line numbers; a missing required
    column in the header is fatal.
    """
    path = Path(path)
    cols = dict(DEFAULT_COLUMNS)
    if columns:
        cols.update(columns)

    paintings: dict[str, Painting] = {}
    skipped: list[SkippedRow] = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            raise ValueError(f"{path}: empty file, no header row")
        for required in ("painting_id", "emotion", "utterance"):
            if cols[required] not in reader.fieldnames:
                raise ValueError(
                    f"{path}: missing required column {cols[required]!r}"
                )
        has_style = cols["art_style"] in reader.fieldnames
        has_worker = cols["worker_id"] in reader.fieldnames
        has_query = cols["query_painting_id"] in reader.fieldnames

        for row in reader:
            line_no = reader.line_num
            pid = (row.get(cols["painting_id"]) or "").strip()
            raw_emotion = (row.get(cols["emotion"]) or "").strip()
            utterance = (row.get(cols["utterance"]) or "").strip()
            if not pid:
                skipped.append(SkippedRow(line_no, "missing painting id"))
                continue
            try:
                emotion = EmotionLabel.parse(raw_emotion)
            except ValueError:
                skipped.append(
                    SkippedRow(line_no, f"unknown emotion label {raw_emotion!r}")
                )
                continue
            if not utterance:
                skipped.append(SkippedRow(line_no, "empty utterance"))
                continue
            query_id = (row.get(cols["query_painting_id"]) or "").strip() or None
            if source_tag == SOURCE_CONTRASTIVE and query_id is None:
                skipped.append(
                    SkippedRow(line_no, "contrastive row lacks query painting id")
                )
                continue
            annotation = Annotation(
                painting_id=pid,
                emotion=emotion,
                utterance=utterance,
                source=source_tag,
                worker_id=(row.get(cols["worker_id"]) or "").strip() or None
                if has_worker
                else None,
                query_painting_id=query_id if has_query else None,
            )
            painting = paintings.get(pid)
            if painting is None:
                painting = Painting(
                    id=pid,
                    art_style=(row.get(cols["art_style"]) or "").strip()
                    if has_style
                    else "",
                )
                paintings[pid] = painting
            painting.annotations.append(annotation)

    if skipped:
        logger.warning("%s: skipped %d malformed rows", path, len(skipped))
    corpus_name = name if name is not None else path.stem
    return Corpus(paintings=paintings, name=corpus_name), skipped


def export_jsonl(corpus: Corpus, path: str | Path) -> None:
    """Write one annotation object per line, painting metadata inlined.

    Paintings without annotations do not appear in the export.
    """
    path = Path(path)
    with open(path, "w", encoding="utf-8") as fh:
        for painting in corpus.paintings.values():
            for ann in painting.annotations:
                record = {
                    "painting_id": painting.id,
                    "art_style": painting.art_style,
                    "image_ref": painting.image_ref,
                    "emotion": ann.emotion.value,
                    "utterance": ann.utterance,
                    "source": ann.source,
                }
                if ann.worker_id is not None:
                    record["worker_id"] = ann.worker_id
                if ann.query_painting_id is not None:
                    record["query_painting_id"] = ann.query_painting_id
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_jsonl(path: str | Path, name: str | None = None) -> Corpus:
    """Inverse of export_jsonl (features travel separately)."""
    path = Path(path)
    paintings: dict[str, Painting] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            pid = record["painting_id"]
            painting = paintings.get(pid)
            if painting is None:
                painting = Painting(
                    id=pid,
                    art_style=record.get("art_style", ""),
                    image_ref=record.get("image_ref", ""),
                )
                paintings[pid] = painting
            painting.annotations.append(
                Annotation(
                    painting_id=pid,
                    emotion=EmotionLabel.parse(record["emotion"]),
                    utterance=record["utterance"],
                    source=record.get("source", SOURCE_ORIGINAL),
                    worker_id=record.get("worker_id"),
                    query_painting_id=record.get("query_painting_id"),
                )
            )
    corpus_name = name if name is not None else path.stem
    return Corpus(paintings=paintings, name=corpus_name)


def subsample(corpus: Corpus, target_annotation_count: int, seed: int) -> Corpus:
    """Uniformly random annotation subset of exactly the target size.

    Deterministic for a fixed seed; paintings left with zero annotations
    are dropped. Features of surviving paintings are kept.
    """
    total = corpus.annotation_count
    if target_annotation_count > total:
        raise ValueError(
            f"target {target_annotation_count} exceeds annotation count {total}"
        )
    flat = [
        (painting.id, idx)
        for painting in corpus.paintings.values()
        for idx in range(len(painting.annotations))
    ]
    rng = random.Random(seed)
    keep = set(rng.sample(range(len(flat)), target_annotation_count))

    paintings: dict[str, Painting] = {}
    for pos, (pid, idx) in enumerate(flat):
        if pos not in keep:
            continue
        source = corpus.paintings[pid]
        painting = paintings.get(pid)
        if painting is None:
            painting = replace(source, annotations=[])
            paintings[pid] = painting
        painting.annotations.append(source.annotations[idx])

    features = None
    if corpus.features is not None:
        features = {pid: fv for pid, fv in corpus.features.items() if pid in paintings}
    return Corpus(paintings=paintings, features=features, name=corpus.name)


def merge(base: Corpus, additions: Corpus) -> Corpus:
    """Union of two corpora: annotations concatenate, paintings dedupe by id.

    On conflicting art_style for the same id the base wins with a warning;
    feature dimensions must agree when both corpora carry features.
    """
    if base.features and additions.features:
        base_dim = next(iter(base.features.values())).dim
        add_dim = next(iter(additions.features.values())).dim
        if base_dim != add_dim:
            raise ValueError(
                f"feature dimension mismatch: base {base_dim} vs additions {add_dim}"
            )

    paintings: dict[str, Painting] = {}
    for painting in base.paintings.values():
        paintings[painting.id] = replace(
            painting, annotations=list(painting.annotations)
        )
    for painting in additions.paintings.values():
        existing = paintings.get(painting.id)
        if existing is None:
            paintings[painting.id] = replace(
                painting, annotations=list(painting.annotations)
            )
            continue
        if (
            painting.art_style
            and existing.art_style
            and painting.art_style != existing.art_style
        ):
            logger.warning(
                "conflicting art_style for %s: keeping %r, ignoring %r",
                painting.id,
                existing.art_style,
                painting.art_style,
            )
        elif painting.art_style and not existing.art_style:
            existing.art_style = painting.art_style
        existing.annotations.extend(painting.annotations)

    features: dict[str, FeatureVector] | None = None
    if base.features is not None or additions.features is not None:
        features = {}
        for src in (additions.features or {}, base.features or {}):
            features.update(src)  # base applied last: base wins on conflict
    name = base.name if base.name else additions.name
    return Corpus(paintings=paintings, features=features, name=name)


def attach_features(
    corpus: Corpus, features: Mapping[str, FeatureVector]
) -> tuple[Corpus, list[str]]:
    """Attach a feature collection, returning ids that match no painting.

    Unmatched vectors are dropped from the corpus (the Corpus invariant
    requires every vector to reference a painting) but reported so callers
    can flag them.
    """
    unmatched = sorted(pid for pid in features if pid not in corpus.paintings)
    kept = {pid: fv for pid, fv in features.items() if pid in corpus.paintings}
    if unmatched:
        logger.warning(
            "%d feature vectors reference unknown paintings (e.g. %s)",
            len(unmatched),
            unmatched[:3],
        )
    return (
        Corpus(paintings=corpus.paintings, features=kept, name=corpus.name),
        unmatched,
    )


def corpus_from_annotations(
    annotations: Sequence[Annotation], name: str = ""
) -> Corpus:
    """Group a flat annotation list into a Corpus."""
    paintings: dict[str, Painting] = {}
    for ann in annotations:
        painting = paintings.get(ann.painting_id)
        if painting is None:
            painting = Painting(id=ann.painting_id)
            paintings[ann.painting_id] = painting
        painting.annotations.append(ann)
    return Corpus(paintings=paintings, name=name)
