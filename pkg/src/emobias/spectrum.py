"""Extended-emotion analysis over per-caption probability vectors.

Predictions arrive from a file (the classifier producing them lives
outside this package); the taxonomy rides in the file header so matrices
from different corpora can be compared without silent misalignment.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np


@dataclass
class PredictionSet:
    taxonomy: tuple[str, ...]
    keys: tuple[str, ...]
    probs: np.ndarray  # (N, M) float64 in [0, 1]

    def __post_init__(self):
        self.probs = np.asarray(self.probs, dtype=np.float64)
        if self.probs.ndim != 2 or self.probs.shape[1] != len(self.taxonomy):
            raise ValueError(
                f"probability matrix {self.probs.shape} does not match "
                f"taxonomy of {len(self.taxonomy)} labels"
            )
        if len(self.keys) != self.probs.shape[0]:
            raise ValueError("one key per prediction row required")
        if self.probs.size and (self.probs.min() < 0.0 or self.probs.max() > 1.0):
            raise ValueError("probabilities must lie in [0, 1]")


@dataclass
class PearsonResult:
    taxonomy: tuple[str, ...]
    matrix: np.ndarray  # (M, M); undefined rows/cols are NaN
    undefined_labels: tuple[str, ...]


def load_predictions(path: str | Path) -> PredictionSet:
    """Header line {"taxonomy": [...]}, then JSONL rows {key, probs}."""
    path = Path(path)
    with open(path, encoding="utf-8") as fh:
        header_line = fh.readline().strip()
        if not header_line:
            raise ValueError(f"{path}: missing taxonomy header line")
        header = json.loads(header_line)
        taxonomy = tuple(header["taxonomy"])
        if not taxonomy:
            raise ValueError(f"{path}: empty taxonomy")
        keys = []
        rows = []
        for line_no, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            record = json.loads(line)
            probs = record["probs"]
            if len(probs) != len(taxonomy):
                raise ValueError(
                    f"{path}:{line_no}: row has {len(probs)} probabilities, "
                    f"taxonomy has {len(taxonomy)}"
                )
            keys.append(record["key"])
            rows.append(probs)
    matrix = np.asarray(rows, dtype=np.float64).reshape(len(rows), len(taxonomy))
    return PredictionSet(taxonomy=taxonomy, keys=tuple(keys), probs=matrix)


def write_predictions(predictions: PredictionSet, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps({"taxonomy": list(predictions.taxonomy)}) + "\n")
        for key, row in zip(predictions.keys, predictions.probs):
            fh.write(
                json.dumps({"key": key, "probs": [float(v) for v in row]}) + "\n"
            )


def emotion_histogram(
    predictions: PredictionSet, threshold: float = 0.5
) -> dict[str, int]:
    """Multi-label counts of probabilities strictly above the threshold."""
    hits = (predictions.probs > threshold).sum(axis=0)
    return {label: int(count) for label, count in zip(predictions.taxonomy, hits)}


def pearson_matrix(predictions: PredictionSet) -> PearsonResult:
    """Pearson correlation between all label pairs.

    Zero-variance labels are flagged and their rows/columns carry NaN as
    the undefined marker; every defined entry stays finite. The matrix is
    exactly symmetric with an exact unit diagonal.
    """
    n = predictions.probs.shape[0]
    if n < 2:
        raise ValueError(f"need at least 2 predictions, got {n}")
    centered = predictions.probs - predictions.probs.mean(axis=0)
    scale = np.sqrt((centered**2).sum(axis=0))
    defined = scale > 0.0
    undefined_labels = tuple(
        label for label, ok in zip(predictions.taxonomy, defined) if not ok
    )

    m = len(predictions.taxonomy)
    matrix = np.full((m, m), np.nan)
    if defined.any():
        z = centered[:, defined] / scale[defined]
        corr = z.T @ z
        corr = np.clip((corr + corr.T) / 2.0, -1.0, 1.0)
        np.fill_diagonal(corr, 1.0)
        idx = np.flatnonzero(defined)
        matrix[np.ix_(idx, idx)] = corr
    return PearsonResult(
        taxonomy=predictions.taxonomy,
        matrix=matrix,
        undefined_labels=undefined_labels,
    )


def offdiagonal_comparison(a: PearsonResult, b: PearsonResult) -> dict:
    """Mean absolute off-diagonal correlation per matrix, lower = more
    distinctive emotion usage."""
    if a.taxonomy != b.taxonomy:
        raise ValueError("matrices cover different taxonomies")

    def mean_offdiag(result: PearsonResult) -> float:
        m = result.matrix.shape[0]
        mask = ~np.eye(m, dtype=bool) & ~np.isnan(result.matrix)
        if not mask.any():
            return math.nan
        return float(np.abs(result.matrix[mask]).mean())

    mean_a = mean_offdiag(a)
    mean_b = mean_offdiag(b)
    if math.isnan(mean_a) or math.isnan(mean_b):
        more_distinctive = "undefined"
    elif mean_a < mean_b:
        more_distinctive = "a"
    elif mean_b < mean_a:
        more_distinctive = "b"
    else:
        more_distinctive = "equal"
    return {
        "mean_abs_offdiagonal_a": mean_a,
        "mean_abs_offdiagonal_b": mean_b,
        "difference": mean_a - mean_b,
        "more_distinctive": more_distinctive,
    }


def write_matrix_csv(result: PearsonResult, path: str | Path) -> None:
    """CSV heat-map data; undefined entries are empty cells."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label"] + list(result.taxonomy))
        for label, row in zip(result.taxonomy, result.matrix):
            writer.writerow(
                [label]
                + ["" if math.isnan(v) else f"{v:.9f}" for v in row.tolist()]
            )


def write_histogram_csv(histogram: dict[str, int], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["label", "count"])
        for label, count in histogram.items():
            writer.writerow([label, count])


def make_predictions(
    taxonomy: Sequence[str], keys: Sequence[str], probs
) -> PredictionSet:
    return PredictionSet(
        taxonomy=tuple(taxonomy), keys=tuple(keys), probs=np.asarray(probs)
    )
