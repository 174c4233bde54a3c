"""Caption evaluation: BLEU-1..4, ROUGE-L, CIDEr-D, aggregation, NN speaker.

All metrics are sentence-level except CIDEr-D's IDF table, which is
computed once over the reference corpus of the evaluation set. Scores
for a whole evaluation run are grouped per caption and per grounding
emotion.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import random
import re
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .corpus import Corpus
from .emotions import EmotionLabel
from .knn import SimilarityIndex, query

logger = logging.getLogger(__name__)

METRIC_NAMES = ("bleu1", "bleu2", "bleu3", "bleu4", "rougeL", "ciderD")

CIDER_SIGMA = 6.0
ROUGE_BETA = 1.2

# letters/digits, apostrophes kept only between them
_TOKEN_RE = re.compile(r"[^\W_]+(?:'[^\W_]+)*")


def tokenize(text: str) -> list[str]:
    """Lowercase, strip punctuation except intra-word apostrophes, split."""
    return _TOKEN_RE.findall(text.lower().replace("’", "'"))


def ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(
        tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)
    )


@dataclass(frozen=True)
class EvalInstance:
    painting_id: str
    generated: tuple[str, ...]
    references: tuple[tuple[str, ...], ...]
    grounding_emotion: EmotionLabel | None = None

    def __post_init__(self):
        if not self.references:
            raise ValueError(f"{self.painting_id}: at least one reference required")

    @classmethod
    def from_text(
        cls,
        painting_id: str,
        generated: str,
        references: Sequence[str],
        grounding_emotion: EmotionLabel | None = None,
    ) -> "EvalInstance":
        return cls(
            painting_id=painting_id,
            generated=tuple(tokenize(generated)),
            references=tuple(tuple(tokenize(r)) for r in references),
            grounding_emotion=grounding_emotion,
        )


def bleu(
    generated: Sequence[str], references: Sequence[Sequence[str]], n: int
) -> float:
    """Sentence-level BLEU-n.

    Modified n-gram precision with +1 smoothing on orders >= 2, geometric
    mean over orders 1..n, brevity penalty against the closest reference
    length (ties favor the shorter reference).
    """
    if n not in (1, 2, 3, 4):
        raise ValueError(f"n must be 1..4, got {n}")
    c = len(generated)
    if c == 0:
        return 0.0
    log_sum = 0.0
    for k in range(1, n + 1):
        cand = ngram_counts(generated, k)
        guess = max(c - k + 1, 0)
        clipped = 0
        if cand:
            max_ref: Counter = Counter()
            for ref in references:
                for gram, count in ngram_counts(ref, k).items():
                    if count > max_ref[gram]:
                        max_ref[gram] = count
            clipped = sum(min(count, max_ref[gram]) for gram, count in cand.items())
        if k == 1:
            if clipped == 0:
                return 0.0
            precision = clipped / guess
        else:
            precision = (clipped + 1) / (guess + 1)
        log_sum += math.log(precision)
    geo_mean = math.exp(log_sum / n)
    ref_len = min((abs(len(r) - c), len(r)) for r in references)[1]
    brevity = 1.0 if c > ref_len else math.exp(1.0 - ref_len / c)
    return brevity * geo_mean


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    prev = [0] * (len(b) + 1)
    for x in a:
        current = [0]
        for j, y in enumerate(b, start=1):
            if x == y:
                current.append(prev[j - 1] + 1)
            else:
                current.append(max(prev[j], current[-1]))
        prev = current
    return prev[-1]


def rouge_l(
    generated: Sequence[str],
    references: Sequence[Sequence[str]],
    beta: float = ROUGE_BETA,
) -> float:
    """LCS-based F-measure, maximum over references."""
    if not generated:
        return 0.0
    best = 0.0
    for ref in references:
        if not ref:
            continue
        lcs = _lcs_length(generated, ref)
        if lcs == 0:
            continue
        precision = lcs / len(generated)
        recall = lcs / len(ref)
        f = ((1 + beta**2) * precision * recall) / (recall + beta**2 * precision)
        best = max(best, f)
    return best


def cider_d(
    instances: Sequence[EvalInstance],
    n_max: int = 4,
    sigma: float = CIDER_SIGMA,
) -> list[float]:
    """CIDEr-D per instance.

    TF-IDF weighted clipped cosine per n-gram order 1..4, a gaussian
    penalty on the candidate/reference length difference, averaged over
    orders and references, scaled by 10. IDF comes from the reference
    sets of this evaluation corpus.
    """
    if not instances:
        return []
    if len(instances) == 1:
        logger.warning("CIDEr-D over a single instance: IDF is degenerate")

    doc_freq: Counter = Counter()
    for inst in instances:
        grams: set[tuple[str, ...]] = set()
        for ref in inst.references:
            for k in range(1, n_max + 1):
                grams.update(ngram_counts(ref, k))
        doc_freq.update(grams)
    log_corpus = math.log(len(instances))

    def tfidf(tokens: Sequence[str]):
        vectors = []
        norms = []
        for k in range(1, n_max + 1):
            vec = {
                gram: count * (log_corpus - math.log(max(1.0, doc_freq[gram])))
                for gram, count in ngram_counts(tokens, k).items()
            }
            vectors.append(vec)
            norms.append(math.sqrt(sum(w * w for w in vec.values())))
        return vectors, norms

    scores = []
    for inst in instances:
        cand_vec, cand_norm = tfidf(inst.generated)
        total = 0.0
        for ref in inst.references:
            ref_vec, ref_norm = tfidf(ref)
            penalty = math.exp(
                -((len(inst.generated) - len(ref)) ** 2) / (2 * sigma**2)
            )
            for k in range(n_max):
                dot = sum(
                    min(weight, ref_vec[k].get(gram, 0.0)) * ref_vec[k].get(gram, 0.0)
                    for gram, weight in cand_vec[k].items()
                )
                if cand_norm[k] > 0 and ref_norm[k] > 0:
                    dot /= cand_norm[k] * ref_norm[k]
                total += dot * penalty
        scores.append(10.0 * total / (n_max * len(inst.references)))
    return scores


def score_instances(instances: Sequence[EvalInstance]) -> list[dict[str, float]]:
    """All metrics for every instance, CIDEr-D IDF shared across the set."""
    cider_scores = cider_d(instances)
    rows = []
    for inst, cider_score in zip(instances, cider_scores):
        row = {
            f"bleu{n}": bleu(inst.generated, inst.references, n) for n in (1, 2, 3, 4)
        }
        row["rougeL"] = rouge_l(inst.generated, inst.references)
        row["ciderD"] = cider_score
        rows.append(row)
    return rows


@dataclass
class MetricReport:
    per_instance: list[dict[str, float]]
    overall: dict[str, float]
    per_emotion: dict[str, dict[str, float]]
    per_emotion_headline: dict[str, float]
    group_sizes: dict[str, int]
    missing_emotions: list[str] = field(default_factory=list)

    def to_json_dict(self) -> dict:
        return {
            "instances": len(self.per_instance),
            "overall": self.overall,
            "per_emotion": self.per_emotion,
            "per_emotion_headline": self.per_emotion_headline,
            "group_sizes": self.group_sizes,
            "missing_emotions": self.missing_emotions,
            "per_instance": self.per_instance,
        }


def aggregate(
    instances: Sequence[EvalInstance],
    scores: Sequence[dict[str, float]] | None = None,
) -> MetricReport:
    """Overall and per-emotion means.

    The overall mean is unweighted over instances. The per-emotion
    headline averages the group means without size weighting, so scarce
    emotions count as much as abundant ones. Emotions with no instances
    are omitted from the headline and listed as missing.
    """
    if scores is None:
        scores = score_instances(instances)
    if len(scores) != len(instances):
        raise ValueError("scores and instances differ in length")
    if not instances:
        raise ValueError("nothing to aggregate")
    metrics = list(scores[0].keys())

    overall = {
        m: sum(row[m] for row in scores) / len(scores) for m in metrics
    }

    groups: dict[str, list[dict[str, float]]] = defaultdict(list)
    for inst, row in zip(instances, scores):
        if inst.grounding_emotion is not None:
            groups[inst.grounding_emotion.value].append(row)
    per_emotion = {
        emotion: {m: sum(r[m] for r in rows) / len(rows) for m in metrics}
        for emotion, rows in groups.items()
    }
    headline = {}
    if per_emotion:
        for m in metrics:
            headline[m] = sum(g[m] for g in per_emotion.values()) / len(per_emotion)
    missing = [
        label.value for label in EmotionLabel if label.value not in per_emotion
    ]
    return MetricReport(
        per_instance=list(scores),
        overall=overall,
        per_emotion=per_emotion,
        per_emotion_headline=headline,
        group_sizes={e: len(rows) for e, rows in groups.items()},
        missing_emotions=missing,
    )


def nn_speaker(
    test_painting_id: str,
    train_corpus: Corpus,
    index: SimilarityIndex,
    seed: int = 0,
    neighbors: int = 3,
) -> str:
    """Retrieval baseline: pool the 3 nearest training paintings'
    utterances and pick one uniformly at random (seeded).

    With fewer than 3 training paintings available, all of them are used
    with a warning. Should the 3 nearest carry no annotations at all,
    the pool extends to the next-nearest annotated painting.
    """
    if test_painting_id not in index:
        raise KeyError(f"{test_painting_id!r} has no feature vector in the index")
    neighbor_list = query(index, test_painting_id, len(index) - 1)
    train_neighbors = [
        pid
        for pid, _dist in neighbor_list.neighbors
        if pid in train_corpus.paintings
    ]
    if not train_neighbors:
        raise ValueError(
            f"no training paintings reachable from {test_painting_id!r}"
        )
    nearest = train_neighbors[:neighbors]
    if len(nearest) < neighbors:
        logger.warning(
            "only %d of %d training neighbors available for %s",
            len(nearest),
            neighbors,
            test_painting_id,
        )
    pool = [
        ann.utterance
        for pid in nearest
        for ann in train_corpus.paintings[pid].annotations
    ]
    if not pool:
        for pid in train_neighbors[neighbors:]:
            annotations = train_corpus.paintings[pid].annotations
            if annotations:
                logger.warning(
                    "3 nearest training paintings of %s carry no annotations; "
                    "falling back to %s",
                    test_painting_id,
                    pid,
                )
                pool = [ann.utterance for ann in annotations]
                break
    if not pool:
        raise ValueError(
            f"no annotated training paintings reachable from {test_painting_id!r}"
        )
    rng = random.Random(f"{seed}|{test_painting_id}")
    return pool[rng.randrange(len(pool))]


# ---- evaluation-set IO ------------------------------------------------------


def load_eval_instances(path: str | Path) -> list[EvalInstance]:
    """JSONL rows: {painting_id, emotion?, generated, references:[...]}."""
    path = Path(path)
    instances = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                emotion = record.get("emotion")
                instances.append(
                    EvalInstance.from_text(
                        painting_id=record["painting_id"],
                        generated=record["generated"],
                        references=record["references"],
                        grounding_emotion=EmotionLabel.parse(emotion)
                        if emotion
                        else None,
                    )
                )
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{line_no}: malformed record: {exc}") from exc
    return instances


def write_metric_report_json(report: MetricReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_metric_report_csv(report: MetricReport, path: str | Path) -> None:
    """Table of metric rows: overall, per-emotion headline, each emotion."""
    emotions = sorted(report.per_emotion)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "overall", "per_emotion"] + emotions)
        for m in METRIC_NAMES:
            if m not in report.overall:
                continue
            row = [m, f"{report.overall[m]:.6f}"]
            row.append(
                f"{report.per_emotion_headline[m]:.6f}"
                if m in report.per_emotion_headline
                else ""
            )
            row += [f"{report.per_emotion[e][m]:.6f}" for e in emotions]
            writer.writerow(row)
