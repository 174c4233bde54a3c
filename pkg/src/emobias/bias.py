"""Bias diagnostics over an annotated corpus.

Covers per-painting emotional scores, the biased and single-sentiment
sets, neighborhood sentiment ratio and emotion entropy (both need a
similarity index), sentiment distributions and POS statistics.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .corpus import Annotation, Corpus
from .emotions import EmotionLabel, Sentiment
from .knn import SimilarityIndex, batch_query

logger = logging.getLogger(__name__)

BIAS_THRESHOLD = 0.3
N_EMOTIONS = len(EmotionLabel)


@dataclass(frozen=True)
class EmotionalScore:
    painting_id: str
    pos: int
    neg: int
    total: int
    score: float


@dataclass
class PosStats:
    mean_words: float
    mean_nouns: float
    mean_pronouns: float
    mean_adjectives: float
    mean_adpositions: float
    mean_verbs: float
    caption_count: int


@dataclass
class BiasReport:
    corpus_name: str
    scores: dict[str, EmotionalScore]
    biased_ids: set[str]
    single_sentiment_ids: set[str]
    sentiment_histogram: dict[str, int]
    sentiment_percentages: dict[str, float]
    neighborhood_ratio: dict[int, float] = field(default_factory=dict)
    neighborhood_entropy: dict[int, float] = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "corpus": self.corpus_name,
            "painting_count": len(self.scores),
            "biased_count": len(self.biased_ids),
            "single_sentiment_count": len(self.single_sentiment_ids),
            "sentiment_histogram": self.sentiment_histogram,
            "sentiment_percentages": self.sentiment_percentages,
            "neighborhood_ratio": {str(k): v for k, v in self.neighborhood_ratio.items()},
            "neighborhood_entropy": {
                str(k): v for k, v in self.neighborhood_entropy.items()
            },
            "biased_ids": sorted(self.biased_ids),
            "single_sentiment_ids": sorted(self.single_sentiment_ids),
            "metadata": self.metadata,
        }


def emotional_score(annotations: Sequence[Annotation]) -> EmotionalScore:
    """(pos - neg) / total over one painting's annotations.

    Neutral annotations count toward the total only.
    """
    if not annotations:
        raise ValueError("cannot score a painting with no annotations")
    ids = {ann.painting_id for ann in annotations}
    if len(ids) != 1:
        raise ValueError(f"annotations span multiple paintings: {sorted(ids)}")
    pos = sum(1 for a in annotations if a.emotion.sentiment is Sentiment.POSITIVE)
    neg = sum(1 for a in annotations if a.emotion.sentiment is Sentiment.NEGATIVE)
    total = len(annotations)
    return EmotionalScore(
        painting_id=next(iter(ids)),
        pos=pos,
        neg=neg,
        total=total,
        score=(pos - neg) / total,
    )


def corpus_scores(corpus: Corpus) -> dict[str, EmotionalScore]:
    """Emotional score per annotated painting; unannotated ones are skipped."""
    return {
        pid: emotional_score(painting.annotations)
        for pid, painting in corpus.paintings.items()
        if painting.annotations
    }


def identify_biased(corpus: Corpus, threshold: float = BIAS_THRESHOLD) -> set[str]:
    """Painting ids with |score| strictly greater than the threshold."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError(f"threshold must lie in [0, 1], got {threshold}")
    return {
        pid for pid, s in corpus_scores(corpus).items() if abs(s.score) > threshold
    }


def single_sentiment_set(corpus: Corpus) -> set[str]:
    """Paintings whose annotations carry positive xor negative sentiment.

    Neutral-only paintings are excluded; neutral mixed with one side counts.
    """
    result = set()
    for pid, painting in corpus.paintings.items():
        sentiments = {a.emotion.sentiment for a in painting.annotations}
        has_pos = Sentiment.POSITIVE in sentiments
        has_neg = Sentiment.NEGATIVE in sentiments
        if has_pos != has_neg:
            result.add(pid)
    return result


def dominant_sentiment(annotations: Iterable[Annotation]) -> Sentiment | None:
    """Majority polarity of a painting's annotations; None on tie or neutral-only."""
    pos = neg = 0
    for ann in annotations:
        sentiment = ann.emotion.sentiment
        if sentiment is Sentiment.POSITIVE:
            pos += 1
        elif sentiment is Sentiment.NEGATIVE:
            neg += 1
    if pos > neg:
        return Sentiment.POSITIVE
    if neg > pos:
        return Sentiment.NEGATIVE
    return None


def dominant_emotion(annotations: Sequence[Annotation]) -> EmotionLabel | None:
    """Most common emotion label; ties broken by label declaration order."""
    counts = Counter(a.emotion for a in annotations)
    if not counts:
        return None
    best = max(counts.values())
    for label in EmotionLabel:
        if counts.get(label) == best:
            return label
    return None


def neighborhood_sentiment_ratio(
    corpus: Corpus,
    index: SimilarityIndex,
    k_range: Iterable[int],
) -> dict[int, float]:
    """Mean fraction of K nearest neighbors sharing the query's sentiment.

    Computed over single-sentiment paintings only; a neighbor with no
    dominant sentiment counts as dissimilar. Paintings missing from the
    index are reported and excluded.
    """
    ks = sorted(set(k_range))
    if not ks or ks[0] < 1:
        raise ValueError(f"K values must be >= 1, got {ks}")
    singles = sorted(single_sentiment_set(corpus))
    missing = [pid for pid in singles if pid not in index]
    if missing:
        logger.warning(
            "%d single-sentiment paintings missing from the index (e.g. %s)",
            len(missing),
            missing[:3],
        )
        singles = [pid for pid in singles if pid in index]
    if not singles:
        return {k: 0.0 for k in ks}

    max_k = min(ks[-1], len(index) - 1)
    neighbor_lists = batch_query(index, singles, max_k)
    dominant = {
        pid: dominant_sentiment(p.annotations) for pid, p in corpus.paintings.items()
    }
    query_sentiment = {
        pid: dominant_sentiment(corpus.paintings[pid].annotations) for pid in singles
    }

    ratios: dict[int, float] = {}
    for k in ks:
        effective_k = min(k, max_k)
        total = 0.0
        for nl in neighbor_lists:
            want = query_sentiment[nl.query_id]
            similar = sum(
                1
                for pid, _ in nl.neighbors[:effective_k]
                if dominant.get(pid) is want
            )
            total += similar / effective_k
        ratios[k] = total / len(neighbor_lists)
    return ratios


def pooled_sentiment_ratio(ratios: Mapping[int, float]) -> dict[str, float]:
    """Two summary readings of the per-K ratio map.

    "per_k_mean" averages the per-K means; "pooled" weights each K by the
    number of (painting, neighbor) pairs it contributes, i.e. by K.
    """
    if not ratios:
        return {"per_k_mean": 0.0, "pooled": 0.0}
    per_k = sum(ratios.values()) / len(ratios)
    pooled = sum(k * v for k, v in ratios.items()) / sum(ratios)
    return {"per_k_mean": per_k, "pooled": pooled}


def entropy_of_counts(counts: Mapping[EmotionLabel, int]) -> tuple[float, float]:
    """(normalized, raw nats) Shannon entropy of an emotion count pool.

    Normalization divides by log(9) so the value lands in [0, 1].
    """
    total = sum(counts.values())
    if total == 0:
        raise ValueError("empty emotion pool has no entropy")
    raw = 0.0
    for count in counts.values():
        if count > 0:
            p = count / total
            raw -= p * math.log(p)
    return raw / math.log(N_EMOTIONS), raw


def neighborhood_emotion_entropy(
    corpus: Corpus, index: SimilarityIndex, k: int
) -> float:
    """Mean normalized entropy of emotions pooled over K nearest neighbors.

    The pool for a painting holds every annotation emotion of its K
    neighbors (the painting's own annotations are excluded). Paintings
    absent from the index or with an empty pool are skipped.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    targets = [pid for pid in corpus.paintings if pid in index]
    if not targets:
        return 0.0
    effective_k = min(k, len(index) - 1)
    neighbor_lists = batch_query(index, targets, effective_k)

    emotion_counts: dict[str, Counter] = {
        pid: Counter(a.emotion for a in painting.annotations)
        for pid, painting in corpus.paintings.items()
    }
    values = []
    for nl in neighbor_lists:
        pool: Counter = Counter()
        for pid, _ in nl.neighbors:
            pool.update(emotion_counts.get(pid, ()))
        if pool:
            values.append(entropy_of_counts(pool)[0])
    if not values:
        return 0.0
    return sum(values) / len(values)


def sentiment_distribution(corpus: Corpus) -> tuple[dict[str, int], dict[str, float]]:
    """Annotation counts and percentages per sentiment."""
    counts = {s.value: 0 for s in Sentiment}
    for ann in corpus.annotations():
        counts[ann.emotion.sentiment.value] += 1
    total = sum(counts.values())
    if total == 0:
        percentages = {s: 0.0 for s in counts}
    else:
        percentages = {s: 100.0 * c / total for s, c in counts.items()}
    return counts, percentages


#: Tag classes tracked by pos_statistics. UD-style PROPN/AUX fold into
#: the universal NOUN/VERB classes.
_TRACKED_TAGS = {
    "NOUN": "nouns",
    "PROPN": "nouns",
    "PRON": "pronouns",
    "ADJ": "adjectives",
    "ADP": "adpositions",
    "VERB": "verbs",
    "AUX": "verbs",
}
_UNIVERSAL_TAGS = {
    "VERB", "NOUN", "PRON", "ADJ", "ADV", "ADP", "CONJ", "CCONJ", "SCONJ",
    "DET", "NUM", "PRT", "PART", "PROPN", "AUX", "INTJ", "SYM", "X", ".",
    "PUNCT",
}


def pos_statistics(
    captions: Sequence[Sequence[tuple[str, str]]],
) -> PosStats:
    """Per-caption means of words and tracked POS classes.

    Each caption is a sequence of (token, tag) pairs carrying universal
    POS tags. Unknown tag strings count as OTHER (words only).
    """
    if not captions:
        raise ValueError("no captions to analyze")
    totals = {"nouns": 0, "pronouns": 0, "adjectives": 0, "adpositions": 0, "verbs": 0}
    words = 0
    unknown_tags: Counter = Counter()
    for caption in captions:
        for _token, tag in caption:
            words += 1
            tag = tag.upper()
            bucket = _TRACKED_TAGS.get(tag)
            if bucket is not None:
                totals[bucket] += 1
            elif tag not in _UNIVERSAL_TAGS:
                unknown_tags[tag] += 1
    if unknown_tags:
        logger.warning(
            "counted %d tokens with unknown tags as OTHER: %s",
            sum(unknown_tags.values()),
            dict(unknown_tags.most_common(5)),
        )
    n = len(captions)
    return PosStats(
        mean_words=words / n,
        mean_nouns=totals["nouns"] / n,
        mean_pronouns=totals["pronouns"] / n,
        mean_adjectives=totals["adjectives"] / n,
        mean_adpositions=totals["adpositions"] / n,
        mean_verbs=totals["verbs"] / n,
        caption_count=n,
    )


def analyze(
    corpus: Corpus,
    index: SimilarityIndex | None = None,
    threshold: float = BIAS_THRESHOLD,
    ratio_k_range: Iterable[int] = range(2, 11),
    entropy_ks: Iterable[int] = (20,),
) -> BiasReport:
    """Run every diagnostic that the available inputs allow.

    Neighborhood statistics require an index and are empty without one.
    """
    scores = corpus_scores(corpus)
    histogram, percentages = sentiment_distribution(corpus)
    report = BiasReport(
        corpus_name=corpus.name,
        scores=scores,
        biased_ids={p for p, s in scores.items() if abs(s.score) > threshold},
        single_sentiment_ids=single_sentiment_set(corpus),
        sentiment_histogram=histogram,
        sentiment_percentages=percentages,
        metadata={
            "threshold": threshold,
            "threshold_comparison": "strict",
            "neighbor_sentiment": "majority, ties dissimilar",
            "entropy_normalization": f"log({N_EMOTIONS})",
            "entropy_pool": "neighbor annotations only, query excluded",
        },
    )
    if index is not None:
        ks = [k for k in ratio_k_range if k <= len(index) - 1]
        if ks:
            report.neighborhood_ratio = neighborhood_sentiment_ratio(
                corpus, index, ks
            )
            report.metadata["ratio_summaries"] = pooled_sentiment_ratio(
                report.neighborhood_ratio
            )
        raw_by_k = {}
        for k in entropy_ks:
            report.neighborhood_entropy[k] = neighborhood_emotion_entropy(
                corpus, index, k
            )
            raw_by_k[str(k)] = report.neighborhood_entropy[k] * math.log(N_EMOTIONS)
        report.metadata["entropy_raw_nats"] = raw_by_k
    return report


def write_report_json(report: BiasReport, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_json_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_scores_csv(report: BiasReport, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["painting_id", "pos", "neg", "total", "score"])
        for pid in sorted(report.scores):
            s = report.scores[pid]
            writer.writerow([pid, s.pos, s.neg, s.total, f"{s.score:.6f}"])
