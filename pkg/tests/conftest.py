import numpy as np
import pytest

from emobias.corpus import Annotation, Corpus, FeatureVector, Painting
from emobias.emotions import EmotionLabel

POSITIVE = [
    EmotionLabel.AMUSEMENT,
    EmotionLabel.AWE,
    EmotionLabel.CONTENTMENT,
    EmotionLabel.EXCITEMENT,
]
NEGATIVE = [
    EmotionLabel.ANGER,
    EmotionLabel.DISGUST,
    EmotionLabel.FEAR,
    EmotionLabel.SADNESS,
]


def ann(pid, emotion, utterance="a calm scene of note", **kwargs):
    if isinstance(emotion, str):
        emotion = EmotionLabel.parse(emotion)
    return Annotation(painting_id=pid, emotion=emotion, utterance=utterance, **kwargs)


def corpus_of(spec: dict[str, list], name="test", features=None) -> Corpus:
    """spec maps painting id -> list of emotions (str or EmotionLabel)."""
    paintings = {}
    for pid, emotions in spec.items():
        paintings[pid] = Painting(
            id=pid,
            art_style="test-style",
            annotations=[ann(pid, e) for e in emotions],
        )
    return Corpus(paintings=paintings, features=features, name=name)


def feature_map(vectors: dict[str, list[float]]) -> dict[str, FeatureVector]:
    return {
        pid: FeatureVector(painting_id=pid, values=np.asarray(v, dtype=np.float32))
        for pid, v in vectors.items()
    }


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Echo one line per acceptance criterion after the test run."""
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
