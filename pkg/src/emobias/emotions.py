"""Emotion labels and their coarse sentiment polarity."""

from __future__ import annotations

import enum


class EmotionLabel(enum.Enum):
    """The nine emotion categories an annotation can carry."""

    AMUSEMENT = "amusement"
    AWE = "awe"
    CONTENTMENT = "contentment"
    EXCITEMENT = "excitement"
    ANGER = "anger"
    DISGUST = "disgust"
    FEAR = "fear"
    SADNESS = "sadness"
    SOMETHING_ELSE = "something-else"

    @classmethod
    def parse(cls, raw: str) -> "EmotionLabel":
        """Parse a label string case-insensitively.

        Spaces and underscores are treated as hyphens so the
        ``something else`` spelling found in released CSVs is accepted.
        Raises ValueError for anything that is not one of the nine labels.
        """
        normalized = raw.strip().lower().replace(" ", "-").replace("_", "-")
        for label in cls:
            if label.value == normalized:
                return label
        raise ValueError(f"unknown emotion label: {raw!r}")

    @property
    def sentiment(self) -> "Sentiment":
        return _SENTIMENT_OF[self]


class Sentiment(enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL = "neutral"

    @property
    def opposite(self) -> "Sentiment":
        """Polarity flip; neutral has no opposite."""
        if self is Sentiment.POSITIVE:
            return Sentiment.NEGATIVE
        if self is Sentiment.NEGATIVE:
            return Sentiment.POSITIVE
        raise ValueError("neutral sentiment has no opposite")


POSITIVE_EMOTIONS = frozenset(
    {
        EmotionLabel.AMUSEMENT,
        EmotionLabel.AWE,
        EmotionLabel.CONTENTMENT,
        EmotionLabel.EXCITEMENT,
    }
)
NEGATIVE_EMOTIONS = frozenset(
    {
        EmotionLabel.ANGER,
        EmotionLabel.DISGUST,
        EmotionLabel.FEAR,
        EmotionLabel.SADNESS,
    }
)

_SENTIMENT_OF = {
    **{label: Sentiment.POSITIVE for label in POSITIVE_EMOTIONS},
    **{label: Sentiment.NEGATIVE for label in NEGATIVE_EMOTIONS},
    EmotionLabel.SOMETHING_ELSE: Sentiment.NEUTRAL,
}


def emotions_of_sentiment(sentiment: Sentiment) -> tuple[EmotionLabel, ...]:
    """All labels carrying the given sentiment, in declaration order."""
    return tuple(label for label in EmotionLabel if label.sentiment is sentiment)
