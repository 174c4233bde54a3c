"""Tagged-token ingestion and a crude fallback tagger.

Serious POS tagging happens outside this package; analysis consumes a
JSONL file of pre-tagged tokens. The naive tagger below exists for test
fixtures only and should not be pointed at real data.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

TaggedCaption = list[tuple[str, str]]


def load_tagged_captions(path: str | Path) -> list[tuple[str, TaggedCaption]]:
    """Read {painting_id, tokens:[{text, tag}]} JSONL lines."""
    path = Path(path)
    captions: list[tuple[str, TaggedCaption]] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
                tokens = [(t["text"], t["tag"]) for t in record["tokens"]]
                captions.append((record.get("painting_id", ""), tokens))
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{line_no}: malformed record: {exc}") from exc
    return captions


def write_tagged_captions(
    captions: Sequence[tuple[str, TaggedCaption]], path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for painting_id, tokens in captions:
            fh.write(
                json.dumps(
                    {
                        "painting_id": painting_id,
                        "tokens": [{"text": t, "tag": g} for t, g in tokens],
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


_DETERMINERS = {"a", "an", "the", "this", "that", "these", "those", "some", "any"}
_PRONOUNS = {
    "i", "me", "my", "you", "your", "he", "him", "his", "she", "her", "it",
    "its", "we", "us", "our", "they", "them", "their", "myself", "itself",
}
_ADPOSITIONS = {
    "in", "on", "at", "of", "to", "with", "by", "from", "over", "under",
    "about", "into", "through", "near", "between", "behind", "across",
}
_CONJUNCTIONS = {"and", "or", "but", "nor", "so", "yet", "because", "while"}
_COMMON_VERBS = {
    "is", "are", "was", "were", "be", "been", "am", "has", "have", "had",
    "do", "does", "did", "can", "could", "will", "would", "makes", "make",
    "looks", "look", "feels", "feel", "seems", "seem", "evokes", "reminds",
}


def naive_tag(tokens: Sequence[str]) -> TaggedCaption:
    """Lexicon-plus-suffix heuristic tagger. Fixture use only."""
    tagged: TaggedCaption = []
    for token in tokens:
        low = token.lower()
        if low in _DETERMINERS:
            tag = "DET"
        elif low in _PRONOUNS:
            tag = "PRON"
        elif low in _ADPOSITIONS:
            tag = "ADP"
        elif low in _CONJUNCTIONS:
            tag = "CONJ"
        elif low in _COMMON_VERBS or low.endswith(("ing", "ed")):
            tag = "VERB"
        elif low.endswith("ly"):
            tag = "ADV"
        elif low.endswith(("ous", "ful", "ive", "able", "al", "ish")):
            tag = "ADJ"
        elif low.isdigit():
            tag = "NUM"
        else:
            tag = "NOUN"
        tagged.append((token, tag))
    return tagged
