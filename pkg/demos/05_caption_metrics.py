"""Scoring generated captions: BLEU-1..4, ROUGE-L, CIDEr-D, aggregation.

Also shows the nearest-neighbor retrieval speaker and why per-emotion
averaging punishes models that only do well on abundant emotions.
"""

import numpy as np

from emobias import (
    Annotation,
    Corpus,
    EmotionLabel,
    EvalInstance,
    FeatureVector,
    Painting,
    aggregate,
    build_index,
    nn_speaker,
    tokenize,
)
from emobias.metrics import score_instances

instances = [
    EvalInstance.from_text(
        "p1",
        "a quiet lake under a pale morning sky",
        ["a quiet lake under the morning sky", "calm water at dawn"],
        grounding_emotion=EmotionLabel.CONTENTMENT,
    ),
    EvalInstance.from_text(
        "p2",
        "dark twisted trees reach over the path",
        ["dark trees twist above a narrow path", "the forest feels menacing"],
        grounding_emotion=EmotionLabel.FEAR,
    ),
    EvalInstance.from_text(
        "p3",
        "a bright market full of color",
        ["stalls of fruit line a bright market square"],
        grounding_emotion=EmotionLabel.EXCITEMENT,
    ),
]

rows = score_instances(instances)
print("per-caption scores:")
for inst, row in zip(instances, rows):
    pretty = ", ".join(f"{k}={v:.3f}" for k, v in row.items())
    print(f"  {inst.painting_id}: {pretty}")

report = aggregate(instances, rows)
print("\noverall means:", {k: round(v, 3) for k, v in report.overall.items()})
print("per-emotion headline (unweighted over emotion groups):",
      {k: round(v, 3) for k, v in report.per_emotion_headline.items()})

# Why the headline matters: a speaker strong only on the majority emotion
majority = [
    EvalInstance(f"m{i}", ("x",), (("x",),), EmotionLabel.CONTENTMENT)
    for i in range(90)
]
minority = [
    EvalInstance(f"n{i}", ("x",), (("x",),), EmotionLabel.FEAR) for i in range(10)
]
lopsided = [{"bleu1": 0.9}] * 90 + [{"bleu1": 0.1}] * 10
balanced = [{"bleu1": 0.6}] * 100
lop = aggregate(majority + minority, lopsided)
bal = aggregate(majority + minority, balanced)
print("\nlopsided speaker: overall "
      f"{lop.overall['bleu1']:.2f}, per-emotion {lop.per_emotion_headline['bleu1']:.2f}")
print("balanced speaker: overall "
      f"{bal.overall['bleu1']:.2f}, per-emotion {bal.per_emotion_headline['bleu1']:.2f}")
print("the per-emotion view flips the ranking.")

# The NN speaker copies a caption from the 3 visually nearest training works
rng = np.random.default_rng(4)
paintings, features = {}, {}
captions = {
    "t1": "waves crash against the rocks",
    "t2": "waves roll onto the rocky shore",
    "t3": "the sea breaks on dark stones",
    "far": "a portrait of a stern man",
}
base = np.array([3.0, 0, 0, 0])
for i, (pid, caption) in enumerate(captions.items()):
    offset = rng.normal(0, 0.1, 4) if pid != "far" else np.array([0, 5.0, 0, 0])
    features[pid] = FeatureVector(pid, base + offset)
    paintings[pid] = Painting(
        id=pid,
        annotations=[Annotation(pid, EmotionLabel.AWE, caption)],
    )
features["test"] = FeatureVector("test", base + rng.normal(0, 0.1, 4))
train = Corpus(paintings=paintings, name="train")
index = build_index(features)

generated = nn_speaker("test", train, index, seed=9)
print(f"\nNN speaker output for the held-out painting: {generated!r}")
print("tokenized:", tokenize(generated))
