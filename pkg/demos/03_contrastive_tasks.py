"""Assembling 24-candidate contrastive sets for biased paintings.

For an emotionally biased query painting, the candidate grid holds its
12 visually nearest neighbors plus the 12 highest-|score| paintings of
the same sentiment sign among the remaining retrieved neighbors. The
annotator is then asked for the candidate evoking the *opposite*
emotion, which is what creates the contrast.
"""

import numpy as np

from emobias import (
    Annotation,
    Corpus,
    EmotionLabel,
    FeatureVector,
    Painting,
    SelectorConfig,
    assemble_candidates,
    generate_tasks,
    build_index,
)

rng = np.random.default_rng(2)

paintings = {}
features = {}
emotions_by_strength = [
    ["contentment"] * 5,                      # score +1.0
    ["awe"] * 4 + ["something-else"],         # score +0.8
    ["awe"] * 3 + ["fear"] * 2,               # score +0.2
    ["contentment", "fear"],                  # score  0.0
    ["fear"] * 4 + ["awe"],                   # score -0.6
]
for i in range(40):
    pid = f"p{i:02d}"
    emotions = emotions_by_strength[i % len(emotions_by_strength)]
    paintings[pid] = Painting(
        id=pid,
        annotations=[
            Annotation(pid, EmotionLabel.parse(e), "a short reaction text")
            for e in emotions
        ],
    )
    # one loose visual cluster so neighbor order is interesting
    features[pid] = FeatureVector(pid, rng.normal(0, 1, 12) + (i % 4))

corpus = Corpus(paintings=paintings, name="demo")
index = build_index(features)

config = SelectorConfig(neighbors=30, near=6, high_score=6)
candidate_set = assemble_candidates("p00", corpus, index, config)

print(f"query p00 sentiment: {candidate_set.query_sentiment.value}")
print("slot  painting  provenance")
for i, slot in enumerate(candidate_set.slots, start=1):
    print(f"  {i:2d}  {slot.painting_id:8s} {slot.provenance}")
print("(high-score slots all share the query's sentiment sign; the human")
print(" supplies the opposite emotion, the pool does not)")

tasks = generate_tasks(corpus, index, required_submissions=5, seed=42, config=config)
print(f"\n{len(tasks)} tasks generated, one per biased painting")
print(f"expected submissions at 5 each: {5 * len(tasks)}")
first = tasks[0]
print(f"first task by shuffled order: {first.task_id} "
      f"(query dominant emotion: {first.query_dominant_emotion.value})")
