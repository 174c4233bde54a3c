"""The collection protocol end to end, in process.

Generates tasks for a biased corpus, plays the annotator role against
the store (the same object the HTTP service wraps; `emobias serve`
exposes it as a JSON API), reviews the submissions, exports the
contrastive corpus and merges it back in. The sentiment split and the
neighborhood emotion entropy both move the right way.
"""

import random
import tempfile
from pathlib import Path

import numpy as np

from emobias import (
    Annotation,
    Corpus,
    EmotionLabel,
    FeatureVector,
    Painting,
    SelectorConfig,
    build_index,
    generate_tasks,
    merge,
    neighborhood_emotion_entropy,
    sentiment_distribution,
)
from emobias.emotions import emotions_of_sentiment
from emobias.store import NO_IMAGE, AnnotationStore, replay_log

rng = np.random.default_rng(3)

# a skewed world: 70% cheerful paintings, 30% grim ones, in tight clusters
paintings, features = {}, {}
for i in range(60):
    pid = f"p{i:02d}"
    cluster = i // 10
    positive = cluster < 4
    emotion = ["contentment", "awe", "excitement", "amusement"][cluster % 4] \
        if positive else ["fear", "sadness"][cluster % 2]
    center = np.zeros(8)
    center[cluster] = 6.0
    paintings[pid] = Painting(
        id=pid,
        annotations=[
            Annotation(pid, EmotionLabel.parse(emotion), f"the {emotion} mood here")
            for _ in range(4)
        ],
    )
    features[pid] = FeatureVector(pid, center + rng.normal(0, 0.1, 8))

corpus = Corpus(paintings=paintings, name="demo")
index = build_index(features)

counts, pct = sentiment_distribution(corpus)
print("before:", {k: f"{v:.0f}%" for k, v in pct.items()})
entropy_before = neighborhood_emotion_entropy(corpus, index, 10)
print(f"neighborhood emotion entropy (K=10): {entropy_before:.3f}")

config = SelectorConfig(neighbors=30, near=6, high_score=6)
tasks = generate_tasks(corpus, index, required_submissions=3, seed=1, config=config)
print(f"\n{len(tasks)} contrastive tasks to fill, 3 submissions each")

with tempfile.TemporaryDirectory() as tmp:
    log_path = Path(tmp) / "events.jsonl"
    store = AnnotationStore(tasks, log_path=log_path)

    # three scripted annotators with opposite-sentiment reactions
    script = random.Random(7)
    for worker in ("ann", "ben", "cleo"):
        store.register_worker(worker)
        while True:
            leased = store.next_task(worker)
            if leased is None:
                break
            task, _lease = leased
            choice = script.choice(task.candidate_set.slots)
            allowed = emotions_of_sentiment(
                task.candidate_set.query_sentiment.opposite
            )
            if script.random() < 0.05:
                store.submit(task.task_id, worker, NO_IMAGE)
                continue
            store.submit(
                task.task_id,
                worker,
                choice.painting_id,
                emotion=script.choice(allowed),
                utterance=f"{worker} sees surprising contrary detail in "
                          f"{choice.painting_id} here",
            )

    for sid in list(store.submissions):
        store.review(sid, "approved", "demo review")

    contrastive, no_image = store.export_contrastive(corpus)
    print(f"collected {contrastive.annotation_count} contrastive annotations "
          f"(+{no_image} no-image outcomes)")

    replayed = replay_log(log_path, tasks)
    assert replayed.state_dict() == store.state_dict()
    print("event-log replay reconstructs the exact store state")
    store.close()

combined = merge(corpus, contrastive)
_counts, pct_after = sentiment_distribution(combined)
print("\nafter merge:", {k: f"{v:.0f}%" for k, v in pct_after.items()})
entropy_after = neighborhood_emotion_entropy(combined, index, 10)
print(f"neighborhood emotion entropy (K=10): {entropy_before:.3f} -> "
      f"{entropy_after:.3f}")
