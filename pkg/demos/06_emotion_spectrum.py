"""Extended-emotion analysis from per-caption probability vectors.

The probability vectors come from an external classifier over a finer
emotion taxonomy; this module only analyzes them: multi-label histogram
plus the Pearson correlation structure between labels. Lower absolute
off-diagonal correlation means the corpus expresses emotions more
distinctively.
"""

import numpy as np

from emobias import emotion_histogram, offdiagonal_comparison, pearson_matrix
from emobias.spectrum import make_predictions

rng = np.random.default_rng(5)
taxonomy = ("admiration", "joy", "grief", "disappointment", "curiosity")
n = 300

# corpus A: grief and disappointment fire together (entangled emotions)
grief = rng.uniform(0, 1, n)
corpus_a = np.column_stack([
    rng.uniform(0, 1, n),
    rng.uniform(0, 1, n),
    grief,
    np.clip(grief + rng.normal(0, 0.08, n), 0, 1),
    rng.uniform(0, 1, n),
])

# corpus B: the same labels vary independently
corpus_b = rng.uniform(0, 1, (n, 5))

keys = tuple(f"caption-{i}" for i in range(n))
preds_a = make_predictions(taxonomy, keys, corpus_a)
preds_b = make_predictions(taxonomy, keys, corpus_b)

print("histogram of labels above 0.5 (corpus A):")
for label, count in emotion_histogram(preds_a).items():
    print(f"  {label:15s} {count}")

pearson_a = pearson_matrix(preds_a)
pearson_b = pearson_matrix(preds_b)
i, j = taxonomy.index("grief"), taxonomy.index("disappointment")
print(f"\ngrief/disappointment correlation: "
      f"A={pearson_a.matrix[i, j]:.3f} B={pearson_b.matrix[i, j]:.3f}")

summary = offdiagonal_comparison(pearson_a, pearson_b)
print("\nmean |off-diagonal| correlation:")
print(f"  corpus A: {summary['mean_abs_offdiagonal_a']:.4f}")
print(f"  corpus B: {summary['mean_abs_offdiagonal_b']:.4f}")
print(f"more distinctive emotion usage: corpus {summary['more_distinctive'].upper()}")
