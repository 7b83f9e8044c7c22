"""Supervised ensemble training on a small synthetic corpus: balanced
epoch resampling, early stopping, majority voting, checkpointing.

Run:  python demos/04_supervised_ensemble.py
"""

import tempfile
from pathlib import Path

import numpy as np

from hatenet import (
    LabeledCorpus,
    RawPost,
    SplitSpec,
    TopologyConfig,
    TrainConfig,
    evaluate,
    load_bundle,
    predict,
    save_bundle,
    split,
    synthetic_table,
    train_ensemble,
)

# Synthetic three-class corpus: the marker token decides the class.
MARKERS = {0: "wolfsbane", 1: "thornbush", 2: "meadowlark"}
FILLERS = ["the", "a", "sun", "day", "we", "saw", "it", "was"]
rng = np.random.default_rng(0)
posts = []
for label, marker in MARKERS.items():
    for i in range(20):
        words = list(rng.choice(FILLERS, size=4)) + [marker]
        rng.shuffle(words)
        posts.append(RawPost(" ".join(words), label=label, source_id=f"{label}:{i}"))
corpus = LabeledCorpus(posts, provenance="demo")
train_set, valid_set, test_set = split(corpus, SplitSpec(seed=0))
print(f"split sizes: train {len(train_set)}, valid {len(valid_set)}, test {len(test_set)}")

topo = TopologyConfig(seq_len=8, emb_dim=6, conv_filters=2, conv_width=3,
                      conv_pad=1, pool_rate=2, rnn_hidden=5, fc_hidden=4)
table = synthetic_table(0, 6)
cfg = TrainConfig(ensemble_size=3, epochs=40, seed=0, base_lr=5e-3, batch_size=8)

bundle, traces = train_ensemble(cfg, topo, table, train_set, valid_set)
for i, trace in enumerate(traces):
    print(f"member {i}: best epoch {trace.best_epoch}, "
          f"valid loss {min(r.valid_loss for r in trace.epochs):.4f}")

report = evaluate(bundle, test_set, table)
print(f"\ntest macro F1 {report['macro_f1']:.3f}, hate recall {report['hate_recall']:.3f}")

example = RawPost("we saw the wolfsbane today")
result = predict(bundle, example, table)
print(f"\npredict({example.text!r}):")
print(f"  member votes {['HON'[v] for v in result.votes]}, "
      f"majority {'HON'[result.label]}, mean probs {np.round(result.mean_probs, 3)}")

with tempfile.TemporaryDirectory() as tmp:
    save_bundle(bundle, Path(tmp) / "run")
    reloaded = load_bundle(Path(tmp) / "run")
    again = predict(reloaded, example, table)
    print(f"\nround-tripped bundle agrees: {again.label == result.label}")
