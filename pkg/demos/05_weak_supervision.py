"""Weak supervision: lexicon counts -> per-class probability bounds ->
bound-violation loss, then training a member on unlabeled posts only.

Run:  python demos/05_weak_supervision.py
"""

import numpy as np

from hatenet import (
    Lexicon,
    RawPost,
    TopologyConfig,
    TrainConfig,
    compute_bounds,
    count_lexicon,
    preprocess,
    synthetic_table,
    weak_loss,
)
from hatenet.autograd import Tensor
from hatenet.ensemble import train_member
from hatenet.weaksup import ClassWeights

lexicon = Lexicon(
    hate_terms=["wolfsbane", "direwolf"],
    offensive_terms=["thornbush"],
    positive_terms=["meadowlark", "lovely"],
)

post = RawPost("the wolfsbane and thornbush by the road")
seq = preprocess(post)
counts = count_lexicon(seq, lexicon)
print(f"post: {post.text!r}")
print(f"unique tokens n={counts.n}, hate={counts.n_h}, "
      f"offensive={counts.n_o}, positive={counts.n_p}")

bounds = compute_bounds(counts, k=1.0)
for c, name in enumerate("HON"):
    print(f"  class {name}: admissible probability [{bounds.lb[c]:.3f}, {bounds.ub[c]:.3f}]")

inside = Tensor(np.array([0.4, 0.35, 0.25]))
outside = Tensor(np.array([0.05, 0.15, 0.80]))
weights = ClassWeights.uniform()
print(f"\nloss inside bounds:  {weak_loss(inside, bounds, weights).data:.6f}")
print(f"loss outside bounds: {weak_loss(outside, bounds, weights).data:.6f}")

# Train one member on unlabeled posts alone.
MARKERS = {0: "wolfsbane", 1: "thornbush", 2: "meadowlark"}
rng = np.random.default_rng(1)
fillers = ["the", "a", "sun", "day", "we", "saw"]
pool = []
for i in range(60):
    words = list(rng.choice(fillers, size=4)) + [MARKERS[i % 3]]
    rng.shuffle(words)
    pool.append(RawPost(" ".join(words), source_id=f"u{i}"))

topo = TopologyConfig(seq_len=8, emb_dim=6, conv_filters=2, conv_width=3,
                      conv_pad=1, pool_rate=2, rnn_hidden=5, fc_hidden=4)
# bounds_k = 3 scales the evidence ratios so the marker bounds actually
# bind (a lower bound above the uniform 1/3); k = 1 would be satisfied
# by the untrained model on these short posts
cfg = TrainConfig(ensemble_size=1, epochs=40, seed=0, loss_mode="weak",
                  base_lr=5e-3, batch_size=8, bounds_k=3.0)
params, trace = train_member(0, cfg, topo, synthetic_table(0, 6),
                             pool[6:], pool[:6], lexicon=lexicon)
losses = [r.valid_loss for r in trace.epochs]
print("\nweak-supervised training (no labels), held-out weak loss per epoch:")
print("  " + " ".join(f"{l:.3f}" for l in losses))
print(f"early stopping keeps epoch {trace.best_epoch} "
      f"(loss {min(losses):.3f}, down from {losses[0]:.3f})")
