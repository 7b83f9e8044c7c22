"""Embedding tables and fixed-size post matrices with zero left padding.

Run:  python demos/02_embeddings.py
"""

import numpy as np

from hatenet import RawPost, embed, preprocess, synthetic_table

table = synthetic_table(seed=7, dim=8)

print("synthetic vectors are deterministic unit vectors per token:")
for token in ("hate", "love", "love"):
    vec = table.get(token)
    print(f"  {token:>6}: norm {np.linalg.norm(vec):.6f}, head {np.round(vec[:3], 3)}")

seq = preprocess(RawPost("three little words"))
matrix = embed(seq, table, L=6)
print(f"\npost of {len(seq)} tokens embedded at L=6 -> matrix {matrix.values.shape}")
print(f"n_real = {matrix.n_real}; padding rows (all zero):")
with np.printoptions(precision=2, suppress=True):
    print(matrix.values)

long_seq = preprocess(RawPost(" ".join(f"w{i}" for i in range(10))))
truncated = embed(long_seq, table, L=4)
print(f"\n10 tokens at L=4 keeps the first 4: n_real = {truncated.n_real}")
first = table.get(long_seq.tokens[0])
print(f"row 0 equals the first token's vector: {np.array_equal(truncated.values[0], first)}")
