import numpy as np
import pytest

from hatenet.corpus import LabeledCorpus
from hatenet.embeddings import synthetic_table
from hatenet.model import TopologyConfig
from hatenet.text import RawPost

# Distinctive per-class marker tokens for synthetic separable corpora.
MARKERS = {0: "wolfsbane", 1: "thornbush", 2: "meadowlark"}
FILLERS = ["the", "a", "sun", "day", "we", "saw", "it", "was", "quite", "really"]


def tiny_topology(**overrides) -> TopologyConfig:
    base = dict(
        variant="cnn_rnn_fc",
        rnn_kind="gru",
        seq_len=8,
        emb_dim=6,
        conv_filters=2,
        conv_width=3,
        conv_pad=1,
        pool_rate=2,
        rnn_hidden=5,
        fc_hidden=4,
    )
    base.update(overrides)
    return TopologyConfig(**base)


def separable_corpus(n_per_class: int = 10, seed: int = 3, words: int = 4) -> LabeledCorpus:
    """Posts whose class is determined by one distinctive marker token."""
    rng = np.random.default_rng(seed)
    posts = []
    for label, marker in MARKERS.items():
        for i in range(n_per_class):
            tokens = list(rng.choice(FILLERS, size=words)) + [marker]
            rng.shuffle(tokens)
            posts.append(RawPost(" ".join(tokens), label=label,
                                 source_id=f"synth:{label}:{i}"))
    return LabeledCorpus(posts, provenance="synthetic")


@pytest.fixture
def topo():
    return tiny_topology()


@pytest.fixture
def table():
    return synthetic_table(0, 6)


@pytest.fixture
def corpus30():
    return separable_corpus(10)
