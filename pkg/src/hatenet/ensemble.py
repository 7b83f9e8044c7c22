"""Ensemble training, majority-vote prediction, classifier-head tuning,
and bundle (de)serialization.

Each member is built and trained independently: member i uses seed
``run_seed + i`` for initialization and a derived stream for sampling
and dropout.  Every supervised epoch trains on a fresh class-balanced
resample (all hate posts once, equally many offensive and neither posts
drawn with replacement); the returned parameters are the snapshot from
the epoch with the lowest validation loss (earliest on ties).
"""

from __future__ import annotations

import hashlib
import json
import logging
import struct
from dataclasses import dataclass, field

import numpy as np

from .autograd import Tensor
from .corpus import ClassLabel, LabeledCorpus, N_CLASSES
from .embeddings import EmbeddingTable, embed
from .errors import (
    CheckpointIntegrityError,
    CheckpointVersionError,
    EmptyClass,
    NumericError,
    PreprocessingMismatch,
)
from .layers import ParamGroup, cross_entropy
from .metrics import accumulate, report
from .model import ModelParams, TopologyConfig, build, forward
from .optim import Adam
from .text import RawPost, preprocess
from .weaksup import ClassWeights, Lexicon, compute_bounds, count_lexicon, weak_loss

log = logging.getLogger(__name__)

CKPT_MAGIC = b"HNET"
CKPT_VERSION = 1
META_NAME = "bundle.meta"

SUPERVISED = "supervised"
WEAK = "weak"


@dataclass
class TrainConfig:
    ensemble_size: int = 5
    epochs: int = 20
    tune_epochs: int = 10
    base_lr: float = 1e-3
    tune_lr: float = 5e-4
    seed: int = 0
    loss_mode: str = SUPERVISED
    batch_size: int = 32
    bounds_k: float = 1.0
    class_weights: "ClassWeights | None" = None

    def validate(self) -> None:
        if self.ensemble_size < 1:
            raise ValueError("ensemble size must be >= 1")
        if self.base_lr <= 0 or self.tune_lr <= 0:
            raise ValueError("learning rates must be positive")
        if self.loss_mode not in (SUPERVISED, WEAK):
            raise ValueError(f"unknown loss mode {self.loss_mode!r}")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")

    def weights(self) -> ClassWeights:
        return self.class_weights or ClassWeights.uniform()


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    valid_loss: float
    valid_hate_recall: "float | None"


@dataclass
class TrainTrace:
    epochs: list[EpochRecord] = field(default_factory=list)
    best_epoch: int = 0  # 1-indexed
    snapshots: "list[ModelParams] | None" = None


@dataclass
class EnsembleBundle:
    members: list[ModelParams]
    topology: TopologyConfig
    fingerprint: dict
    provenance: dict = field(default_factory=dict)

    def size(self) -> int:
        return len(self.members)


def balanced_epoch_sample(train: LabeledCorpus, rng: np.random.Generator) -> list[RawPost]:
    """Equal-class epoch sample: all m hate posts exactly once, plus m
    posts drawn with replacement from each majority class; shuffled."""
    buckets = train.by_class()
    for label, bucket in zip(ClassLabel, buckets):
        if not bucket:
            raise EmptyClass(f"training corpus has no {label.name} posts")
    m = len(buckets[ClassLabel.H])
    sample = list(buckets[ClassLabel.H])
    for c in (ClassLabel.O, ClassLabel.N):
        draws = rng.integers(0, len(buckets[c]), size=m)
        sample.extend(buckets[c][i] for i in draws)
    order = rng.permutation(len(sample))
    return [sample[i] for i in order]


def _batches(items: list, size: int):
    for start in range(0, len(items), size):
        yield items[start : start + size]


class _PostLoss:
    """Per-post loss closure for one member and loss mode."""

    def __init__(self, topo, table, cfg, lexicon):
        self.topo = topo
        self.table = table
        self.cfg = cfg
        self.lexicon = lexicon
        self.weights = cfg.weights()

    def loss(self, params, post: RawPost, train: bool, rng) -> Tensor:
        seq = preprocess(post)
        matrix = embed(seq, self.table, self.topo.seq_len)
        probs = forward(params, self.topo, matrix, train=train, rng=rng)
        if self.cfg.loss_mode == SUPERVISED:
            return cross_entropy(probs, post.label)
        bounds = compute_bounds(count_lexicon(seq, self.lexicon), self.cfg.bounds_k)
        return weak_loss(probs, bounds, self.weights)


def _mean_loss_eval(params, posts, post_loss: _PostLoss) -> tuple[float, "float | None"]:
    """Mean eval-mode loss over posts, plus hate recall when labels exist."""
    total = 0.0
    pairs = []
    for post in posts:
        seq = preprocess(post)
        matrix = embed(seq, post_loss.table, post_loss.topo.seq_len)
        probs = forward(params, post_loss.topo, matrix)
        if post_loss.cfg.loss_mode == SUPERVISED:
            total += cross_entropy(probs, post.label).data.item()
            pairs.append((post.label, int(np.argmax(probs.data))))
        else:
            bounds = compute_bounds(
                count_lexicon(seq, post_loss.lexicon), post_loss.cfg.bounds_k
            )
            total += weak_loss(probs, bounds, post_loss.weights).data.item()
    mean = total / max(len(posts), 1)
    recall = None
    if pairs:
        recall = report(accumulate(pairs))["hate_recall"]
    return mean, recall


def _train_batch(params, batch, post_loss, optimizer, rng, epoch_no) -> float:
    total = None
    for post in batch:
        loss = post_loss.loss(params, post, train=True, rng=rng)
        total = loss if total is None else total + loss
    mean = total * (1.0 / len(batch))
    value = mean.data.item()
    if not np.isfinite(value):
        raise NumericError(f"non-finite training loss at epoch {epoch_no}")
    mean.backward()
    optimizer.step(params.groups())
    return value


def train_member(
    member_seed: int,
    cfg: TrainConfig,
    topo: TopologyConfig,
    table: EmbeddingTable,
    train_posts,
    valid_posts,
    lexicon: "Lexicon | None" = None,
    keep_snapshots: bool = False,
) -> tuple[ModelParams, TrainTrace]:
    """Train one member with per-epoch early-stopping snapshots.

    Supervised mode expects LabeledCorpus train/valid; weak mode expects
    plain post lists and a lexicon.  Returns the parameters from the
    epoch with minimum validation loss (earliest such epoch on ties).
    """
    cfg.validate()
    if cfg.loss_mode == WEAK and lexicon is None:
        raise ValueError("weak-supervised training requires a lexicon")
    params = build(topo, member_seed)
    rng = np.random.default_rng([member_seed, 1])
    optimizer = Adam(lr=cfg.base_lr)
    post_loss = _PostLoss(topo, table, cfg, lexicon)
    valid_list = valid_posts.posts if isinstance(valid_posts, LabeledCorpus) else list(valid_posts)
    if not valid_list:
        raise ValueError("validation set must be non-empty")

    trace = TrainTrace(snapshots=[] if keep_snapshots else None)
    best: "ModelParams | None" = None
    best_loss = np.inf
    for epoch in range(1, cfg.epochs + 1):
        if cfg.loss_mode == SUPERVISED:
            sample = balanced_epoch_sample(train_posts, rng)
            batches = list(_batches(sample, cfg.batch_size))
        else:
            pool = list(train_posts)
            size = min(cfg.batch_size, len(pool))
            n_iter = max(1, len(pool) // cfg.batch_size)
            batches = [
                [pool[i] for i in rng.choice(len(pool), size=size, replace=False)]
                for _ in range(n_iter)
            ]
        epoch_losses = [
            _train_batch(params, batch, post_loss, optimizer, rng, epoch)
            for batch in batches
        ]
        valid_loss, valid_recall = _mean_loss_eval(params, valid_list, post_loss)
        trace.epochs.append(EpochRecord(
            epoch=epoch,
            train_loss=float(np.mean(epoch_losses)),
            valid_loss=valid_loss,
            valid_hate_recall=valid_recall,
        ))
        if keep_snapshots:
            trace.snapshots.append(params.copy())
        if valid_loss < best_loss:
            best_loss = valid_loss
            best = params.copy()
            trace.best_epoch = epoch
    return best, trace


def train_ensemble(
    cfg: TrainConfig,
    topo: TopologyConfig,
    table: EmbeddingTable,
    train_posts,
    valid_posts,
    lexicon: "Lexicon | None" = None,
    jobs: int = 1,
) -> tuple[EnsembleBundle, list[TrainTrace]]:
    """K independent members with seeds seed+0 .. seed+K-1."""
    cfg.validate()
    seeds = [cfg.seed + i for i in range(cfg.ensemble_size)]

    def run(seed: int):
        return train_member(seed, cfg, topo, table, train_posts, valid_posts, lexicon)

    if jobs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run, seeds))
    else:
        results = [run(s) for s in seeds]
    members = [r[0] for r in results]
    traces = [r[1] for r in results]
    bundle = EnsembleBundle(
        members=members,
        topology=topo,
        fingerprint={
            "embedding": table.name,
            "dim": table.dim,
            "seq_len": topo.seq_len,
        },
        provenance={
            "loss_mode": cfg.loss_mode,
            "seed": cfg.seed,
            "epochs": cfg.epochs,
            "ensemble_size": cfg.ensemble_size,
        },
    )
    return bundle, traces


@dataclass
class Prediction:
    label: int
    votes: list[int]
    mean_probs: np.ndarray
    member_probs: np.ndarray


def vote_outcome(votes: "np.ndarray | list[int]", member_probs: np.ndarray) -> int:
    """Majority decision with the documented tie-break chain: most votes,
    then highest summed probability across members, then lowest ordinal."""
    counts = np.bincount(np.asarray(votes, dtype=np.int64), minlength=N_CLASSES)
    tied = np.flatnonzero(counts == counts.max())
    if len(tied) == 1:
        return int(tied[0])
    sums = member_probs.sum(axis=0)[tied]
    tied = tied[sums == sums.max()]
    return int(tied[0])


def predict(bundle: EnsembleBundle, post: RawPost, table: EmbeddingTable) -> Prediction:
    """Per-member argmax votes (ties to the lowest class ordinal), then
    the majority decision."""
    if table.dim != bundle.fingerprint["dim"]:
        raise PreprocessingMismatch(
            f"table dim {table.dim} != bundle dim {bundle.fingerprint['dim']}"
        )
    matrix = embed(preprocess(post), table, bundle.topology.seq_len)
    member_probs = np.stack([
        forward(member, bundle.topology, matrix).data for member in bundle.members
    ])
    votes = [int(np.argmax(p)) for p in member_probs]
    label = vote_outcome(votes, member_probs)
    return Prediction(
        label=label,
        votes=votes,
        mean_probs=member_probs.mean(axis=0),
        member_probs=member_probs,
    )


def evaluate(bundle: EnsembleBundle, corpus: LabeledCorpus, table: EmbeddingTable) -> dict:
    pairs = [
        (post.label, predict(bundle, post, table).label) for post in corpus.posts
    ]
    return report(accumulate(pairs))


def tune(
    bundle: EnsembleBundle,
    target_train: LabeledCorpus,
    cfg: TrainConfig,
    table: EmbeddingTable,
) -> EnsembleBundle:
    """Freeze the feature extractor, retrain the dense head on the target.

    Runs tune_epochs of balanced epochs at tune_lr; feature tensors are
    untouched byte for byte.
    """
    cfg.validate()
    counts = target_train.class_counts
    if len(set(counts)) != 1:
        log.warning("tuning set is unbalanced: H/O/N counts %s", counts)
    if min(counts) == 0:
        raise EmptyClass(f"tuning set is missing a class: counts {counts}")
    sup_cfg = TrainConfig(**{**cfg.__dict__, "loss_mode": SUPERVISED})
    tuned_members = []
    for index, member in enumerate(bundle.members):
        params = member.copy()
        params.feature.trainable = False
        rng = np.random.default_rng([cfg.seed + index, 2])
        optimizer = Adam(lr=cfg.tune_lr)
        post_loss = _PostLoss(bundle.topology, table, sup_cfg, None)
        for epoch in range(1, cfg.tune_epochs + 1):
            sample = balanced_epoch_sample(target_train, rng)
            for batch in _batches(sample, cfg.batch_size):
                _train_batch(params, batch, post_loss, optimizer, rng, epoch)
        params.feature.trainable = True
        tuned_members.append(params)
    provenance = dict(bundle.provenance)
    provenance["tuned_on"] = target_train.provenance
    provenance["tune_epochs"] = cfg.tune_epochs
    provenance["tune_lr"] = cfg.tune_lr
    return EnsembleBundle(
        members=tuned_members,
        topology=bundle.topology,
        fingerprint=dict(bundle.fingerprint),
        provenance=provenance,
    )


# -- checkpoint container ------------------------------------------------
#
# member_<i>.ckpt layout (all integers little endian):
#   4 bytes  magic "HNET"
#   4 bytes  format version (uint32)
#   8 bytes  header length (uint64)
#   header   JSON: {"arrays": [{"name", "group", "trainable", "shape"}],
#                   "topology_hash": sha256 of the canonical topology JSON}
#   payload  raw float64 little-endian C-order array bytes, header order
#   32 bytes sha256 of everything above
#
# bundle.meta is JSON with the topology, preprocessing fingerprint,
# provenance, and each member file's digest.


def topology_hash(topo: TopologyConfig) -> str:
    canonical = json.dumps(topo.to_dict(), sort_keys=True).encode("utf-8")
    return hashlib.sha256(canonical).hexdigest()


def _member_bytes(params: ModelParams, topo_hash: str = "") -> bytes:
    arrays = []
    blobs = []
    for group in params.groups():
        for name, tensor in group.params.items():
            arrays.append({
                "name": name,
                "group": group.name,
                "trainable": group.trainable,
                "shape": list(tensor.data.shape),
            })
            blobs.append(np.ascontiguousarray(tensor.data, dtype="<f8").tobytes())
    header = json.dumps(
        {"arrays": arrays, "topology_hash": topo_hash}, sort_keys=True
    ).encode("utf-8")
    out = bytearray()
    out += CKPT_MAGIC
    out += struct.pack("<I", CKPT_VERSION)
    out += struct.pack("<Q", len(header))
    out += header
    for blob in blobs:
        out += blob
    out += hashlib.sha256(bytes(out)).digest()
    return bytes(out)


def _member_from_bytes(raw: bytes, path: str, expect_hash: str = "") -> ModelParams:
    if len(raw) < 48 or raw[:4] != CKPT_MAGIC:
        raise CheckpointIntegrityError(f"{path}: not a checkpoint file")
    version = struct.unpack("<I", raw[4:8])[0]
    if version != CKPT_VERSION:
        raise CheckpointVersionError(
            f"{path}: format version {version}, supported {CKPT_VERSION}"
        )
    digest = raw[-32:]
    if hashlib.sha256(raw[:-32]).digest() != digest:
        raise CheckpointIntegrityError(f"{path}: checksum mismatch")
    header_len = struct.unpack("<Q", raw[8:16])[0]
    header = json.loads(raw[16 : 16 + header_len].decode("utf-8"))
    if expect_hash and header.get("topology_hash") != expect_hash:
        raise CheckpointIntegrityError(
            f"{path}: member was written for a different topology"
        )
    offset = 16 + header_len
    groups: dict[str, ParamGroup] = {}
    for entry in header["arrays"]:
        size = int(np.prod(entry["shape"])) if entry["shape"] else 1
        blob = raw[offset : offset + 8 * size]
        if len(blob) != 8 * size:
            raise CheckpointIntegrityError(f"{path}: truncated payload")
        offset += 8 * size
        data = np.frombuffer(blob, dtype="<f8").reshape(entry["shape"]).copy()
        group = groups.setdefault(
            entry["group"], ParamGroup(entry["group"], {}, entry["trainable"])
        )
        group.params[entry["name"]] = Tensor(data)
    if set(groups) != {"feature", "classifier"}:
        raise CheckpointIntegrityError(f"{path}: unexpected groups {sorted(groups)}")
    return ModelParams(groups["feature"], groups["classifier"])


def save_bundle(bundle: EnsembleBundle, dirpath) -> None:
    from pathlib import Path

    out = Path(dirpath)
    out.mkdir(parents=True, exist_ok=True)
    topo_hash = topology_hash(bundle.topology)
    members_meta = []
    for i, member in enumerate(bundle.members):
        raw = _member_bytes(member, topo_hash)
        name = f"member_{i}.ckpt"
        (out / name).write_bytes(raw)
        members_meta.append({
            "file": name,
            "sha256": hashlib.sha256(raw).hexdigest(),
        })
    meta = {
        "format_version": CKPT_VERSION,
        "topology": bundle.topology.to_dict(),
        "fingerprint": bundle.fingerprint,
        "provenance": bundle.provenance,
        "members": members_meta,
    }
    (out / META_NAME).write_text(
        json.dumps(meta, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )


def load_bundle(dirpath) -> EnsembleBundle:
    from pathlib import Path

    src = Path(dirpath)
    meta_path = src / META_NAME
    if not meta_path.exists():
        raise CheckpointIntegrityError(f"{meta_path} not found")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    if meta.get("format_version") != CKPT_VERSION:
        raise CheckpointVersionError(
            f"{meta_path}: format version {meta.get('format_version')}, "
            f"supported {CKPT_VERSION}"
        )
    topology = TopologyConfig.from_dict(meta["topology"])
    expect_hash = topology_hash(topology)
    members = []
    for entry in meta["members"]:
        raw = (src / entry["file"]).read_bytes()
        if hashlib.sha256(raw).hexdigest() != entry["sha256"]:
            raise CheckpointIntegrityError(f"{entry['file']}: digest mismatch")
        members.append(_member_from_bytes(raw, entry["file"], expect_hash))
    return EnsembleBundle(
        members=members,
        topology=topology,
        fingerprint=meta["fingerprint"],
        provenance=meta.get("provenance", {}),
    )
