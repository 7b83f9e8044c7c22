"""The two classifier topologies assembled from the autograd layers.

CNN-RNN-FC: conv over the post matrix -> max pool -> recurrent layer over
the pooled sequence -> global max pool over time -> 25-unit ReLU layer
(with dropout during training) -> 3-way softmax.  CNN-FC flattens the
pooled feature map straight into the two dense layers.

``conv_axis`` selects which input axis the convolution slides along:
"sequence" treats the embedding coordinates as channels (pooled length
seq_len // pool_rate), "embedding" slides along the embedding axis
(pooled length emb_dim // pool_rate) for the wider flattened variant.
"""

from __future__ import annotations

from dataclasses import dataclass, asdict

import numpy as np

from .autograd import Tensor, conv1d, dropout, global_maxpool, maxpool1d
from .errors import InvalidConfig, ShapeMismatch
from .layers import (
    ParamGroup,
    fc_forward,
    glorot_uniform,
    gru_forward,
    init_gru,
    init_lstm,
    lstm_forward,
    zeros,
)

CNN_RNN_FC = "cnn_rnn_fc"
CNN_FC = "cnn_fc"


@dataclass
class TopologyConfig:
    variant: str = CNN_RNN_FC
    rnn_kind: str = "gru"        # ignored for cnn_fc
    seq_len: int = 100
    emb_dim: int = 300
    conv_filters: int = 32
    conv_width: int = 17
    conv_pad: int = 8
    pool_rate: int = 4
    rnn_hidden: int = 100
    fc_hidden: int = 25
    dropout_p: float = 0.2
    n_classes: int = 3
    conv_axis: str = "sequence"  # or "embedding"

    def validate(self) -> None:
        if self.variant not in (CNN_RNN_FC, CNN_FC):
            raise InvalidConfig(f"unknown variant {self.variant!r}")
        if self.rnn_kind not in ("gru", "lstm"):
            raise InvalidConfig(f"unknown rnn kind {self.rnn_kind!r}")
        if self.conv_axis not in ("sequence", "embedding"):
            raise InvalidConfig(f"unknown conv axis {self.conv_axis!r}")
        if self.n_classes != 3:
            raise InvalidConfig("the classifier is three-class by construction")
        if 2 * self.conv_pad != self.conv_width - 1:
            raise InvalidConfig(
                f"conv_pad must be (conv_width - 1) / 2 to preserve length; "
                f"got pad={self.conv_pad}, width={self.conv_width}"
            )
        for field_name in ("seq_len", "emb_dim", "conv_filters", "conv_width",
                           "pool_rate", "rnn_hidden", "fc_hidden"):
            if getattr(self, field_name) < 1:
                raise InvalidConfig(f"{field_name} must be positive")
        if not 0.0 <= self.dropout_p < 1.0:
            raise InvalidConfig(f"dropout_p must be in [0, 1), got {self.dropout_p}")
        if self.conv_len() // self.pool_rate < 1:
            raise InvalidConfig("pool rate leaves no features")

    def conv_channels(self) -> int:
        return self.emb_dim if self.conv_axis == "sequence" else self.seq_len

    def conv_len(self) -> int:
        return self.seq_len if self.conv_axis == "sequence" else self.emb_dim

    def pooled_len(self) -> int:
        return self.conv_len() // self.pool_rate

    def feature_dim(self) -> int:
        """Input width of the first dense layer."""
        if self.variant == CNN_RNN_FC:
            return self.rnn_hidden
        return self.conv_filters * self.pooled_len()

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "TopologyConfig":
        cfg = cls(**d)
        cfg.validate()
        return cfg


class ModelParams:
    """All trainable tensors of one ensemble member, partitioned into the
    convolutional/recurrent feature group and the dense classifier group."""

    def __init__(self, feature: ParamGroup, classifier: ParamGroup):
        self.feature = feature
        self.classifier = classifier

    def groups(self) -> list[ParamGroup]:
        return [self.feature, self.classifier]

    def named_tensors(self) -> dict[str, Tensor]:
        out = {}
        for group in self.groups():
            for key, tensor in group.params.items():
                out[f"{group.name}.{key}"] = tensor
        return out

    def copy(self) -> "ModelParams":
        return ModelParams(self.feature.copy(), self.classifier.copy())

    def n_params(self) -> int:
        return self.feature.n_params() + self.classifier.n_params()


def param_count(config: TopologyConfig) -> int:
    """Closed-form trainable parameter count for a topology."""
    c_in = config.conv_channels()
    n = config.conv_filters * c_in * config.conv_width + config.conv_filters
    if config.variant == CNN_RNN_FC:
        gates = 3 if config.rnn_kind == "gru" else 4
        h = config.rnn_hidden
        n += gates * (h * config.conv_filters + h * h + h)
    n += config.fc_hidden * config.feature_dim() + config.fc_hidden
    n += config.n_classes * config.fc_hidden + config.n_classes
    return n


def build(config: TopologyConfig, seed: int) -> ModelParams:
    """Allocate and initialize parameters; same seed gives identical values."""
    config.validate()
    rng = np.random.default_rng(seed)
    c_in = config.conv_channels()
    feature = {
        "conv_w": glorot_uniform(
            rng,
            (config.conv_filters, c_in, config.conv_width),
            c_in * config.conv_width,
            config.conv_filters * config.conv_width,
        ),
        "conv_b": zeros(config.conv_filters),
    }
    if config.variant == CNN_RNN_FC:
        init_rnn = init_gru if config.rnn_kind == "gru" else init_lstm
        feature.update(init_rnn(rng, config.conv_filters, config.rnn_hidden))
    classifier = {
        "fc1_w": glorot_uniform(
            rng,
            (config.fc_hidden, config.feature_dim()),
            config.feature_dim(),
            config.fc_hidden,
        ),
        "fc1_b": zeros(config.fc_hidden),
        "fc2_w": glorot_uniform(
            rng,
            (config.n_classes, config.fc_hidden),
            config.fc_hidden,
            config.n_classes,
        ),
        "fc2_b": zeros(config.n_classes),
    }
    return ModelParams(
        ParamGroup("feature", feature),
        ParamGroup("classifier", classifier),
    )


def forward(
    params: ModelParams,
    config: TopologyConfig,
    matrix,
    train: bool = False,
    rng: "np.random.Generator | None" = None,
) -> Tensor:
    """Class-probability vector over (Hate, Offensive, Neither).

    `matrix` is a TokenMatrix or a raw (seq_len, emb_dim) array.
    """
    values = matrix.values if hasattr(matrix, "values") else np.asarray(matrix)
    if values.shape != (config.seq_len, config.emb_dim):
        raise ShapeMismatch(
            f"input is {values.shape}, topology expects "
            f"{(config.seq_len, config.emb_dim)}"
        )
    if train and config.dropout_p > 0 and rng is None:
        raise ValueError("train-mode forward needs an rng for dropout")
    x = Tensor(values)
    planes = x.transpose() if config.conv_axis == "sequence" else x
    fp = params.feature.params
    convolved = conv1d(planes, fp["conv_w"], fp["conv_b"], config.conv_pad)
    pooled = maxpool1d(convolved, config.pool_rate)
    if config.variant == CNN_RNN_FC:
        steps = pooled.transpose()
        rnn = gru_forward if config.rnn_kind == "gru" else lstm_forward
        features = global_maxpool(rnn(steps, fp))
    else:
        features = pooled.reshape(-1)
    cp = params.classifier.params
    hidden = fc_forward(features, cp["fc1_w"], cp["fc1_b"], "relu")
    hidden = dropout(hidden, config.dropout_p, train, rng)
    return fc_forward(hidden, cp["fc2_w"], cp["fc2_b"], "softmax")
