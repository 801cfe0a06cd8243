"""Run configuration dataclasses and the canonical config hash."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

from .io import canonical_json, sha256_bytes

ENCODER_KINDS = ("bps", "pointfeat", "none")


@dataclass
class TrainConfig:
    """Optimization schedule: decoupled-weight-decay Adam, step-decayed lr."""

    epochs: int = 1800
    batch_size: int = 8
    lr: float = 1e-4
    lr_decay: float = 0.3
    lr_decay_every: int = 1000
    weight_decay: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def lr_at_epoch(self, epoch: int) -> float:
        return self.lr * self.lr_decay ** (epoch // self.lr_decay_every)


@dataclass
class LossWeights:
    w_trans: float = 1.0
    w_joint: float = 1.0
    w_rot: float = 1.0
    w_fk: float = 1.0

    def __post_init__(self):
        vals = (self.w_trans, self.w_joint, self.w_rot, self.w_fk)
        if any(v < 0 for v in vals):
            raise ValueError("loss weights must be nonnegative")
        if all(v == 0 for v in vals):
            raise ValueError("loss weights must not all be zero")

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.w_trans, self.w_joint, self.w_rot, self.w_fk)


@dataclass
class ModelConfig:
    d_model: int = 128
    n_heads: int = 4
    n_blocks: int = 4
    d_ff: int = 256
    bps_hidden: int = 512
    max_frames: int = 240

    def __post_init__(self):
        if self.d_model % self.n_heads != 0:
            raise ValueError("d_model must be divisible by n_heads")


@dataclass
class MetricThresholds:
    success_cm: float = 10.0
    collision_filter_cm: float = 2.0
    sliding_cm_per_frame: float = 1.0

    def __post_init__(self):
        for name in ("success_cm", "collision_filter_cm", "sliding_cm_per_frame"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class RunConfig:
    encoder: str = "bps"
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    loss: LossWeights = field(default_factory=LossWeights)
    thresholds: MetricThresholds = field(default_factory=MetricThresholds)
    basis_seed: int = 0
    provider_seed: int = 0
    deterministic: bool = True

    def __post_init__(self):
        if self.encoder not in ENCODER_KINDS:
            raise ValueError(f"encoder must be one of {ENCODER_KINDS}, got {self.encoder!r}")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        for key, sub in (("model", ModelConfig), ("train", TrainConfig),
                         ("loss", LossWeights), ("thresholds", MetricThresholds)):
            if key in d and isinstance(d[key], dict):
                d[key] = sub(**d[key])
        return cls(**d)

    def config_hash(self) -> str:
        return sha256_bytes(canonical_json(self.to_dict()).encode("utf-8"))
