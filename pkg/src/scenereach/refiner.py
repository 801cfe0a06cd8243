"""Transformer motion refiner: model, loss, training, and the
fit/predict estimator tying initialization, scene encoding, and
refinement together.

The network maps per-frame [pose(201) | scene feature(256)] rows through
an input projection, a fixed sinusoidal positional table, four pre-norm
self-attention blocks, and an output projection back to pose vectors.
Training minimizes the four-term L1 loss (root translation, joint
positions, rotations, FK-consistency) with AdamW and a step-decayed
learning rate.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import torch
from sklearn.base import BaseEstimator
from torch import nn

from .config import LossWeights, ModelConfig, RunConfig, TrainConfig
from .features import (
    FEATURE_DIM,
    BpsHead,
    CylinderBasis,
    RandomFourierFeatureProvider,
    SceneEncoderBase,
    make_encoder,
)
from .io import CHECKPOINT_MAGIC, FileFormatError, read_container, write_container
from .motion import MAX_FRAMES, POSE_DIM, MotionSequence, PoseState
from .motion_init import ConstantPose, compute_constant_pose, initialize_motion
from .scene import SceneModel, is_reachable
from .skeleton import JOINT_COUNT, Skeleton, forward_kinematics_batch

THREADS_ENV = "SCENEREACH_NUM_THREADS"


class TrainingDivergedError(RuntimeError):
    """Raised when the training loss stops being finite."""

    def __init__(self, epoch: int):
        super().__init__(f"training diverged (non-finite loss) at epoch {epoch}")
        self.epoch = epoch


def configure_threads(deterministic: bool = True) -> None:
    """Apply the thread-count policy: env override, else 1 when deterministic."""
    env = os.environ.get(THREADS_ENV)
    if env:
        torch.set_num_threads(max(1, int(env)))
    elif deterministic:
        torch.set_num_threads(1)


def sinusoidal_table(length: int, d_model: int) -> torch.Tensor:
    """Fixed (length, d_model) sin/cos positional encoding."""
    pos = torch.arange(length, dtype=torch.float64)[:, None]
    idx = torch.arange(0, d_model, 2, dtype=torch.float64)
    angles = pos / torch.pow(10000.0, idx / d_model)
    table = torch.zeros(length, d_model, dtype=torch.float64)
    table[:, 0::2] = torch.sin(angles)
    table[:, 1::2] = torch.cos(angles[:, : d_model // 2])
    return table


def rot6d_to_matrix_torch(r6: torch.Tensor) -> torch.Tensor:
    """Differentiable 6D decode; eps-guarded rather than raising, since the
    model may emit near-degenerate rows mid-training."""
    a1, a2 = r6[..., 0:3], r6[..., 3:6]
    b1 = torch.nn.functional.normalize(a1, dim=-1, eps=1e-8)
    a2p = a2 - (b1 * a2).sum(-1, keepdim=True) * b1
    b2 = torch.nn.functional.normalize(a2p, dim=-1, eps=1e-8)
    b3 = torch.cross(b1, b2, dim=-1)
    return torch.stack([b1, b2, b3], dim=-1)


class SkeletonTensors:
    """Skeleton constants staged for torch FK."""

    def __init__(self, skeleton: Skeleton, dtype=torch.float32):
        self.parents = [int(p) for p in skeleton.parents]
        self.offsets = torch.tensor(skeleton.offsets, dtype=dtype)

    def to(self, dtype):
        out = object.__new__(SkeletonTensors)
        out.parents = self.parents
        out.offsets = self.offsets.to(dtype)
        return out


def forward_kinematics_torch(skel: SkeletonTensors, rot6d: torch.Tensor,
                             roots: torch.Tensor) -> torch.Tensor:
    """FK over (..., 22, 6) rotations and (..., 3) roots -> (..., 22, 3)."""
    local = rot6d_to_matrix_torch(rot6d)
    offsets = skel.offsets.to(rot6d.dtype)
    pos = [roots]
    glob = [local[..., 0, :, :]]
    for j in range(1, JOINT_COUNT):
        p = skel.parents[j]
        pos.append(pos[p] + (glob[p] @ offsets[j]))
        glob.append(glob[p] @ local[..., j, :, :])
    return torch.stack(pos, dim=-2)


class MultiHeadSelfAttention(nn.Module):
    def __init__(self, d_model: int, n_heads: int):
        super().__init__()
        self.n_heads = n_heads
        self.d_head = d_model // n_heads
        self.q = nn.Linear(d_model, d_model)
        self.k = nn.Linear(d_model, d_model)
        self.v = nn.Linear(d_model, d_model)
        self.o = nn.Linear(d_model, d_model)

    def forward(self, x: torch.Tensor, key_mask: torch.Tensor | None,
                return_attention: bool = False):
        B, T, _ = x.shape

        def heads(t):
            return t.view(B, T, self.n_heads, self.d_head).transpose(1, 2)

        q, k, v = heads(self.q(x)), heads(self.k(x)), heads(self.v(x))
        scores = q @ k.transpose(-1, -2) / math.sqrt(self.d_head)
        if key_mask is not None:
            scores = scores.masked_fill(~key_mask[:, None, None, :], -1e9)
        attn = torch.softmax(scores, dim=-1)
        out = (attn @ v).transpose(1, 2).reshape(B, T, -1)
        out = self.o(out)
        if return_attention:
            return out, attn
        return out


class TransformerBlock(nn.Module):
    """Pre-norm: x + MHA(LN(x)); x + FFN(LN(x))."""

    def __init__(self, d_model: int, n_heads: int, d_ff: int):
        super().__init__()
        self.ln1 = nn.LayerNorm(d_model)
        self.attn = MultiHeadSelfAttention(d_model, n_heads)
        self.ln2 = nn.LayerNorm(d_model)
        self.ff1 = nn.Linear(d_model, d_ff)
        self.ff2 = nn.Linear(d_ff, d_model)

    def forward(self, x, key_mask, return_attention=False):
        if return_attention:
            delta, attn = self.attn(self.ln1(x), key_mask, return_attention=True)
        else:
            delta = self.attn(self.ln1(x), key_mask)
            attn = None
        x = x + delta
        x = x + self.ff2(torch.relu(self.ff1(self.ln2(x))))
        return (x, attn) if return_attention else x


class RefinerNet(nn.Module):
    """Input projection + positional table + attention blocks + output
    projection, with an optional BPS compression head in front."""

    def __init__(self, model: ModelConfig | None = None, raw_dim: int = FEATURE_DIM,
                 use_bps_head: bool = False, pose_dim: int = POSE_DIM,
                 feature_dim: int = FEATURE_DIM):
        super().__init__()
        self.model_config = model or ModelConfig()
        m = self.model_config
        self.raw_dim = raw_dim
        self.pose_dim = pose_dim
        self.feature_dim = feature_dim
        self.use_bps_head = use_bps_head
        if use_bps_head:
            self.bps_head = BpsHead(raw_dim, m.bps_hidden, feature_dim)
        elif raw_dim != feature_dim:
            raise ValueError("raw_dim must equal feature_dim without a BPS head")
        self.input_proj = nn.Linear(pose_dim + feature_dim, m.d_model)
        self.register_buffer("posenc", sinusoidal_table(m.max_frames, m.d_model).float())
        self.blocks = nn.ModuleList(
            [TransformerBlock(m.d_model, m.n_heads, m.d_ff) for _ in range(m.n_blocks)])
        self.out_proj = nn.Linear(m.d_model, pose_dim)

    @property
    def max_frames(self) -> int:
        return self.model_config.max_frames

    def forward(self, pose: torch.Tensor, raw_feat: torch.Tensor,
                key_mask: torch.Tensor | None = None, return_attention: bool = False):
        """pose (B, T, 201), raw_feat (B, T, raw_dim) -> (B, T, 201)."""
        B, T, _ = pose.shape
        if T > self.max_frames:
            raise ValueError(f"sequence length {T} exceeds the model maximum {self.max_frames}")
        feat = self.bps_head(raw_feat) if self.use_bps_head else raw_feat
        h = self.input_proj(torch.cat([pose, feat], dim=-1))
        h = h + self.posenc[:T].to(h.dtype)
        attns = []
        for block in self.blocks:
            if return_attention:
                h, attn = block(h, key_mask, return_attention=True)
                attns.append(attn)
            else:
                h = block(h, key_mask)
        out = self.out_proj(h)
        if return_attention:
            return out, attns
        return out


def _sorted_sum(values: torch.Tensor) -> torch.Tensor:
    # Canonical-order reduction: bit-identical under batch permutation.
    return torch.sort(values).values.sum()


def split_pose_columns(x: torch.Tensor):
    """(..., 201) -> roots (..., 3), joints (..., 22, 3), rot6d (..., 22, 6)."""
    roots = x[..., :3]
    joints = x[..., 3:69].reshape(*x.shape[:-1], JOINT_COUNT, 3)
    rot6d = x[..., 69:].reshape(*x.shape[:-1], JOINT_COUNT, 6)
    return roots, joints, rot6d


def loss_terms_torch(pred: torch.Tensor, target: torch.Tensor, sup_mask: torch.Tensor,
                     weights: LossWeights, skel: SkeletonTensors) -> dict:
    """Masked four-term loss over a (B, T, 201) batch.

    sup_mask marks supervised frames (padding and frame 0 already False).
    Every scalar is a mean over supervised frames of the per-frame sums.
    """
    p_pred, j_pred, r_pred = split_pose_columns(pred)
    p_tgt, j_tgt, r_tgt = split_pose_columns(target)
    mask = sup_mask.to(pred.dtype)
    n = mask.sum()
    if n.item() == 0:
        raise ValueError("no supervised frames in batch")

    def reduce(per_frame):
        return _sorted_sum((per_frame * mask).sum(dim=1)) / n

    l_trans = reduce((p_pred - p_tgt).abs().sum(-1))
    l_joint = reduce((j_pred - j_tgt).abs().sum((-1, -2)))
    l_rot = reduce((r_pred - r_tgt).abs().sum((-1, -2)))
    fk = forward_kinematics_torch(skel, r_pred, p_pred)
    l_fk = reduce((j_tgt - fk).abs().sum((-1, -2)))
    total = (weights.w_trans * l_trans + weights.w_joint * l_joint
             + weights.w_rot * l_rot + weights.w_fk * l_fk)
    return {"total": total, "trans": l_trans, "joint": l_joint, "rot": l_rot,
            "fk": l_fk, "frames": n}


def sequence_loss(pred: MotionSequence, target: MotionSequence,
                  weights: LossWeights | tuple, skeleton: Skeleton,
                  include_first_frame: bool = False) -> dict:
    """Reference (numpy) evaluation of the training loss for two sequences.

    Frame 0 is excluded by default: it is clamped to the start pose and
    never supervised. Returns per-term means and the weighted total.
    """
    if not isinstance(weights, LossWeights):
        weights = LossWeights(*weights)
    if len(pred) != len(target):
        raise ValueError(f"length mismatch: {len(pred)} vs {len(target)}")
    start = 0 if include_first_frame else 1
    if len(pred) <= start:
        raise ValueError("no supervised frames")

    dp = np.abs(pred.roots[start:] - target.roots[start:]).sum(axis=1)
    dj = np.abs(pred.joints[start:] - target.joints[start:]).sum(axis=(1, 2))
    dr = np.abs(pred.rot6d[start:] - target.rot6d[start:]).sum(axis=(1, 2))
    fk = forward_kinematics_batch(skeleton, pred.rot6d[start:], pred.roots[start:])
    dfk = np.abs(target.joints[start:] - fk).sum(axis=(1, 2))
    terms = {
        "trans": float(dp.mean()),
        "joint": float(dj.mean()),
        "rot": float(dr.mean()),
        "fk": float(dfk.mean()),
    }
    terms["total"] = (weights.w_trans * terms["trans"] + weights.w_joint * terms["joint"]
                      + weights.w_rot * terms["rot"] + weights.w_fk * terms["fk"])
    return terms


@dataclass
class TrainingSample:
    """One refinement example: initialized input, raw scene rows, target."""

    pose: np.ndarray      # (T, 201) initialized poses
    raw: np.ndarray       # (T, raw_dim) encoder rows
    target: np.ndarray    # (T, 201) ground-truth poses
    seq_id: str = ""


def build_training_samples(sequences: list[MotionSequence], scenes: dict[str, SceneModel],
                           encoder: SceneEncoderBase, constant_pose: ConstantPose,
                           skeleton: Skeleton) -> list[TrainingSample]:
    """Initialize every reaching sequence and precompute its scene rows.

    The encoder is re-fit per scene; rows are cached per sample because the
    initialization (and therefore the encoding input) is fixed.
    """
    by_scene: dict[str, list[MotionSequence]] = {}
    for seq in sequences:
        if seq.label != "reaching" or seq.goal is None:
            continue
        by_scene.setdefault(seq.scene_id, []).append(seq)

    samples = []
    for scene_id in sorted(by_scene):
        if scene_id not in scenes:
            raise KeyError(f"no scene model for scene_id {scene_id!r}")
        encoder.fit(scenes[scene_id])
        for seq in by_scene[scene_id]:
            init = initialize_motion(seq[0], seq.goal, len(seq), constant_pose, skeleton,
                                     fps=seq.fps, scene_id=seq.scene_id)
            raw = encoder.transform(init)
            samples.append(TrainingSample(pose=init.flatten(), raw=raw,
                                          target=seq.flatten(), seq_id=seq.seq_id))
    if not samples:
        raise ValueError("no reaching sequences with goals to train on")
    return samples


def _collate(batch: list[TrainingSample], raw_dim: int, dtype):
    B = len(batch)
    T = max(s.pose.shape[0] for s in batch)
    pose = torch.zeros(B, T, POSE_DIM, dtype=dtype)
    raw = torch.zeros(B, T, raw_dim, dtype=dtype)
    target = torch.zeros(B, T, POSE_DIM, dtype=dtype)
    valid = torch.zeros(B, T, dtype=torch.bool)
    for i, s in enumerate(batch):
        t = s.pose.shape[0]
        pose[i, :t] = torch.from_numpy(s.pose).to(dtype)
        raw[i, :t] = torch.from_numpy(s.raw).to(dtype)
        target[i, :t] = torch.from_numpy(s.target).to(dtype)
        valid[i, :t] = True
    sup = valid.clone()
    sup[:, 0] = False  # frame 0 is clamped, never supervised
    return pose, raw, target, valid, sup


def train_refiner(net: RefinerNet, samples: list[TrainingSample], train_config: TrainConfig,
                  weights: LossWeights, skeleton: Skeleton,
                  deterministic: bool = True) -> list[dict]:
    """Run the AdamW schedule over the samples; returns the per-epoch log.

    Raises:
        TrainingDivergedError: on a non-finite loss (caller decides whether
            to checkpoint the current parameters).
    """
    configure_threads(deterministic)
    skel = SkeletonTensors(skeleton, dtype=next(net.parameters()).dtype)
    opt = torch.optim.AdamW(net.parameters(), lr=train_config.lr,
                            weight_decay=train_config.weight_decay)
    rng = np.random.default_rng(train_config.seed)
    dtype = next(net.parameters()).dtype
    log: list[dict] = []
    for epoch in range(train_config.epochs):
        lr = train_config.lr_at_epoch(epoch)
        for group in opt.param_groups:
            group["lr"] = lr
        order = rng.permutation(len(samples))
        sums = {"total": 0.0, "trans": 0.0, "joint": 0.0, "rot": 0.0, "fk": 0.0}
        frames = 0
        for lo in range(0, len(samples), train_config.batch_size):
            batch = [samples[i] for i in order[lo:lo + train_config.batch_size]]
            pose, raw, target, valid, sup = _collate(batch, net.raw_dim, dtype)
            pred = net(pose, raw, key_mask=valid)
            terms = loss_terms_torch(pred, target, sup, weights, skel)
            loss = terms["total"]
            if not torch.isfinite(loss):
                raise TrainingDivergedError(epoch)
            opt.zero_grad()
            loss.backward()
            opt.step()
            n = int(terms["frames"].item())
            frames += n
            for key in sums:
                sums[key] += float(terms[key].item()) * n
        row = {"epoch": epoch, "lr": lr}
        row.update({k: (sums[k] / frames if frames else 0.0) for k in sums})
        log.append(row)
    return log


def write_training_log(path: str | Path, log: list[dict]) -> None:
    fields = ["epoch", "lr", "total", "trans", "joint", "rot", "fk"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in log:
            writer.writerow({k: row[k] for k in fields})


def refine(net: RefinerNet, init_seq: MotionSequence, features: np.ndarray,
           mask: np.ndarray | None = None) -> MotionSequence:
    """Run the refiner on one initialized sequence.

    Frame 0 of the output is overwritten with the input start pose (it is
    a constraint, not a prediction). Masked frames are excluded from
    attention; their output rows are meaningless padding.
    """
    T = len(init_seq)
    if T > net.max_frames:
        raise ValueError(f"sequence length {T} exceeds the model maximum {net.max_frames}")
    features = np.asarray(features, dtype=np.float64)
    if features.shape != (T, net.raw_dim):
        raise ValueError(f"features: expected ({T}, {net.raw_dim}), got {features.shape}")
    if mask is None:
        mask = np.ones(T, dtype=bool)
    dtype = next(net.parameters()).dtype
    pose = torch.from_numpy(init_seq.flatten()).to(dtype)[None]
    raw = torch.from_numpy(features).to(dtype)[None]
    key_mask = torch.from_numpy(np.asarray(mask, dtype=bool))[None]
    with torch.no_grad():
        out = net(pose, raw, key_mask=key_mask)[0].double().numpy()
    seq = MotionSequence.from_flat(out, fps=init_seq.fps, goal=init_seq.goal,
                                   label=init_seq.label, scene_id=init_seq.scene_id,
                                   seq_id=init_seq.seq_id, task_id=init_seq.task_id)
    seq.roots[0] = init_seq.roots[0]
    seq.joints[0] = init_seq.joints[0]
    seq.rot6d[0] = init_seq.rot6d[0]
    return seq


class ReachingMotionGenerator(BaseEstimator):
    """Scene-conditioned reaching-motion model with a fit/predict surface.

    fit() learns the refiner from (sequences, scenes); predict() maps a
    start pose, goal, and scene to a full motion sequence. ``encoder``
    picks the scene pathway: "bps", "pointfeat", or "none" (the no-scene
    ablation, which feeds a zero feature vector).
    """

    def __init__(self, encoder: str = "bps", d_model: int = 128, n_heads: int = 4,
                 n_blocks: int = 4, d_ff: int = 256, bps_hidden: int = 512,
                 max_frames: int = MAX_FRAMES, epochs: int = 1800, batch_size: int = 8,
                 lr: float = 1e-4, lr_decay: float = 0.3, lr_decay_every: int = 1000,
                 weight_decay: float = 0.01, w_trans: float = 1.0, w_joint: float = 1.0,
                 w_rot: float = 1.0, w_fk: float = 1.0, basis_seed: int = 0,
                 provider_seed: int = 0, seed: int = 0, deterministic: bool = True,
                 skeleton: Skeleton | None = None):
        self.encoder = encoder
        self.d_model = d_model
        self.n_heads = n_heads
        self.n_blocks = n_blocks
        self.d_ff = d_ff
        self.bps_hidden = bps_hidden
        self.max_frames = max_frames
        self.epochs = epochs
        self.batch_size = batch_size
        self.lr = lr
        self.lr_decay = lr_decay
        self.lr_decay_every = lr_decay_every
        self.weight_decay = weight_decay
        self.w_trans = w_trans
        self.w_joint = w_joint
        self.w_rot = w_rot
        self.w_fk = w_fk
        self.basis_seed = basis_seed
        self.provider_seed = provider_seed
        self.seed = seed
        self.deterministic = deterministic
        self.skeleton = skeleton

    # -- config plumbing ---------------------------------------------------

    def _skeleton(self) -> Skeleton:
        return self.skeleton if self.skeleton is not None else Skeleton.from_template()

    def model_config(self) -> ModelConfig:
        return ModelConfig(d_model=self.d_model, n_heads=self.n_heads,
                           n_blocks=self.n_blocks, d_ff=self.d_ff,
                           bps_hidden=self.bps_hidden, max_frames=self.max_frames)

    def train_config(self) -> TrainConfig:
        return TrainConfig(epochs=self.epochs, batch_size=self.batch_size, lr=self.lr,
                           lr_decay=self.lr_decay, lr_decay_every=self.lr_decay_every,
                           weight_decay=self.weight_decay, seed=self.seed)

    def loss_weights(self) -> LossWeights:
        return LossWeights(self.w_trans, self.w_joint, self.w_rot, self.w_fk)

    def run_config(self) -> RunConfig:
        return RunConfig(encoder=self.encoder, model=self.model_config(),
                         train=self.train_config(), loss=self.loss_weights(),
                         basis_seed=self.basis_seed, provider_seed=self.provider_seed,
                         deterministic=self.deterministic)

    def _build_encoder(self) -> SceneEncoderBase:
        return make_encoder(self.encoder, skeleton=self._skeleton(),
                            basis_seed=self.basis_seed, provider_seed=self.provider_seed)

    def _build_net(self, raw_dim: int) -> RefinerNet:
        torch.manual_seed(self.seed)
        return RefinerNet(self.model_config(), raw_dim=raw_dim,
                          use_bps_head=(self.encoder == "bps"))

    # -- training ----------------------------------------------------------

    def fit(self, sequences: list[MotionSequence], scenes: dict[str, SceneModel],
            constant_pose: ConstantPose | None = None) -> "ReachingMotionGenerator":
        skeleton = self._skeleton()
        self.skeleton_ = skeleton
        self.constant_pose_ = (constant_pose if constant_pose is not None
                               else compute_constant_pose(sequences, skeleton))
        self.encoder_ = self._build_encoder()
        samples = build_training_samples(sequences, scenes, self.encoder_,
                                         self.constant_pose_, skeleton)
        self.net_ = self._build_net(self.encoder_.raw_dim)
        self.log_ = train_refiner(self.net_, samples, self.train_config(),
                                  self.loss_weights(), skeleton,
                                  deterministic=self.deterministic)
        return self

    # -- inference ---------------------------------------------------------

    def predict(self, x0: PoseState, goal, scene: SceneModel, n_frames: int,
                check_reachable: bool = True) -> MotionSequence:
        """generate: initialize -> encode per frame -> refine."""
        if not hasattr(self, "net_"):
            raise RuntimeError("model is not fitted; call fit() or load a checkpoint")
        if check_reachable and not is_reachable(scene, goal):
            raise ValueError("goal is unreachable in this scene")
        init = initialize_motion(x0, goal, n_frames, self.constant_pose_, self._skeleton(),
                                 scene_id=scene.scene_id)
        raw = self.encoder_.fit(scene).transform(init)
        return refine(self.net_, init, raw)

    # -- persistence ---------------------------------------------------------

    def save(self, path: str | Path) -> None:
        if not hasattr(self, "net_"):
            raise RuntimeError("model is not fitted; nothing to save")
        params = {k: v for k, v in self.get_params().items() if k != "skeleton"}
        header = {
            "kind": "refiner-checkpoint",
            "version": 1,
            "config": params,
            "encoder": self.encoder,
            "raw_dim": self.net_.raw_dim,
            "skeleton": self._skeleton().to_dict(),
            "skeleton_hash": self._skeleton().content_hash(),
            "config_hash": self.run_config().config_hash(),
            "provider": (self.encoder_.provider_.to_dict()
                         if self.encoder == "pointfeat" else None),
        }
        arrays = {f"param/{k}": v.detach().cpu().numpy()
                  for k, v in self.net_.state_dict().items()}
        arrays["constant/rot6d"] = self.constant_pose_.rot6d
        arrays["constant/wrist_offset"] = self.constant_pose_.wrist_offset
        if hasattr(self.encoder_, "basis_"):
            arrays["basis/points"] = self.encoder_.basis_.points
        write_container(path, CHECKPOINT_MAGIC, header, arrays)

    @classmethod
    def load(cls, path: str | Path) -> "ReachingMotionGenerator":
        header, arrays = read_container(path, CHECKPOINT_MAGIC)
        if header.get("kind") != "refiner-checkpoint" or header.get("version") != 1:
            raise FileFormatError(f"{path}: not a v1 refiner checkpoint")
        gen = cls(**header["config"])
        gen.skeleton_ = Skeleton.from_dict(header["skeleton"])
        gen.skeleton = gen.skeleton_
        gen.constant_pose_ = ConstantPose(rot6d=arrays["constant/rot6d"],
                                          wrist_offset=arrays["constant/wrist_offset"])
        gen.encoder_ = gen._build_encoder()
        if "basis/points" in arrays and hasattr(gen.encoder_, "basis_"):
            gen.encoder_.set_basis(CylinderBasis(points=arrays["basis/points"],
                                                 seed=gen.basis_seed))
        if header.get("provider") and hasattr(gen.encoder_, "provider_"):
            gen.encoder_.provider_ = RandomFourierFeatureProvider.from_dict(header["provider"])
        gen.net_ = gen._build_net(header["raw_dim"])
        state = {k[len("param/"):]: torch.from_numpy(v.copy())
                 for k, v in arrays.items() if k.startswith("param/")}
        gen.net_.load_state_dict(state)
        gen.log_ = []
        return gen

    def checkpoint_header(self) -> dict:
        return {"skeleton_hash": self._skeleton().content_hash(),
                "config_hash": self.run_config().config_hash()}
