"""Self-distillation with context asymmetry.

A teacher sees a long, context-rich clip; the student sees a reduced view of
it (a frame subset, a crop, or photometric jitter) and regresses the
teacher's stop-gradient predictions on the shared frames. The teacher trails
the student as an exponential moving average after every optimizer step.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import torch

from . import geometry
from .model import (
    GROUPS, GeoPrediction, ModelArch, ParamTree, check_same_structure, clone_tree, config_hash, forward,
    frame_importance_scores, load_checkpoint, save_checkpoint, tree_items, tree_map,
)
from .scene import FrameSequence, read_sequence

log = logging.getLogger(__name__)

ASYMMETRY_MODES = ("dropping", "cropping", "aug_stu", "aug_all")
SELECTION_SCHEMES = ("random", "keep_top", "keep_bottom")
TEACHER_MODES = ("online", "offline")
FREEZE_POLICIES = {
    "freeze_C": ("camera_head",),
    "freeze_D": ("depth_head",),
    "freeze_A": ("aggregator", "encoder"),
    "freeze_CD": ("camera_head", "depth_head"),
    "train_all": (),
}
LOSS_COLUMNS = ("step", "total", "depth_term", "camera_term", "feat_term", "lr")


class TrainingError(RuntimeError):
    pass


@dataclass
class LRSchedule:
    warmup_frac: float = 0.05
    lr_start: float = 1e-8
    lr_peak: float = 1e-5
    lr_end: float = 1e-8


@dataclass
class AugParams:
    brightness: float = 0.4
    contrast: float = 0.4
    saturation: float = 0.4
    grayscale_p: float = 0.2
    crop_area: tuple = (0.7, 0.9)


@dataclass
class DistillConfig:
    asymmetry_mode: str = "dropping"
    selection_scheme: str = "random"
    teacher_len_range: tuple = (8, 16)
    student_len_range: tuple = (2, 6)
    ema_decay: float = 0.995
    teacher_mode: str = "online"
    freeze_policy: str = "freeze_C"
    feat_weight: float = 0.0
    feat_layers: tuple = (1, 3)
    attention_layer: int = -1
    mix_weight: float = 0.5
    epochs: int = 10
    steps_per_epoch: int = 20
    batch_size: int = 2
    lr: LRSchedule = field(default_factory=lambda: LRSchedule(lr_start=1e-6, lr_peak=5e-5, lr_end=1e-6))
    adam_betas: tuple = (0.9, 0.999)
    adam_eps: float = 1e-8
    huber_delta: float = 0.1
    aug: AugParams = field(default_factory=AugParams)
    match_student_frames: bool = False  # non-dropping modes: clip length drawn from student_len_range
    num_heads: int = 4
    seed: int = 0

    def __post_init__(self):
        if isinstance(self.lr, dict):
            self.lr = LRSchedule(**self.lr)
        if isinstance(self.aug, dict):
            self.aug = AugParams(**{k: tuple(v) if isinstance(v, list) else v for k, v in self.aug.items()})
        for name in ("teacher_len_range", "student_len_range", "feat_layers", "adam_betas"):
            setattr(self, name, tuple(getattr(self, name)))
        (nl, nh), (ml, mh) = self.student_len_range, self.teacher_len_range
        if not (2 <= nl <= nh <= ml <= mh):
            raise ValueError(f"need 2 <= n_l <= n_h <= m_l <= m_h, got n={self.student_len_range} "
                             f"m={self.teacher_len_range}")
        if not 0.0 <= self.ema_decay <= 1.0:
            raise ValueError("ema_decay must lie in [0, 1]")
        if self.feat_weight < 0:
            raise ValueError("feat_weight must be >= 0")
        if self.asymmetry_mode not in ASYMMETRY_MODES:
            raise ValueError(f"unknown asymmetry_mode {self.asymmetry_mode!r}")
        if self.selection_scheme not in SELECTION_SCHEMES:
            raise ValueError(f"unknown selection_scheme {self.selection_scheme!r}")
        if self.teacher_mode not in TEACHER_MODES:
            raise ValueError(f"unknown teacher_mode {self.teacher_mode!r}")
        if self.teacher_mode == "offline" and self.ema_decay != 1.0:
            raise ValueError("offline teacher mode requires ema_decay = 1")
        if self.freeze_policy not in FREEZE_POLICIES:
            raise ValueError(f"unknown freeze_policy {self.freeze_policy!r}")
        if self.epochs < 0 or self.steps_per_epoch < 0 or self.batch_size < 1:
            raise ValueError("epochs/steps_per_epoch must be >= 0 and batch_size >= 1")

    @property
    def total_steps(self) -> int:
        return self.epochs * self.steps_per_epoch

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    @classmethod
    def from_dict(cls, d: dict) -> "DistillConfig":
        d = dict(d)
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown distill config keys: {sorted(unknown)}")
        if d.get("teacher_mode") == "offline" and "ema_decay" not in d:
            d["ema_decay"] = 1.0
        return cls(**d)

    @classmethod
    def full(cls, **overrides) -> "DistillConfig":
        """Budgets of the full-scale recipe (long clips, 20 x 50 steps, 1e-5 peak LR)."""
        base = cls(teacher_len_range=(24, 64), student_len_range=(2, 12), epochs=20, steps_per_epoch=50,
                   lr=LRSchedule())
        return replace(base, **overrides)


@dataclass
class PseudoTarget:
    depth: torch.Tensor  # (n, H, W)
    quats: torch.Tensor  # (n, 4), frame 0 = identity
    trans: torch.Tensor  # (n, 3)
    features: torch.Tensor | None = None  # (L, n, D)
    mask: torch.Tensor | None = None  # (n, H, W) bool; None = all pixels


@dataclass
class TrainState:
    student: ParamTree
    teacher: ParamTree
    opt_m: ParamTree
    opt_v: ParamTree
    global_step: int = 0
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))
    loss_history: list = field(default_factory=list)

    @classmethod
    def from_params(cls, params: ParamTree, seed: int = 0, teacher: ParamTree | None = None) -> "TrainState":
        student = clone_tree(params)
        teacher = clone_tree(params if teacher is None else teacher)
        check_same_structure(student, teacher)
        zeros = tree_map(torch.zeros_like, student)
        return cls(student, teacher, zeros, tree_map(torch.zeros_like, student), 0, np.random.default_rng(seed))

    @property
    def optimizer_state(self) -> dict:
        return {"m": self.opt_m, "v": self.opt_v, "step": self.global_step}


# --- inputs --------------------------------------------------------------


def build_teacher_input(clip: FrameSequence, cfg: DistillConfig, rng: np.random.Generator):
    """Stride-sample ``m ~ U[m_l, m_h]`` frames with a random phase."""
    L = len(clip)
    lo, hi = cfg.teacher_len_range
    if cfg.match_student_frames and cfg.asymmetry_mode != "dropping":
        lo, hi = cfg.student_len_range
    if L < lo:
        raise ValueError(f"clip {clip.seq_id} has {L} frames, fewer than m_l={lo}")
    m = min(int(rng.integers(lo, hi + 1)), L)
    stride = L // m
    span = (m - 1) * stride + 1
    phase = int(rng.integers(0, L - span + 1))
    idx = phase + stride * np.arange(m)
    return clip.frames[idx], idx


def select_student_frames(m: int, cfg: DistillConfig, scores=None, rng: np.random.Generator | None = None,
                          n: int | None = None) -> np.ndarray:
    """Pick the student's sorted frame subset out of ``m`` teacher frames.

    ``scores`` covers teacher frames ``1..m-1``; score-based schemes always
    keep frame 0 and fill the rest by score (ties go to the lower index).
    """
    if n is None:
        n = int(rng.integers(cfg.student_len_range[0], cfg.student_len_range[1] + 1))
    if n > m:
        raise ValueError(f"student length {n} exceeds teacher length {m}")
    if n < 1:
        raise ValueError("student length must be >= 1")
    scheme = cfg.selection_scheme
    if scheme == "random":
        return np.sort(rng.choice(m, size=n, replace=False))
    if scores is None:
        raise ValueError(f"selection scheme {scheme!r} requires frame scores")
    scores = np.asarray(scores, dtype=np.float64)
    if scores.shape != (m - 1,):
        raise ValueError(f"expected {m - 1} scores for frames 1..{m - 1}, got {scores.shape}")
    frames = np.arange(1, m)
    key = -scores if scheme == "keep_top" else scores
    order = np.lexsort((frames, key))  # primary: key, secondary: index
    chosen = frames[order[: n - 1]]
    return np.sort(np.concatenate([[0], chosen])).astype(np.int64)


def _gray(x: np.ndarray) -> np.ndarray:
    return x @ np.array([0.299, 0.587, 0.114], dtype=x.dtype)


def photometric_jitter(frames: np.ndarray, rng: np.random.Generator, aug: AugParams) -> np.ndarray:
    out = np.array(frames, dtype=np.float32, copy=True)
    for i in range(out.shape[0]):
        x = out[i]
        b = rng.uniform(1 - aug.brightness, 1 + aug.brightness)
        c = rng.uniform(1 - aug.contrast, 1 + aug.contrast)
        s = rng.uniform(1 - aug.saturation, 1 + aug.saturation)
        gray_draw = rng.uniform()
        if b != 1.0:
            x = x * np.float32(b)
        if c != 1.0:
            mu = _gray(x).mean()
            x = (x - mu) * np.float32(c) + mu
        if s != 1.0:
            g = _gray(x)[..., None]
            x = (x - g) * np.float32(s) + g
        if gray_draw < aug.grayscale_p:
            x = np.repeat(_gray(x)[..., None], 3, axis=-1)
        out[i] = np.clip(x, 0.0, 1.0)
    return out


def sample_crop_boxes(S: int, H: int, W: int, rng: np.random.Generator, area_range=(0.7, 0.9)) -> np.ndarray:
    """Per-frame ``(y0, x0, h, w)`` crops covering a fraction of the image area."""
    boxes = np.empty((S, 4), dtype=np.int64)
    for i in range(S):
        side = math.sqrt(rng.uniform(*area_range))
        h = min(H, max(1, int(round(H * side))))
        w = min(W, max(1, int(round(W * side))))
        boxes[i] = (int(rng.integers(0, H - h + 1)), int(rng.integers(0, W - w + 1)), h, w)
    return boxes


def crop_resize(x: np.ndarray, boxes: np.ndarray) -> np.ndarray:
    """Bilinearly resample each crop back to full size; a full-frame box is the identity."""
    S, H, W = x.shape[:3]
    out = np.empty_like(x)
    for i, (y0, x0, h, w) in enumerate(boxes):
        if (y0, x0, h, w) == (0, 0, H, W):
            out[i] = x[i]
            continue
        ys = np.clip(y0 + (np.arange(H) + 0.5) * (h / H) - 0.5, 0, H - 1)
        xs = np.clip(x0 + (np.arange(W) + 0.5) * (w / W) - 0.5, 0, W - 1)
        yl, xl = np.floor(ys).astype(int), np.floor(xs).astype(int)
        yh, xh = np.minimum(yl + 1, H - 1), np.minimum(xl + 1, W - 1)
        wy, wx = (ys - yl)[:, None], (xs - xl)[None, :]
        if x.ndim == 4:
            wy, wx = wy[..., None], wx[..., None]
        img = x[i]
        top = img[yl][:, xl] * (1 - wx) + img[yl][:, xh] * wx
        bot = img[yh][:, xl] * (1 - wx) + img[yh][:, xh] * wx
        out[i] = top * (1 - wy) + bot * wy
    return out


def apply_asymmetry(frames: np.ndarray, mode: str, rng: np.random.Generator, aug: AugParams | None = None):
    """Photometric (``"aug"``) or crop (``"crop"``) perturbation of a frame stack."""
    aug = aug or AugParams()
    if mode == "aug":
        return photometric_jitter(frames, rng, aug)
    if mode == "crop":
        S, H, W = frames.shape[:3]
        return crop_resize(np.asarray(frames), sample_crop_boxes(S, H, W, rng, aug.crop_area))
    raise ValueError(f"unknown asymmetry mode {mode!r}; frame dropping is done by select_student_frames")


# --- targets and losses --------------------------------------------------


def reanchor_poses(quats: np.ndarray, trans: np.ndarray, k: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Express poses relative to pose ``k``: ``P_i ∘ P_k⁻¹``."""
    qk_inv, tk_inv = geometry.invert(quats[k], trans[k])
    q_out = np.empty_like(quats, dtype=np.float64)
    t_out = np.empty_like(trans, dtype=np.float64)
    for i in range(len(quats)):
        q_out[i], t_out[i] = geometry.compose(quats[i], trans[i], qk_inv, tk_inv)
    q_out[k], t_out[k] = (1.0, 0.0, 0.0, 0.0), 0.0
    return q_out, t_out


def make_pseudo_target(teacher_pred: GeoPrediction, student_indices) -> PseudoTarget:
    idx = np.asarray(student_indices, dtype=np.int64)
    S = len(teacher_pred)
    if idx.size == 0 or idx.min() < 0 or idx.max() >= S:
        raise IndexError(f"student indices {idx.tolist()} out of range for {S} teacher frames")
    dtype = teacher_pred.depth.dtype
    q = teacher_pred.quats.detach().double().numpy()[idx]
    t = teacher_pred.trans.detach().double().numpy()[idx]
    if idx[0] != 0:
        q, t = reanchor_poses(q, t, 0)
    feats = None
    if teacher_pred.features is not None:
        feats = teacher_pred.features.detach()[:, torch.from_numpy(idx)].clone()
    return PseudoTarget(
        depth=teacher_pred.depth.detach()[torch.from_numpy(idx)].clone(),
        quats=torch.from_numpy(q).to(dtype),
        trans=torch.from_numpy(t).to(dtype),
        features=feats,
    )


def gt_target(seq: FrameSequence, dtype=torch.float32) -> PseudoTarget:
    """Supervised target from ground truth, re-anchored to the first frame."""
    if not seq.has_labels:
        raise ValueError(f"sequence {seq.seq_id} has no ground truth")
    rows = seq.gt_poses.astype(np.float64)
    q, t = reanchor_poses(geometry.normalize_quat(rows[:, :4]), rows[:, 4:], 0)
    depth = torch.from_numpy(seq.gt_depth.astype(np.float32)).to(dtype)
    mask = depth > 0
    return PseudoTarget(depth=torch.where(mask, depth, torch.ones_like(depth)), quats=torch.from_numpy(q).to(dtype),
                        trans=torch.from_numpy(t).to(dtype), mask=mask)


def _quat_mul_t(a: torch.Tensor, b: torch.Tensor) -> torch.Tensor:
    aw, ax, ay, az = a.unbind(-1)
    bw, bx, by, bz = b.unbind(-1)
    return torch.stack([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ], -1)


def _safe_norm(x: torch.Tensor) -> torch.Tensor:
    sq = (x**2).sum(-1)
    pos = sq > 0
    return torch.where(pos, torch.sqrt(torch.where(pos, sq, torch.ones_like(sq))), torch.zeros_like(sq))


def geodesic_angle(q1: torch.Tensor, q2: torch.Tensor) -> torch.Tensor:
    """Rotation angle (radians) between unit quaternions, invariant to q -> -q."""
    conj = q1 * torch.tensor([1.0, -1.0, -1.0, -1.0], dtype=q1.dtype)
    rel = _quat_mul_t(conj, q2)
    return 2.0 * torch.atan2(_safe_norm(rel[..., 1:]), rel[..., 0].abs())


def _huber(x: torch.Tensor, delta: float) -> torch.Tensor:
    a = x.abs()
    return torch.where(a <= delta, 0.5 * x**2, delta * (a - 0.5 * delta))


def distillation_loss(student_pred: GeoPrediction, target: PseudoTarget, gamma: float = 0.0,
                      feat_layers=(1, 3), huber_delta: float = 0.1):
    """Output-level distillation plus optional feature matching.

    Returns the scalar total and a float breakdown of its terms.
    """
    if gamma < 0:
        raise ValueError("gamma must be >= 0")
    if student_pred.depth.shape != target.depth.shape:
        raise ValueError(f"depth shapes differ: {tuple(student_pred.depth.shape)} vs {tuple(target.depth.shape)}")
    for name, t in (("target depth", target.depth), ("target quats", target.quats), ("target trans", target.trans)):
        if not torch.isfinite(t).all():
            raise ValueError(f"non-finite {name}")
    if (target.depth <= 0).any() and target.mask is None:
        raise ValueError("target depth must be positive")
    log_diff = (torch.log(student_pred.depth) - torch.log(target.depth)).abs()
    if target.mask is not None:
        m = target.mask.to(log_diff.dtype)
        depth_term = (log_diff * m).sum() / m.sum().clamp_min(1.0)
    else:
        depth_term = log_diff.mean()

    if len(student_pred) > 1:
        rot = geodesic_angle(student_pred.quats[1:], target.quats[1:])
        tr = _huber(student_pred.trans[1:] - target.trans[1:], huber_delta).sum(-1)
        camera_term = (rot + tr).sum()
    else:
        camera_term = torch.zeros((), dtype=depth_term.dtype)

    feat_term = torch.zeros((), dtype=depth_term.dtype)
    if student_pred.features is not None and target.features is not None:
        layers = list(feat_layers)
        fs, ft = student_pred.features[layers], target.features[layers]
        cos = (fs * ft).sum(-1) / (_safe_norm(fs) * _safe_norm(ft)).clamp_min(1e-12)
        feat_term = (1.0 - cos).mean()
    elif gamma > 0:
        raise ValueError("feature matching needs pooled features on both student and target")

    total = depth_term + camera_term
    if gamma > 0:
        total = total + gamma * feat_term
    breakdown = {"depth_term": depth_term.item(), "camera_term": camera_term.item(), "feat_term": feat_term.item()}
    return total, breakdown


# --- optimisation --------------------------------------------------------


def ema_update(teacher: ParamTree, student: ParamTree, decay: float) -> ParamTree:
    """Per-array convex combination ``decay * teacher + (1 - decay) * student``.

    Computed in float64, rounded to the parameter dtype and clamped to the
    interval spanned by the two inputs, so every coordinate stays on the
    segment between the old teacher and the student.
    """
    if not 0.0 <= decay <= 1.0:
        raise ValueError("EMA decay must lie in [0, 1]")
    check_same_structure(teacher, student)
    if decay == 1.0:
        return clone_tree(teacher)
    if decay == 0.0:
        return clone_tree(student)

    def mix(t, s):
        exact = decay * t.double() + (1.0 - decay) * s.double()
        return torch.clamp(exact.to(t.dtype), torch.minimum(t, s), torch.maximum(t, s))

    return tree_map(mix, teacher, student)


def lr_at(step: int, total_steps: int, schedule: LRSchedule) -> float:
    """Linear warmup from ``lr_start`` to ``lr_peak``, then cosine decay to ``lr_end``."""
    if total_steps < 1 or not 0 <= step <= total_steps:
        raise ValueError(f"step {step} outside [0, {total_steps}]")
    warm = min(math.ceil(schedule.warmup_frac * total_steps), total_steps)
    if step <= warm and warm > 0 and step < total_steps:
        return schedule.lr_start + (schedule.lr_peak - schedule.lr_start) * step / warm
    if step >= total_steps:
        return schedule.lr_end
    frac = (step - warm) / (total_steps - warm)
    return schedule.lr_end + 0.5 * (schedule.lr_peak - schedule.lr_end) * (1.0 + math.cos(math.pi * frac))


def apply_freeze(grads: ParamTree, policy: str) -> ParamTree:
    if policy not in FREEZE_POLICIES:
        raise ValueError(f"unknown freeze policy {policy!r}")
    frozen = FREEZE_POLICIES[policy]
    return {g: {n: (torch.zeros_like(v) if g in frozen else v) for n, v in grads[g].items()} for g in grads}


def adam_update(state: TrainState, grads: ParamTree, lr: float, betas=(0.9, 0.999), eps: float = 1e-8,
                frozen=()) -> None:
    """In-place Adam step on ``state.student``; frozen groups are not touched at all."""
    b1, b2 = betas
    t = state.global_step + 1
    c1, c2 = 1 - b1**t, 1 - b2**t
    for g, n, p in tree_items(state.student):
        if g in frozen:
            continue
        gr = grads[g][n]
        m = state.opt_m[g][n].mul_(b1).add_(gr, alpha=1 - b1)
        v = state.opt_v[g][n].mul_(b2).addcmul_(gr, gr, value=1 - b2)
        if lr != 0.0:
            p.sub_(lr * (m / c1) / (torch.sqrt(v / c2) + eps))


def _leaves(params: ParamTree) -> tuple[ParamTree, list]:
    live = tree_map(lambda t: t.detach().requires_grad_(True), params)
    return live, [v for _, _, v in tree_items(live)]


def _grad_tree(params: ParamTree, grads: list) -> ParamTree:
    it = iter(grads)
    return {g: {n: next(it) for n in params[g]} for g in params}


def distill_clip_loss(student: ParamTree, teacher: ParamTree, clip: FrameSequence, cfg: DistillConfig,
                      rng: np.random.Generator):
    """Build inputs for one clip, run both networks and return the student loss."""
    frames_t, _ = build_teacher_input(clip, cfg, rng)
    teacher_in = frames_t
    if cfg.asymmetry_mode == "aug_all":
        teacher_in = photometric_jitter(frames_t, rng, cfg.aug)
    need_scores = cfg.asymmetry_mode == "dropping" and cfg.selection_scheme != "random"
    capture = need_scores or cfg.feat_weight > 0
    with torch.no_grad():
        t_pred = forward(teacher, teacher_in, capture_internals=capture, num_heads=cfg.num_heads)
    m = len(frames_t)
    if cfg.asymmetry_mode == "dropping":
        scores = frame_importance_scores(t_pred, cfg.attention_layer, cfg.mix_weight) if need_scores else None
        s_idx = select_student_frames(m, cfg, scores, rng)
    else:
        s_idx = np.arange(m)
    target = make_pseudo_target(t_pred, s_idx)
    student_in = frames_t[s_idx]
    if cfg.asymmetry_mode in ("aug_stu", "aug_all"):
        student_in = photometric_jitter(student_in, rng, cfg.aug)
    elif cfg.asymmetry_mode == "cropping":
        S, H, W = student_in.shape[:3]
        boxes = sample_crop_boxes(S, H, W, rng, cfg.aug.crop_area)
        student_in = crop_resize(student_in, boxes)
        target.depth = torch.from_numpy(crop_resize(target.depth.numpy(), boxes))
    s_pred = forward(student, student_in, capture_internals=cfg.feat_weight > 0, num_heads=cfg.num_heads)
    return distillation_loss(s_pred, target, cfg.feat_weight, cfg.feat_layers, cfg.huber_delta)


def _optimizer_step(state: TrainState, clips, cfg: DistillConfig, clip_loss, lr_schedule_total: int):
    if not clips:
        raise ValueError("train_step needs a nonempty batch")
    live, leaves = _leaves(state.student)
    acc = None
    terms = {"total": 0.0, "depth_term": 0.0, "camera_term": 0.0, "feat_term": 0.0}
    for clip in clips:
        loss, parts = clip_loss(live, clip)
        if not torch.isfinite(loss):
            raise TrainingError(f"non-finite loss at step {state.global_step} on clip {clip.seq_id}: {parts}")
        grads = torch.autograd.grad(loss, leaves, allow_unused=True)
        grads = [torch.zeros_like(l) if g is None else g for g, l in zip(grads, leaves)]
        acc = grads if acc is None else [a + g for a, g in zip(acc, grads)]
        terms["total"] += loss.item() / len(clips)
        for k, v in parts.items():
            terms[k] += v / len(clips)
    grad_tree = apply_freeze(_grad_tree(state.student, [a / len(clips) for a in acc]), cfg.freeze_policy)
    step = min(state.global_step, lr_schedule_total)
    lr = lr_at(step, lr_schedule_total, cfg.lr) if lr_schedule_total > 0 else cfg.lr.lr_peak
    adam_update(state, grad_tree, lr, cfg.adam_betas, cfg.adam_eps, FREEZE_POLICIES[cfg.freeze_policy])
    return lr, terms


def train_step(state: TrainState, clips, cfg: DistillConfig, total_steps: int | None = None) -> TrainState:
    """One self-distillation step over a batch of clips, followed by the EMA update."""
    total = cfg.total_steps if total_steps is None else total_steps
    rng = state.rng

    def clip_loss(live, clip):
        return distill_clip_loss(live, state.teacher, clip, cfg, rng)

    lr, terms = _optimizer_step(state, clips, cfg, clip_loss, total)
    if cfg.teacher_mode == "online":
        state.teacher = ema_update(state.teacher, state.student, cfg.ema_decay)
    state.loss_history.append({"step": state.global_step, **terms, "lr": lr})
    state.global_step += 1
    return state


def supervised_step(state: TrainState, clips, cfg: DistillConfig, total_steps: int | None = None,
                    len_range: tuple | None = None) -> TrainState:
    """Ground-truth step: stride-sampled clip, same losses, no teacher or asymmetry."""
    total = cfg.total_steps if total_steps is None else total_steps
    rng = state.rng
    sample_cfg = cfg if len_range is None else replace(cfg, teacher_len_range=tuple(len_range),
                                                       student_len_range=(2, 2))

    def clip_loss(live, clip):
        _, idx = build_teacher_input(clip, sample_cfg, rng)
        sub = clip.subset(idx)
        target = gt_target(sub, live["encoder"]["patch_w"].dtype)
        pred = forward(live, sub.frames, num_heads=cfg.num_heads)
        return distillation_loss(pred, target, 0.0, cfg.feat_layers, cfg.huber_delta)

    lr, terms = _optimizer_step(state, clips, cfg, clip_loss, total)
    state.loss_history.append({"step": state.global_step, **terms, "lr": lr})
    state.global_step += 1
    return state


# --- runs ----------------------------------------------------------------


def _write_losses(path: Path, history: list) -> None:
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=LOSS_COLUMNS, lineterminator="\n")
        w.writeheader()
        for row in history:
            w.writerow({k: row[k] for k in LOSS_COLUMNS})


def _batches(n_clips: int, batch_size: int, rng: np.random.Generator):
    order: list = []
    while True:
        batch = []
        while len(batch) < batch_size:
            if not order:
                order = list(rng.permutation(n_clips))
            batch.append(int(order.pop(0)))
        yield batch


def run_training(cfg: DistillConfig, clips: list, init_checkpoint, out_dir, step_fn, arch: ModelArch | None = None,
                 on_epoch_end=None, extra_run_info: dict | None = None) -> list[Path]:
    """Shared epoch loop: shuffled clip batches, a checkpoint and loss log per epoch."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if not clips:
        raise ValueError("dataset is empty")
    ckpt = load_checkpoint(init_checkpoint)
    if arch is None and ckpt.metadata.get("arch"):
        arch = ModelArch.from_dict(ckpt.metadata["arch"])
    state = TrainState.from_params(ckpt.params, cfg.seed)
    resolved = cfg.to_dict()
    run_info = {"config": resolved, "config_hash": config_hash(resolved),
                "init_checkpoint": str(init_checkpoint), **(extra_run_info or {})}
    with open(out / "run.json", "w") as f:
        json.dump(run_info, f, indent=2, sort_keys=True)
    batches = _batches(len(clips), cfg.batch_size, state.rng)
    paths = []
    for epoch in range(1, cfg.epochs + 1):
        for _ in range(cfg.steps_per_epoch):
            step_fn(state, [clips[i] for i in next(batches)], cfg)
        path = save_checkpoint(
            out / "checkpoints" / f"epoch_{epoch:03d}", state.student, state.optimizer_state,
            {"step": state.global_step, "epoch": epoch, "config_hash": run_info["config_hash"]},
            teacher=state.teacher, arch=arch)
        paths.append(path)
        _write_losses(out / "losses.csv", state.loss_history)
        log.info("epoch %d/%d step %d loss %.4f", epoch, cfg.epochs, state.global_step,
                 state.loss_history[-1]["total"] if state.loss_history else float("nan"))
        if on_epoch_end is not None:
            on_epoch_end(epoch, path, state)
    _write_losses(out / "losses.csv", state.loss_history)
    return paths


def run_self_improvement(cfg: DistillConfig, dataset, init_checkpoint, out_dir, arch: ModelArch | None = None,
                         on_epoch_end=None) -> list[Path]:
    """Self-improvement on unlabeled clips; label arrays are never read from disk."""
    clips = [read_sequence(p, load_labels=False) for p in dataset]
    if any(c.has_labels for c in clips):
        raise TrainingError("self-improvement clips must be loaded without labels")
    return run_training(cfg, clips, init_checkpoint, out_dir, train_step, arch, on_epoch_end,
                        {"mode": "selfevo", "dataset": [str(p) for p in dataset]})


__all__ = [
    "AugParams", "DistillConfig", "LRSchedule", "PseudoTarget", "TrainState", "TrainingError", "apply_asymmetry",
    "apply_freeze", "build_teacher_input", "distillation_loss", "ema_update", "gt_target", "lr_at",
    "make_pseudo_target", "run_self_improvement", "run_training", "select_student_frames", "supervised_step",
    "train_step", "GROUPS",
]
