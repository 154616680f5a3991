"""Video-depth and camera-pose evaluation.

Depth is aligned per sequence (least-squares scale, or scale and shift)
before Abs Rel and the delta < 1.25 accuracy are computed. Camera accuracy is
measured on every unordered frame pair through relative rotation and
translation-direction angles, summarized as the AUC of the
min(RRA, RTA)-vs-threshold curve.
"""

from __future__ import annotations

import csv
import io
import json
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import torch

from . import geometry

DEPTH_FLOOR = 1e-6
AUC_THRESHOLDS = (5, 15, 30)
REPORT_COLUMNS = ("seq_id", "abs_rel_scale", "delta_scale", "abs_rel_ss", "delta_ss",
                  "auc5", "auc15", "auc30", "n_pairs", "n_valid_px")


class DegenerateFitError(ValueError):
    pass


@dataclass
class DepthMetrics:
    abs_rel: float
    delta_125: float
    alignment: str
    valid_pixel_count: int


@dataclass
class PoseMetrics:
    rot_err: np.ndarray
    trans_err: np.ndarray
    auc: dict


def _masked(pred, gt, mask):
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    mask = (gt > 0) if mask is None else (np.asarray(mask, dtype=bool) & (gt > 0))
    p, g = pred[mask], gt[mask]
    if p.size == 0:
        raise ValueError("no valid pixels to align")
    return p, g


def align_scale(pred_depth, gt_depth, mask=None) -> float:
    p, g = _masked(pred_depth, gt_depth, mask)
    denom = float(np.dot(p, p))
    if denom == 0.0:
        raise DegenerateFitError("all-zero predictions cannot be scale-aligned")
    return float(np.dot(p, g) / denom)


def align_scale_shift(pred_depth, gt_depth, mask=None) -> tuple[float, float]:
    p, g = _masked(pred_depth, gt_depth, mask)
    if p.size < 2:
        raise DegenerateFitError("scale-and-shift fit needs at least two valid pixels")
    pc = p - p.mean()
    var = float(np.dot(pc, pc))
    if var <= 1e-12 * max(1.0, float(np.dot(p, p))):
        raise DegenerateFitError("constant prediction makes the scale-and-shift fit singular")
    s = float(np.dot(pc, g - g.mean()) / var)
    return s, float(g.mean() - s * p.mean())


def depth_metrics(pred_depth, gt_depth, mask=None, alignment: str = "scale") -> DepthMetrics:
    p, g = _masked(pred_depth, gt_depth, mask)
    if alignment == "scale":
        aligned = align_scale(p, g) * p
    elif alignment == "scale_shift":
        s, t = align_scale_shift(p, g)
        aligned = s * p + t
    else:
        raise ValueError(f"unknown alignment {alignment!r}")
    aligned = np.maximum(aligned, DEPTH_FLOOR)
    abs_rel = float(np.mean(np.abs(aligned - g) / g))
    ratio = np.maximum(aligned / g, g / aligned)
    return DepthMetrics(abs_rel, float(np.mean(ratio < 1.25)), alignment, int(g.size))


def _split_poses(poses) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(poses, np.ndarray):
        arr = poses.astype(np.float64)
        return arr[:, :4], arr[:, 4:7]
    q = np.array([p.rotation for p in poses], dtype=np.float64)
    t = np.array([p.translation for p in poses], dtype=np.float64)
    return q, t


def _angle_between(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na < 1e-6 and nb < 1e-6:
        return 0.0
    if na < 1e-6 or nb < 1e-6:
        return 90.0
    c = np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0)
    return float(np.degrees(np.arccos(c)))


def relative_pose_errors(pred_poses, gt_poses, quat_tol: float = 1e-3) -> np.ndarray:
    """Per unordered pair ``(i, j)``: (rotation error, translation-direction error) in degrees.

    Accepts lists of ``CameraPose`` or ``(S, 7)`` arrays of world-to-camera rows.
    """
    qp, tp = _split_poses(pred_poses)
    qg, tg = _split_poses(gt_poses)
    if len(qp) != len(qg):
        raise ValueError(f"pose count mismatch: {len(qp)} predicted vs {len(qg)} ground truth")
    if len(qp) < 2:
        raise ValueError("relative pose errors need at least two frames")
    for q in (qp, qg):
        if np.any(np.abs(np.linalg.norm(q, axis=1) - 1.0) > quat_tol):
            raise ValueError("poses must carry unit quaternions")
    qp, qg = geometry.normalize_quat(qp), geometry.normalize_quat(qg)
    out = []
    for i, j in combinations(range(len(qp)), 2):
        q_rel_p, t_rel_p = geometry.relative(qp[i], tp[i], qp[j], tp[j])
        q_rel_g, t_rel_g = geometry.relative(qg[i], tg[i], qg[j], tg[j])
        rot = float(geometry.quat_angle_deg(q_rel_p, q_rel_g))
        out.append((rot, _angle_between(t_rel_p, t_rel_g)))
    return np.asarray(out, dtype=np.float64).reshape(-1, 2)


def pose_auc(pair_errors, max_thresholds=AUC_THRESHOLDS) -> PoseMetrics:
    err = np.asarray(pair_errors, dtype=np.float64).reshape(-1, 2)
    if err.shape[0] == 0:
        raise ValueError("pose_auc needs at least one pair")
    err = np.clip(err, 0.0, 180.0)
    rot, trans = err[:, 0], err[:, 1]
    auc = {}
    for T in max_thresholds:
        taus = np.arange(1, int(T) + 1)
        rra = (rot[None, :] < taus[:, None]).mean(axis=1)
        rta = (trans[None, :] < taus[:, None]).mean(axis=1)
        auc[int(T)] = float(100.0 * np.minimum(rra, rta).sum() / T)
    return PoseMetrics(rot, trans, auc)


# --- model evaluation ----------------------------------------------------


@dataclass
class EvalConfig:
    stride: int = 1
    alignments: tuple = ("scale", "scale_shift")
    num_heads: int = 4
    max_frames: int | None = None


@dataclass
class MetricReport:
    rows: list = field(default_factory=list)
    mean: dict = field(default_factory=dict)
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"rows": self.rows, "mean": self.mean, "metadata": self.metadata}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
        w.writeheader()
        for r in self.rows:
            w.writerow({k: r[k] for k in REPORT_COLUMNS})
        w.writerow({"seq_id": "__mean__", **{k: self.mean[k] for k in REPORT_COLUMNS[1:]}})
        return buf.getvalue()

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls(rows=list(d["rows"]), mean=dict(d["mean"]), metadata=dict(d.get("metadata", {})))


def subsample_indices(num_frames: int, stride: int, max_frames: int | None = None) -> np.ndarray:
    if stride < 1:
        raise ValueError("stride must be >= 1")
    idx = np.arange(0, num_frames, stride)
    return idx if max_frames is None else idx[:max_frames]


def _predict(params, frames, num_heads):
    from .model import forward

    with torch.no_grad():
        pred = forward(params, frames, num_heads=num_heads)
    return pred.depth_numpy(), pred.pose_rows()


def sequence_row(seq_id: str, pred_depth, pred_poses, gt_depth, gt_poses) -> dict:
    ds = depth_metrics(pred_depth, gt_depth, None, "scale")
    dss = depth_metrics(pred_depth, gt_depth, None, "scale_shift")
    pm = pose_auc(relative_pose_errors(pred_poses, gt_poses))
    return {
        "seq_id": seq_id,
        "abs_rel_scale": ds.abs_rel,
        "delta_scale": ds.delta_125,
        "abs_rel_ss": dss.abs_rel,
        "delta_ss": dss.delta_125,
        "auc5": pm.auc[5],
        "auc15": pm.auc[15],
        "auc30": pm.auc[30],
        "n_pairs": int(len(pm.rot_err)),
        "n_valid_px": ds.valid_pixel_count,
    }


def mean_row(rows: list) -> dict:
    out = {}
    for k in REPORT_COLUMNS[1:]:
        vals = [r[k] for r in rows]
        out[k] = int(sum(vals)) if k in ("n_pairs", "n_valid_px") else float(np.mean(vals))
    return out


def evaluate_model(params, sequences, eval_config: EvalConfig | None = None, predictor=None) -> MetricReport:
    """Evaluate depth and camera accuracy on labeled sequences.

    ``predictor(frames) -> (depth, pose_rows)`` overrides the network, which
    is how oracle and fixture models are plugged in.
    """
    cfg = eval_config or EvalConfig()
    for seq in sequences:
        if not seq.has_labels:
            raise ValueError(f"sequence {seq.seq_id} has no ground truth")
    predict = predictor or (lambda frames: _predict(params, frames, cfg.num_heads))

    def one(seq):
        idx = subsample_indices(len(seq), cfg.stride, cfg.max_frames)
        sub = seq.subset(idx)
        depth, poses = predict(sub.frames)
        row = sequence_row(seq.seq_id, depth, poses, sub.gt_depth, sub.gt_poses)
        row["frames"] = [int(i) for i in idx]
        return row

    workers = max(1, int(os.environ.get("SELFEVO_THREADS", "1")))
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            rows = list(ex.map(one, sequences))
    else:
        rows = [one(s) for s in sequences]
    rows.sort(key=lambda r: r["seq_id"])
    return MetricReport(rows=rows, mean=mean_row(rows), metadata={
        "alignment_method": "least_squares", "alignment_scope": "per_sequence",
        "stride": cfg.stride, "auc_thresholds": list(AUC_THRESHOLDS)})


def context_curve(params, seq, num_intermediates_list, trials: int, rng: np.random.Generator,
                  predictor=None, num_heads: int = 4) -> list[dict]:
    """Anchor protocol: vary the number of context frames, score only the two anchors."""
    from .scene import covisibility

    if not seq.has_labels:
        raise ValueError(f"sequence {seq.seq_id} has no ground truth")
    S = len(seq)
    available = S - 2
    predict = predictor or (lambda frames: _predict(params, frames, num_heads))
    rows = []
    for k in sorted(num_intermediates_list):
        if k > available or k < 0:
            raise ValueError(f"k={k} exceeds the {available} intermediate frames available")
        abs_rels, rot_errs, covis = [], [], []
        for _ in range(trials):
            mid = np.sort(rng.choice(np.arange(1, S - 1), size=k, replace=False)) if k else np.array([], int)
            idx = np.concatenate([[0], mid, [S - 1]]).astype(np.int64)
            sub = seq.subset(idx)
            depth, poses = predict(sub.frames)
            anchors = [0, len(idx) - 1]
            dm = depth_metrics(depth[anchors], sub.gt_depth[anchors], None, "scale")
            err = relative_pose_errors(poses[anchors], sub.gt_poses[anchors])
            abs_rels.append(dm.abs_rel)
            rot_errs.append(float(err[0, 0]))
            covis.append(covisibility(sub))
        rows.append({"seq_id": seq.seq_id, "k": int(k), "abs_rel": float(np.mean(abs_rels)),
                     "rot_err": float(np.mean(rot_errs)), "covisibility": float(np.mean(covis))})
    return rows

