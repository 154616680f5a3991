"""Toy multi-view reconstruction network.

Per-frame patch encoder, a global-attention aggregator over the tokens of
all frames, a per-patch depth head and a camera head that regresses each
frame's pose relative to the first input frame. Parameters live in a plain
``ParamTree`` (``{group: {name: tensor}}``) and ``forward`` is a pure
function of ``(params, frames)``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import torch

from .scene import CameraPose

GROUPS = ("encoder", "aggregator", "camera_head", "depth_head")
CKPT_SCHEMA_VERSION = 1

ParamTree = dict  # {group: {name: torch.Tensor}}


class CheckpointError(ValueError):
    pass


@dataclass(frozen=True)
class ModelArch:
    patch_size: int = 8
    embed_dim: int = 64
    num_layers: int = 4
    num_heads: int = 4
    height: int = 64
    width: int = 64
    mlp_ratio: int = 2
    cam_dim: int = 8  # per-patch channels fed to the camera head
    cam_hidden: int = 128
    corr_radius: int = 2  # patch displacements scanned by the camera head's correlation window
    depth_prior: tuple = (4.0, 14.0)  # initial depth outputs fall inside this range

    def __post_init__(self):
        if self.patch_size <= 0 or self.height % self.patch_size or self.width % self.patch_size:
            raise ValueError("image height and width must be divisible by patch_size")
        if self.embed_dim <= 0 or self.num_heads <= 0 or self.embed_dim % self.num_heads:
            raise ValueError("embed_dim must be divisible by num_heads")
        if self.num_layers < 1:
            raise ValueError("num_layers must be >= 1")
        if self.corr_radius < 0:
            raise ValueError("corr_radius must be >= 0")

    @property
    def num_patches(self) -> int:
        return (self.height // self.patch_size) * (self.width // self.patch_size)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelArch":
        d = dict(d)
        if "depth_prior" in d:
            d["depth_prior"] = tuple(d["depth_prior"])
        return cls(**d)


@dataclass
class GeoPrediction:
    depth: torch.Tensor  # (S, H, W)
    quats: torch.Tensor  # (S, 4), frame 0 = identity
    trans: torch.Tensor  # (S, 3), frame 0 = zero
    features: torch.Tensor | None = None  # (L, S, D) pooled tokens per layer
    attention: list = field(default_factory=list)  # per layer (S, S)
    attention_ref_free: list = field(default_factory=list)  # per layer (S-1, S-1), frame 0 removed

    def __len__(self) -> int:
        return self.depth.shape[0]

    def poses(self) -> list[CameraPose]:
        q = self.quats.detach().double().cpu().numpy()
        t = self.trans.detach().double().cpu().numpy()
        q = q / np.linalg.norm(q, axis=1, keepdims=True)
        return [CameraPose(qi, ti) for qi, ti in zip(q, t)]

    def pose_rows(self) -> np.ndarray:
        return np.concatenate([self.quats.detach().double().numpy(), self.trans.detach().double().numpy()], 1)

    def depth_numpy(self) -> np.ndarray:
        return self.depth.detach().double().cpu().numpy()


def _param_shapes(arch: ModelArch) -> dict:
    D, p, P = arch.embed_dim, arch.patch_size, arch.num_patches
    hid = D * arch.mlp_ratio
    enc = {
        "patch_w": (p * p * 3, D),
        "patch_b": (D,),
        "pos": (P, D),
        "mlp_w1": (D, hid),
        "mlp_b1": (hid,),
        "mlp_w2": (hid, D),
        "mlp_b2": (D,),
    }
    agg = {}
    for l in range(arch.num_layers):
        agg.update({
            f"l{l}.ln1_g": (D,), f"l{l}.ln1_b": (D,),
            f"l{l}.qkv_w": (D, 3 * D), f"l{l}.qkv_b": (3 * D,),
            f"l{l}.out_w": (D, D), f"l{l}.out_b": (D,),
            f"l{l}.ln2_g": (D,), f"l{l}.ln2_b": (D,),
            f"l{l}.mlp_w1": (D, hid), f"l{l}.mlp_b1": (hid,),
            f"l{l}.mlp_w2": (hid, D), f"l{l}.mlp_b2": (D,),
        })
    agg.update({"final_g": (D,), "final_b": (D,)})
    cam = {
        "ln_g": (D,), "ln_b": (D,),
        "proj_w": (D, arch.cam_dim), "proj_b": (arch.cam_dim,),
        "w1": (P * (2 * arch.corr_radius + 1) ** 2 + P * arch.cam_dim, arch.cam_hidden), "b1": (arch.cam_hidden,),
        "w2": (arch.cam_hidden, 7), "b2": (7,),
    }
    dep = {
        "ln_g": (D,), "ln_b": (D,),
        "w1": (D, hid), "b1": (hid,),
        "w2": (hid, p * p), "b2": (p * p,),
    }
    return {"encoder": enc, "aggregator": agg, "camera_head": cam, "depth_head": dep}


def init_params(arch: ModelArch, seed: int = 0) -> ParamTree:
    gen = torch.Generator().manual_seed(int(seed))
    shapes = _param_shapes(arch)
    lo, hi = arch.depth_prior
    log_prior = 0.5 * (math.log(lo) + math.log(hi))
    tree = {}
    for group, names in shapes.items():
        tree[group] = {}
        for name, shape in names.items():
            base = name.split(".")[-1]
            if base.endswith("_g"):
                t = torch.ones(shape)
            elif base.endswith("_b") or base in ("b1", "b2", "patch_b", "proj_b"):
                t = torch.zeros(shape)
            elif base == "pos":
                t = 0.02 * torch.randn(shape, generator=gen)
            else:
                t = torch.randn(shape, generator=gen) / math.sqrt(shape[0])
            tree[group][name] = t
    # Near-identity poses and depths at the prior's geometric mean on init.
    tree["camera_head"]["w2"].mul_(0.01)
    tree["depth_head"]["w2"].mul_(0.01)
    tree["depth_head"]["b2"].fill_(log_prior)
    for l in range(arch.num_layers):
        tree["aggregator"][f"l{l}.out_w"].mul_(0.5)
        tree["aggregator"][f"l{l}.mlp_w2"].mul_(0.5)
    return tree


def tree_map(fn, *trees) -> ParamTree:
    return {g: {n: fn(*(t[g][n] for t in trees)) for n in trees[0][g]} for g in trees[0]}


def tree_items(tree: ParamTree):
    for g in tree:
        for n, v in tree[g].items():
            yield g, n, v


def check_same_structure(a: ParamTree, b: ParamTree) -> None:
    if list(a) != list(b):
        raise ValueError(f"parameter groups differ: {list(a)} vs {list(b)}")
    for g in a:
        if list(a[g]) != list(b[g]):
            raise ValueError(f"parameter names differ in group {g!r}")
        for n in a[g]:
            if a[g][n].shape != b[g][n].shape:
                raise ValueError(f"shape mismatch for {g}/{n}: {tuple(a[g][n].shape)} vs {tuple(b[g][n].shape)}")


def clone_tree(tree: ParamTree) -> ParamTree:
    return tree_map(lambda t: t.detach().clone(), tree)


def arch_from_params(params: ParamTree, height: int, width: int) -> ModelArch:
    enc = params["encoder"]
    D = enc["patch_b"].shape[0]
    p = int(round(math.sqrt(enc["patch_w"].shape[0] / 3)))
    L = sum(1 for n in params["aggregator"] if n.endswith(".qkv_w"))
    cam = params["camera_head"]
    P = enc["pos"].shape[0]
    return ModelArch(patch_size=p, embed_dim=D, num_layers=L, height=height, width=width,
                     mlp_ratio=enc["mlp_w1"].shape[1] // D, cam_dim=cam["proj_w"].shape[1],
                     cam_hidden=cam["w1"].shape[1], corr_radius=_corr_radius(cam, P))


def _layer_norm(x, g, b, eps=1e-5):
    mu = x.mean(-1, keepdim=True)
    var = ((x - mu) ** 2).mean(-1, keepdim=True)
    return (x - mu) / torch.sqrt(var + eps) * g + b


def _patchify(frames: torch.Tensor, p: int) -> torch.Tensor:
    S, H, W, C = frames.shape
    x = frames.reshape(S, H // p, p, W // p, p, C).permute(0, 1, 3, 2, 4, 5)
    return x.reshape(S, (H // p) * (W // p), p * p * C)


def _corr_radius(cam: dict, P: int) -> int:
    c = cam["proj_w"].shape[1]
    window = (cam["w1"].shape[0] - P * c) // P
    r = int(round((math.sqrt(window) - 1) / 2))
    if P * (2 * r + 1) ** 2 + P * c != cam["w1"].shape[0]:
        raise ValueError("camera head input width does not match a square correlation window")
    return r


def _reference_correlation(h: torch.Tensor, gh: int, gw: int, r: int) -> torch.Tensor:
    """Cosine similarity of every patch with frame 0's patches over a (2r+1)^2 displacement window."""
    S, P, c = h.shape
    hn = h / torch.sqrt((h**2).sum(-1, keepdim=True) + 1e-6)
    hn = hn.reshape(S, gh, gw, c)
    ref = torch.nn.functional.pad(hn[0], (0, 0, r, r, r, r))
    out = [(hn * ref[dy:dy + gh, dx:dx + gw]).sum(-1) for dy in range(2 * r + 1) for dx in range(2 * r + 1)]
    return torch.stack(out, -1).reshape(S, -1)


def _unpatchify_depth(x: torch.Tensor, H: int, W: int, p: int) -> torch.Tensor:
    S = x.shape[0]
    x = x.reshape(S, H // p, W // p, p, p).permute(0, 1, 3, 2, 4)
    return x.reshape(S, H, W)


def _as_frames(frames, dtype) -> torch.Tensor:
    if isinstance(frames, np.ndarray):
        frames = torch.from_numpy(np.ascontiguousarray(frames))
    return frames.to(dtype)


def forward(params: ParamTree, frames, capture_internals: bool = False, num_heads: int = 4) -> GeoPrediction:
    enc, agg, cam, dep = (params[g] for g in GROUPS)
    dtype = enc["patch_w"].dtype
    x_img = _as_frames(frames, dtype)
    if x_img.ndim != 4 or x_img.shape[-1] != 3 or x_img.shape[0] < 1:
        raise ValueError(f"frames must be S x H x W x 3 with S >= 1, got {tuple(x_img.shape)}")
    S, H, W, _ = x_img.shape
    D = enc["patch_b"].shape[0]
    p = int(round(math.sqrt(enc["patch_w"].shape[0] / 3)))
    P = enc["pos"].shape[0]
    if H % p or W % p or (H // p) * (W // p) != P:
        raise ValueError(f"frame size {H}x{W} does not match the model's {P} patches of size {p}")
    for g, n, v in tree_items(params):
        if not torch.isfinite(v).all():
            raise ValueError(f"non-finite parameter {g}/{n}")
    nh = num_heads
    dh = D // nh

    patches = _patchify(x_img - 0.5, p)
    tok = patches @ enc["patch_w"] + enc["patch_b"]
    tok = tok + torch.nn.functional.gelu(tok @ enc["mlp_w1"] + enc["mlp_b1"]) @ enc["mlp_w2"] + enc["mlp_b2"]
    tok = tok + enc["pos"]  # (S, P, D); no frame-index encoding
    x = tok.reshape(S * P, D)

    n_layers = sum(1 for n in agg if n.endswith(".qkv_w"))
    feats, attn_maps, attn_ref_free = [], [], []
    scale = 1.0 / math.sqrt(dh)
    for l in range(n_layers):
        h = _layer_norm(x, agg[f"l{l}.ln1_g"], agg[f"l{l}.ln1_b"])
        qkv = (h @ agg[f"l{l}.qkv_w"] + agg[f"l{l}.qkv_b"]).reshape(S * P, 3, nh, dh).permute(1, 2, 0, 3)
        q, k, v = qkv[0], qkv[1], qkv[2]  # (nh, N, dh)
        logits = (q @ k.transpose(1, 2)) * scale
        a = torch.softmax(logits, dim=-1)
        out = (a @ v).permute(1, 0, 2).reshape(S * P, D)
        x = x + out @ agg[f"l{l}.out_w"] + agg[f"l{l}.out_b"]
        h = _layer_norm(x, agg[f"l{l}.ln2_g"], agg[f"l{l}.ln2_b"])
        x = x + torch.nn.functional.gelu(h @ agg[f"l{l}.mlp_w1"] + agg[f"l{l}.mlp_b1"]) @ agg[f"l{l}.mlp_w2"] \
            + agg[f"l{l}.mlp_b2"]
        if capture_internals:
            with torch.no_grad():
                frame_attn = a.reshape(nh, S, P, S, P).sum(-1).mean(dim=(0, 2))
                attn_maps.append(frame_attn.detach())
                if S > 1:
                    a_rf = torch.softmax(logits[:, P:, P:], dim=-1)
                    attn_ref_free.append(a_rf.reshape(nh, S - 1, P, S - 1, P).sum(-1).mean(dim=(0, 2)))
            feats.append(x.reshape(S, P, D).mean(1))
    x = _layer_norm(x, agg["final_g"], agg["final_b"]).reshape(S, P, D)

    hd = _layer_norm(x, dep["ln_g"], dep["ln_b"])
    log_d = torch.nn.functional.gelu(hd @ dep["w1"] + dep["b1"]) @ dep["w2"] + dep["b2"]
    depth = torch.exp(_unpatchify_depth(log_d, H, W, p))

    hc = _layer_norm(x, cam["ln_g"], cam["ln_b"]) @ cam["proj_w"] + cam["proj_b"]  # (S, P, c)
    corr = _reference_correlation(hc, H // p, W // p, _corr_radius(cam, P))
    hc = hc.reshape(S, -1)
    # Everything is measured relative to frame 0, so an unmoved camera gives a zero input.
    cam_in = torch.cat([corr - corr[:1], hc - hc[:1]], dim=1)
    raw = torch.tanh(cam_in @ cam["w1"] + cam["b1"]) @ cam["w2"] + cam["b2"]
    ident = torch.tensor([1.0, 0.0, 0.0, 0.0], dtype=dtype)
    q_raw = raw[:, :4] + ident
    quats = q_raw / torch.sqrt((q_raw**2).sum(-1, keepdim=True))
    trans = raw[:, 4:]
    quats = torch.cat([ident[None], quats[1:]], 0)
    trans = torch.cat([torch.zeros(1, 3, dtype=dtype), trans[1:]], 0)

    return GeoPrediction(
        depth=depth,
        quats=quats,
        trans=trans,
        features=torch.stack(feats) if capture_internals else None,
        attention=attn_maps,
        attention_ref_free=attn_ref_free,
    )


def _minmax(x: np.ndarray) -> np.ndarray:
    lo, hi = x.min(), x.max()
    if hi - lo <= 0:
        return np.zeros_like(x)
    return (x - lo) / (hi - lo)


def frame_importance_scores(pred: GeoPrediction, layer: int = -1, mix_weight: float = 0.5) -> np.ndarray:
    """Importance scores for frames ``1..S-1`` from teacher attention.

    The score of a frame is the incoming attention mass it receives from the
    other frames (self-attention excluded) in an attention map computed with
    frame 0 removed from queries and keys, min-max normalized per sequence.
    With ``mix_weight > 0`` it is blended with a normalized mean cosine
    affinity of the frame's pooled token to the other scored frames.
    """
    if not pred.attention and not pred.attention_ref_free:
        raise ValueError("prediction carries no attention; run forward with capture_internals=True")
    n_layers = len(pred.attention_ref_free or pred.attention)
    if not -n_layers <= layer < n_layers:
        raise IndexError(f"layer {layer} out of range for {n_layers} layers")
    if not 0.0 <= mix_weight <= 1.0:
        raise ValueError("mix_weight must lie in [0, 1]")
    if pred.attention_ref_free:
        M = np.asarray(torch.as_tensor(pred.attention_ref_free[layer]).double())
    else:
        full = np.asarray(torch.as_tensor(pred.attention[layer]).double())
        M = full[1:, 1:]
        M = M / M.sum(axis=1, keepdims=True)
    if M.shape[0] < 2:
        raise ValueError("frame importance needs at least 3 frames (two scored frames)")
    incoming = M.sum(axis=0) - np.diag(M)
    score = _minmax(incoming)
    if mix_weight > 0:
        if pred.features is None:
            raise ValueError("feature mixing needs pooled features; run forward with capture_internals=True")
        f = np.asarray(pred.features[layer].detach().double())[1:]
        f = f / np.maximum(np.linalg.norm(f, axis=1, keepdims=True), 1e-12)
        cos = f @ f.T
        n = cos.shape[0]
        affinity = (cos.sum(axis=1) - np.diag(cos)) / (n - 1)
        score = (1.0 - mix_weight) * score + mix_weight * _minmax(affinity)
    return score


# --- checkpoints ---------------------------------------------------------


@dataclass
class Checkpoint:
    params: ParamTree
    optimizer_state: dict | None
    metadata: dict
    teacher: ParamTree | None = None


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"), default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _flatten(prefix: str, tree: ParamTree) -> list:
    return [(f"{prefix}/{g}/{n}", v) for g, n, v in tree_items(tree)]


def _unflatten(entries: dict, prefix: str) -> ParamTree | None:
    tree: dict = {}
    for key, t in entries.items():
        head, g, n = key.split("/", 2)
        if head == prefix:
            tree.setdefault(g, {})[n] = t
    if not tree:
        return None
    return {g: tree[g] for g in GROUPS if g in tree}


def save_checkpoint(path, params: ParamTree, optimizer_state: dict | None = None, metadata: dict | None = None,
                    teacher: ParamTree | None = None, arch: ModelArch | None = None) -> Path:
    """Write ``meta.json`` plus one float32 blob holding every named array."""
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    entries = _flatten("student", params)
    if teacher is not None:
        entries += _flatten("teacher", teacher)
    if optimizer_state is not None:
        entries += _flatten("adam_m", optimizer_state["m"]) + _flatten("adam_v", optimizer_state["v"])
    manifest, offset = [], 0
    with open(d / "arrays.f32", "wb") as f:
        for name, t in entries:
            arr = t.detach().cpu().numpy().astype("<f4")
            f.write(arr.tobytes(order="C"))
            manifest.append({"name": name, "offset": offset, "shape": list(arr.shape)})
            offset += arr.nbytes
    meta = {
        "schema_version": CKPT_SCHEMA_VERSION,
        "arch": None if arch is None else asdict(arch),
        "step": 0,
        "epoch": 0,
        "config_hash": None,
        "optimizer_step": None if optimizer_state is None else int(optimizer_state.get("step", 0)),
        **(metadata or {}),
        "manifest": manifest,
        "total_bytes": offset,
    }
    with open(d / "meta.json", "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
    return d


def load_checkpoint(path) -> Checkpoint:
    d = Path(path)
    try:
        with open(d / "meta.json") as f:
            meta = json.load(f)
    except FileNotFoundError:
        raise CheckpointError(f"missing meta.json in checkpoint {d}") from None
    except json.JSONDecodeError as exc:
        raise CheckpointError(f"corrupt checkpoint metadata {d}: {exc}") from None
    if meta.get("schema_version") != CKPT_SCHEMA_VERSION:
        raise CheckpointError(
            f"checkpoint {d} has schema_version {meta.get('schema_version')}, expected {CKPT_SCHEMA_VERSION}")
    blob_path = d / "arrays.f32"
    if not blob_path.exists():
        raise CheckpointError(f"missing array blob in checkpoint {d}")
    blob = blob_path.read_bytes()
    if len(blob) != meta["total_bytes"]:
        raise CheckpointError(f"corrupt array blob in {d}: {len(blob)} bytes, expected {meta['total_bytes']}")
    entries = {}
    for item in meta["manifest"]:
        n = int(np.prod(item["shape"])) if item["shape"] else 1
        arr = np.frombuffer(blob, dtype="<f4", count=n, offset=item["offset"]).reshape(item["shape"])
        entries[item["name"]] = torch.from_numpy(arr.astype(np.float32))
    params = _unflatten(entries, "student")
    if params is None or set(params) != set(GROUPS):
        raise CheckpointError(f"checkpoint {d} lacks student parameter groups")
    m, v = _unflatten(entries, "adam_m"), _unflatten(entries, "adam_v")
    opt = None if m is None else {"m": m, "v": v, "step": meta.get("optimizer_step") or 0}
    metadata = {k: val for k, val in meta.items() if k not in ("manifest", "total_bytes")}
    return Checkpoint(params=params, optimizer_state=opt, metadata=metadata, teacher=_unflatten(entries, "teacher"))
