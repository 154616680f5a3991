"""Procedural dynamic scenes, a ray-casting renderer and the sequence container.

Scenes are sets of textured spheres over a ground disk, watched by a camera
that orbits the scene along a cubic spline. Rendering yields RGB frames,
z-depth (0 marks background) and world-to-camera poses, which stand in for
unlabeled videos when the labels are ignored.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicSpline

from . import geometry

SCHEMA_VERSION = 1
CAMERA_CONVENTION = "world_to_camera, z_depth"
DOMAINS = ("source", "target")
NEAR = 0.05


class SequenceFormatError(ValueError):
    """Raised when a sequence directory is missing files or is corrupt."""


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"image size must be positive, got {self.width}x{self.height}")
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the image")

    @property
    def K(self) -> np.ndarray:
        return np.array([[self.fx, 0, self.cx], [0, self.fy, self.cy], [0, 0, 1.0]])

    def camera_rays(self) -> np.ndarray:
        """Per-pixel ray directions with unit z component, shape (H, W, 3).

        Pixel ``(u, v)`` is centered at integer coordinates, so with a unit z
        component the ray parameter at a hit equals its z-depth.
        """
        u, v = np.meshgrid(np.arange(self.width), np.arange(self.height))
        return np.stack([(u - self.cx) / self.fx, (v - self.cy) / self.fy, np.ones(u.shape)], axis=-1)


@dataclass
class CameraPose:
    rotation: np.ndarray
    translation: np.ndarray
    convention: str = "world_to_camera"

    def __post_init__(self):
        self.rotation = np.asarray(self.rotation, dtype=np.float64)
        self.translation = np.asarray(self.translation, dtype=np.float64)
        if abs(np.linalg.norm(self.rotation) - 1.0) > 1e-6:
            raise ValueError("pose quaternion must have unit norm")

    @property
    def R(self) -> np.ndarray:
        return geometry.quat_to_rotmat(self.rotation)

    def as_row(self) -> np.ndarray:
        return np.concatenate([self.rotation, self.translation])


@dataclass
class Sphere:
    center: np.ndarray
    radius: float
    albedo: np.ndarray
    velocity: np.ndarray = field(default_factory=lambda: np.zeros(3))
    texture_freq: float = 2.0
    texture_phase: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def center_at(self, t: float) -> np.ndarray:
        return self.center + self.velocity * t


@dataclass
class Disk:
    """Finite plane: the points within ``radius`` of ``center`` orthogonal to ``normal``."""

    center: np.ndarray
    normal: np.ndarray
    radius: float
    albedo: np.ndarray
    texture_freq: float = 1.0
    texture_phase: np.ndarray = field(default_factory=lambda: np.zeros(3))


@dataclass
class Scene:
    static_primitives: list
    dynamic_primitives: list
    trajectory: np.ndarray  # (K, 6) control points: camera position, look-at target
    knot_times: np.ndarray  # (K,) frame times of the control points
    intrinsics: Intrinsics
    domain_tag: str = "source"
    texture_amp: float = 0.35
    fog_color: np.ndarray = field(default_factory=lambda: np.array([0.62, 0.70, 0.82]))
    fog_length: float = 14.0
    noise_std: float = 0.0
    dropout_blocks: int = 0  # per-frame sensor dropouts: flat rectangles absent from the depth labels
    dropout_size_range: tuple = (0.18, 0.3)  # block side as a fraction of the image side
    noise_seed: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.domain_tag not in DOMAINS:
            raise ValueError(f"unknown domain_tag {self.domain_tag!r}")
        for p in self.static_primitives + self.dynamic_primitives:
            if not p.radius > 0:
                raise ValueError("primitive radii must be positive")

    def camera_pose(self, t: float) -> CameraPose:
        traj = np.asarray(self.trajectory, dtype=np.float64)
        if traj.ndim != 2 or traj.shape[0] < 2 or traj.shape[1] != 6:
            raise ValueError("camera trajectory needs at least two (position, target) control points")
        key = (traj.tobytes(), np.asarray(self.knot_times).tobytes())
        if getattr(self, "_spline_key", None) != key:
            self._spline = CubicSpline(self.knot_times, traj, axis=0)
            self._spline_key = key
        spline = self._spline
        tt = float(np.clip(t, self.knot_times[0], self.knot_times[-1]))
        pos_target = spline(tt)
        R, tvec = geometry.look_at(pos_target[:3], pos_target[3:])
        return CameraPose(geometry.rotmat_to_quat(R), tvec)


@dataclass
class GenConfig:
    """Sampling distribution of one scene domain."""

    width: int = 64
    height: int = 64
    focal: float = 64.0
    domain_tag: str = "source"
    sphere_count_range: tuple = (5, 10)
    dynamic_fraction: float = 0.3
    dynamic_count_range: tuple = (0, 1000)
    radius_range: tuple = (0.35, 0.9)
    speed_range: tuple = (0.0, 0.03)  # scene units per frame
    arc_per_frame_range: tuple = (0.006, 0.014)  # orbit radians per frame
    orbit_radius_range: tuple = (7.0, 9.0)
    camera_height_range: tuple = (0.4, 1.6)
    texture_freq_range: tuple = (1.5, 3.0)
    texture_amp: float = 0.35
    noise_std: float = 0.06
    dropout_blocks: int = 3
    dropout_size_range: tuple = (0.18, 0.3)
    fog_length: float = 14.0
    horizon_frames: int = 64
    knot_every: int = 8

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("image dimensions must be positive")
        for name in ("sphere_count_range", "dynamic_count_range", "radius_range", "speed_range",
                     "arc_per_frame_range", "orbit_radius_range", "camera_height_range",
                     "texture_freq_range"):
            lo, hi = getattr(self, name)
            if hi < lo:
                raise ValueError(f"{name} is empty: {lo} > {hi}")
        if self.dropout_blocks < 0 or not 0 < self.dropout_size_range[0] <= self.dropout_size_range[1] <= 1:
            raise ValueError("dropout_blocks must be >= 0 and dropout sizes must lie in (0, 1]")
        if self.sphere_count_range[1] < 1:
            raise ValueError("sphere_count_range must allow at least one primitive")
        if self.domain_tag not in DOMAINS:
            raise ValueError(f"unknown domain_tag {self.domain_tag!r}")

    @classmethod
    def source(cls, **overrides) -> "GenConfig":
        return replace(cls(), **overrides)

    @classmethod
    def target(cls, **overrides) -> "GenConfig":
        base = cls(
            domain_tag="target",
            sphere_count_range=(15, 25),
            radius_range=(0.25, 0.7),
            speed_range=(0.0, 0.06),
            arc_per_frame_range=(0.012, 0.028),
            texture_freq_range=(4.0, 7.0),
        )
        return replace(base, **overrides)

    @classmethod
    def unseen(cls, **overrides) -> "GenConfig":
        """Held-out distribution used only for evaluation (tagged as target)."""
        base = cls(
            domain_tag="target",
            sphere_count_range=(10, 15),
            radius_range=(0.3, 0.8),
            speed_range=(0.02, 0.08),
            arc_per_frame_range=(0.01, 0.02),
            texture_freq_range=(3.0, 5.0),
            texture_amp=0.5,
        )
        return replace(base, **overrides)


def _rand_albedo(rng: np.random.Generator) -> np.ndarray:
    hue = rng.uniform(0.0, 1.0, size=3)
    return 0.35 + 0.6 * hue


def generate_scene(gen_config: GenConfig, seed: int) -> Scene:
    cfg = gen_config
    rng = np.random.default_rng(seed)
    intr = Intrinsics(cfg.focal, cfg.focal, cfg.width / 2, cfg.height / 2, cfg.width, cfg.height)

    n = int(rng.integers(cfg.sphere_count_range[0], cfg.sphere_count_range[1] + 1))
    n_dyn = int(np.clip(round(cfg.dynamic_fraction * n), *cfg.dynamic_count_range))
    n_dyn = min(n_dyn, n)
    spheres = []
    for i in range(n):
        radius = float(rng.uniform(*cfg.radius_range))
        center = np.array([rng.uniform(-3.0, 3.0), rng.uniform(-1.5 + radius, 1.2), rng.uniform(-3.0, 3.0)])
        sph = Sphere(
            center=center,
            radius=radius,
            albedo=_rand_albedo(rng),
            texture_freq=float(rng.uniform(*cfg.texture_freq_range)),
            texture_phase=rng.uniform(0, 2 * np.pi, size=3),
        )
        if i < n_dyn:
            direction = rng.normal(size=3)
            direction[1] *= 0.3
            direction /= np.linalg.norm(direction)
            sph.velocity = direction * rng.uniform(*cfg.speed_range)
        spheres.append(sph)
    ground = Disk(
        center=np.array([0.0, -1.5, 0.0]),
        normal=np.array([0.0, 1.0, 0.0]),
        radius=9.0,
        albedo=np.array([0.55, 0.5, 0.42]) + rng.uniform(-0.1, 0.1, size=3),
        texture_freq=float(rng.uniform(*cfg.texture_freq_range)) * 0.5,
        texture_phase=rng.uniform(0, 2 * np.pi, size=3),
    )

    phi0 = rng.uniform(0, 2 * np.pi)
    omega = rng.uniform(*cfg.arc_per_frame_range) * rng.choice([-1.0, 1.0])
    r0 = rng.uniform(*cfg.orbit_radius_range)
    h0 = rng.uniform(*cfg.camera_height_range)
    knots = np.arange(0, cfg.horizon_frames + cfg.knot_every, cfg.knot_every, dtype=np.float64)
    ctrl = []
    for t in knots:
        phi = phi0 + omega * t
        r = r0 + rng.uniform(-0.25, 0.25)
        h = h0 + rng.uniform(-0.15, 0.15)
        pos = np.array([r * np.cos(phi), h, r * np.sin(phi)])
        target = np.array([rng.uniform(-0.3, 0.3), rng.uniform(-0.6, -0.2), rng.uniform(-0.3, 0.3)])
        ctrl.append(np.concatenate([pos, target]))

    return Scene(
        static_primitives=spheres[n_dyn:] + [ground],
        dynamic_primitives=spheres[:n_dyn],
        trajectory=np.asarray(ctrl),
        knot_times=knots,
        intrinsics=intr,
        domain_tag=cfg.domain_tag,
        texture_amp=cfg.texture_amp,
        fog_length=cfg.fog_length,
        noise_std=cfg.noise_std,
        dropout_blocks=cfg.dropout_blocks,
        dropout_size_range=tuple(cfg.dropout_size_range),
        noise_seed=int(rng.integers(0, 2**31 - 1)),
        seed=int(seed),
    )


@dataclass
class FrameSequence:
    frames: np.ndarray  # (S, H, W, 3) float32 in [0, 1]
    gt_depth: np.ndarray | None = None  # (S, H, W) float32, 0 = masked
    gt_poses: np.ndarray | None = None  # (S, 7) float32 rows qw,qx,qy,qz,tx,ty,tz
    seq_id: str = "seq"
    domain_tag: str = "source"
    intrinsics: Intrinsics | None = None

    def __post_init__(self):
        if self.frames.ndim != 4 or self.frames.shape[-1] != 3 or self.frames.shape[0] < 1:
            raise ValueError(f"frames must be S x H x W x 3 with S >= 1, got {self.frames.shape}")
        S, H, W = self.frames.shape[:3]
        if self.gt_depth is not None:
            if self.gt_depth.shape != (S, H, W):
                raise ValueError("gt_depth shape does not match frames")
            if np.any(self.gt_depth < 0) or not np.all(np.isfinite(self.gt_depth)):
                raise ValueError("gt_depth must be finite and non-negative (0 = masked)")
        if self.gt_poses is not None:
            if self.gt_poses.shape != (S, 7):
                raise ValueError("gt_poses must be S x 7")
            norms = np.linalg.norm(self.gt_poses[:, :4].astype(np.float64), axis=1)
            if np.any(np.abs(norms - 1.0) > 1e-6):
                raise ValueError("gt_poses quaternions must be unit-norm")

    def __len__(self) -> int:
        return self.frames.shape[0]

    @property
    def has_labels(self) -> bool:
        return self.gt_depth is not None and self.gt_poses is not None

    def camera_poses(self) -> list[CameraPose]:
        if self.gt_poses is None:
            raise ValueError(f"sequence {self.seq_id} has no ground-truth poses")
        return [CameraPose(geometry.normalize_quat(r[:4]), r[4:]) for r in self.gt_poses.astype(np.float64)]

    def subset(self, indices) -> "FrameSequence":
        idx = np.asarray(indices, dtype=np.int64)
        return FrameSequence(
            frames=self.frames[idx],
            gt_depth=None if self.gt_depth is None else self.gt_depth[idx],
            gt_poses=None if self.gt_poses is None else self.gt_poses[idx],
            seq_id=self.seq_id,
            domain_tag=self.domain_tag,
            intrinsics=self.intrinsics,
        )


def _texture(points: np.ndarray, freq: float, phase: np.ndarray, amp: float) -> np.ndarray:
    s = np.sin(freq * points + phase)
    return 1.0 + amp * s[..., 0] * s[..., 1] * s[..., 2]


def render_frame(scene: Scene, t: float, pose: CameraPose | None = None):
    """Ray-cast one frame at time ``t``; returns (rgb HxWx3, z-depth HxW)."""
    intr = scene.intrinsics
    pose = scene.camera_pose(t) if pose is None else pose
    R = pose.R
    origin = -R.T @ pose.translation
    dirs = intr.camera_rays().reshape(-1, 3) @ R  # world-space directions, z-param = depth
    n_rays = dirs.shape[0]
    best = np.full(n_rays, np.inf)
    hit_id = np.full(n_rays, -1)
    prims = list(scene.static_primitives) + list(scene.dynamic_primitives)
    centers = []
    for k, p in enumerate(prims):
        if isinstance(p, Sphere):
            c = p.center_at(t)
            oc = origin - c
            a = np.einsum("ij,ij->i", dirs, dirs)
            b = 2.0 * dirs @ oc
            cc = oc @ oc - p.radius**2
            disc = b * b - 4 * a * cc
            ok = disc >= 0
            sq = np.sqrt(np.where(ok, disc, 0.0))
            s0 = (-b - sq) / (2 * a)
            s1 = (-b + sq) / (2 * a)
            s = np.where(s0 > NEAR, s0, s1)
            ok &= s > NEAR
        else:
            c = p.center
            denom = dirs @ p.normal
            parallel = np.abs(denom) <= 1e-9
            s = ((c - origin) @ p.normal) / np.where(parallel, 1.0, denom)
            pts = origin + s[:, None] * dirs
            ok = ~parallel & (s > NEAR) & (np.linalg.norm(pts - c, axis=1) <= p.radius)
        centers.append(c)
        closer = ok & (s < best)
        best = np.where(closer, s, best)
        hit_id = np.where(closer, k, hit_id)

    light = np.array([0.4, 0.8, -0.45])
    light /= np.linalg.norm(light)
    rgb = np.tile(scene.fog_color, (n_rays, 1))
    depth = np.zeros(n_rays)
    hit = hit_id >= 0
    pts = origin + np.where(hit, best, 0.0)[:, None] * dirs
    for k, p in enumerate(prims):
        sel = hit_id == k
        if not np.any(sel):
            continue
        local = pts[sel] - centers[k]
        if isinstance(p, Sphere):
            normal = local / p.radius
        else:
            normal = np.broadcast_to(p.normal, local.shape)
        shade = 0.35 + 0.65 * np.clip(normal @ light, 0.0, None)
        tex = _texture(local, p.texture_freq, p.texture_phase, scene.texture_amp)
        rgb[sel] = p.albedo[None] * (shade * tex)[:, None]
    depth[hit] = best[hit]
    fog = np.exp(-depth / scene.fog_length)[:, None]
    rgb = np.where(hit[:, None], rgb * fog + scene.fog_color * (1 - fog), rgb)
    return rgb.reshape(intr.height, intr.width, 3), depth.reshape(intr.height, intr.width)


def render_sequence(scene: Scene, num_frames: int, seq_id: str | None = None) -> FrameSequence:
    if num_frames < 1:
        raise ValueError("num_frames must be >= 1")
    intr = scene.intrinsics
    frames = np.empty((num_frames, intr.height, intr.width, 3), dtype=np.float32)
    depth = np.empty((num_frames, intr.height, intr.width), dtype=np.float32)
    poses = np.empty((num_frames, 7), dtype=np.float32)
    for t in range(num_frames):
        pose = scene.camera_pose(t)
        rgb, z = render_frame(scene, t, pose)
        sensor_rng = np.random.default_rng([scene.noise_seed, t])
        if scene.noise_std > 0:
            rgb = rgb + sensor_rng.normal(0.0, scene.noise_std, size=rgb.shape)
        for _ in range(scene.dropout_blocks):
            h = max(1, int(round(intr.height * sensor_rng.uniform(*scene.dropout_size_range))))
            w = max(1, int(round(intr.width * sensor_rng.uniform(*scene.dropout_size_range))))
            y0 = int(sensor_rng.integers(0, intr.height - h + 1))
            x0 = int(sensor_rng.integers(0, intr.width - w + 1))
            rgb[y0:y0 + h, x0:x0 + w] = sensor_rng.uniform(0.0, 1.0, size=3)
        frames[t] = np.clip(rgb, 0.0, 1.0)
        depth[t] = z
        poses[t] = pose.as_row()
    return FrameSequence(
        frames=frames,
        gt_depth=depth,
        gt_poses=poses,
        seq_id=seq_id or f"{scene.domain_tag}_{scene.seed:06d}",
        domain_tag=scene.domain_tag,
        intrinsics=intr,
    )


def _pair_covisibility(depth_i, pose_i, depth_j, pose_j, intr: Intrinsics, rel_tol: float) -> float:
    mask = depth_i > 0
    n_valid = int(mask.sum())
    if n_valid == 0:
        return 0.0
    v, u = np.nonzero(mask)
    z = depth_i[mask].astype(np.float64)
    cam_i = np.stack([(u - intr.cx) / intr.fx * z, (v - intr.cy) / intr.fy * z, z], axis=1)
    q_ij, t_ij = geometry.relative(pose_i[:4], pose_i[4:], pose_j[:4], pose_j[4:])
    cam_j = cam_i @ geometry.quat_to_rotmat(q_ij).T + t_ij
    zj = cam_j[:, 2]
    front = zj > NEAR
    with np.errstate(divide="ignore", invalid="ignore"):
        uj = np.rint(intr.fx * cam_j[:, 0] / zj + intr.cx)
        vj = np.rint(intr.fy * cam_j[:, 1] / zj + intr.cy)
    inb = front & (uj >= 0) & (uj < intr.width) & (vj >= 0) & (vj < intr.height)
    ui = np.where(inb, uj, 0).astype(np.int64)
    vi = np.where(inb, vj, 0).astype(np.int64)
    dj = depth_j[vi, ui].astype(np.float64)
    ok = inb & (dj > 0) & (np.abs(zj - dj) <= rel_tol * np.where(dj > 0, dj, 1.0))
    return float(ok.sum()) / n_valid


def covisibility(seq: FrameSequence, rel_tol: float = 0.05) -> float:
    """Mean reprojection-consistent pixel fraction over all ordered frame pairs."""
    if not seq.has_labels:
        raise ValueError(f"covisibility needs ground-truth depth and poses ({seq.seq_id})")
    if seq.intrinsics is None:
        raise ValueError("covisibility needs intrinsics")
    S = len(seq)
    if S == 1:
        return 1.0
    poses = seq.gt_poses.astype(np.float64)
    scores = [
        _pair_covisibility(seq.gt_depth[i], poses[i], seq.gt_depth[j], poses[j], seq.intrinsics, rel_tol)
        for i in range(S)
        for j in range(S)
        if i != j
    ]
    return float(np.mean(scores))


# --- on-disk container ---------------------------------------------------

_FILES = {"frames": "frames.f32", "depth": "depth.f32", "poses": "poses.f32"}


def _read_array(path: Path, shape: tuple) -> np.ndarray:
    """Read one raw little-endian float32 array; every label access goes through here."""
    if not path.exists():
        raise SequenceFormatError(f"missing array file {path}")
    expected = int(np.prod(shape)) * 4
    size = path.stat().st_size
    if size != expected:
        raise SequenceFormatError(f"corrupt array file {path}: {size} bytes, expected {expected}")
    return np.fromfile(path, dtype="<f4").reshape(shape)


def write_sequence(seq: FrameSequence, directory) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    S, H, W = seq.frames.shape[:3]
    intr = seq.intrinsics
    meta = {
        "schema_version": SCHEMA_VERSION,
        "seq_id": seq.seq_id,
        "domain_tag": seq.domain_tag,
        "S": S,
        "H": H,
        "W": W,
        "dtypes": {"frames": "<f4", "depth": "<f4", "poses": "<f4"},
        "camera_convention": CAMERA_CONVENTION,
        "intrinsics": None if intr is None else asdict(intr),
        "arrays": {"frames": True, "depth": seq.gt_depth is not None, "poses": seq.gt_poses is not None},
    }
    seq.frames.astype("<f4").tofile(d / _FILES["frames"])
    if seq.gt_depth is not None:
        seq.gt_depth.astype("<f4").tofile(d / _FILES["depth"])
    if seq.gt_poses is not None:
        seq.gt_poses.astype("<f4").tofile(d / _FILES["poses"])
    with open(d / "meta.json", "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
    return d


def read_meta(directory) -> dict:
    d = Path(directory)
    try:
        with open(d / "meta.json") as f:
            meta = json.load(f)
    except FileNotFoundError:
        raise SequenceFormatError(f"missing meta.json in {d}") from None
    except json.JSONDecodeError as exc:
        raise SequenceFormatError(f"corrupt meta.json in {d}: {exc}") from None
    required = {"schema_version", "seq_id", "domain_tag", "S", "H", "W", "arrays"}
    if not required <= meta.keys():
        raise SequenceFormatError(f"meta.json in {d} lacks {sorted(required - meta.keys())}")
    if meta["schema_version"] != SCHEMA_VERSION:
        raise SequenceFormatError(f"unsupported sequence schema_version {meta['schema_version']}")
    return meta


def read_sequence(directory, load_labels: bool = True) -> FrameSequence:
    """Load a sequence; with ``load_labels=False`` the label files are never opened."""
    d = Path(directory)
    meta = read_meta(d)
    S, H, W = meta["S"], meta["H"], meta["W"]
    frames = _read_array(d / _FILES["frames"], (S, H, W, 3))
    depth = poses = None
    if load_labels and meta["arrays"].get("depth"):
        depth = _read_array(d / _FILES["depth"], (S, H, W))
    if load_labels and meta["arrays"].get("poses"):
        poses = _read_array(d / _FILES["poses"], (S, 7))
    intr = Intrinsics(**meta["intrinsics"]) if meta.get("intrinsics") else None
    return FrameSequence(frames, depth, poses, seq_id=meta["seq_id"], domain_tag=meta["domain_tag"],
                         intrinsics=intr)


def list_sequences(dataset_dir) -> list[Path]:
    """Sequence directories of a dataset, in manifest order when a manifest exists."""
    d = Path(dataset_dir)
    manifest = d / "manifest.json"
    if manifest.exists():
        with open(manifest) as f:
            return [d / name for name in json.load(f)["sequences"]]
    return sorted(p for p in d.iterdir() if p.is_dir() and (p / "meta.json").exists())


def write_dataset(sequences: list[FrameSequence], directory, extra: dict | None = None) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    names = []
    for seq in sequences:
        write_sequence(seq, d / seq.seq_id)
        names.append(seq.seq_id)
    with open(d / "manifest.json", "w") as f:
        json.dump({"schema_version": SCHEMA_VERSION, "sequences": names, **(extra or {})}, f, indent=2)
    return d


def load_dataset(dataset_dir, load_labels: bool = True) -> list[FrameSequence]:
    return [read_sequence(p, load_labels=load_labels) for p in list_sequences(dataset_dir)]


def synth_dataset(gen_config: GenConfig, seeds, num_frames: int) -> list[FrameSequence]:
    return [render_sequence(generate_scene(gen_config, s), num_frames) for s in seeds]


__all__ = [
    "CameraPose", "Disk", "FrameSequence", "GenConfig", "Intrinsics", "Scene", "SequenceFormatError",
    "Sphere", "covisibility", "generate_scene", "list_sequences", "load_dataset", "read_sequence",
    "render_sequence", "synth_dataset", "write_dataset", "write_sequence",
]
