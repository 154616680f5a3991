"""Experiment driver: config resolution, datasets, training runs, ledgers and reports.

Every command takes a resolved ``ExperimentConfig`` and writes its artifacts
under ``config.out``::

    out/data/<split>/          synthetic datasets with manifests
    out/pretrain/final/        pretrained checkpoint (plus init/ and per-epoch checkpoints)
    out/<run>/ledger.json      baseline + one record per epoch checkpoint
    out/<run>/curves.csv       checkpoint sweep, sorted by epoch
    out/context/curve.csv      anchor-protocol context curve
    out/report/summary.md      tables and plots built from ledgers only
"""

from __future__ import annotations

import copy
import csv
import json
import logging
import re
import shutil
from dataclasses import MISSING, asdict, dataclass, field, fields, replace
from functools import partial
from pathlib import Path

import numpy as np
import yaml
from scipy.stats import spearmanr

from .distill import DistillConfig, LRSchedule, run_self_improvement, run_training, supervised_step
from .metrics import REPORT_COLUMNS, EvalConfig, MetricReport, context_curve, evaluate_model
from .model import ModelArch, config_hash, init_params, load_checkpoint, save_checkpoint
from .scene import GenConfig, list_sequences, load_dataset, synth_dataset, write_dataset

log = logging.getLogger(__name__)

SPLITS = ("source_train", "source_eval", "target_train", "target_eval", "unseen_eval")
EVAL_SETS = ("target_eval", "source_eval", "unseen_eval")
SPLIT_SEED_OFFSET = {name: 10_000 * i for i, name in enumerate(SPLITS)}
CONTEXT_COLUMNS = ("seq_id", "k", "abs_rel", "rot_err", "covisibility")
CURVE_COLUMNS = ("epoch", "step", "eval_set") + REPORT_COLUMNS[1:]
PLOT_METRICS = ("abs_rel_scale", "delta_scale", "auc30")
LOWER_IS_BETTER = {"abs_rel_scale", "abs_rel_ss"}
LEDGER_DIGITS = 6


class ConfigError(ValueError):
    """Bad or inconsistent configuration (CLI exit code 1)."""


class GateError(RuntimeError):
    """Pretrained model failed the sanity gate (CLI exit code 3)."""


class LedgerError(RuntimeError):
    pass


# --- configuration -------------------------------------------------------


@dataclass
class DataConfig:
    num_frames: int = 32
    counts: dict = field(default_factory=lambda: {"source_train": 40, "source_eval": 20, "target_train": 40,
                                                  "target_eval": 10, "unseen_eval": 10})
    source: GenConfig = field(default_factory=GenConfig.source)
    target: GenConfig = field(default_factory=GenConfig.target)
    unseen: GenConfig = field(default_factory=GenConfig.unseen)
    paths: dict = field(default_factory=dict)  # explicit split directories override out/data/<split>

    def gen_for(self, split: str) -> GenConfig:
        return {"source": self.source, "target": self.target, "unseen": self.unseen}[split.split("_")[0]]


@dataclass
class PretrainConfig:
    steps: int = 800
    batch_size: int = 4
    len_range: tuple = (2, 16)
    lr: LRSchedule = field(default_factory=lambda: LRSchedule(0.05, 1e-5, 1e-3, 1e-5))
    gate_abs_rel: float = 0.5
    gate_min_gain: float = 0.1  # the trained model must also beat its own initialization by this fraction


@dataclass
class ContextConfig:
    ks: tuple = (0, 1, 2, 4, 8)
    trials: int = 3
    num_sequences: int = 20
    split: str = "source_eval"


@dataclass
class ExperimentConfig:
    out: str = "runs/desk"
    seed: int = 0
    data: DataConfig = field(default_factory=DataConfig)
    arch: ModelArch = field(default_factory=ModelArch)
    pretrain: PretrainConfig = field(default_factory=PretrainConfig)
    distill: DistillConfig = field(default_factory=DistillConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    context: ContextConfig = field(default_factory=ContextConfig)
    preset: str = "desk"

    @property
    def out_dir(self) -> Path:
        return Path(self.out)

    def split_path(self, split: str) -> Path:
        if split not in SPLITS:
            raise ConfigError(f"unknown split {split!r}")
        explicit = self.data.paths.get(split)
        return Path(explicit) if explicit else self.out_dir / "data" / split

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    @property
    def hash(self) -> str:
        # where a run is written does not change what it computes
        d = self.to_dict()
        d.pop("out")
        return config_hash(d)


def _preset(name: str) -> ExperimentConfig:
    if name == "desk":
        return ExperimentConfig()
    if name == "full":
        cfg = ExperimentConfig(preset="full", out="runs/full")
        cfg.data.num_frames = 96
        cfg.distill = DistillConfig.full()
        cfg.eval = EvalConfig(stride=10)
        cfg.pretrain.steps = 3000
        return cfg
    raise ConfigError(f"unknown preset {name!r}; choose desk or full")


def _merge_dataclass(obj, updates: dict, where: str):
    if not isinstance(updates, dict):
        raise ConfigError(f"{where} must be a mapping")
    known = {f.name: f for f in fields(obj)}
    unknown = set(updates) - set(known)
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    current = asdict(obj)
    for k, v in updates.items():
        sub = getattr(obj, k)
        if hasattr(sub, "__dataclass_fields__") and isinstance(v, dict):
            current[k] = asdict(_merge_dataclass(sub, v, f"{where}.{k}"))
        elif isinstance(sub, dict) and isinstance(v, dict):
            current[k] = {**sub, **v}
        else:
            current[k] = v
    try:
        return _rebuild(type(obj), current)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid {where}: {exc}") from None


def _rebuild(cls, d: dict):
    kwargs = {}
    for f in fields(cls):
        if f.name not in d:
            continue
        v = d[f.name]
        default = f.default_factory() if f.default_factory is not MISSING else f.default
        if hasattr(default, "__dataclass_fields__") and isinstance(v, dict):
            v = _rebuild(type(default), v)
        elif isinstance(default, tuple) and isinstance(v, list):
            v = tuple(v)
        kwargs[f.name] = v
    return cls(**kwargs)


def resolve_config(source=None, preset: str | None = None, out: str | None = None, seed: int | None = None
                   ) -> ExperimentConfig:
    """Preset defaults, then the config file (YAML or JSON) or mapping, then explicit overrides."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        if not path.exists():
            raise ConfigError(f"config file {path} does not exist")
        try:
            raw = yaml.safe_load(path.read_text()) or {}
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse {path}: {exc}") from None
    else:
        raw = copy.deepcopy(source) if source else {}
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a mapping")
    preset = preset or raw.pop("preset", "desk")
    raw.pop("preset", None)
    cfg = _preset(preset)
    distill_raw = raw.get("distill") or {}
    distill_seed_given = "seed" in distill_raw
    if isinstance(distill_raw, dict) and distill_raw.get("teacher_mode") == "offline":
        distill_raw.setdefault("ema_decay", 1.0)
    cfg = _merge_dataclass(cfg, raw, "config")
    if out is not None:
        cfg.out = str(out)
    if seed is not None:
        cfg.seed = int(seed)
    if not distill_seed_given:
        cfg.distill = replace(cfg.distill, seed=cfg.seed)
    cfg.distill = replace(cfg.distill, num_heads=cfg.arch.num_heads)
    cfg.eval = replace(cfg.eval, num_heads=cfg.arch.num_heads)
    cfg.preset = preset
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    d = cfg.data
    if set(d.counts) - set(SPLITS):
        raise ConfigError(f"unknown splits in data.counts: {sorted(set(d.counts) - set(SPLITS))}")
    if any(int(n) < 0 or int(n) >= 10_000 for n in d.counts.values()):
        raise ConfigError("split sizes must lie in [0, 10000)")
    if d.num_frames < cfg.distill.teacher_len_range[0]:
        raise ConfigError(f"num_frames={d.num_frames} is shorter than the teacher's minimum clip length")
    for gen in (d.source, d.target, d.unseen):
        if (gen.height, gen.width) != (cfg.arch.height, cfg.arch.width):
            raise ConfigError("generated image size must match the model's input size")
    if cfg.pretrain.steps < 0:
        raise ConfigError("pretrain.steps must be >= 0")
    if cfg.context.split not in SPLITS:
        raise ConfigError(f"unknown context split {cfg.context.split!r}")


def _prepare_out(path: Path, force: bool) -> Path:
    if path.exists() and any(path.iterdir()):
        if not force:
            raise ConfigError(f"output {path} exists and is not empty; pass --force to overwrite")
        shutil.rmtree(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _require(path: Path, what: str) -> Path:
    if not path.exists():
        raise ConfigError(f"{what} {path} does not exist")
    return path


def _write_json(path: Path, obj) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(obj, indent=2, sort_keys=True))
    tmp.replace(path)


def _save_config(cfg: ExperimentConfig, directory: Path) -> None:
    _write_json(directory / "config.json", {"config": cfg.to_dict(), "config_hash": cfg.hash})


# --- data ----------------------------------------------------------------


def split_seeds(cfg: ExperimentConfig, split: str) -> list[int]:
    base = 100_000 * cfg.seed + SPLIT_SEED_OFFSET[split]
    return [base + i for i in range(int(cfg.data.counts.get(split, 0)))]


def cmd_synth(cfg: ExperimentConfig, force: bool = False) -> dict:
    """Generate every split with disjoint scene seeds; returns split -> directory."""
    out = {}
    for split in SPLITS:
        path = cfg.split_path(split)
        _prepare_out(path, force)
        seqs = synth_dataset(cfg.data.gen_for(split), split_seeds(cfg, split), cfg.data.num_frames)
        for s in seqs:
            s.seq_id = f"{split}_{s.seq_id.split('_')[-1]}"
        write_dataset(seqs, path, {"split": split, "num_frames": cfg.data.num_frames})
        out[split] = path
        log.info("wrote %d sequences to %s", len(seqs), path)
    return out


def _load_split(cfg: ExperimentConfig, split: str, limit: int | None = None):
    seqs = load_dataset(_require(cfg.split_path(split), f"dataset {split}"))
    return seqs if limit is None else seqs[:limit]


# --- evaluation helpers --------------------------------------------------


def _round(x):
    if isinstance(x, float):
        return round(x, LEDGER_DIGITS)
    if isinstance(x, dict):
        return {k: _round(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_round(v) for v in x]
    return x


def _report_dict(report: MetricReport) -> dict:
    return _round(report.to_dict())


def evaluate_sets(cfg: ExperimentConfig, params, eval_data: dict) -> dict:
    return {name: _report_dict(evaluate_model(params, seqs, cfg.eval)) for name, seqs in eval_data.items()}


def _eval_data(cfg: ExperimentConfig, names=EVAL_SETS) -> dict:
    return {n: _load_split(cfg, n) for n in names if int(cfg.data.counts.get(n, 0)) > 0 or cfg.data.paths.get(n)}


# --- pretraining ---------------------------------------------------------


def _pretrain_distill_cfg(cfg: ExperimentConfig) -> DistillConfig:
    p = cfg.pretrain
    return replace(cfg.distill, epochs=1, steps_per_epoch=p.steps, batch_size=p.batch_size, lr=p.lr,
                   freeze_policy="train_all")


def cmd_pretrain(cfg: ExperimentConfig, force: bool = False) -> Path:
    """Supervised training on labeled source clips, followed by the sanity gate."""
    out = _prepare_out(cfg.out_dir / "pretrain", force)
    _save_config(cfg, out)
    clips = _load_split(cfg, "source_train")
    gate_seqs = _load_split(cfg, "source_eval")
    init_path = save_checkpoint(out / "init", init_params(cfg.arch, cfg.seed), arch=cfg.arch,
                                metadata={"config_hash": cfg.hash})
    dcfg = _pretrain_distill_cfg(cfg)
    step_fn = partial(supervised_step, len_range=tuple(cfg.pretrain.len_range))
    paths = run_training(dcfg, clips, init_path, out, step_fn, cfg.arch, extra_run_info={"mode": "pretrain"})
    final = out / "final"
    shutil.copytree(paths[-1], final)
    report = evaluate_model(load_checkpoint(final).params, gate_seqs, cfg.eval)
    init_report = evaluate_model(load_checkpoint(init_path).params, gate_seqs, cfg.eval)
    abs_rel, init_abs_rel = report.mean["abs_rel_scale"], init_report.mean["abs_rel_scale"]
    p = cfg.pretrain
    passed = abs_rel < p.gate_abs_rel and abs_rel < (1.0 - p.gate_min_gain) * init_abs_rel
    _write_json(out / "pretrain.json", {"checkpoint": str(final), "source_eval": _report_dict(report),
                                        "gate": {"abs_rel_scale": _round(abs_rel),
                                                 "init_abs_rel_scale": _round(init_abs_rel),
                                                 "threshold": p.gate_abs_rel, "min_gain": p.gate_min_gain,
                                                 "passed": passed}})
    if not passed:
        raise GateError(f"pretrained source-eval Abs Rel {abs_rel:.4f} (untrained {init_abs_rel:.4f}) fails the "
                        f"gate: below {p.gate_abs_rel} and at least {p.gate_min_gain:.0%} better than untrained; "
                        f"checkpoint kept at {final}")
    return final


# --- self-improvement and fine-tuning runs -------------------------------


def _metrics_rows(record: dict) -> list[dict]:
    return [{"epoch": record["epoch"], "step": record["step"], "eval_set": name,
             **{k: rep["mean"][k] for k in REPORT_COLUMNS[1:]}}
            for name, rep in record["reports"].items()]


def _write_curve_csv(path: Path, records: list) -> None:
    with open(path, "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CURVE_COLUMNS, lineterminator="\n")
        w.writeheader()
        for rec in sorted(records, key=lambda r: r["epoch"]):
            for row in _metrics_rows(rec):
                w.writerow(row)


def _summary(baseline: dict, final: dict | None) -> dict:
    out = {}
    for name, base in baseline.items():
        out[name] = {}
        for k in PLOT_METRICS:
            b = base["mean"][k]
            v = b if final is None else final[name]["mean"][k]
            rel = 0.0 if b == 0 else ((b - v) / b if k in LOWER_IS_BETTER else (v - b) / abs(b))
            out[name][k] = {"baseline": b, "final": v, "rel_improvement_pct": round(100.0 * rel, 4)}
    return out


def _run(cfg: ExperimentConfig, name: str, mode: str, init_checkpoint, force: bool, train) -> dict:
    out = _prepare_out(cfg.out_dir / name, force)
    _save_config(cfg, out)
    init_checkpoint = Path(init_checkpoint or cfg.out_dir / "pretrain" / "final")
    _require(init_checkpoint, "initial checkpoint")
    eval_data = _eval_data(cfg)
    baseline = evaluate_sets(cfg, load_checkpoint(init_checkpoint).params, eval_data)
    ledger = {"mode": mode, "run": name, "config_hash": cfg.hash, "init_checkpoint": str(init_checkpoint),
              "epochs_planned": cfg.distill.epochs, "baseline": baseline, "records": [], "summary": None}
    _write_json(out / "ledger.json", ledger)

    def on_epoch_end(epoch, path, state):
        record = {"epoch": epoch, "step": state.global_step, "checkpoint": str(path),
                  "reports": evaluate_sets(cfg, state.student, eval_data)}
        ledger["records"].append(record)
        _write_json(out / "ledger.json", ledger)
        _write_curve_csv(out / "metrics_by_epoch.csv", ledger["records"])
        log.info("%s epoch %d: %s", name, epoch,
                 {n: r["mean"]["abs_rel_scale"] for n, r in record["reports"].items()})

    train(init_checkpoint, out, on_epoch_end)
    final = ledger["records"][-1]["reports"] if ledger["records"] else None
    ledger["summary"] = _summary(baseline, final)
    _write_json(out / "ledger.json", ledger)
    _write_curve_csv(out / "metrics_by_epoch.csv", ledger["records"])
    return ledger


def cmd_selfevo(cfg: ExperimentConfig, init_checkpoint=None, force: bool = False, name: str = "selfevo") -> dict:
    """Label-free self-improvement on target clips, evaluated after every epoch."""
    dataset = list_sequences(_require(cfg.split_path("target_train"), "dataset target_train"))

    def train(init, out, cb):
        run_self_improvement(cfg.distill, dataset, init, out, cfg.arch, on_epoch_end=cb)

    return _run(cfg, name, "selfevo", init_checkpoint, force, train)


def cmd_sft(cfg: ExperimentConfig, init_checkpoint=None, force: bool = False, name: str = "sft") -> dict:
    """Ground-truth fine-tuning on target clips with the self-improvement schedule."""
    clips = _load_split(cfg, "target_train")
    step_fn = partial(supervised_step, len_range=tuple(cfg.distill.teacher_len_range))

    def train(init, out, cb):
        run_training(cfg.distill, clips, init, out, step_fn, cfg.arch, on_epoch_end=cb,
                     extra_run_info={"mode": "sft"})

    return _run(cfg, name, "sft", init_checkpoint, force, train)


# --- evaluation commands -------------------------------------------------


def cmd_eval(cfg: ExperimentConfig, checkpoint, splits=EVAL_SETS, out_name: str | None = None) -> dict:
    ckpt = load_checkpoint(_require(Path(checkpoint), "checkpoint"))
    out = cfg.out_dir / "eval" / (out_name or Path(checkpoint).name)
    out.mkdir(parents=True, exist_ok=True)
    reports = {}
    for split in splits:
        rep = evaluate_model(ckpt.params, _load_split(cfg, split), cfg.eval)
        (out / f"{split}.json").write_text(rep.to_json())
        (out / f"{split}.csv").write_text(rep.to_csv())
        reports[split] = rep
    return reports


def cmd_context(cfg: ExperimentConfig, checkpoint=None) -> dict:
    """Anchor-protocol context curve; writes per-sequence and mean rows."""
    checkpoint = Path(checkpoint or cfg.out_dir / "pretrain" / "final")
    params = load_checkpoint(_require(checkpoint, "checkpoint")).params
    c = cfg.context
    seqs = _load_split(cfg, c.split, c.num_sequences)
    if len(seqs) < c.num_sequences:
        log.warning("context split has %d sequences, fewer than the %d requested", len(seqs), c.num_sequences)
    need = max(c.ks) + 2
    short = [s.seq_id for s in seqs if len(s) < need]
    if short:
        raise ConfigError(f"sequences too short for k={max(c.ks)}: {short}")
    rng = np.random.default_rng(cfg.seed)
    rows = [r for s in seqs for r in context_curve(params, s, c.ks, c.trials, rng, num_heads=cfg.arch.num_heads)]
    ks = sorted(set(c.ks))
    means = [{"seq_id": "__mean__", "k": k,
              **{m: float(np.mean([r[m] for r in rows if r["k"] == k])) for m in CONTEXT_COLUMNS[2:]}}
             for k in ks]
    out = cfg.out_dir / "context"
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "curve.csv", "w", newline="") as f:
        w = csv.DictWriter(f, fieldnames=CONTEXT_COLUMNS, lineterminator="\n")
        w.writeheader()
        w.writerows(_round(rows + means))
    stats = {"checkpoint": str(checkpoint), "num_sequences": len(seqs), "ks": ks, "mean": _round(means)}
    if len(ks) > 1:
        stats["spearman_abs_rel"] = float(spearmanr(ks, [m["abs_rel"] for m in means])[0])
        stats["spearman_covisibility"] = float(spearmanr(ks, [m["covisibility"] for m in means])[0])
    _write_json(out / "context.json", stats)
    return {"rows": rows, "mean": means, **stats}


def _epoch_checkpoints(run_dir: Path) -> list[Path]:
    ckdir = run_dir / "checkpoints"
    paths = sorted(p for p in ckdir.glob("epoch_*") if p.is_dir()) if ckdir.exists() else []
    if not paths:
        raise LedgerError(f"no checkpoints found in {run_dir}")
    return paths


def cmd_sweep(cfg: ExperimentConfig, run_dir) -> list[dict]:
    """Evaluate every epoch checkpoint of a run; writes curves.csv and sweep.json."""
    run_dir = Path(run_dir)
    eval_data = _eval_data(cfg)
    records = []
    for path in _epoch_checkpoints(run_dir):
        ck = load_checkpoint(path)
        records.append({"epoch": int(ck.metadata["epoch"]), "step": int(ck.metadata["step"]),
                        "checkpoint": str(path), "reports": evaluate_sets(cfg, ck.params, eval_data)})
    records.sort(key=lambda r: r["epoch"])
    _write_curve_csv(run_dir / "curves.csv", records)
    _write_json(run_dir / "sweep.json", {"run": str(run_dir), "records": records})
    return records


# --- reporting -----------------------------------------------------------


def read_ledger(run_dir) -> dict:
    path = Path(run_dir) / "ledger.json"
    if not path.exists():
        raise LedgerError(f"no ledger in {run_dir}")
    return json.loads(path.read_text())


def _fmt(v) -> str:
    return repr(v) if isinstance(v, float) else str(v)


def cmd_report(run_dirs, out_dir) -> Path:
    """Markdown tables and metric-vs-epoch plots, with every number taken from the ledgers."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    ledgers = [(Path(d).name, read_ledger(d)) for d in run_dirs]
    if not ledgers:
        raise LedgerError("report needs at least one run")
    incomplete = [n for n, l in ledgers if l.get("summary") is None or len(l["records"]) != l["epochs_planned"]]
    if incomplete:
        raise LedgerError(f"incomplete ledgers: {', '.join(incomplete)}")
    out = Path(out_dir)
    (out / "plots").mkdir(parents=True, exist_ok=True)
    base_name, base = ledgers[0]
    lines = ["# Summary", "", f"Baseline: initial checkpoint of `{base_name}` ({base['init_checkpoint']}).", ""]
    for split in base["baseline"]:
        lines += [f"## {split}", "",
                  "| run | epochs | " + " | ".join(f"{m} | {m} rel. % " for m in PLOT_METRICS) + "|",
                  "|---|---|" + "---|---|" * len(PLOT_METRICS)]
        cells = " | ".join(f"{_fmt(base['summary'][split][m]['baseline'])} | 0.0" for m in PLOT_METRICS)
        lines.append(f"| baseline | 0 | {cells} |")
        for name, led in ledgers:
            if not led["records"]:
                continue
            s = led["summary"][split]
            cells = " | ".join(f"{_fmt(s[m]['final'])} | {_fmt(s[m]['rel_improvement_pct'])}" for m in PLOT_METRICS)
            lines.append(f"| {name} ({led['mode']}) | {led['records'][-1]['epoch']} | {cells} |")
        lines.append("")
    lines += ["Relative improvement: (baseline - value) / baseline for Abs Rel, "
              "(value - baseline) / baseline for accuracy and AUC, in percent.", ""]
    plots = []
    for split in base["baseline"]:
        for m in PLOT_METRICS:
            fig, ax = plt.subplots(figsize=(4.5, 3.2))
            ax.axhline(base["baseline"][split]["mean"][m], color="gray", ls="--", label="baseline")
            for name, led in ledgers:
                ep = [r["epoch"] for r in led["records"]]
                ax.plot(ep, [r["reports"][split]["mean"][m] for r in led["records"]], marker="o", label=name)
            ax.set_xlabel("epoch")
            ax.set_ylabel(m)
            ax.set_title(f"{split}: {m}")
            ax.legend(fontsize=7)
            fig.tight_layout()
            path = out / "plots" / f"{split}_{m}.png"
            fig.savefig(path, dpi=90)
            plt.close(fig)
            plots.append(path)
    lines += ["## Plots", ""] + [f"![{p.stem}](plots/{p.name})" for p in plots] + [""]
    (out / "summary.md").write_text("\n".join(lines))
    return out / "summary.md"


def report_numbers(text: str) -> list[float]:
    """Numeric tokens of a report table (used to check that reports only quote ledgers)."""
    body = [l for l in text.splitlines() if l.startswith("| ") and not l.startswith("| run")]
    return [float(t) for l in body for t in re.findall(r"-?\d+(?:\.\d+)?(?:e-?\d+)?", l.split("|", 2)[2])]
