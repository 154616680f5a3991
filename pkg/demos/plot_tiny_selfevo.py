"""
A tiny end-to-end run
=====================

Synthesize a few sequences, pretrain a small model with labels, run
label-free self-improvement on the target domain and write a report.
Runs in about a minute on one core.
"""

from pathlib import Path

from selfevo import harness

out = Path("tiny_run")
small = {"width": 32, "height": 32, "focal": 32.0}
cfg = harness.resolve_config({
    "out": str(out),
    "data": {"num_frames": 16,
             "counts": {"source_train": 8, "source_eval": 4, "target_train": 8, "target_eval": 4, "unseen_eval": 4},
             "source": small, "target": small, "unseen": small},
    "arch": {"patch_size": 8, "embed_dim": 32, "num_layers": 2, "height": 32, "width": 32, "corr_radius": 1},
    "pretrain": {"steps": 60, "batch_size": 2, "len_range": [2, 8]},
    "distill": {"teacher_len_range": [6, 10], "student_len_range": [2, 4], "epochs": 3, "steps_per_epoch": 5},
    "context": {"ks": [0, 1, 2, 4], "trials": 2, "num_sequences": 4},
})

harness.cmd_synth(cfg, force=True)
pretrained = harness.cmd_pretrain(cfg, force=True)
print("context curve", harness.cmd_context(cfg, pretrained)["mean"])

ledger = harness.cmd_selfevo(cfg, pretrained, force=True)
for split, metrics in ledger["summary"].items():
    print(split, {m: v["rel_improvement_pct"] for m, v in metrics.items()})

harness.cmd_sft(cfg, pretrained, force=True)
print(harness.cmd_report([out / "selfevo", out / "sft"], out / "report"))
