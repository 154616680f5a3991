"""Acceptance criteria 1-10, each reported as one PASS/FAIL line in the terminal summary.

The desk-scale pipeline (synth, 800-step pretrain, default self-improvement run)
is built once per module and shared by criteria 1-4 and 8; it takes roughly
15 minutes on one CPU core. Criteria 5-7 and 9 are fast property checks.
"""

import json
import time
from dataclasses import replace
from fractions import Fraction

import numpy as np
import pytest
import torch
from scipy.stats import spearmanr

from selfevo import harness, scene
from selfevo.distill import (
    FREEZE_POLICIES, DistillConfig, TrainState, ema_update, make_pseudo_target, run_self_improvement,
    select_student_frames, train_step,
)
from selfevo.distill import distillation_loss
from selfevo.metrics import align_scale, align_scale_shift, depth_metrics, evaluate_model, pose_auc
from selfevo.model import GROUPS, ModelArch, clone_tree, forward, init_params, load_checkpoint, tree_items

from conftest import ACCEPTANCE_LINES, small_gen, tiny_arch

pytestmark = pytest.mark.slow


def verdict(n: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {title}  ({detail})"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def trees_equal(a, b, groups=GROUPS) -> bool:
    return all(torch.equal(a[g][n], b[g][n]) for g in groups for n in a[g])


@pytest.fixture(scope="module")
def desk(tmp_path_factory):
    """Default desk pipeline with an instrumented array reader around the self-improvement run."""
    cfg = harness.resolve_config(out=str(tmp_path_factory.mktemp("desk")))
    t0 = time.perf_counter()
    harness.cmd_synth(cfg)
    t1 = time.perf_counter()
    pretrained = harness.cmd_pretrain(cfg)
    t2 = time.perf_counter()

    reads = []
    original = scene._read_array

    def spy(path, shape):
        reads.append(path)
        return original(path, shape)

    scene._read_array = spy
    try:
        ledger = harness.cmd_selfevo(cfg)
    finally:
        scene._read_array = original
    t3 = time.perf_counter()
    return {"cfg": cfg, "pretrained": pretrained, "ledger": ledger, "reads": reads,
            "synth_s": t1 - t0, "pretrain_s": t2 - t1, "selfevo_s": t3 - t2}


def test_criterion_01_context_monotonicity(desk):
    cfg = desk["cfg"]
    t0 = time.perf_counter()
    res = harness.cmd_context(cfg, desk["pretrained"])
    elapsed = time.perf_counter() - t0
    ks = [m["k"] for m in res["mean"]]
    rho_err = spearmanr(ks, [m["abs_rel"] for m in res["mean"]])[0]
    rho_cov = spearmanr(ks, [m["covisibility"] for m in res["mean"]])[0]
    curve = ", ".join(f"k={m['k']}: {m['abs_rel']:.4f}" for m in res["mean"])
    ok = res["num_sequences"] >= 20 and rho_err <= -0.5 and rho_cov >= 0.5 and elapsed <= 120
    verdict(1, "context monotonicity", ok,
            f"{res['num_sequences']} seqs, spearman(k, abs_rel)={rho_err:+.2f}, spearman(k, covis)={rho_cov:+.2f}, "
            f"{curve}, {elapsed:.0f}s")


def test_criterion_02_self_improvement(desk):
    s = desk["ledger"]["summary"]
    tgt, src = s["target_eval"], s["source_eval"]
    gain = (tgt["abs_rel_scale"]["baseline"] - tgt["abs_rel_scale"]["final"]) / tgt["abs_rel_scale"]["baseline"]
    auc_gain = tgt["auc30"]["final"] - tgt["auc30"]["baseline"]
    src_loss = (src["abs_rel_scale"]["final"] - src["abs_rel_scale"]["baseline"]) / src["abs_rel_scale"]["baseline"]
    ok = gain >= 0.05 and auc_gain >= 2.0 and src_loss <= 0.10 and desk["selfevo_s"] <= 15 * 60
    verdict(2, "self-improvement on target", ok,
            f"target abs_rel {tgt['abs_rel_scale']['baseline']:.4f}->{tgt['abs_rel_scale']['final']:.4f} "
            f"({100 * gain:+.1f}%, need >= +5%), target AUC@30 {auc_gain:+.2f} pts (need >= +2), "
            f"source abs_rel {100 * src_loss:+.1f}% (limit +10%), {desk['selfevo_s']:.0f}s")


def test_criterion_03_online_beats_offline(desk):
    cfg = desk["cfg"]
    targets = harness._load_split(cfg, "target_eval")
    dataset = scene.list_sequences(cfg.split_path("target_train"))
    t0 = time.perf_counter()

    def final_abs_rel(distill, out):
        paths = run_self_improvement(distill, dataset, desk["pretrained"], out, cfg.arch)
        return evaluate_model(load_checkpoint(paths[-1]).params, targets, cfg.eval).mean["abs_rel_scale"]

    rows = []
    for seed in (0, 1, 2):
        online = replace(cfg.distill, seed=seed)
        if seed == cfg.distill.seed:
            on = desk["ledger"]["records"][-1]["reports"]["target_eval"]["mean"]["abs_rel_scale"]
        else:
            on = final_abs_rel(online, cfg.out_dir / f"online_{seed}")
        off = final_abs_rel(replace(online, teacher_mode="offline", ema_decay=1.0), cfg.out_dir / f"offline_{seed}")
        rows.append((seed, round(on, harness.LEDGER_DIGITS), round(off, harness.LEDGER_DIGITS)))
    elapsed = time.perf_counter() - t0 + desk["selfevo_s"]
    wins = sum(on <= off for _, on, off in rows)
    verdict(3, "online teacher beats offline", wins >= 2 and elapsed <= 30 * 60,
            "; ".join(f"seed {s}: online {on:.4f} vs offline {off:.4f}" for s, on, off in rows)
            + f"; wins {wins}/3, {elapsed:.0f}s")


def test_criterion_04_freeze_camera_retention(desk):
    ledger = desk["ledger"]
    t0 = time.perf_counter()
    init = load_checkpoint(desk["pretrained"]).params
    frozen = all(trees_equal(load_checkpoint(r["checkpoint"]).params, init, ["camera_head"])
                 for r in ledger["records"])
    auc = ledger["summary"]["source_eval"]["auc30"]
    drift = auc["final"] - auc["baseline"]
    ok = desk["cfg"].distill.freeze_policy == "freeze_C" and frozen and abs(drift) <= 1.0
    verdict(4, "freeze_C retention", ok and time.perf_counter() - t0 <= 300,
            f"camera_head bit-identical in all {len(ledger['records'])} checkpoints: {frozen}, "
            f"source AUC@30 {auc['baseline']:.2f}->{auc['final']:.2f} ({drift:+.2f} pts, limit 1)")


def _brute_auc(err, T):
    total = Fraction(0)
    for tau in range(1, T + 1):
        rra = Fraction(sum(1 for r, _ in err if r < tau), len(err))
        rta = Fraction(sum(1 for _, t in err if t < tau), len(err))
        total += min(rra, rta)
    return float(100 * total / T)


def test_criterion_05_metric_oracles():
    rng = np.random.default_rng(2026)
    t0 = time.perf_counter()
    align_ok = auc_ok = scale_ok = 0
    for _ in range(100):
        n = int(rng.integers(5, 200))
        p, g = rng.uniform(0.2, 8, n), rng.uniform(0.2, 8, n)
        s = align_scale(p, g)
        cands = s + rng.normal(0, 1, 1000)
        best = np.sum((s * p - g) ** 2)
        ok_s = best <= np.min(np.sum((cands[:, None] * p - g) ** 2, axis=1)) + 1e-12
        a, b = align_scale_shift(p, g)
        cs, ct = a + rng.normal(0, 1, 1000), b + rng.normal(0, 1, 1000)
        best2 = np.sum((a * p + b - g) ** 2)
        ok_ss = best2 <= np.min(np.sum((cs[:, None] * p + ct[:, None] - g) ** 2, axis=1)) + 1e-12
        align_ok += ok_s and ok_ss

        err = rng.uniform(0, 45, size=(int(rng.integers(1, 60)), 2))
        ties = rng.uniform(size=err.shape) < 0.25
        err[ties] = np.floor(err[ties])
        m = pose_auc(err)
        auc_ok += all(abs(m.auc[T] - _brute_auc(err.tolist(), T)) <= 1e-9 for T in (5, 15, 30))

        gt = rng.uniform(0.5, 10, size=(2, 8, 8))
        pred = gt * rng.uniform(0.7, 1.3, size=gt.shape)
        ref = depth_metrics(pred, gt, alignment="scale")
        k = float(np.exp(rng.uniform(-5, 5)))
        got = depth_metrics(k * pred, gt, alignment="scale")
        scale_ok += abs(got.abs_rel - ref.abs_rel) <= 1e-9 and got.delta_125 == ref.delta_125
    elapsed = time.perf_counter() - t0
    verdict(5, "metric oracles", align_ok == auc_ok == scale_ok == 100 and elapsed <= 60,
            f"alignment {align_ok}/100, pose AUC {auc_ok}/100, scale invariance {scale_ok}/100, {elapsed:.1f}s")


def _fast_cfg(**kw):
    return DistillConfig(teacher_len_range=(4, 8), student_len_range=(2, 3), batch_size=1, epochs=1,
                         steps_per_epoch=50, **kw)


def test_criterion_06_ema_and_freeze_invariants(synthetic_seqs):
    params = init_params(tiny_arch(), seed=7)
    clips = list(synthetic_seqs)
    findings = []

    state = TrainState.from_params(params, seed=0)
    before = clone_tree(state.teacher)
    cfg = _fast_cfg(ema_decay=1.0, freeze_policy="train_all")
    for i in range(50):
        train_step(state, [clips[i % len(clips)]], cfg)
    teacher_frozen = trees_equal(state.teacher, before)
    student_moved = not trees_equal(state.student, before)
    findings.append(f"lambda=1 teacher frozen over 50 steps: {teacher_frozen}")

    t = {"encoder": {"w": torch.tensor([2.0])}}
    s = {"encoder": {"w": torch.tensor([4.0])}}
    half = ema_update(t, s, 0.5)["encoder"]["w"].item() == 3.0
    findings.append(f"lambda=0.5 (2,4)->3: {half}")

    policy_ok = {}
    for policy, frozen_groups in FREEZE_POLICIES.items():
        st = TrainState.from_params(params, seed=1)
        start = clone_tree(st.student)
        pcfg = _fast_cfg(freeze_policy=policy)
        for i in range(50):
            train_step(st, [clips[i % len(clips)]], pcfg)
        kept = trees_equal(st.student, start, list(frozen_groups))
        moved = all(not trees_equal(st.student, start, [g]) for g in GROUPS if g not in frozen_groups)
        policy_ok[policy] = kept and moved
    findings.append("policies " + ", ".join(f"{p}={'ok' if v else 'BROKEN'}" for p, v in policy_ok.items()))
    ok = teacher_frozen and student_moved and half and all(policy_ok.values())
    verdict(6, "EMA and freeze invariants", ok, "; ".join(findings))


def test_criterion_07_gradient_check():
    torch.manual_seed(0)
    arch = ModelArch(patch_size=8, embed_dim=16, num_layers=2, num_heads=4, height=16, width=16, cam_dim=4,
                     cam_hidden=16, corr_radius=1)
    to64 = lambda tree: {g: {n: v.double() for n, v in tree[g].items()} for g in tree}
    params = to64(init_params(arch, seed=3))
    other = to64(init_params(arch, seed=4))
    frames = torch.rand(2, 16, 16, 3, dtype=torch.float64, generator=torch.Generator().manual_seed(5))
    with torch.no_grad():
        target = make_pseudo_target(forward(other, frames + 0.1, capture_internals=True), [0, 1])

    def loss_of(p):
        pred = forward(p, frames, capture_internals=True)
        return distillation_loss(pred, target, gamma=0.5, feat_layers=(0, 1))[0]

    live = {g: {n: v.clone().requires_grad_(True) for n, v in params[g].items()} for g in params}
    loss = loss_of(live)
    names = [(g, n) for g in GROUPS for n in live[g]]
    grads = dict(zip(names, torch.autograd.grad(loss, [live[g][n] for g, n in names])))

    rng = np.random.default_rng(0)
    eps, worst, checked = 1e-6, {}, {}
    for group in GROUPS:
        coords = [(n, i) for n in params[group] for i in range(params[group][n].numel())]
        pick = rng.choice(len(coords), size=min(24, len(coords)), replace=False)
        errs = []
        for j in pick:
            n, i = coords[j]
            p_plus, p_minus = clone_tree(params), clone_tree(params)
            p_plus[group][n].view(-1)[i] += eps
            p_minus[group][n].view(-1)[i] -= eps
            with torch.no_grad():
                fd = (loss_of(p_plus) - loss_of(p_minus)).item() / (2 * eps)
            ad = grads[(group, n)].view(-1)[i].item()
            errs.append(abs(fd - ad) / max(abs(fd), abs(ad), 1e-6))
        worst[group], checked[group] = max(errs), len(errs)
    ok = all(v <= 1e-3 for v in worst.values()) and all(c >= 20 for c in checked.values())
    verdict(7, "finite-difference gradient check", ok,
            ", ".join(f"{g}: {checked[g]} params, max rel err {worst[g]:.1e}" for g in GROUPS))


def test_criterion_08_label_hygiene(desk):
    train_dir = desk["cfg"].split_path("target_train")
    train_reads = [p for p in desk["reads"] if train_dir in p.parents]
    label_reads = [p for p in train_reads if p.name in ("depth.f32", "poses.f32")]
    verdict(8, "label hygiene", bool(train_reads) and not label_reads,
            f"{len(train_reads)} training-set array reads, {len(label_reads)} of them label arrays")


def test_criterion_09_selection():
    rng = np.random.default_rng(9)
    t0 = time.perf_counter()
    matches = 0
    for _ in range(100):
        m = int(rng.integers(3, 30))
        n = int(rng.integers(2, m + 1))
        scores = np.round(rng.uniform(size=m - 1), 1)  # coarse values force ties
        ok = True
        for scheme, sign in (("keep_top", -1), ("keep_bottom", 1)):
            got = select_student_frames(m, DistillConfig(selection_scheme=scheme), scores, n=n).tolist()
            ranked = sorted(range(1, m), key=lambda i: (sign * scores[i - 1], i))
            ok &= got == sorted([0] + ranked[: n - 1])
        matches += ok
    counts = np.zeros(10)
    cfg = DistillConfig()
    for _ in range(10_000):
        counts[select_student_frames(10, cfg, rng=rng, n=3)] += 1
    freq = counts / 10_000
    spread = float(np.max(np.abs(freq - 0.3)))
    verdict(9, "frame selection", matches == 100 and spread <= 0.02,
            f"sort oracle {matches}/100, random inclusion {freq.min():.3f}..{freq.max():.3f} "
            f"(max |f-0.3|={spread:.3f}), {time.perf_counter() - t0:.1f}s")


def _reduced_config(out):
    return harness.resolve_config({
        "out": str(out),
        "data": {"counts": {"source_train": 6, "source_eval": 3, "target_train": 6, "target_eval": 2,
                            "unseen_eval": 2}},
        "pretrain": {"steps": 30, "gate_min_gain": -1.0},
        "distill": {"epochs": 2, "steps_per_epoch": 5},
    })


def _snapshot(root):
    out = {}
    for p in sorted(root.rglob("*")):
        if p.is_file():
            out[str(p.relative_to(root))] = p.read_bytes().replace(str(root).encode(), b"<root>")
    return out


def test_criterion_10_determinism(desk, tmp_path):
    t0 = time.perf_counter()
    snaps = []
    for name in ("a", "b"):
        cfg = _reduced_config(tmp_path / name)
        harness.cmd_synth(cfg)
        harness.cmd_pretrain(cfg)
        harness.cmd_selfevo(cfg)
        harness.cmd_sweep(cfg, cfg.out_dir / "selfevo")
        snaps.append(_snapshot(cfg.out_dir))
    elapsed = time.perf_counter() - t0
    a, b = snaps
    differing = sorted(k for k in a.keys() | b.keys() if a.get(k) != b.get(k))
    budget = 2 * desk["selfevo_s"]
    verdict(10, "bit-identical reruns", not differing and elapsed <= budget,
            f"{len(a)} files compared, {len(differing)} differ {differing[:3]}, {elapsed:.0f}s "
            f"(budget {budget:.0f}s)")
