import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from selfevo import geometry
from selfevo.metrics import (
    DegenerateFitError, EvalConfig, MetricReport, align_scale, align_scale_shift, context_curve,
    depth_metrics, evaluate_model, pose_auc, relative_pose_errors, subsample_indices,
)
from selfevo.scene import CameraPose


def brute_auc(errors, T):
    total = 0.0
    for tau in range(1, T + 1):
        rra = sum(1 for r, _ in errors if r < tau) / len(errors)
        rta = sum(1 for _, t in errors if t < tau) / len(errors)
        total += min(rra, rta)
    return 100.0 * total / T


def random_poses(rng, n):
    q = geometry.normalize_quat(rng.normal(size=(n, 4)))
    t = rng.normal(size=(n, 3))
    return np.concatenate([q, t], axis=1)


class TestAlignment:
    def test_exact_multiple(self):
        assert align_scale([1, 2, 3], [2, 4, 6]) == pytest.approx(2.0)

    def test_identity(self):
        assert align_scale([1.5, 2.5], [1.5, 2.5]) == pytest.approx(1.0)
        s, t = align_scale_shift([1.0, 2.0, 5.0], [1.0, 2.0, 5.0])
        assert s == pytest.approx(1.0) and t == pytest.approx(0.0, abs=1e-12)

    def test_normal_equation(self):
        # sum(p*g) / sum(p^2) = 4 / 2
        assert align_scale([1, 1], [1, 3]) == pytest.approx(2.0)

    def test_two_point_fit(self):
        s, t = align_scale_shift([0.0, 1.0], [3.0, 5.0])
        assert (s, t) == (pytest.approx(2.0), pytest.approx(3.0))

    def test_degenerate(self):
        with pytest.raises(DegenerateFitError):
            align_scale_shift(np.ones(5), np.arange(1, 6))
        with pytest.raises(DegenerateFitError):
            align_scale(np.zeros(3), np.ones(3))
        with pytest.raises(ValueError):
            align_scale(np.ones(3), np.zeros(3))

    def test_beats_random_candidates(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            p = rng.uniform(0.5, 5, 50)
            g = rng.uniform(0.5, 5, 50)
            s = align_scale(p, g)
            best = np.sum((s * p - g) ** 2)
            cands = rng.uniform(s - 2, s + 2, 1000)
            assert best <= np.min(np.sum((cands[:, None] * p - g) ** 2, axis=1)) + 1e-12


class TestDepthMetrics:
    def test_scale_invariance_exact(self):
        gt = np.array([1.0, 2.0, 4.0])
        m = depth_metrics(2 * gt, gt, alignment="scale")
        assert m.abs_rel == pytest.approx(0.0, abs=1e-12) and m.delta_125 == 1.0

    def test_closed_form(self):
        m = depth_metrics([2.0, 8.0], [4.0, 4.0], alignment="scale")
        s = 40 / 68  # = 10/17
        expected = (abs(2 * s - 4) / 4 + abs(8 * s - 4) / 4) / 2
        assert m.abs_rel == pytest.approx(expected)
        assert m.abs_rel == pytest.approx(0.441, abs=1e-3)
        assert m.delta_125 == 0.5

    def test_scale_shift_identity(self):
        gt = np.array([1.0, 3.0, 2.0, 5.0])
        m = depth_metrics(gt, gt, alignment="scale_shift")
        assert m.abs_rel == pytest.approx(0.0, abs=1e-12) and m.delta_125 == 1.0

    def test_mask_excludes_zero_gt(self):
        m = depth_metrics([1.0, 100.0], [1.0, 0.0])
        assert m.valid_pixel_count == 1 and m.abs_rel == pytest.approx(0.0)

    def test_unknown_alignment(self):
        with pytest.raises(ValueError):
            depth_metrics([1.0], [1.0], alignment="median")

    @settings(max_examples=50, deadline=None)
    @given(st.floats(1e-3, 1e3), st.integers(0, 2**31))
    def test_affine_invariance(self, scale, seed):
        rng = np.random.default_rng(seed)
        gt = rng.uniform(1, 10, 40)
        pred = rng.uniform(1, 10, 40)
        shift = rng.uniform(-0.5, 0.5)
        a = depth_metrics(pred, gt, alignment="scale_shift")
        b = depth_metrics(scale * pred + shift, gt, alignment="scale_shift")
        assert b.abs_rel == pytest.approx(a.abs_rel, rel=1e-6, abs=1e-9)


class TestPoseErrors:
    def test_identity(self):
        rows = random_poses(np.random.default_rng(1), 5)
        err = relative_pose_errors(rows, rows)
        assert err.shape == (10, 2)
        np.testing.assert_allclose(err, 0.0, atol=1e-5)

    def test_rotation_30_about_z(self):
        ident = np.array([1.0, 0, 0, 0])
        gt = [CameraPose(ident, [0, 0, 0]), CameraPose(geometry.axis_angle_quat([0, 0, 1], np.radians(30)), [1, 0, 0])]
        pred = [CameraPose(ident, [0, 0, 0]), CameraPose(ident, [1, 0, 0])]
        err = relative_pose_errors(pred, gt)
        assert err[0, 0] == pytest.approx(30.0, abs=1e-6)

    def test_degenerate_translations(self):
        ident = [1.0, 0, 0, 0]
        still = [CameraPose(ident, [0, 0, 0]), CameraPose(ident, [0, 0, 0])]
        moving = [CameraPose(ident, [0, 0, 0]), CameraPose(ident, [0, 1, 0])]
        assert relative_pose_errors(still, still)[0, 1] == 0.0
        assert relative_pose_errors(still, moving)[0, 1] == 90.0

    def test_errors(self):
        rows = random_poses(np.random.default_rng(2), 3)
        with pytest.raises(ValueError):
            relative_pose_errors(rows, rows[:2])
        bad = rows.copy()
        bad[0, :4] *= 2
        with pytest.raises(ValueError):
            relative_pose_errors(bad, rows)

    def test_global_transform_invariance(self):
        rng = np.random.default_rng(3)
        pred, gt = random_poses(rng, 6), random_poses(rng, 6)
        base = relative_pose_errors(pred, gt)
        g_q, g_t = geometry.normalize_quat(rng.normal(size=4)), rng.normal(size=3)

        def moved(rows):
            out = rows.copy()
            for i, r in enumerate(rows):
                # world change X_w = G X_w': P' = P ∘ G
                q, t = geometry.compose(r[:4], r[4:], g_q, g_t)
                out[i] = np.concatenate([q, t])
            return out

        h_q, h_t = geometry.normalize_quat(rng.normal(size=4)), rng.normal(size=3)

        def moved2(rows):
            out = rows.copy()
            for i, r in enumerate(rows):
                q, t = geometry.compose(r[:4], r[4:], h_q, h_t)
                out[i] = np.concatenate([q, t])
            return out

        np.testing.assert_allclose(relative_pose_errors(moved(pred), moved2(gt)), base, atol=1e-4)

    def test_quaternion_sign_invariance(self):
        rng = np.random.default_rng(4)
        pred, gt = random_poses(rng, 5), random_poses(rng, 5)
        flipped = pred.copy()
        flipped[2, :4] *= -1
        np.testing.assert_allclose(relative_pose_errors(flipped, gt), relative_pose_errors(pred, gt), atol=1e-6)


class TestAUC:
    def test_perfect(self):
        m = pose_auc(np.zeros((4, 2)))
        assert m.auc == {5: 100.0, 15: 100.0, 30: 100.0}

    def test_single_pair(self):
        # min curve is 0 for tau <= 10, 1 for tau in 11..30
        assert pose_auc([(10.0, 0.0)]).auc[30] == pytest.approx(100 * 20 / 30)

    def test_clipped_large_error(self):
        assert pose_auc([(200.0, 0.0), (200.0, 1.0)]).auc[30] == 0.0
        assert np.all(pose_auc([(200.0, 0.0)]).rot_err == 180.0)

    def test_empty(self):
        with pytest.raises(ValueError):
            pose_auc(np.zeros((0, 2)))

    def test_monotone_and_matches_brute_force(self):
        rng = np.random.default_rng(5)
        for _ in range(25):
            n = int(rng.integers(1, 30))
            err = rng.uniform(0, 40, size=(n, 2))
            ties = rng.uniform(size=(n, 2)) < 0.2
            err[ties] = np.floor(err[ties])  # exercise errors sitting exactly on a threshold
            m = pose_auc(err)
            for T in (5, 15, 30):
                assert m.auc[T] == pytest.approx(brute_auc(err.tolist(), T), abs=1e-9)
            assert m.auc[5] <= m.auc[15] + 1e-12 <= m.auc[30] + 2e-12


def test_subsample_stride():
    assert subsample_indices(25, 10).tolist() == [0, 10, 20]
    assert subsample_indices(5, 1).tolist() == [0, 1, 2, 3, 4]


def test_evaluate_oracle_model(synthetic_seqs):
    def oracle(frames):
        for s in synthetic_seqs:
            for stride in (1, 2, 10):
                sub = s.subset(subsample_indices(len(s), stride))
                if sub.frames.tobytes() == frames.tobytes():
                    d = np.where(sub.gt_depth > 0, sub.gt_depth, 1.0)
                    return d, sub.gt_poses.astype(np.float64)
        raise AssertionError("unknown frames")

    rep = evaluate_model(None, synthetic_seqs, EvalConfig(stride=1), predictor=oracle)
    for row in rep.rows:
        assert row["abs_rel_scale"] == pytest.approx(0.0, abs=1e-6)
        assert row["delta_scale"] == 1.0
        assert row["auc30"] == pytest.approx(100.0)
    rep10 = evaluate_model(None, synthetic_seqs, EvalConfig(stride=10), predictor=oracle)
    assert rep10.rows[0]["frames"] == list(range(0, len(synthetic_seqs[0]), 10))
    csv_text = rep.to_csv()
    assert csv_text.splitlines()[0] == ("seq_id,abs_rel_scale,delta_scale,abs_rel_ss,delta_ss,"
                                        "auc5,auc15,auc30,n_pairs,n_valid_px")
    assert csv_text.splitlines()[-1].startswith("__mean__")
    assert MetricReport.from_dict(rep.to_dict()).to_json() == rep.to_json()


def test_evaluate_deterministic(synthetic_seqs, tiny_params):
    a = evaluate_model(tiny_params, synthetic_seqs[:2])
    b = evaluate_model(tiny_params, synthetic_seqs[:2])
    assert a.to_json() == b.to_json()


def test_evaluate_requires_labels(synthetic_seqs):
    from dataclasses import replace

    unlabeled = replace(synthetic_seqs[0], gt_depth=None)
    with pytest.raises(ValueError):
        evaluate_model(None, [unlabeled], predictor=lambda f: None)


def test_context_curve_oracle(static_seq):
    def oracle(frames):
        idx = [int(np.argmax([np.array_equal(f, g) for g in static_seq.frames])) for f in frames]
        sub = static_seq.subset(idx)
        return np.where(sub.gt_depth > 0, sub.gt_depth, 1.0), sub.gt_poses.astype(np.float64)

    rows = context_curve(None, static_seq, [4, 0, 2], trials=2, rng=np.random.default_rng(0), predictor=oracle)
    assert [r["k"] for r in rows] == [0, 2, 4]
    for r in rows:
        assert r["abs_rel"] == pytest.approx(0.0, abs=1e-6)
    assert all(0.0 <= r["covisibility"] <= 1.0 for r in rows)
    with pytest.raises(ValueError):
        context_curve(None, static_seq, [len(static_seq)], 1, np.random.default_rng(0), predictor=oracle)
