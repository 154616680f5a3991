"""
Depth alignment and pose AUC
============================

The evaluation metrics on hand-made inputs: a depth map that is right up to
scale, and pose errors turned into an AUC curve.
"""

import numpy as np

from selfevo import geometry
from selfevo.metrics import align_scale, depth_metrics, pose_auc, relative_pose_errors

rng = np.random.default_rng(0)
gt = rng.uniform(1, 10, size=(4, 16, 16))

# A prediction off by a global factor of 3 is perfect after scale alignment.
pred = 3.0 * gt
print("scale", align_scale(pred, gt))
print(depth_metrics(pred, gt, alignment="scale"))

# Scale and shift alignment also absorbs an offset.
print(depth_metrics(0.5 * gt + 2.0, gt, alignment="scale_shift"))

# Three cameras on a line; the prediction rotates the last one by 10 degrees.
quats = np.tile([1.0, 0, 0, 0], (3, 1))
trans = np.array([[0.0, 0, 0], [-1.0, 0, 0], [-2.0, 0, 0]])
gt_poses = np.concatenate([quats, trans], 1)
pred_poses = gt_poses.copy()
pred_poses[2, :4] = geometry.axis_angle_quat([0, 1, 0], np.deg2rad(10))
err = relative_pose_errors(pred_poses, gt_poses)
print("pair errors (rot, trans) in degrees\n", err.round(2))
print("AUC", pose_auc(err).auc)
