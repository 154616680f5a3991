"""Self-improvement of a small multi-view geometry model on synthetic scenes.

Modules: ``scene`` (procedural scenes and the on-disk sequence format),
``model`` (the feed-forward geometry network and checkpoints), ``distill``
(teacher-student training), ``metrics`` (depth and pose evaluation) and
``harness`` (experiment commands, also exposed through ``selfevo.cli``).
"""

from .distill import DistillConfig, LRSchedule, TrainState, run_self_improvement, train_step
from .harness import ExperimentConfig, resolve_config
from .metrics import EvalConfig, MetricReport, evaluate_model
from .model import GeoPrediction, ModelArch, forward, init_params, load_checkpoint, save_checkpoint
from .scene import FrameSequence, GenConfig, generate_scene, read_sequence, render_sequence

__version__ = "0.1.0"

__all__ = [
    "DistillConfig", "EvalConfig", "ExperimentConfig", "FrameSequence", "GenConfig", "GeoPrediction", "LRSchedule",
    "MetricReport", "ModelArch", "TrainState", "evaluate_model", "forward", "generate_scene", "init_params",
    "load_checkpoint", "read_sequence", "render_sequence", "resolve_config", "run_self_improvement",
    "save_checkpoint", "train_step",
]
