import numpy as np
import pytest

from selfevo.model import ModelArch, init_params
from selfevo.scene import GenConfig, generate_scene, render_sequence

SMALL = dict(width=32, height=32, focal=32.0)


def small_gen(**overrides) -> GenConfig:
    return GenConfig.source(**{**SMALL, **overrides})


def tiny_arch(**overrides) -> ModelArch:
    base = dict(patch_size=8, embed_dim=16, num_layers=2, num_heads=4, height=32, width=32,
                cam_dim=4, cam_hidden=16, corr_radius=1)
    return ModelArch(**{**base, **overrides})


def tiny_experiment(out, **sections) -> dict:
    """Experiment config small enough to train in seconds."""
    cfg = {
        "out": str(out),
        "seed": 3,
        "data": {"num_frames": 12,
                 "counts": {"source_train": 4, "source_eval": 3, "target_train": 4, "target_eval": 2,
                            "unseen_eval": 2},
                 "source": SMALL, "target": SMALL, "unseen": SMALL},
        "arch": {"patch_size": 8, "embed_dim": 16, "num_layers": 2, "num_heads": 4, "height": 32, "width": 32,
                 "cam_dim": 4, "cam_hidden": 16, "corr_radius": 1},
        "pretrain": {"steps": 10, "batch_size": 2, "len_range": [2, 6], "gate_abs_rel": 5.0, "gate_min_gain": -1.0},
        "distill": {"teacher_len_range": [4, 8], "student_len_range": [2, 3], "epochs": 2, "steps_per_epoch": 2},
        "context": {"ks": [0, 1, 2], "trials": 1, "num_sequences": 3},
    }
    for name, values in sections.items():
        cfg[name] = {**cfg.get(name, {}), **values} if isinstance(values, dict) else values
    return cfg


@pytest.fixture(scope="session")
def synthetic_seqs():
    cfg = small_gen(noise_std=0.02)
    return [render_sequence(generate_scene(cfg, s), 12) for s in (11, 12, 13)]


@pytest.fixture(scope="session")
def static_seq():
    """Moving camera over a scene without moving objects or sensor noise."""
    cfg = small_gen(noise_std=0.0, dropout_blocks=0, dynamic_fraction=0.0)
    return render_sequence(generate_scene(cfg, 21), 10)


@pytest.fixture(scope="session")
def tiny_params():
    return init_params(tiny_arch(), seed=0)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
