"""Fixtures partilhadas pelos testes."""
import numpy as np
import pytest
import torch

from config.settings import ModelConfig, RunConfig, SceneSpecConfig
from data.synthetic import SceneSpec, generate_dataset


@pytest.fixture(autouse=True)
def _seed_everything():
    torch.manual_seed(0)
    np.random.seed(0)
    yield


@pytest.fixture
def tiny_model_config() -> ModelConfig:
    """Detetor 32×32 de escala 'n' (rápido em CPU)."""
    return ModelConfig(variant='full', neck='hfan', scale='n', img_size=32, num_classes=3)


@pytest.fixture
def scene_spec() -> SceneSpec:
    return SceneSpec(img_size=32, count_range=(1, 3), size_range=(0.15, 0.35), num_classes=3, seed=0)


@pytest.fixture
def tiny_dataset(scene_spec):
    return generate_dataset(scene_spec, 6, base_seed=11)


@pytest.fixture
def tiny_run_config(tmp_path, tiny_model_config) -> RunConfig:
    """Execução de 1 época sobre poucas cenas sintéticas."""
    return RunConfig(
        model=tiny_model_config,
        scene=SceneSpecConfig(count_range=(1, 3), size_range=(0.15, 0.35)),
        train_scenes=6,
        eval_scenes=4,
        epochs=1,
        batch_size=4,
        out_dir=str(tmp_path / 'run'),
    ).resolved()
