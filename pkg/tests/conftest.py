"""Общие фикстуры тестов"""
import numpy as np
import pytest

from src.detect.model import train
from src.detect.storage import save_model
from src.flows.synth import Separability, SynthSpec, synth_dataset
from src.sim.models import ControlCentre, Node, WorldState


def make_world(defenses, neighbors=None, threats=(), response_rate=5, seed=0):
    """Мир, собранный вручную, для проверки отдельных фаз"""
    neighbors = neighbors or [[] for _ in defenses]
    nodes = [Node(id=i, defense_level=d, neighbors=list(neighbors[i])) for i, d in enumerate(defenses)]
    return WorldState(
        tick=0,
        nodes=nodes,
        threats=list(threats),
        control=ControlCentre(response_rate=response_rate),
        rng=np.random.default_rng(seed),
    )


@pytest.fixture(scope="session")
def small_dataset():
    """Идеально разделимый синтетический набор из 600 потоков"""
    return synth_dataset(
        SynthSpec(
            row_count=600,
            proportions={"BENIGN": 0.8, "FTP-Patator": 0.1, "SSH-Patator": 0.1},
            separability=Separability.PERFECT,
            seed=7,
        )
    )


@pytest.fixture(scope="session")
def trained_model(small_dataset):
    return train(small_dataset, seed=0)


@pytest.fixture
def model_path(trained_model, tmp_path):
    return save_model(trained_model, tmp_path / "model.crdm")
