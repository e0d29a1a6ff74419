"""Shared fixtures: the shipped seed space and the reference model table."""

import json
from pathlib import Path

import pytest

from kwsnas.archspec import (
    ConvLayerSpec,
    NetworkArch,
    TensorShape,
    load_space,
    validate_arch,
)

REPO = Path(__file__).resolve().parents[1]
CONFIGS = REPO / "configs"


@pytest.fixture(scope="session")
def seed_space():
    return load_space(CONFIGS / "seed_space.json")


@pytest.fixture(scope="session")
def seed_arch(seed_space):
    return seed_space.seed


@pytest.fixture(scope="session")
def reference_models():
    return json.loads((CONFIGS / "reference_models.json").read_text())


def reference_entry(doc: dict, name: str) -> dict:
    for entry in doc["models"]:
        if entry["name"] == name:
            return entry
    raise KeyError(name)


def build_reference_arch(doc: dict, name: str) -> NetworkArch:
    """Materialize one reference model under the pinned stride convention."""
    entry = reference_entry(doc, name)
    inp = doc["input"]
    layers = []
    for i, (kh, kw, m) in enumerate(entry["layers"]):
        sh, sw = (1, 2) if i == 0 else (1, 1)
        layers.append(ConvLayerSpec(kh=kh, kw=kw, m=m, sh=sh, sw=sw, padding="same"))
    return validate_arch(
        NetworkArch(
            input=TensorShape(c=inp["c"], h=inp["h"], w=inp["w"]),
            layers=tuple(layers),
        )
    )
