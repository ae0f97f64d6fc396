"""Shared instance builders for the suite."""

import json

import pytest

from pepslhv import configio


def recipe2_config(lattice="cycle:3", epsilon=0.2, measurements="noisy-pauli:2:0.5"):
    return {
        "lattice": lattice,
        "basis": "aligned:2:zero",
        "measurements": measurements,
        "psi": "plus-diag:2",
        "site_map": {"recipe": 2, "epsilon": epsilon},
    }


def build(config):
    # round-trip through JSON so tests exercise exactly what files carry
    return configio.build_instance(json.loads(json.dumps(config)))


@pytest.fixture
def cycle3_instance():
    return build(recipe2_config())


@pytest.fixture
def chain2_instance():
    return build(recipe2_config(lattice="chain:2"))


@pytest.fixture
def identity_bell_config():
    return {
        "lattice": "cycle:3",
        "basis": "phase-point",
        "measurements": "bell",
        "site_map": {"recipe": "identity"},
    }
