"""Shared fixtures.

Expensive objects (material model, parsed example chip, biphoton grids)
are session scoped so the suite builds each of them once.
"""

from importlib import resources

import numpy as np
import pytest

import qpic


def bundled(name):
    return resources.files("qpic.data") / name


@pytest.fixture(scope="session")
def model():
    return qpic.default_material()


@pytest.fixture(scope="session")
def chip():
    return qpic.parse_netlist(bundled("ideal_chip.net"))


@pytest.fixture(scope="session")
def jsa_small(chip):
    # coarse grid, enough for structural checks
    return qpic.build_jsa(chip.model, chip.pump, chip.phase_spec,
                          qpic.GridSpec(128, 128))


@pytest.fixture(scope="session")
def jsa_medium(chip):
    return qpic.build_jsa(chip.model, chip.pump, chip.phase_spec,
                          qpic.GridSpec(256, 256))


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20260816)
