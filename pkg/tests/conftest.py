"""Shared fixtures: the benchmark models and common matrices."""
import numpy as np
import pytest

import nsfdlab as nl


@pytest.fixture(scope="session")
def oscillator():
    return nl.make_model("oscillator")


@pytest.fixture(scope="session")
def biomass():
    return nl.make_model("biomass")


@pytest.fixture(scope="session")
def trees():
    return nl.make_model("trees")


@pytest.fixture(scope="session")
def seasonal():
    return nl.make_model("seasonal")


@pytest.fixture(scope="session")
def rotation_matrix():
    # planar rotation generator; eigenvalues exactly +-i
    return np.array([[0.0, 1.0], [-1.0, 0.0]])
