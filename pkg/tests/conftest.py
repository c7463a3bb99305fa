import numpy as np
import pytest

from weakkde.io import data_path, ingest_csv


@pytest.fixture(scope="session")
def faithful():
    return ingest_csv(data_path("faithful.csv"), "eruptions")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
