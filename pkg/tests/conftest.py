import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from aniso.spectral import Grid2D


@pytest.fixture(scope="session")
def grid16():
    return Grid2D(16)


@pytest.fixture(scope="session")
def grid32():
    return Grid2D(32)


@pytest.fixture(scope="session")
def grid64():
    return Grid2D(64)
