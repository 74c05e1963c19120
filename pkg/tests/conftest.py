import os

# the run ledger must never touch a file database during tests
os.environ.setdefault("APP_DATABASE_URL", "sqlite://")

import pytest  # noqa: E402

from app.graph import RegularGraph, build_complete, build_hypercubic  # noqa: E402
from app.instances import connected_random  # noqa: E402


@pytest.fixture
def k3() -> RegularGraph:
    return build_complete(3)


@pytest.fixture
def k4() -> RegularGraph:
    return build_complete(4)


@pytest.fixture
def c4() -> RegularGraph:
    """4-cycle, the smallest bipartite test graph."""
    return build_hypercubic(4, 1)


@pytest.fixture
def random16() -> RegularGraph:
    return connected_random(16, 3, 1)
