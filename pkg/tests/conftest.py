import os
from pathlib import Path

import pytest


@pytest.fixture(scope="session")
def level_cache():
    """Shared on-disk level cache so repeated test runs skip recomputation."""
    path = os.environ.get(
        "QUATZERO_TEST_CACHE",
        str(Path(__file__).resolve().parent.parent / "var" / "test-cache"),
    )
    Path(path).mkdir(parents=True, exist_ok=True)
    return path
