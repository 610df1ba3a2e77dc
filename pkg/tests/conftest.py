import pytest

from wavesr.tensor import set_debug_checks


@pytest.fixture(autouse=True)
def debug_checks():
    """Run every op with the NaN/Inf guard enabled."""
    set_debug_checks(True)
    yield
    set_debug_checks(False)
