import pytest

from mg1exact.verify import VerificationContext


@pytest.fixture(scope="session")
def ctx() -> VerificationContext:
    """One shared cache of the expensive symbolic solves."""
    return VerificationContext()
