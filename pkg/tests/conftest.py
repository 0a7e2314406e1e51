import pytest

from relaysim import backend


@pytest.fixture(params=backend.available_backends())
def engine(request):
    """Run the test once per available engine backend."""
    with backend.use_backend(request.param):
        yield request.param
