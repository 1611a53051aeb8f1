import numpy as np
import pytest

from maxstable import CovarianceSpec, available_backends, build_design, make_stream


@pytest.fixture(scope="session")
def brownian3():
    """The reference design: Brownian grid (1/3, 2/3, 1)."""
    return build_design(CovarianceSpec.brownian([1.0 / 3.0, 2.0 / 3.0, 1.0]))


@pytest.fixture(scope="session")
def identity3():
    return build_design(CovarianceSpec.explicit(np.eye(3)))


@pytest.fixture(params=available_backends())
def backend(request):
    """Run the test once per available stream backend."""
    return request.param


def stream_for(seed, index=0, backend=None):
    return make_stream(seed, index, backend=backend)
