import numpy as np
import pytest

from entropytile._accel import NUMBA_ENABLED
from entropytile.raster import SourceImage

BACKENDS = ["numpy"] + (["numba"] if NUMBA_ENABLED else [])


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_image(pixels, image_id="img", res=25.0, label=None):
    return SourceImage(image_id, np.asarray(pixels, dtype=np.uint8), res, label)


@pytest.fixture
def noise_image(rng):
    return make_image(rng.integers(0, 256, size=(300, 300)), "noise")
