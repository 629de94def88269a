import numpy as np
import pytest

from agribot.geometry import CameraExtrinsics


def random_rotation(rng: np.random.Generator) -> np.ndarray:
    """Uniform-ish random proper rotation via QR of a Gaussian matrix."""
    q, r = np.linalg.qr(rng.normal(size=(3, 3)))
    q = q @ np.diag(np.sign(np.diag(r)))
    if np.linalg.det(q) < 0:
        q[:, 2] = -q[:, 2]
    return q


def random_extrinsics(rng: np.random.Generator) -> CameraExtrinsics:
    return CameraExtrinsics(random_rotation(rng), rng.normal(scale=2.0, size=3))


def overhead_extrinsics(rng: np.random.Generator) -> CameraExtrinsics:
    """A camera above the z=0 plane looking down at a point near the origin."""
    position = np.array(
        [rng.uniform(-0.3, 0.3), rng.uniform(-0.3, 0.3), rng.uniform(0.6, 1.5)]
    )
    target = np.array([rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), 0.0])
    up = np.array([1.0, rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2)])
    return CameraExtrinsics.look_at(position, target, up)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
