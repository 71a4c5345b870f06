import numpy as np
import pytest

from travel_features.models.geo import from_local_xy
from travel_features.utils.synthgen import SynthConfig

ORIGIN = np.array([109.49, 36.60])


def planted_blobs(centers_xy, n_per_blob, sigma_m, rng_seed=0, origin=ORIGIN):
    """
    Gaussian blobs around tangent-plane centers (meters from origin).

    Returns:
        (points (n, 2) [lng, lat], blob index per point)
    """
    rng = np.random.default_rng(rng_seed)
    xy = []
    owner = []
    for b, (cx, cy) in enumerate(centers_xy):
        xy.append(rng.normal(0.0, sigma_m, size=(n_per_blob, 2)) + np.array([cx, cy]))
        owner.extend([b] * n_per_blob)
    return from_local_xy(np.vstack(xy), origin), np.array(owner)


FIVE_CENTERS_XY = [(0.0, 0.0), (6000.0, 0.0), (0.0, 6000.0), (6000.0, 6000.0), (12000.0, 3000.0)]


@pytest.fixture
def five_blobs():
    return planted_blobs(FIVE_CENTERS_XY, 60, 50.0, rng_seed=7)


@pytest.fixture
def small_synth_config():
    return SynthConfig(
        rng_seed=3,
        n_blobs_per_label=2,
        pois_per_blob=10,
        city_extent_deg=0.6,
        n_passengers=12,
        records_min=105,
        records_max=120,
    )


@pytest.fixture
def write_csv(tmp_path):
    def _write(name, text):
        path = tmp_path / name
        path.write_text(text, encoding="utf-8")
        return path

    return _write


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: end-to-end runs on full-size synthetic data (deselect with -m 'not slow')")
