import os
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from src.certeval.direction import GvfConfig, VectorField, gvf
from utils.cache import FieldCache


@pytest.fixture
def cache(tmp_path):
    return FieldCache(str(tmp_path / "cache"), ttl_hours=1)


@pytest.fixture
def image():
    grid = np.zeros((8, 8))
    grid[:, 3:5] = 1.0
    return grid


class TestFieldCache:
    """On-disk cache of solved GVF fields."""

    def test_miss_then_hit(self, cache, image):
        cfg = GvfConfig(max_iterations=5)
        assert cache.get(image, cfg) is None
        field = gvf(image, cfg, cache)
        cached = cache.get(image, cfg)
        assert np.array_equal(cached.u, field.u) and np.array_equal(cached.v, field.v)

    def test_key_depends_on_settings(self, image):
        assert FieldCache.key_for(image, GvfConfig(mu=0.2)) != FieldCache.key_for(image, GvfConfig(mu=0.1))

    def test_key_depends_on_image(self, image):
        other = image.copy()
        other[0, 0] = 0.5
        assert FieldCache.key_for(image, GvfConfig()) != FieldCache.key_for(other, GvfConfig())

    def test_expired_entry(self, cache, image):
        cfg = GvfConfig(max_iterations=2)
        assert cache.set(image, cfg, VectorField(np.ones((8, 8)), np.zeros((8, 8))))
        path = next(cache.cache_dir.glob("gvf_*.npz"))
        old = time.time() - 2 * 3600
        os.utime(path, (old, old))
        assert cache.get(image, cfg) is None
        assert not path.exists()

    def test_clear_all(self, cache, image):
        cache.set(image, GvfConfig(), VectorField(np.ones((8, 8)), np.zeros((8, 8))))
        cache.set(image, GvfConfig(mu=0.1), VectorField(np.ones((8, 8)), np.zeros((8, 8))))
        assert cache.clear_all() == 2
        assert not list(cache.cache_dir.glob("gvf_*.npz"))

    def test_concurrent_writes_same_key(self, cache):
        image = np.zeros((256, 256))
        image[:, 128] = 1.0
        cfg = GvfConfig(max_iterations=1)
        field = VectorField(np.full((256, 256), 0.25), np.zeros((256, 256)))

        def write_many(_):
            return [cache.set(image, cfg, field) for _ in range(20)]

        with ThreadPoolExecutor(max_workers=4) as pool:
            outcomes = [ok for batch in pool.map(write_many, range(4)) for ok in batch]

        assert all(outcomes)
        assert len(list(cache.cache_dir.glob("gvf_*.npz"))) == 1
        assert not list(cache.cache_dir.glob("tmp_*"))
        cached = cache.get(image, cfg)
        assert np.array_equal(cached.u, field.u) and np.array_equal(cached.v, field.v)
