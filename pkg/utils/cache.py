import os
import time
import hashlib
import tempfile
from pathlib import Path
from typing import Optional
import logging

import numpy as np

from src.certeval.direction import GvfConfig, VectorField

logger = logging.getLogger(__name__)


class FieldCache:
    """File-based cache of solved GVF fields with TTL support."""

    def __init__(self, cache_dir: str = ".cache", ttl_hours: int = 168):
        """
        Initialize field cache.

        Args:
            cache_dir: Directory to store cached fields
            ttl_hours: Time-to-live in hours (default: 168 = 7 days)
        """
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.ttl_seconds = ttl_hours * 3600
        logger.info(f"💾 Field cache initialized: {cache_dir} (TTL: {ttl_hours}h)")

    @staticmethod
    def key_for(image: np.ndarray, cfg: GvfConfig) -> str:
        """Cache key: SHA-256 of the boundary image bytes, its shape and the solver settings."""
        image = np.ascontiguousarray(image, dtype="<f8")
        digest = hashlib.sha256()
        digest.update(repr(image.shape).encode())
        digest.update(image.tobytes())
        digest.update(cfg.key().encode())
        return digest.hexdigest()

    def _get_cache_path(self, key: str) -> Path:
        return self.cache_dir / f"gvf_{key}.npz"

    def get(self, image: np.ndarray, cfg: GvfConfig) -> Optional[VectorField]:
        """
        Retrieve a solved field.

        Returns:
            Cached field or None if not found/expired
        """
        key = self.key_for(image, cfg)
        cache_file = self._get_cache_path(key)

        if not cache_file.exists():
            return None

        try:
            file_age = time.time() - cache_file.stat().st_mtime
            if file_age > self.ttl_seconds:
                logger.info(f"🗑️ Cache expired: {key[:12]}...")
                cache_file.unlink()
                return None

            with np.load(cache_file) as data:
                field = VectorField(data["u"], data["v"])
            logger.debug(f"✅ Cache hit: {key[:12]}... (age: {file_age:.0f}s)")
            return field

        except Exception as e:
            logger.error(f"❌ Cache read error: {str(e)}")
            return None

    def set(self, image: np.ndarray, cfg: GvfConfig, field: VectorField) -> bool:
        """
        Store a solved field.

        Returns:
            True if successful, False otherwise
        """
        key = self.key_for(image, cfg)
        try:
            cache_file = self._get_cache_path(key)
            cache_file.parent.mkdir(parents=True, exist_ok=True)
            with tempfile.NamedTemporaryFile(dir=self.cache_dir, prefix="tmp_", suffix=".npz", delete=False) as tmp:
                np.savez(tmp, u=field.u, v=field.v)
            os.replace(tmp.name, cache_file)
            logger.debug(f"💾 Cached: {key[:12]}...")
            return True

        except Exception as e:
            logger.error(f"❌ Cache write error: {str(e)}")
            return False

    def clear_all(self) -> int:
        """Clear all cached fields."""
        count = 0
        for cache_file in self.cache_dir.glob("gvf_*.npz"):
            cache_file.unlink()
            count += 1
        logger.info(f"🗑️ Cleared {count} cache entries")
        return count
