import logging
import os
from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)


class GvfSettings:
    """Gradient Vector Flow solver and direction-measure settings."""
    
    
    MU = float(os.getenv("CERTEVAL_GVF_MU", "0.2"))
    DT = float(os.getenv("CERTEVAL_GVF_DT", "1.0"))
    MAX_ITERATIONS = int(os.getenv("CERTEVAL_GVF_MAX_ITERATIONS", "500"))
    TOLERANCE = float(os.getenv("CERTEVAL_GVF_TOLERANCE", "1e-4"))
    
    
    BD_EPS = float(os.getenv("CERTEVAL_GVF_BD_EPS", "1e-6"))
    BD_COMPAT = os.getenv("CERTEVAL_GVF_BD_COMPAT", "False").lower() == "true"
    
    
    ENABLE_CACHE = os.getenv("CERTEVAL_GVF_ENABLE_CACHE", "False").lower() == "true"
    CACHE_DIR = os.getenv("CERTEVAL_GVF_CACHE_DIR", ".cache")
    CACHE_TTL_HOURS = int(os.getenv("CERTEVAL_GVF_CACHE_TTL_HOURS", "168"))  # 7 days
    
    @classmethod
    def validate(cls) -> bool:
        """Validate solver settings (dt must respect the explicit-scheme limit)."""
        if cls.MU <= 0 or cls.DT <= 0:
            logger.error("❌ CERTEVAL_GVF_MU and CERTEVAL_GVF_DT must be positive")
            return False
        if cls.DT > 1.0 / (4.0 * cls.MU):
            logger.error(f"❌ CERTEVAL_GVF_DT={cls.DT} exceeds 1/(4*mu)={1.0 / (4.0 * cls.MU):.4g}")
            return False
        return True
