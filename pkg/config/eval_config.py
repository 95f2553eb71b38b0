import logging
import os
from dotenv import load_dotenv

load_dotenv()

logger = logging.getLogger(__name__)


def _env_bool(name: str, default: str) -> bool:
    return os.getenv(name, default).lower() in ("1", "true", "yes")


class EvalConfig:
    """Evaluation defaults; every value can be overridden from the command line."""
    
    
    SCHEME = os.getenv("CERTEVAL_SCHEME", "2/3,1/2,1/3")
    
    
    TILE_SIZE = int(os.getenv("CERTEVAL_TILE_SIZE", "32"))
    STEP = int(os.getenv("CERTEVAL_STEP", "0")) or None  # 0 / unset: step = tile size
    
    
    A = os.getenv("CERTEVAL_A", "1/6")
    VARIANTS = os.getenv("CERTEVAL_VARIANTS", "plain,nef,gvf")
    
    
    ECR_WITH_UNMODELED = _env_bool("CERTEVAL_ECR_WITH_UNMODELED", "False")
    REJECT_CLASS = _env_bool("CERTEVAL_REJECT_CLASS", "False")
    
    
    WORKERS = int(os.getenv("CERTEVAL_WORKERS", "4"))
    LOG_LEVEL = os.getenv("CERTEVAL_LOG_LEVEL", "INFO").upper()
    
    @classmethod
    def variant_list(cls) -> list:
        return [v.strip() for v in cls.VARIANTS.split(",") if v.strip()]
    
    @classmethod
    def validate(cls) -> bool:
        """Validate evaluation configuration."""
        ok = True
        if cls.TILE_SIZE < 1:
            logger.error(f"❌ CERTEVAL_TILE_SIZE must be >= 1, got {cls.TILE_SIZE}")
            ok = False
        if cls.WORKERS < 1:
            logger.error(f"❌ CERTEVAL_WORKERS must be >= 1, got {cls.WORKERS}")
            ok = False
        if cls.LOG_LEVEL not in ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"):
            logger.warning(f"⚠️ Unknown CERTEVAL_LOG_LEVEL {cls.LOG_LEVEL!r}, using INFO")
            cls.LOG_LEVEL = "INFO"
        return ok
