from .eval_config import EvalConfig
from .gvf_config import GvfSettings



__all__ = ["EvalConfig", "GvfSettings"]
