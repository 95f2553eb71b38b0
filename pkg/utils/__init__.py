from .cache import FieldCache
from .map_parser import MapParser
from .pgm import PgmReader

__all__ = ["FieldCache", "MapParser", "PgmReader"]
