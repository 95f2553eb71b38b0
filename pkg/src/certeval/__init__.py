__version__ = "0.1.0"

from .errors import CertevalError, DimensionError, FormatError, InputError, NumericalError
from .labels import CertaintyScheme, ClassMap, ExpertMap, Tiling, certainty_weight, tile_composition
from .confusion import ConfusionMatrix, NormalizedConfusion, accumulate_image, accumulate_tile, ecr, gcr, merge, normalize
from .boundary import BoundaryMap, boundary_image, extract_predicted_boundary, extract_reference_boundary
from .matching import MatchTable, SegScores, aggregate, dc, fd, fdc, match, wdc_nef, wdc_plain
from .direction import GvfConfig, VectorField, bd, gradient, gvf, gvf_energy
from .matching import fd_directional, wdc_directional
from .evaluator import EvalRun, Report, run_eval
from .synth import SynthSpec, gen_synthetic

__all__ = [
    "CertevalError", "DimensionError", "FormatError", "InputError", "NumericalError",
    "CertaintyScheme", "ClassMap", "ExpertMap", "Tiling", "certainty_weight", "tile_composition",
    "ConfusionMatrix", "NormalizedConfusion", "accumulate_image", "accumulate_tile", "ecr", "gcr", "merge", "normalize",
    "BoundaryMap", "boundary_image", "extract_predicted_boundary", "extract_reference_boundary",
    "MatchTable", "SegScores", "aggregate", "dc", "fd", "fdc", "match", "wdc_nef", "wdc_plain",
    "GvfConfig", "VectorField", "bd", "gradient", "gvf", "gvf_energy", "fd_directional", "wdc_directional",
    "EvalRun", "Report", "run_eval",
    "SynthSpec", "gen_synthetic",
]
