"""
Boundary well-detection (WDC) and false-detection (FD) measures.

Every found boundary pixel f is linked to its nearest reference pixel e
(Euclidean distance between pixel centers, ties to the smallest row-major
index). n_ef counts how many found pixels share the same e.
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence, Union

import numpy as np
from scipy.spatial import cKDTree

from .boundary import BoundaryMap
from .errors import DimensionError, InputError

logger = logging.getLogger(__name__)

DEFAULT_EXPONENT = Fraction(1, 6)

VARIANTS = ("plain", "nef", "grad", "gvf")
DIRECTIONAL_VARIANTS = ("grad", "gvf")


@dataclass(frozen=True, eq=False)
class MatchTable:
    """
    Nearest-reference assignment of every found pixel.

    Attributes:
        found, ref: the matched boundary maps
        nearest: index into ``ref`` of e(f), per found pixel
        distance: d_fe per found pixel
        weight: W_e of e(f), per found pixel
        ref_counts: n_ef per reference pixel
    """

    found: BoundaryMap
    ref: BoundaryMap
    nearest: np.ndarray
    distance: np.ndarray
    weight: np.ndarray
    ref_counts: np.ndarray

    @property
    def n_ef(self) -> np.ndarray:
        """n_ef of the reference pixel matched by each found pixel."""
        return self.ref_counts[self.nearest]

    @property
    def total_ref_weight(self) -> float:
        """Sum of W_e over all reference pixels, matched or not."""
        return math.fsum(self.ref.weights)


def match(found: BoundaryMap, ref: BoundaryMap, workers: int = 1) -> MatchTable:
    """
    Link each found pixel to its nearest reference pixel.

    Args:
        found: boundary found by the algorithm under evaluation
        ref: reference boundary
        workers: parallel workers for the nearest-neighbour query (-1 for all cores)

    Returns:
        MatchTable
    """
    if found.shape != ref.shape:
        raise DimensionError(f"found boundary is {found.shape}, reference is {ref.shape}")
    if not len(found) or not len(ref):
        raise InputError("match() needs non-empty found and reference boundaries")

    f_coords = found.coords
    r_coords = ref.coords
    tree = cKDTree(r_coords)
    _, nearest = tree.query(f_coords, k=1, workers=workers)
    nearest = np.asarray(nearest, dtype=np.int64)
    best_d2 = ((f_coords - r_coords[nearest]) ** 2).sum(axis=1)

    # equal integer squared distances are ties; keep the smallest row-major index
    candidates = tree.query_ball_point(f_coords, r=np.sqrt(best_d2) + 1e-6, workers=workers)
    for i, cand in enumerate(candidates):
        if len(cand) > 1:
            cand = np.asarray(cand, dtype=np.int64)
            d2 = ((r_coords[cand] - f_coords[i]) ** 2).sum(axis=1)
            nearest[i] = cand[d2 == best_d2[i]].min()

    distance = np.sqrt(best_d2.astype(np.float64))
    ref_counts = np.bincount(nearest, minlength=len(ref))
    return MatchTable(found, ref, nearest, distance, ref.weights[nearest], ref_counts)


def dc(d_fe, w_e):
    """Well-detection criterion exp(-(d_fe * W_e)^2) * W_e."""
    d_fe = np.asarray(d_fe, dtype=np.float64)
    w_e = np.asarray(w_e, dtype=np.float64)
    return np.exp(-(d_fe * w_e) ** 2) * w_e


def fdc(d_fe, w_e):
    """False-detection criterion 1 - DC / W_e."""
    d_fe = np.asarray(d_fe, dtype=np.float64)
    w_e = np.asarray(w_e, dtype=np.float64)
    return 1.0 - np.exp(-(d_fe * w_e) ** 2)


def _exponent(a: Union[Fraction, float, str]) -> float:
    return float(Fraction(a)) if isinstance(a, str) else float(a)


def _normalized_wdc(terms: np.ndarray, total_ref_weight: float, a) -> float:
    peak = float(terms.max()) if terms.size else 0.0
    if peak <= 0.0:
        return 0.0
    return math.fsum(terms) / (peak * total_ref_weight) ** _exponent(a)


def _normalized_fd(terms: np.ndarray, total_ref_weight: float) -> float:
    peak = float(terms.max()) if terms.size else 0.0
    if peak <= 0.0:
        return 0.0
    return 1.0 - math.exp(-math.fsum(terms) / (peak * total_ref_weight))


def wdc_plain(table: MatchTable, a=DEFAULT_EXPONENT) -> float:
    """sum_f DC_f / (max_f DC_f * sum_e W_e)^a"""
    return _normalized_wdc(dc(table.distance, table.weight), table.total_ref_weight, a)


def wdc_nef(table: MatchTable, a=DEFAULT_EXPONENT) -> float:
    """WDC with each DC_f divided by the n_ef of its reference pixel."""
    return _normalized_wdc(dc(table.distance, table.weight) / table.n_ef, table.total_ref_weight, a)


def fd(table: MatchTable) -> float:
    """1 - exp(-sum_f FDC_f n_ef / (max_f(FDC_f n_ef) * sum_e W_e)); 0 when every term is 0."""
    return _normalized_fd(fdc(table.distance, table.weight) * table.n_ef, table.total_ref_weight)


def _sample(table: MatchTable, grid: np.ndarray) -> np.ndarray:
    grid = np.asarray(grid, dtype=np.float64)
    if grid.shape != table.found.shape:
        raise DimensionError(f"direction grid is {grid.shape}, image is {table.found.shape}")
    return grid[table.found.rows, table.found.cols]


def wdc_directional(table: MatchTable, bd_grid: np.ndarray, a=DEFAULT_EXPONENT) -> float:
    """n_ef-corrected WDC with DC_f weighted by the direction correspondence at f."""
    terms = dc(table.distance, table.weight) * _sample(table, bd_grid) / table.n_ef
    return _normalized_wdc(terms, table.total_ref_weight, a)


def fd_directional(table: MatchTable, bd_grid: np.ndarray) -> float:
    """FD with FDC_f weighted by (1 - BD) at f."""
    terms = fdc(table.distance, table.weight) * (1.0 - _sample(table, bd_grid)) * table.n_ef
    return _normalized_fd(terms, table.total_ref_weight)


@dataclass(frozen=True)
class SegScores:
    """Segmentation scores of one image (or an aggregate), for one measure variant."""

    wdc: float
    fd: float
    variant: str = "nef"
    pixels: int = 0

    @property
    def wdc_pct(self) -> float:
        """WDC in percent, clamped at 100 (the raw value can exceed 1)."""
        return round(min(self.wdc, 1.0) * 100.0, 2)

    @property
    def fd_pct(self) -> float:
        return round(self.fd * 100.0, 2)

    def to_dict(self) -> dict:
        return {
            "variant": self.variant,
            "wdc_raw": self.wdc,
            "wdc_pct": self.wdc_pct,
            "fd_pct": self.fd_pct,
            "pixels": self.pixels,
        }


def score_segmentation(
    found: BoundaryMap,
    ref: BoundaryMap,
    variant: str = "nef",
    a=DEFAULT_EXPONENT,
    bd_grid: Optional[np.ndarray] = None,
    table: Optional[MatchTable] = None,
) -> SegScores:
    """
    WDC and FD of one found boundary against one reference boundary.

    Empty sets: both empty gives WDC 1, FD 0; nothing found gives WDC 0, FD 0;
    an empty reference gives WDC 0, FD 1.
    """
    if variant not in VARIANTS:
        raise InputError(f"unknown measure variant {variant!r}; expected one of {', '.join(VARIANTS)}")
    pixels = found.height * found.width

    if not len(found) and not len(ref):
        return SegScores(1.0, 0.0, variant, pixels)
    if not len(found):
        return SegScores(0.0, 0.0, variant, pixels)
    if not len(ref):
        return SegScores(0.0, 1.0, variant, pixels)

    table = table or match(found, ref)
    if variant == "plain":
        return SegScores(wdc_plain(table, a), fd(table), variant, pixels)
    if variant == "nef":
        return SegScores(wdc_nef(table, a), fd(table), variant, pixels)
    if bd_grid is None:
        raise InputError(f"variant {variant!r} needs a direction grid")
    return SegScores(wdc_directional(table, bd_grid, a), fd_directional(table, bd_grid), variant, pixels)


def aggregate(scores: Sequence[SegScores], sizes: Optional[Sequence[int]] = None) -> SegScores:
    """
    Image-size-weighted mean of WDC and FD over several images.

    Args:
        scores: per-image scores of a single variant
        sizes: pixel counts; defaults to each score's ``pixels``
    """
    scores = list(scores)
    if not scores:
        raise InputError("cannot aggregate an empty list of scores")
    sizes = [s.pixels for s in scores] if sizes is None else list(sizes)
    if len(sizes) != len(scores):
        raise InputError(f"{len(scores)} scores but {len(sizes)} sizes")
    if any(size <= 0 for size in sizes):
        raise InputError("image sizes must be positive")
    variants = {s.variant for s in scores}
    if len(variants) > 1:
        raise InputError(f"cannot aggregate different variants {sorted(variants)}")

    total = math.fsum(sizes)
    wdc_mean = math.fsum(s.wdc * n for s, n in zip(scores, sizes)) / total
    fd_mean = math.fsum(s.fd * n for s, n in zip(scores, sizes)) / total
    return SegScores(wdc_mean, fd_mean, scores[0].variant, int(total))
