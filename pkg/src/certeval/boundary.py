import logging
from dataclasses import dataclass
from typing import Iterable, Optional, Tuple

import numpy as np

from .errors import InputError
from .labels import ClassMap, CertaintyScheme, ExpertMap

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class BoundaryMap:
    """
    Sparse boundary pixels of one image, sorted in row-major order.

    Attributes:
        height, width: image size
        rows, cols: pixel coordinates
        weights: positive weight per pixel (expert certainty, or 1 for found boundaries)
    """

    height: int
    width: int
    rows: np.ndarray
    cols: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        rows = np.asarray(self.rows, dtype=np.int64).ravel()
        cols = np.asarray(self.cols, dtype=np.int64).ravel()
        weights = np.asarray(self.weights, dtype=np.float64).ravel()
        if not rows.size == cols.size == weights.size:
            raise InputError("boundary rows, cols and weights differ in length")
        if rows.size:
            if rows.min() < 0 or rows.max() >= self.height or cols.min() < 0 or cols.max() >= self.width:
                raise InputError("boundary pixel outside the image")
            if weights.min() <= 0 or weights.max() > 1:
                raise InputError("boundary weights must lie in (0, 1]")
        flat = rows * self.width + cols
        order = np.argsort(flat, kind="stable")
        flat = flat[order]
        if flat.size > 1 and np.any(flat[1:] == flat[:-1]):
            raise InputError("duplicate boundary pixel")
        for name, values in (("rows", rows[order]), ("cols", cols[order]), ("weights", weights[order])):
            values.setflags(write=False)
            object.__setattr__(self, name, values)

    @classmethod
    def empty(cls, height: int, width: int) -> "BoundaryMap":
        return cls(height, width, np.zeros(0), np.zeros(0), np.zeros(0))

    @classmethod
    def from_points(cls, height: int, width: int, points: Iterable[Tuple[int, int, float]]) -> "BoundaryMap":
        points = list(points)
        if not points:
            return cls.empty(height, width)
        rows, cols, weights = zip(*points)
        return cls(height, width, np.array(rows), np.array(cols), np.array(weights, dtype=np.float64))

    @classmethod
    def from_grid(cls, grid: np.ndarray) -> "BoundaryMap":
        """Nonzero cells of a dense weight grid."""
        grid = np.asarray(grid, dtype=np.float64)
        rows, cols = np.nonzero(grid)
        return cls(grid.shape[0], grid.shape[1], rows, cols, grid[rows, cols])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    @property
    def coords(self) -> np.ndarray:
        """(k, 2) array of (row, col)."""
        return np.column_stack([self.rows, self.cols])

    @property
    def flat_indices(self) -> np.ndarray:
        return self.rows * self.width + self.cols

    def __len__(self) -> int:
        return int(self.rows.size)

    def translated(self, drow: int, dcol: int, height: Optional[int] = None, width: Optional[int] = None) -> "BoundaryMap":
        return BoundaryMap(
            height or self.height, width or self.width, self.rows + drow, self.cols + dcol, self.weights
        )

    def __eq__(self, other) -> bool:
        if not isinstance(other, BoundaryMap):
            return NotImplemented
        return (
            self.shape == other.shape
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.cols, other.cols)
            and np.array_equal(self.weights, other.weights)
        )

    __hash__ = None


def class_change_mask(labels: np.ndarray, mask: Optional[np.ndarray] = None, one_sided: bool = False) -> np.ndarray:
    """
    Pixels that differ from their right or bottom neighbour.

    With ``one_sided`` False the differing neighbour is marked as well, so a
    class change yields a band two pixels thick. Masked pixels never take part.
    """
    labels = np.asarray(labels)
    valid = np.ones(labels.shape, dtype=bool) if mask is None else ~np.asarray(mask, dtype=bool)

    right = (labels[:, :-1] != labels[:, 1:]) & valid[:, :-1] & valid[:, 1:]
    bottom = (labels[:-1, :] != labels[1:, :]) & valid[:-1, :] & valid[1:, :]

    marked = np.zeros(labels.shape, dtype=bool)
    marked[:, :-1] |= right
    marked[:-1, :] |= bottom
    if not one_sided:
        marked[:, 1:] |= right
        marked[1:, :] |= bottom
    return marked


def extract_predicted_boundary(pred: ClassMap, one_sided: bool = False) -> BoundaryMap:
    """
    Boundary deduced from a classified image, every pixel with weight 1.

    Args:
        pred: predicted class map
        one_sided: mark only the pixel before the class change (no neighbour)

    Returns:
        BoundaryMap of the found boundary
    """
    marked = class_change_mask(pred.labels, pred.mask, one_sided)
    rows, cols = np.nonzero(marked)
    return BoundaryMap(pred.height, pred.width, rows, cols, np.ones(rows.size))


def extract_reference_boundary(expert: ExpertMap, scheme: CertaintyScheme) -> BoundaryMap:
    """Expert-flagged boundary pixels weighted by their boundary certainty grade."""
    rows, cols = np.nonzero(expert.boundary)
    grades = expert.boundary_grades[rows, cols]
    weights = scheme.float_weights()
    if grades.size and int(grades.max()) >= weights.size:
        raise InputError("expert boundary uses a grade missing from the certainty scheme")
    return BoundaryMap(expert.height, expert.width, rows, cols, weights[grades])


def boundary_image(bmap: BoundaryMap) -> np.ndarray:
    """Dense grid: 0 off the boundary, W_e on boundary pixels."""
    grid = np.zeros(bmap.shape, dtype=np.float64)
    grid[bmap.rows, bmap.cols] = bmap.weights
    return grid


def format_boundary_grid(bmap: BoundaryMap) -> str:
    """Text dump for debugging: header 'UBM1 <width> <height>', then one token per pixel."""
    grid = boundary_image(bmap)
    lines = [f"UBM1 {bmap.width} {bmap.height}"]
    for row in grid:
        lines.append(" ".join("0" if v == 0 else f"{v:.6g}" for v in row))
    return "\n".join(lines) + "\n"
