"""
Annotation and prediction data types.

An ``ExpertMap`` is one expert's reading of one image: a class id and a
certainty grade on every pixel, plus an optional boundary flag carrying its own
grade. A ``ClassMap`` holds the labels predicted by the algorithm under
evaluation. Class id 0 is reserved for content the classifier does not model
(shadow, other).
"""

import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np

from .errors import DimensionError, InputError

logger = logging.getLogger(__name__)


UNMODELED = 0

# Grade tokens of the UEM1 format, most certain first.
GRADE_TOKENS = ("s", "m", "n")
GRADE_NAMES = ("sure", "moderately-sure", "not-sure")

NO_GRADE = -1


def _frozen(array: np.ndarray, dtype) -> np.ndarray:
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def grade_index(grade: Union[str, int]) -> int:
    """
    Resolve a grade given as token ("s"), name ("sure") or index.

    Raises:
        InputError: unknown grade
    """
    if isinstance(grade, (int, np.integer)):
        if 0 <= int(grade) < len(GRADE_TOKENS):
            return int(grade)
        raise InputError(f"unknown grade index {grade}")
    if grade in GRADE_TOKENS:
        return GRADE_TOKENS.index(grade)
    if grade in GRADE_NAMES:
        return GRADE_NAMES.index(grade)
    raise InputError(f"unknown grade {grade!r}")


@dataclass(frozen=True)
class CertaintyScheme:
    """Ordered certainty grades and their weights, most certain first."""

    grade_weights: Tuple[Tuple[str, Fraction], ...]

    def __post_init__(self):
        if not self.grade_weights:
            raise InputError("certainty scheme has no grades")
        if len(self.grade_weights) > len(GRADE_TOKENS):
            raise InputError(f"certainty scheme has more than {len(GRADE_TOKENS)} grades")
        weights = [w for _, w in self.grade_weights]
        for name, weight in self.grade_weights:
            if not isinstance(weight, Fraction):
                raise InputError(f"weight of {name!r} must be a Fraction")
            if not 0 < weight <= 1:
                raise InputError(f"weight of {name!r} must lie in (0, 1], got {weight}")
        # the all-equal scheme is the certainty-blind expert
        if len(set(weights)) > 1:
            for higher, lower in zip(weights, weights[1:]):
                if not higher > lower:
                    raise InputError("certainty weights must decrease strictly with certainty")

    @classmethod
    def default(cls) -> "CertaintyScheme":
        return cls.parse("2/3,1/2,1/3")

    @classmethod
    def uniform(cls, weight: Union[Fraction, int, str] = 1) -> "CertaintyScheme":
        """Every grade gets the same weight (classical, certainty-blind evaluation)."""
        weight = Fraction(weight)
        return cls(tuple((name, weight) for name in GRADE_NAMES))

    @classmethod
    def parse(cls, text: str) -> "CertaintyScheme":
        """
        Build a scheme from a comma-separated weight list such as "2/3,1/2,1/3".

        Weights are assigned to sure, moderately-sure and not-sure in that order.
        """
        parts = [p.strip() for p in text.split(",") if p.strip()]
        if not parts:
            raise InputError(f"empty certainty scheme {text!r}")
        if len(parts) > len(GRADE_NAMES):
            raise InputError(f"certainty scheme {text!r} lists more than {len(GRADE_NAMES)} weights")
        try:
            weights = [Fraction(p) for p in parts]
        except (ValueError, ZeroDivisionError) as e:
            raise InputError(f"invalid certainty scheme {text!r}: {e}") from e
        return cls(tuple(zip(GRADE_NAMES, weights)))

    @property
    def weights(self) -> Tuple[Fraction, ...]:
        return tuple(w for _, w in self.grade_weights)

    @property
    def max_weight(self) -> Fraction:
        return max(self.weights)

    def scaled(self, factor: Union[Fraction, int]) -> "CertaintyScheme":
        return CertaintyScheme(tuple((n, w * Fraction(factor)) for n, w in self.grade_weights))

    def integer_weights(self) -> Tuple[np.ndarray, int]:
        """
        Weights over a common denominator.

        Returns:
            (numerators, denominator) so that weight[k] == numerators[k] / denominator
        """
        denominator = math.lcm(*(w.denominator for w in self.weights))
        numerators = np.array([int(w * denominator) for w in self.weights], dtype=np.int64)
        return numerators, denominator

    def float_weights(self) -> np.ndarray:
        return np.array([float(w) for w in self.weights], dtype=np.float64)

    def describe(self) -> str:
        return ",".join(str(w) for w in self.weights)


def certainty_weight(grade: Union[str, int], scheme: CertaintyScheme) -> Fraction:
    """
    Weight of a certainty grade.

    Args:
        grade: token ("s"), name ("sure") or index
        scheme: certainty scheme

    Returns:
        The configured rational weight

    Raises:
        InputError: grade not present in the scheme
    """
    index = grade_index(grade)
    if index >= len(scheme.grade_weights):
        raise InputError(f"grade {grade!r} is not part of the certainty scheme")
    return scheme.grade_weights[index][1]


@dataclass(frozen=True, eq=False)
class ExpertMap:
    """One expert's labelling of one image."""

    labels: np.ndarray
    grades: np.ndarray
    boundary: np.ndarray
    boundary_grades: np.ndarray
    num_classes: int

    def __post_init__(self):
        labels = _frozen(self.labels, np.int64)
        if labels.ndim != 2 or labels.size == 0:
            raise InputError("expert labels must be a non-empty 2-D grid")
        for name in ("grades", "boundary", "boundary_grades"):
            if np.shape(getattr(self, name)) != labels.shape:
                raise DimensionError(f"expert {name} grid does not match labels {labels.shape}")
        grades = _frozen(self.grades, np.int8)
        boundary = _frozen(self.boundary, bool)
        boundary_grades = _frozen(self.boundary_grades, np.int8)

        if labels.min() < 0 or labels.max() > self.num_classes:
            raise InputError(f"class ids must lie in 0..{self.num_classes}")
        if grades.min() < 0 or grades.max() >= len(GRADE_TOKENS):
            raise InputError("every pixel must carry a known grade")
        flagged = boundary_grades[boundary]
        if flagged.size and (flagged.min() < 0 or flagged.max() >= len(GRADE_TOKENS)):
            raise InputError("every boundary pixel must carry a known grade")
        boundary_grades = np.where(boundary, boundary_grades, NO_GRADE).astype(np.int8)
        boundary_grades.setflags(write=False)

        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "grades", grades)
        object.__setattr__(self, "boundary", boundary)
        object.__setattr__(self, "boundary_grades", boundary_grades)

    @classmethod
    def from_arrays(
        cls,
        labels,
        grades: Union[str, np.ndarray] = "s",
        boundary: Optional[np.ndarray] = None,
        boundary_grades: Union[str, np.ndarray, None] = None,
        num_classes: Optional[int] = None,
    ) -> "ExpertMap":
        """Convenience constructor; scalar grades are broadcast to the grid."""
        labels = np.asarray(labels, dtype=np.int64)
        if isinstance(grades, str):
            grades = np.full(labels.shape, grade_index(grades), dtype=np.int8)
        if boundary is None:
            boundary = np.zeros(labels.shape, dtype=bool)
        if boundary_grades is None:
            boundary_grades = grades
        if isinstance(boundary_grades, str):
            boundary_grades = np.full(labels.shape, grade_index(boundary_grades), dtype=np.int8)
        if num_classes is None:
            num_classes = int(labels.max()) if labels.size else 0
        return cls(labels, grades, boundary, boundary_grades, num_classes)

    @property
    def height(self) -> int:
        return int(self.labels.shape[0])

    @property
    def width(self) -> int:
        return int(self.labels.shape[1])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    def pixel_weights(self, scheme: CertaintyScheme) -> np.ndarray:
        """Per-pixel class certainty weights as floats."""
        return scheme.float_weights()[self.grades]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExpertMap):
            return NotImplemented
        return (
            self.num_classes == other.num_classes
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.grades, other.grades)
            and np.array_equal(self.boundary, other.boundary)
            and np.array_equal(self.boundary_grades, other.boundary_grades)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ClassMap:
    """Labels predicted by the algorithm under evaluation; ``mask`` marks unevaluated pixels."""

    labels: np.ndarray
    num_classes: int
    mask: Optional[np.ndarray] = None

    def __post_init__(self):
        labels = _frozen(self.labels, np.int64)
        if labels.ndim != 2 or labels.size == 0:
            raise InputError("predicted labels must be a non-empty 2-D grid")
        mask = np.zeros(labels.shape, dtype=bool) if self.mask is None else self.mask
        if np.shape(mask) != labels.shape:
            raise DimensionError(f"mask does not match labels {labels.shape}")
        mask = _frozen(mask, bool)
        evaluated = labels[~mask]
        if evaluated.size and (evaluated.min() < 0 or evaluated.max() > self.num_classes):
            raise InputError(f"predicted class ids must lie in 0..{self.num_classes}")
        labels = np.where(mask, 0, labels)
        labels.setflags(write=False)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "mask", mask)

    @property
    def height(self) -> int:
        return int(self.labels.shape[0])

    @property
    def width(self) -> int:
        return int(self.labels.shape[1])

    @property
    def shape(self) -> Tuple[int, int]:
        return self.height, self.width

    def check_against(self, expert: ExpertMap, source: Optional[str] = None):
        """Raise DimensionError unless this map can be evaluated against ``expert``."""
        if self.shape != expert.shape:
            raise DimensionError(
                f"prediction is {self.width}x{self.height} but expert map is {expert.width}x{expert.height}",
                source,
            )

    def __eq__(self, other) -> bool:
        if not isinstance(other, ClassMap):
            return NotImplemented
        return (
            self.num_classes == other.num_classes
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.mask, other.mask)
        )

    __hash__ = None


@dataclass(frozen=True)
class Tile:
    row: int
    col: int
    size: int

    @property
    def center(self) -> Tuple[int, int]:
        half = (self.size - 1) // 2
        return self.row + half, self.col + half

    def slices(self) -> Tuple[slice, slice]:
        return slice(self.row, self.row + self.size), slice(self.col, self.col + self.size)


@dataclass(frozen=True)
class Tiling:
    """Square n x n classification units laid out with a step from an anchor offset."""

    size: int
    step: Optional[int] = None
    anchor: Tuple[int, int] = (0, 0)

    def __post_init__(self):
        if self.size < 1:
            raise InputError(f"tile size must be >= 1, got {self.size}")
        if self.step is None:
            object.__setattr__(self, "step", self.size)
        if self.step < 1:
            raise InputError(f"tile step must be >= 1, got {self.step}")
        if min(self.anchor) < 0:
            raise InputError(f"tile anchor must be non-negative, got {self.anchor}")

    def tiles(self, height: int, width: int) -> Iterator[Tile]:
        """Tiles fully inside a ``height`` x ``width`` image, row-major."""
        for row in range(self.anchor[0], height - self.size + 1, self.step):
            for col in range(self.anchor[1], width - self.size + 1, self.step):
                yield Tile(row, col, self.size)


def tile_composition(
    expert: ExpertMap, tile: Tile, scheme: CertaintyScheme
) -> List[Tuple[int, Fraction]]:
    """
    Certainty-weighted class masses of one tile.

    mass(i) = sum of W(p) over the tile's pixels labelled i, divided by n^2.

    Returns:
        (class id, exact mass) pairs sorted by class id, one per class present
    """
    if tile.row < 0 or tile.col < 0 or tile.row + tile.size > expert.height or tile.col + tile.size > expert.width:
        raise InputError(f"tile {tile} lies outside the {expert.width}x{expert.height} map")

    numerators, denominator = scheme.integer_weights()
    if int(expert.grades.max()) >= numerators.size:
        raise InputError("expert map uses a grade missing from the certainty scheme")
    rows, cols = tile.slices()
    block_labels = expert.labels[rows, cols].ravel()
    block_weights = numerators[expert.grades[rows, cols].ravel()]
    area = denominator * tile.size * tile.size

    composition = []
    for cls in np.unique(block_labels):
        total = int(block_weights[block_labels == cls].sum())
        composition.append((int(cls), Fraction(total, area)))
    return composition

