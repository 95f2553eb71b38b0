"""
Certainty-weighted confusion matrix.

Rows are true classes 1..N followed by one extra row for unmodeled reference
content (class 0); columns are predicted classes 1..N. Entries are exact
rationals: a tile adds its certainty-weighted class masses to the column of the
class the classifier predicted for it.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DimensionError, InputError
from .labels import UNMODELED, CertaintyScheme, ClassMap, ExpertMap, Tiling, tile_composition

logger = logging.getLogger(__name__)

Number = Union[Fraction, int, float, str]


def _exact(value: Number) -> Fraction:
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


def fraction_entry(value: Fraction) -> Dict[str, Union[str, float]]:
    """JSON form of an exact rational: "p/q" string plus float."""
    return {"exact": f"{value.numerator}/{value.denominator}", "value": float(value)}


class ConfusionMatrix:
    """Mutable (N+1) x N accumulator; not safe for concurrent accumulation."""

    def __init__(self, num_classes: int, entries: Optional[Sequence[Sequence[Number]]] = None):
        if num_classes < 1:
            raise InputError(f"a confusion matrix needs at least one class, got {num_classes}")
        self.num_classes = num_classes
        self.rejected_mass = Fraction(0)
        if entries is None:
            self._entries = [[Fraction(0)] * num_classes for _ in range(num_classes + 1)]
        else:
            rows = [[_exact(v) for v in row] for row in entries]
            if len(rows) == num_classes:
                rows.append([Fraction(0)] * num_classes)
            if len(rows) != num_classes + 1 or any(len(row) != num_classes for row in rows):
                raise DimensionError(f"entries must be {num_classes + 1}x{num_classes} (or {num_classes}x{num_classes})")
            if any(v < 0 for row in rows for v in row):
                raise InputError("confusion entries must be non-negative")
            self._entries = rows

    @classmethod
    def zeros(cls, num_classes: int) -> "ConfusionMatrix":
        return cls(num_classes)

    def row_index(self, class_id: int) -> int:
        """Row holding true class ``class_id``; class 0 maps to the unmodeled row."""
        if class_id == UNMODELED:
            return self.num_classes
        if not 1 <= class_id <= self.num_classes:
            raise InputError(f"class id {class_id} outside 0..{self.num_classes}")
        return class_id - 1

    def __getitem__(self, key: Tuple[int, int]) -> Fraction:
        true_class, predicted = key
        if not 1 <= predicted <= self.num_classes:
            raise InputError(f"predicted class {predicted} outside 1..{self.num_classes}")
        return self._entries[self.row_index(true_class)][predicted - 1]

    def add(self, true_class: int, predicted: int, mass: Fraction):
        if mass < 0:
            raise InputError(f"negative mass {mass} for class {true_class}")
        self._entries[self.row_index(true_class)][predicted - 1] += mass

    @property
    def entries(self) -> Tuple[Tuple[Fraction, ...], ...]:
        return tuple(tuple(row) for row in self._entries)

    @property
    def modeled_rows(self) -> Tuple[Tuple[Fraction, ...], ...]:
        return self.entries[: self.num_classes]

    @property
    def unmodeled_row(self) -> Tuple[Fraction, ...]:
        return tuple(self._entries[self.num_classes])

    def column_sums(self) -> Tuple[Fraction, ...]:
        return tuple(sum((row[j] for row in self._entries), Fraction(0)) for j in range(self.num_classes))

    def total(self) -> Fraction:
        return sum(self.column_sums(), Fraction(0))

    def as_array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self._entries], dtype=np.float64)

    def copy(self) -> "ConfusionMatrix":
        out = ConfusionMatrix(self.num_classes, self._entries)
        out.rejected_mass = self.rejected_mass
        return out

    def to_dict(self) -> List[List[Dict[str, Union[str, float]]]]:
        return [[fraction_entry(v) for v in row] for row in self._entries]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return (
            self.num_classes == other.num_classes
            and self._entries == other._entries
            and self.rejected_mass == other.rejected_mass
        )

    __hash__ = None

    def __repr__(self) -> str:
        return f"ConfusionMatrix(num_classes={self.num_classes}, entries={self.as_array().tolist()})"


def accumulate_tile(
    cm: ConfusionMatrix,
    composition: Iterable[Tuple[int, Fraction]],
    predicted: int,
    allow_reject: bool = False,
) -> ConfusionMatrix:
    """
    Add one tile's class masses to the column of its predicted class.

    Args:
        cm: accumulator, updated in place
        composition: (true class, mass) pairs of the tile
        predicted: class emitted for the tile
        allow_reject: treat predicted class 0 as a reject decision instead of an error

    Returns:
        The updated matrix
    """
    composition = list(composition)
    if predicted == UNMODELED:
        if not allow_reject:
            raise InputError("the classifier emitted the unmodeled class 0 without a reject class")
        cm.rejected_mass += sum((mass for _, mass in composition), Fraction(0))
        return cm
    if not 1 <= predicted <= cm.num_classes:
        raise InputError(f"predicted class {predicted} outside 1..{cm.num_classes}")
    for true_class, mass in composition:
        cm.add(true_class, predicted, mass)
    return cm


def accumulate_image(
    cm: ConfusionMatrix,
    expert: ExpertMap,
    pred: ClassMap,
    tiling: Tiling,
    scheme: CertaintyScheme,
    allow_reject: bool = False,
    source: Optional[str] = None,
) -> ConfusionMatrix:
    """
    Fold ``accumulate_tile`` over every tile of one image.

    A tile's prediction is the ClassMap label at the tile center; tiles whose
    center is masked are skipped.
    """
    pred.check_against(expert, source)
    if expert.num_classes > cm.num_classes or pred.num_classes > cm.num_classes:
        raise DimensionError(
            f"maps use {max(expert.num_classes, pred.num_classes)} classes, matrix has {cm.num_classes}",
            source,
        )

    evaluated = skipped = 0
    for tile in tiling.tiles(expert.height, expert.width):
        center = tile.center
        if pred.mask[center]:
            skipped += 1
            continue
        accumulate_tile(cm, tile_composition(expert, tile, scheme), int(pred.labels[center]), allow_reject)
        evaluated += 1

    logger.debug(f"Accumulated {evaluated} tiles ({skipped} masked) from {source or 'image'}")
    return cm


def merge(matrices: Sequence[ConfusionMatrix]) -> ConfusionMatrix:
    """Entrywise sum of per-image / per-expert matrices."""
    matrices = list(matrices)
    if not matrices:
        raise InputError("nothing to merge")
    num_classes = matrices[0].num_classes
    if any(m.num_classes != num_classes for m in matrices):
        raise DimensionError("cannot merge confusion matrices with different class counts")
    merged = ConfusionMatrix.zeros(num_classes)
    for m in matrices:
        for i, row in enumerate(m.entries):
            for j, value in enumerate(row):
                merged._entries[i][j] += value
        merged.rejected_mass += m.rejected_mass
    return merged


@dataclass(frozen=True)
class NormalizedConfusion:
    """
    Row-normalized confusion matrix.

    ``ncm`` has the same (N+1) x N layout as the source matrix. Rows whose total
    is zero are listed in ``not_evaluated`` (by class id, 0 for the unmodeled
    row) and hold zeros.
    """

    ncm: Tuple[Tuple[Fraction, ...], ...]
    row_totals: Tuple[Fraction, ...]
    num_classes: int

    @classmethod
    def from_rows(
        cls,
        rows: Sequence[Sequence[Number]],
        unmodeled: Optional[Sequence[Number]] = None,
    ) -> "NormalizedConfusion":
        """Build directly from already-normalized modeled rows (and an optional unmodeled row)."""
        num_classes = len(rows)
        table = [tuple(_exact(v) for v in row) for row in rows]
        table.append(tuple(_exact(v) for v in unmodeled) if unmodeled is not None else (Fraction(0),) * num_classes)
        if any(len(row) != num_classes for row in table):
            raise DimensionError("normalized rows must be square plus an optional unmodeled row")
        totals = tuple(sum(row, Fraction(0)) for row in table)
        return cls(tuple(table), totals, num_classes)

    @property
    def not_evaluated(self) -> Tuple[int, ...]:
        ids = [i + 1 for i in range(self.num_classes) if self.row_totals[i] == 0]
        if self.row_totals[self.num_classes] == 0:
            ids.append(UNMODELED)
        return tuple(ids)

    @property
    def has_unmodeled(self) -> bool:
        """True when some reference mass fell into the unmodeled row."""
        return self.row_totals[self.num_classes] > 0

    def as_array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.ncm], dtype=np.float64)

    def to_dict(self) -> Dict[str, object]:
        return {
            "Ncm": [[fraction_entry(v) for v in row] for row in self.ncm],
            "row_totals": [fraction_entry(v) for v in self.row_totals],
            "not_evaluated_rows": list(self.not_evaluated),
        }


def normalize(cm: ConfusionMatrix) -> NormalizedConfusion:
    """Ncm[i][j] = cm[i][j] / N_i with N_i the row total; zero rows stay zero and are flagged."""
    table = []
    totals = []
    for row in cm.entries:
        total = sum(row, Fraction(0))
        totals.append(total)
        if total == 0:
            table.append(tuple(Fraction(0) for _ in row))
        else:
            table.append(tuple(v / total for v in row))
    return NormalizedConfusion(tuple(table), tuple(totals), cm.num_classes)


def gcr(ncm: NormalizedConfusion) -> np.ndarray:
    """
    Good classification rate vector: the diagonal of Ncm.

    The unmodeled row, when present, has no diagonal and contributes 0.
    """
    rates = [float(ncm.ncm[k][k]) for k in range(ncm.num_classes)]
    if ncm.has_unmodeled:
        rates.append(0.0)
    return np.array(rates, dtype=np.float64)


def ecr(ncm: NormalizedConfusion, with_unmodeled: bool = False) -> np.ndarray:
    """
    Error classification rate vector, the mean of first- and second-kind errors.

    ECR_k = 1/2 (sum_{j!=k} Ncm[k][j] + sum_{i!=k} Ncm[i][k] / (N-1)) over modeled rows.

    With ``with_unmodeled`` and an evaluated unmodeled row, the second-kind sum
    also runs over the unmodeled row and is divided by (rows - 1); the
    unmodeled row gets its own entry 1/2 * sum_j Ncm[u][j].

    Raises:
        InputError: fewer than two modeled classes
    """
    n = ncm.num_classes
    if n < 2:
        raise InputError("the error classification rate needs at least two classes")

    rows = list(range(n))
    if with_unmodeled and ncm.has_unmodeled:
        rows.append(n)
    divisor = len(rows) - 1

    rates = []
    for k in range(n):
        first = sum((ncm.ncm[k][j] for j in range(n) if j != k), Fraction(0))
        second = sum((ncm.ncm[i][k] for i in rows if i != k), Fraction(0)) / divisor
        rates.append(float((first + second) / 2))
    if with_unmodeled and ncm.has_unmodeled:
        rates.append(float(sum(ncm.ncm[n], Fraction(0)) / 2))
    return np.array(rates, dtype=np.float64)
