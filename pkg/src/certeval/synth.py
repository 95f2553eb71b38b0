"""
Synthetic expert / prediction pairs for characterising the boundary measures.

The expert map is a clean geometry (straight edge, square region or
checkerboard) whose class changes are flagged as reference boundary. The
prediction is the same geometry with one corruption applied.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Tuple, Union

import numpy as np
from scipy import ndimage

from .boundary import class_change_mask
from .errors import InputError
from .labels import ClassMap, ExpertMap, grade_index

logger = logging.getLogger(__name__)

KINDS = ("straight-edge", "two-region", "checkerboard")
CORRUPTIONS = ("shift", "orthogonal-cross", "spurious")

# spurious sites keep this Chebyshev distance from the reference boundary and from each other
SPURIOUS_CLEARANCE = 4


@dataclass(frozen=True)
class SynthSpec:
    """
    Geometry, corruption and seed of one synthetic pair.

    Attributes:
        kind: straight-edge | two-region | checkerboard
        size: image side in pixels
        corruption: shift | orthogonal-cross | spurious
        shift: column shift of the predicted geometry (corruption "shift")
        spurious: number of isolated wrong pixels (corruption "spurious")
        cell: checkerboard cell side, defaults to size // 4
        grade, boundary_grade: expert certainty tokens for every pixel
        seed: random seed for spurious placement
    """

    kind: str = "straight-edge"
    size: int = 32
    corruption: str = "shift"
    shift: int = 0
    spurious: int = 0
    cell: Optional[int] = None
    grade: str = "s"
    boundary_grade: str = "s"
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown geometry {self.kind!r}; expected one of {', '.join(KINDS)}")
        if self.corruption not in CORRUPTIONS:
            raise InputError(f"unknown corruption {self.corruption!r}; expected one of {', '.join(CORRUPTIONS)}")
        if self.size < 4:
            raise InputError(f"synthetic images need size >= 4, got {self.size}")
        if self.spurious < 0:
            raise InputError("spurious pixel count must be non-negative")
        if self.cell is not None and not 1 <= self.cell <= self.size:
            raise InputError(f"checkerboard cell must lie in 1..{self.size}")
        grade_index(self.grade)
        grade_index(self.boundary_grade)
        if self.corruption == "shift" and self.kind == "straight-edge":
            edge = self.size // 2 + self.shift
            if not 0 < edge < self.size:
                raise InputError(f"shift {self.shift} moves the edge out of a {self.size}-pixel image")
        if self.corruption == "shift" and self.kind == "two-region":
            lo = self.size // 4 + self.shift
            if lo < 0 or lo + self.size // 2 > self.size:
                raise InputError(f"shift {self.shift} moves the region out of a {self.size}-pixel image")


def _geometry(spec: SynthSpec, offset: int = 0) -> np.ndarray:
    """Class labels (1/2) of the clean geometry, moved right by ``offset`` columns."""
    rows, cols = np.indices((spec.size, spec.size))
    cols = cols - offset
    if spec.kind == "straight-edge":
        return np.where(cols < spec.size // 2, 1, 2)
    if spec.kind == "two-region":
        lo, hi = spec.size // 4, spec.size // 4 + spec.size // 2
        inside = (rows >= lo) & (rows < hi) & (cols >= lo) & (cols < hi)
        return np.where(inside, 2, 1)
    cell = spec.cell or max(1, spec.size // 4)
    return np.where(((rows // cell) + (cols // cell)) % 2 == 0, 1, 2)


def _spurious_sites(labels: np.ndarray, count: int, rng: np.random.Generator) -> np.ndarray:
    """Pick ``count`` pixels far from any class change and from each other."""
    size = labels.shape[0]
    changes = class_change_mask(labels)
    margin = 2
    allowed = np.zeros(labels.shape, dtype=bool)
    allowed[margin:size - margin, margin:size - margin] = True
    if changes.any():
        clearance = ndimage.distance_transform_cdt(~changes, metric="chessboard")
        allowed &= clearance >= SPURIOUS_CLEARANCE
    candidates = [tuple(rc) for rc in np.argwhere(allowed)]
    chosen = []
    for idx in rng.permutation(len(candidates)):
        r, c = candidates[idx]
        if all(max(abs(r - r0), abs(c - c0)) >= SPURIOUS_CLEARANCE for r0, c0 in chosen):
            chosen.append((r, c))
            if len(chosen) == count:
                break
    if len(chosen) < count:
        raise InputError(f"only {len(chosen)} isolated spurious pixels fit in a {size}x{size} image, asked for {count}")
    return np.array(sorted(chosen), dtype=np.int64).reshape(-1, 2)


def gen_synthetic(spec: SynthSpec) -> Tuple[ExpertMap, ClassMap]:
    """
    Build one (expert, prediction) pair, reproducible from ``spec.seed``.

    Returns:
        (ExpertMap, ClassMap); both use classes 1 and 2
    """
    labels = _geometry(spec)
    boundary = class_change_mask(labels)
    expert = ExpertMap.from_arrays(
        labels,
        grades=spec.grade,
        boundary=boundary,
        boundary_grades=spec.boundary_grade,
        num_classes=2,
    )

    if spec.corruption == "shift":
        predicted = _geometry(spec, spec.shift)
    elif spec.corruption == "orthogonal-cross":
        predicted = labels.T.copy()
    else:
        rng = np.random.default_rng(spec.seed)
        predicted = labels.copy()
        for r, c in _spurious_sites(labels, spec.spurious, rng):
            predicted[r, c] = 3 - predicted[r, c]

    logger.debug(f"Synthesised {spec.kind}/{spec.corruption} pair of size {spec.size}")
    return expert, ClassMap(predicted, 2)


def write_synthetic(spec: SynthSpec, out_dir: Union[str, Path]) -> Tuple[Path, Path]:
    """Generate a pair and write it as <kind>.uem / <kind>.ucm under ``out_dir``."""
    from utils.map_parser import MapParser

    out_dir = Path(out_dir)
    expert, pred = gen_synthetic(spec)
    expert_path = MapParser.write(out_dir / f"{spec.kind}.uem", expert)
    pred_path = MapParser.write(out_dir / f"{spec.kind}.ucm", pred)
    logger.info(f"🧪 Wrote synthetic pair {expert_path.name} / {pred_path.name} to {out_dir}")
    return expert_path, pred_path
