"""
Convert 8-bit grid images into UEM1 / UCM1 maps.

The mapping table is a CSV file, one row per grey value:

    value,class,grade[,boundary_grade]     (expert maps)
    value,class                            (class maps; class "-" = masked)

Lines starting with '#' and a header row starting with "value" are ignored.
"""

import csv
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np

from .errors import FormatError, InputError
from .labels import NO_GRADE, ClassMap, ExpertMap, grade_index

logger = logging.getLogger(__name__)

MASKED = -1


@dataclass(frozen=True)
class ValueMapping:
    """What one grey value stands for."""

    class_id: int
    grade: int = 0
    boundary_grade: int = NO_GRADE


def read_mapping(path: Union[str, Path]) -> Dict[int, ValueMapping]:
    """Parse a mapping table; see the module docstring for the layout."""
    path = Path(path)
    mapping: Dict[int, ValueMapping] = {}
    try:
        handle = open(path, newline="", encoding="ascii")
    except OSError as e:
        raise FormatError(f"cannot read mapping table: {e}", str(path))
    with handle:
        for lineno, row in enumerate(csv.reader(handle), start=1):
            row = [cell.strip() for cell in row]
            if not row or not row[0] or row[0].startswith("#") or row[0].lower() == "value":
                continue
            if len(row) < 2:
                raise FormatError("mapping rows need at least value,class", str(path), lineno)
            try:
                value = int(row[0])
                class_id = MASKED if row[1] == "-" else int(row[1])
                grade = grade_index(row[2]) if len(row) > 2 and row[2] else 0
                boundary_grade = grade_index(row[3]) if len(row) > 3 and row[3] else NO_GRADE
            except (ValueError, InputError) as e:
                raise FormatError(f"invalid mapping row {row}: {e}", str(path), lineno)
            if not 0 <= value <= 255:
                raise FormatError(f"grey value {value} outside 0..255", str(path), lineno)
            if value in mapping:
                raise FormatError(f"grey value {value} mapped twice", str(path), lineno)
            mapping[value] = ValueMapping(class_id, grade, boundary_grade)
    if not mapping:
        raise FormatError("mapping table is empty", str(path))
    return mapping


def _lookup(image: np.ndarray, mapping: Dict[int, ValueMapping], source: Optional[str]):
    present = np.unique(image)
    for value in present:
        if int(value) not in mapping:
            r, c = np.argwhere(image == value)[0]
            raise InputError(f"unmapped pixel value {int(value)} at row {r}, col {c}", source)
    table = np.zeros((256, 3), dtype=np.int64)
    for value, m in mapping.items():
        table[value] = (m.class_id, m.grade, m.boundary_grade)
    return table[image.astype(np.int64)]


def to_expert_map(
    image: np.ndarray,
    mapping: Dict[int, ValueMapping],
    num_classes: Optional[int] = None,
    source: Optional[str] = None,
) -> ExpertMap:
    """Map grey values to class, grade and optional boundary grade."""
    if any(m.class_id == MASKED for m in mapping.values()):
        raise InputError("expert maps cannot contain masked pixels", source)
    looked_up = _lookup(image, mapping, source)
    labels, grades, boundary_grades = looked_up[..., 0], looked_up[..., 1], looked_up[..., 2]
    if num_classes is None:
        num_classes = max(1, max(m.class_id for m in mapping.values()))
    return ExpertMap(labels, grades, boundary_grades != NO_GRADE, boundary_grades, num_classes)


def to_class_map(
    image: np.ndarray,
    mapping: Dict[int, ValueMapping],
    num_classes: Optional[int] = None,
    source: Optional[str] = None,
) -> ClassMap:
    """Map grey values to predicted classes; "-" entries become masked pixels."""
    labels = _lookup(image, mapping, source)[..., 0]
    mask = labels == MASKED
    if num_classes is None:
        num_classes = max(1, max(m.class_id for m in mapping.values()))
    return ClassMap(np.where(mask, 0, labels), num_classes, mask)


def convert(
    image_path: Union[str, Path],
    mapping_path: Union[str, Path],
    out_path: Union[str, Path],
    num_classes: Optional[int] = None,
) -> Union[ExpertMap, ClassMap]:
    """
    Convert a PGM grid file into a UEM1 (".uem") or UCM1 (".ucm") file.

    Returns:
        The map that was written
    """
    from utils.map_parser import MapParser
    from utils.pgm import PgmReader

    out_path = Path(out_path)
    suffix = out_path.suffix.lower()
    if suffix not in (".uem", ".ucm"):
        raise InputError(f"output must end in .uem or .ucm, got {out_path.name!r}")

    image = PgmReader.read(image_path)
    mapping = read_mapping(mapping_path)
    if suffix == ".uem":
        grid = to_expert_map(image, mapping, num_classes, str(image_path))
    else:
        grid = to_class_map(image, mapping, num_classes, str(image_path))
    MapParser.write(out_path, grid)
    logger.info(f"🗺️ Converted {image_path} -> {out_path} ({image.shape[1]}x{image.shape[0]})")
    return grid
