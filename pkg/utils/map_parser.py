import io
import logging
from pathlib import Path
from typing import List, Optional, TextIO, Tuple, Union

import numpy as np

from src.certeval.errors import FormatError
from src.certeval.labels import GRADE_TOKENS, NO_GRADE, ClassMap, ExpertMap

logger = logging.getLogger(__name__)


class MapParser:
    """Parse and write UEM1 expert maps and UCM1 class maps."""

    EXPERT_MAGIC = "UEM1"
    CLASS_MAGIC = "UCM1"
    MASKED_TOKEN = "-"

    @classmethod
    def _lines(cls, stream: Union[str, TextIO]) -> List[str]:
        text = stream if isinstance(stream, str) else stream.read()
        lines = text.split("\n")
        while lines and not lines[-1].strip():
            lines.pop()
        return lines

    @classmethod
    def _header(cls, lines: List[str], magic: str, source: Optional[str]) -> Tuple[int, int, int]:
        if not lines:
            raise FormatError("empty file", source, 1)
        fields = lines[0].split()
        if len(fields) != 4 or fields[0] != magic:
            raise FormatError(f"expected header '{magic} <width> <height> <num_classes>'", source, 1)
        try:
            width, height, num_classes = (int(f) for f in fields[1:])
        except ValueError:
            raise FormatError(f"non-integer header field in {lines[0]!r}", source, 1)
        if width < 1 or height < 1 or num_classes < 1:
            raise FormatError("width, height and num_classes must be positive", source, 1)
        if len(lines) - 1 != height:
            raise FormatError(f"expected {height} rows, found {len(lines) - 1}", source, len(lines))
        return width, height, num_classes

    @classmethod
    def _row_tokens(cls, line: str, width: int, source: Optional[str], lineno: int) -> List[str]:
        tokens = line.split()
        if len(tokens) != width:
            raise FormatError(f"row length {len(tokens)} does not match width {width}", source, lineno)
        return tokens

    @classmethod
    def _class_id(cls, token: str, num_classes: int, source: Optional[str], lineno: int) -> int:
        if not (token.isascii() and token.isdigit()):
            raise FormatError(f"invalid class id {token!r}", source, lineno)
        value = int(token)
        if value > num_classes:
            raise FormatError(f"class id {value} exceeds num_classes {num_classes}", source, lineno)
        return value

    @classmethod
    def _grade(cls, token: str, source: Optional[str], lineno: int) -> int:
        if token not in GRADE_TOKENS:
            raise FormatError(f"unknown grade token {token!r}", source, lineno)
        return GRADE_TOKENS.index(token)

    @classmethod
    def parse_expert_map(cls, stream: Union[str, TextIO], source: Optional[str] = None) -> ExpertMap:
        """
        Parse a UEM1 expert map.

        Args:
            stream: file contents or an open text stream
            source: name used in error messages

        Returns:
            Fully populated ExpertMap

        Raises:
            FormatError: malformed header, unknown grade token or row length mismatch
        """
        lines = cls._lines(stream)
        width, height, num_classes = cls._header(lines, cls.EXPERT_MAGIC, source)

        labels = np.zeros((height, width), dtype=np.int64)
        grades = np.zeros((height, width), dtype=np.int8)
        boundary = np.zeros((height, width), dtype=bool)
        boundary_grades = np.full((height, width), NO_GRADE, dtype=np.int8)

        for r, line in enumerate(lines[1:]):
            lineno = r + 2
            for c, token in enumerate(cls._row_tokens(line, width, source, lineno)):
                body, star, bgrade = token.partition("*")
                cls_token, colon, grade = body.partition(":")
                if not colon:
                    raise FormatError(f"token {token!r} is not <class>:<grade>", source, lineno)
                labels[r, c] = cls._class_id(cls_token, num_classes, source, lineno)
                grades[r, c] = cls._grade(grade, source, lineno)
                if star:
                    boundary[r, c] = True
                    boundary_grades[r, c] = cls._grade(bgrade, source, lineno)

        logger.debug(f"Parsed expert map {source or '<stream>'}: {width}x{height}, {int(boundary.sum())} boundary pixels")
        return ExpertMap(labels, grades, boundary, boundary_grades, num_classes)

    @classmethod
    def parse_class_map(cls, stream: Union[str, TextIO], source: Optional[str] = None) -> ClassMap:
        """Parse a UCM1 class map; the token '-' marks an unevaluated pixel."""
        lines = cls._lines(stream)
        width, height, num_classes = cls._header(lines, cls.CLASS_MAGIC, source)

        labels = np.zeros((height, width), dtype=np.int64)
        mask = np.zeros((height, width), dtype=bool)
        for r, line in enumerate(lines[1:]):
            lineno = r + 2
            for c, token in enumerate(cls._row_tokens(line, width, source, lineno)):
                if token == cls.MASKED_TOKEN:
                    mask[r, c] = True
                else:
                    labels[r, c] = cls._class_id(token, num_classes, source, lineno)

        return ClassMap(labels, num_classes, mask)

    @classmethod
    def serialize_expert_map(cls, expert: ExpertMap) -> str:
        rows = [f"{cls.EXPERT_MAGIC} {expert.width} {expert.height} {expert.num_classes}"]
        for r in range(expert.height):
            tokens = []
            for c in range(expert.width):
                token = f"{expert.labels[r, c]}:{GRADE_TOKENS[expert.grades[r, c]]}"
                if expert.boundary[r, c]:
                    token += f"*{GRADE_TOKENS[expert.boundary_grades[r, c]]}"
                tokens.append(token)
            rows.append(" ".join(tokens))
        return "\n".join(rows) + "\n"

    @classmethod
    def serialize_class_map(cls, pred: ClassMap) -> str:
        rows = [f"{cls.CLASS_MAGIC} {pred.width} {pred.height} {pred.num_classes}"]
        for r in range(pred.height):
            rows.append(" ".join(
                cls.MASKED_TOKEN if pred.mask[r, c] else str(pred.labels[r, c])
                for c in range(pred.width)
            ))
        return "\n".join(rows) + "\n"

    @classmethod
    def read_expert_map(cls, path: Union[str, Path]) -> ExpertMap:
        path = Path(path)
        try:
            text = path.read_text(encoding="ascii")
        except (OSError, UnicodeDecodeError) as e:
            raise FormatError(f"cannot read expert map: {e}", str(path))
        return cls.parse_expert_map(text, source=str(path))

    @classmethod
    def read_class_map(cls, path: Union[str, Path]) -> ClassMap:
        path = Path(path)
        try:
            text = path.read_text(encoding="ascii")
        except (OSError, UnicodeDecodeError) as e:
            raise FormatError(f"cannot read class map: {e}", str(path))
        return cls.parse_class_map(text, source=str(path))

    @classmethod
    def write(cls, path: Union[str, Path], grid: Union[ExpertMap, ClassMap]) -> Path:
        """Write either map type in its own format with LF line endings."""
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if isinstance(grid, ExpertMap):
            text = cls.serialize_expert_map(grid)
        else:
            text = cls.serialize_class_map(grid)
        with io.open(path, "w", encoding="ascii", newline="\n") as f:
            f.write(text)
        return path


parse_expert_map = MapParser.parse_expert_map
parse_class_map = MapParser.parse_class_map
