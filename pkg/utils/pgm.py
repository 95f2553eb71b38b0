import logging
from pathlib import Path
from typing import List, Tuple, Union

import numpy as np

from src.certeval.errors import FormatError

logger = logging.getLogger(__name__)


class PgmReader:
    """Read and write 8-bit single-channel PGM files (P2 ASCII, P5 binary)."""

    @classmethod
    def _header_tokens(cls, data: bytes, count: int, source: str) -> Tuple[List[bytes], int]:
        """Read ``count`` whitespace-separated header tokens, skipping '#' comments."""
        tokens = []
        pos = 0
        while len(tokens) < count:
            while pos < len(data) and data[pos:pos + 1].isspace():
                pos += 1
            if pos >= len(data):
                raise FormatError("truncated PGM header", source)
            if data[pos:pos + 1] == b"#":
                end = data.find(b"\n", pos)
                pos = len(data) if end < 0 else end + 1
                continue
            start = pos
            while pos < len(data) and not data[pos:pos + 1].isspace() and data[pos:pos + 1] != b"#":
                pos += 1
            tokens.append(data[start:pos])
        return tokens, pos

    @classmethod
    def parse(cls, data: bytes, source: str = "<pgm>") -> np.ndarray:
        """
        Decode PGM bytes.

        Returns:
            (height, width) uint8 array

        Raises:
            FormatError: not an 8-bit P2/P5 file
        """
        tokens, pos = cls._header_tokens(data, 4, source)
        magic = tokens[0]
        if magic not in (b"P2", b"P5"):
            raise FormatError(f"unsupported PGM magic {magic!r}", source)
        try:
            width, height, max_value = (int(t) for t in tokens[1:])
        except ValueError:
            raise FormatError("non-integer PGM header field", source)
        if width < 1 or height < 1:
            raise FormatError("PGM width and height must be positive", source)
        if not 0 < max_value <= 255:
            raise FormatError(f"only 8-bit PGM is supported (maxval {max_value})", source)

        count = width * height
        if magic == b"P5":
            body = data[pos + 1:pos + 1 + count]
            if len(body) != count:
                raise FormatError(f"expected {count} bytes of pixel data, found {len(body)}", source)
            values = np.frombuffer(body, dtype=np.uint8)
        else:
            lines = [line.split(b"#", 1)[0] for line in data[pos:].split(b"\n")]
            fields = b" ".join(lines).split()
            if len(fields) != count:
                raise FormatError(f"expected {count} pixel values, found {len(fields)}", source)
            try:
                values = np.array([int(f) for f in fields], dtype=np.int64)
            except ValueError:
                raise FormatError("non-integer pixel value", source)
            if values.min() < 0 or values.max() > max_value:
                raise FormatError(f"pixel value outside 0..{max_value}", source)
            values = values.astype(np.uint8)

        return values.reshape(height, width).copy()

    @classmethod
    def read(cls, path: Union[str, Path]) -> np.ndarray:
        path = Path(path)
        try:
            data = path.read_bytes()
        except OSError as e:
            raise FormatError(f"cannot read PGM: {e}", str(path))
        image = cls.parse(data, str(path))
        logger.debug(f"Read PGM {path}: {image.shape[1]}x{image.shape[0]}")
        return image

    @classmethod
    def write(cls, path: Union[str, Path], image: np.ndarray, binary: bool = True) -> Path:
        image = np.asarray(image, dtype=np.uint8)
        height, width = image.shape
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        if binary:
            path.write_bytes(f"P5\n{width} {height}\n255\n".encode("ascii") + image.tobytes())
        else:
            rows = "\n".join(" ".join(str(v) for v in row) for row in image)
            path.write_bytes(f"P2\n{width} {height}\n255\n{rows}\n".encode("ascii"))
        return path
