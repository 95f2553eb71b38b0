"""
Boundary direction fields.

The gradient of a boundary image is only non-zero next to the boundary. The
Gradient Vector Flow (GVF) field f = (u, v) minimises

    U = sum mu (u_x^2 + u_y^2 + v_x^2 + v_y^2) + |g|^2 |g - f|^2

so that it follows the gradient g on boundaries and extends it smoothly
elsewhere. BD, the absolute normalized dot product of the reference and found
fields, measures how well the local boundary directions agree.
"""

import logging
import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Tuple, Union

import numpy as np
from scipy import ndimage

from .errors import DimensionError, InputError, NumericalError

logger = logging.getLogger(__name__)

FIELD_MAGIC = b"UVF1"
DEFAULT_BD_EPS = 1e-6


@dataclass(frozen=True, eq=False)
class VectorField:
    """Per-pixel (u, v): u along columns (x), v along rows (y)."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.array(self.u, dtype=np.float64, copy=True)
        v = np.array(self.v, dtype=np.float64, copy=True)
        if u.shape != v.shape or u.ndim != 2:
            raise DimensionError(f"u {u.shape} and v {v.shape} must be 2-D grids of one shape")
        u.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def shape(self) -> Tuple[int, int]:
        return self.u.shape

    @property
    def height(self) -> int:
        return int(self.u.shape[0])

    @property
    def width(self) -> int:
        return int(self.u.shape[1])

    def magnitude(self) -> np.ndarray:
        return np.hypot(self.u, self.v)

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.u).all() and np.isfinite(self.v).all())


@dataclass(frozen=True)
class GvfConfig:
    """
    GVF solver settings (explicit smoothness step, implicit data term).

    Attributes:
        mu: smoothness weight
        dt: time step, at most 1 / (4 mu)
        max_iterations: iteration cap
        tolerance: stop once the largest per-pixel update falls below this
    """

    mu: float = 0.2
    dt: float = 1.0
    max_iterations: int = 500
    tolerance: float = 1e-4

    def __post_init__(self):
        if not self.mu > 0:
            raise InputError(f"GVF mu must be positive, got {self.mu}")
        if not self.dt > 0:
            raise InputError(f"GVF dt must be positive, got {self.dt}")
        if self.dt > 1.0 / (4.0 * self.mu):
            raise InputError(f"GVF dt={self.dt} exceeds the stability limit 1/(4 mu)={1.0 / (4.0 * self.mu):.6g}")
        if not self.tolerance > 0:
            raise InputError(f"GVF tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 0:
            raise InputError(f"GVF max_iterations must be >= 0, got {self.max_iterations}")

    @classmethod
    def from_settings(cls) -> "GvfConfig":
        from config.gvf_config import GvfSettings

        return cls(
            mu=GvfSettings.MU,
            dt=GvfSettings.DT,
            max_iterations=GvfSettings.MAX_ITERATIONS,
            tolerance=GvfSettings.TOLERANCE,
        )

    def key(self) -> str:
        return f"mu={self.mu!r};dt={self.dt!r};it={self.max_iterations};tol={self.tolerance!r}"


def gradient(image: np.ndarray) -> VectorField:
    """
    Finite-difference gradient: central differences inside, one-sided at the borders.

    Raises:
        InputError: image smaller than 2x2
    """
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.shape[0] < 2 or image.shape[1] < 2:
        raise InputError(f"gradient needs a grid of at least 2x2, got {image.shape}")
    dy, dx = np.gradient(image)
    return VectorField(dx, dy)


def iterate_gvf(image: np.ndarray, cfg: GvfConfig) -> Iterator[Tuple[int, VectorField, float]]:
    """
    Yield (iteration, field, largest update) starting from f = g at iteration 0.

    Each step is explicit in the smoothness term and implicit in the data term:

        f <- (f + dt (mu lap(f) + |g|^2 g)) / (1 + dt |g|^2)

    which never increases the discrete energy while dt <= 1 / (4 mu).

    Raises:
        NumericalError: non-finite values appear
    """
    g = gradient(image)
    gx, gy = g.u, g.v
    mag2 = gx * gx + gy * gy
    if not np.isfinite(mag2).all():
        raise NumericalError("GVF input gradient is not finite", 0)

    u, v = gx.copy(), gy.copy()
    yield 0, g, math.inf
    denom = 1.0 + cfg.dt * mag2
    source_u = cfg.dt * mag2 * gx
    source_v = cfg.dt * mag2 * gy

    for iteration in range(1, cfg.max_iterations + 1):
        u_next = (u + cfg.dt * cfg.mu * ndimage.laplace(u, mode="nearest") + source_u) / denom
        v_next = (v + cfg.dt * cfg.mu * ndimage.laplace(v, mode="nearest") + source_v) / denom
        if not (np.isfinite(u_next).all() and np.isfinite(v_next).all()):
            raise NumericalError("GVF solver diverged", iteration)
        delta = max(float(np.abs(u_next - u).max()), float(np.abs(v_next - v).max()))
        u, v = u_next, v_next
        yield iteration, VectorField(u, v), delta
        if delta < cfg.tolerance:
            break


def gvf(image: np.ndarray, cfg: Optional[GvfConfig] = None, cache=None) -> VectorField:
    """
    Solve the GVF field of a boundary image.

    Args:
        image: boundary image (0 off boundary, W_e on it)
        cfg: solver settings, defaults from GvfSettings
        cache: optional object with get(image, cfg) / set(image, cfg, field)

    Returns:
        VectorField
    """
    cfg = cfg or GvfConfig.from_settings()
    image = np.asarray(image, dtype=np.float64)
    if cache is not None:
        cached = cache.get(image, cfg)
        if cached is not None:
            return cached

    iteration, field, delta = 0, None, math.inf
    for iteration, field, delta in iterate_gvf(image, cfg):
        pass
    if delta >= cfg.tolerance and cfg.max_iterations > 0:
        logger.debug(f"GVF stopped at the iteration cap {iteration} (last update {delta:.3g})")
    else:
        logger.debug(f"GVF converged after {iteration} iterations")

    if cache is not None:
        cache.set(image, cfg, field)
    return field


def gvf_energy(field: VectorField, gradient_field: VectorField, mu: float) -> float:
    """
    Discrete GVF energy, using the solver's stencils.

    Smoothness uses forward differences with zero difference across the border,
    whose adjoint is the replicated-border Laplacian of the solver.
    """
    if field.shape != gradient_field.shape:
        raise DimensionError(f"field {field.shape} and gradient {gradient_field.shape} differ in shape")
    smooth = 0.0
    for comp in (field.u, field.v):
        smooth += float((np.diff(comp, axis=1) ** 2).sum()) + float((np.diff(comp, axis=0) ** 2).sum())
    gx, gy = gradient_field.u, gradient_field.v
    mag2 = gx * gx + gy * gy
    data = float((mag2 * ((field.u - gx) ** 2 + (field.v - gy) ** 2)).sum())
    return mu * smooth + data


def bd(
    field_ref: VectorField,
    field_found: VectorField,
    eps: float = DEFAULT_BD_EPS,
    norm_ref: Optional[VectorField] = None,
    norm_found: Optional[VectorField] = None,
) -> np.ndarray:
    """
    Direction correspondence |f_r . f_s| / (|f_r| |f_s|), in [0, 1].

    Where either magnitude is below ``eps`` there is no directional evidence and
    BD is 0. Passing ``norm_ref``/``norm_found`` (the plain gradients) divides by
    their magnitudes instead; that form is unbounded and kept only for
    comparison with published numbers.
    """
    if field_ref.shape != field_found.shape:
        raise DimensionError(f"direction fields differ in shape: {field_ref.shape} vs {field_found.shape}")
    dot = np.abs(field_ref.u * field_found.u + field_ref.v * field_found.v)

    compat = norm_ref is not None or norm_found is not None
    if compat:
        if norm_ref is None or norm_found is None:
            raise InputError("both gradient fields are needed for the gradient-normalized BD")
        if norm_ref.shape != field_ref.shape or norm_found.shape != field_ref.shape:
            raise DimensionError("gradient fields must match the direction fields in shape")
        mag_r, mag_s = norm_ref.magnitude(), norm_found.magnitude()
    else:
        mag_r, mag_s = field_ref.magnitude(), field_found.magnitude()

    valid = (mag_r >= eps) & (mag_s >= eps)
    out = np.zeros(dot.shape, dtype=np.float64)
    out[valid] = dot[valid] / (mag_r[valid] * mag_s[valid])
    if not compat:
        np.clip(out, 0.0, 1.0, out=out)
    return out


def direction_grid(
    ref_image: np.ndarray,
    found_image: np.ndarray,
    variant: str = "gvf",
    cfg: Optional[GvfConfig] = None,
    eps: float = DEFAULT_BD_EPS,
    compat: bool = False,
    cache=None,
) -> np.ndarray:
    """
    BD grid between a reference and a found boundary image.

    Args:
        variant: "grad" compares plain gradients, "gvf" compares GVF fields
        compat: for "gvf", normalize by gradient magnitudes
    """
    ref_image = np.asarray(ref_image, dtype=np.float64)
    found_image = np.asarray(found_image, dtype=np.float64)
    if ref_image.shape != found_image.shape:
        raise DimensionError(f"boundary images differ in shape: {ref_image.shape} vs {found_image.shape}")
    g_ref, g_found = gradient(ref_image), gradient(found_image)
    if variant == "grad":
        return bd(g_ref, g_found, eps)
    if variant != "gvf":
        raise InputError(f"no direction field for variant {variant!r}")
    f_ref = gvf(ref_image, cfg, cache)
    f_found = gvf(found_image, cfg, cache)
    if compat:
        return bd(f_ref, f_found, eps, g_ref, g_found)
    return bd(f_ref, f_found, eps)


def write_field(path: Union[str, Path], field: VectorField) -> Path:
    """
    Dump a field for visualization: 16-byte header (magic "UVF1", width u32,
    height u32, 4 pad bytes) then little-endian f64 rows, u-plane then v-plane.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as f:
        f.write(struct.pack("<4sII4x", FIELD_MAGIC, field.width, field.height))
        f.write(field.u.astype("<f8").tobytes())
        f.write(field.v.astype("<f8").tobytes())
    return path


def read_field(path: Union[str, Path]) -> VectorField:
    data = Path(path).read_bytes()
    if len(data) < 16:
        raise InputError("field file shorter than its header", str(path))
    magic, width, height = struct.unpack("<4sII4x", data[:16])
    if magic != FIELD_MAGIC:
        raise InputError(f"bad field magic {magic!r}", str(path))
    plane = width * height
    values = np.frombuffer(data[16:], dtype="<f8")
    if values.size != 2 * plane:
        raise InputError(f"expected {2 * plane} values, found {values.size}", str(path))
    return VectorField(values[:plane].reshape(height, width), values[plane:].reshape(height, width))
