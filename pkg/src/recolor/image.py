"""Grid containers, the three-state observation mask, and binary PPM/PGM I/O.

Images hold float64 values in [0, 1]; 8-bit rasters are mapped in by
division by 255 and out by round-half-up. Containers are immutable after
construction (the backing arrays are frozen), so they can be shared freely
between solvers.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, RasterFormatError

# Mask states. Raster byte encoding: 255 = KNOWN_COLOR, 128 = GRAY_ONLY, 0 = UNKNOWN.
UNKNOWN = 0
GRAY_ONLY = 1
KNOWN_COLOR = 2

_STATE_TO_BYTE = np.array([0, 128, 255], dtype=np.uint8)


def _frozen(arr: np.ndarray, dtype) -> np.ndarray:
    out = np.array(arr, dtype=dtype, copy=True)
    out.flags.writeable = False
    return out


def _check_unit_range(values: np.ndarray, what: str) -> None:
    if values.size and (values.min() < 0.0 or values.max() > 1.0):
        raise ValueError(f"{what} values must lie in [0, 1]")


@dataclass(frozen=True)
class ColorImage:
    """Three-channel raster, shape (height, width, 3), values in [0, 1]."""

    planes: np.ndarray

    def __post_init__(self):
        planes = np.asarray(self.planes, dtype=np.float64)
        if planes.ndim != 3 or planes.shape[2] != 3:
            raise ValueError("ColorImage expects an array of shape (height, width, 3)")
        if planes.shape[0] < 1 or planes.shape[1] < 1:
            raise ValueError("ColorImage dimensions must be positive")
        _check_unit_range(planes, "color")
        object.__setattr__(self, "planes", _frozen(planes, np.float64))

    @property
    def height(self) -> int:
        return self.planes.shape[0]

    @property
    def width(self) -> int:
        return self.planes.shape[1]


@dataclass(frozen=True)
class GrayImage:
    """Single-channel raster, shape (height, width), values in [0, 1]."""

    plane: np.ndarray

    def __post_init__(self):
        plane = np.asarray(self.plane, dtype=np.float64)
        if plane.ndim != 2:
            raise ValueError("GrayImage expects an array of shape (height, width)")
        if plane.shape[0] < 1 or plane.shape[1] < 1:
            raise ValueError("GrayImage dimensions must be positive")
        _check_unit_range(plane, "gray")
        object.__setattr__(self, "plane", _frozen(plane, np.float64))

    @property
    def height(self) -> int:
        return self.plane.shape[0]

    @property
    def width(self) -> int:
        return self.plane.shape[1]


@dataclass(frozen=True)
class PixelMask:
    """Per-pixel state in {UNKNOWN, GRAY_ONLY, KNOWN_COLOR}, shape (height, width)."""

    states: np.ndarray

    def __post_init__(self):
        states = np.asarray(self.states)
        if states.ndim != 2 or states.shape[0] < 1 or states.shape[1] < 1:
            raise ValueError("PixelMask expects an array of shape (height, width)")
        if states.size and not np.isin(states, (UNKNOWN, GRAY_ONLY, KNOWN_COLOR)).all():
            raise ValueError("mask states must be UNKNOWN, GRAY_ONLY or KNOWN_COLOR")
        object.__setattr__(self, "states", _frozen(states, np.uint8))

    @property
    def height(self) -> int:
        return self.states.shape[0]

    @property
    def width(self) -> int:
        return self.states.shape[1]

    def count(self, state: int) -> int:
        return int(np.count_nonzero(self.states == state))


@dataclass(frozen=True)
class ObservedScene:
    """A color plane, a gray plane and the mask telling which one is data where.

    Color values are observation data only where the mask is KNOWN_COLOR, and
    the gray plane is the only observation on GRAY_ONLY pixels. The gray plane
    itself is a total raster (the reference photograph covers the whole
    domain), so curve estimation may pair known colors with the gray level
    underneath them.
    """

    color: ColorImage
    gray: GrayImage
    mask: PixelMask

    def __post_init__(self):
        shape = self.color.planes.shape[:2]
        if self.gray.plane.shape != shape:
            raise DimensionMismatchError(
                f"gray plane {self.gray.plane.shape} does not match color {shape}"
            )
        if self.mask.states.shape != shape:
            raise DimensionMismatchError(
                f"mask {self.mask.states.shape} does not match color {shape}"
            )

    @property
    def height(self) -> int:
        return self.color.height

    @property
    def width(self) -> int:
        return self.color.width


# ---------------------------------------------------------------------------
# Binary PPM (P6) / PGM (P5), 8-bit only.


def _quantize(values: np.ndarray) -> np.ndarray:
    # round-half-up: 0.5 -> 128
    return np.floor(values * 255.0 + 0.5).astype(np.uint8)


def _parse_pnm(path) -> tuple[bytes, int, int, np.ndarray]:
    buf = Path(path).read_bytes()
    pos = 0

    def next_token() -> bytes:
        nonlocal pos
        while pos < len(buf):
            c = buf[pos]
            if c in b" \t\r\n":
                pos += 1
            elif c == ord("#"):
                while pos < len(buf) and buf[pos] not in b"\r\n":
                    pos += 1
            else:
                break
        start = pos
        while pos < len(buf) and buf[pos] not in b" \t\r\n#":
            pos += 1
        if start == pos:
            raise RasterFormatError(f"{path}: truncated header")
        return buf[start:pos]

    magic = next_token()
    if magic not in (b"P5", b"P6"):
        raise RasterFormatError(f"{path}: unsupported magic {magic!r} (want binary P5/P6)")
    try:
        width = int(next_token())
        height = int(next_token())
        maxval = int(next_token())
    except ValueError as exc:
        raise RasterFormatError(f"{path}: malformed header") from exc
    if width < 1 or height < 1:
        raise RasterFormatError(f"{path}: non-positive dimensions")
    if maxval != 255:
        raise RasterFormatError(f"{path}: only 8-bit rasters (maxval 255) are supported")
    if pos >= len(buf) or buf[pos] not in b" \t\r\n":
        raise RasterFormatError(f"{path}: missing whitespace after header")
    pos += 1
    channels = 3 if magic == b"P6" else 1
    need = width * height * channels
    raster = np.frombuffer(buf, dtype=np.uint8, count=-1, offset=pos)
    if raster.size < need:
        raise RasterFormatError(f"{path}: raster shorter than header promises")
    return magic, width, height, raster[:need]


def load_color(path) -> ColorImage:
    """Read a binary P6 raster as a ColorImage."""
    magic, width, height, raster = _parse_pnm(path)
    if magic != b"P6":
        raise RasterFormatError(f"{path}: expected a P6 color raster")
    planes = raster.reshape(height, width, 3).astype(np.float64) / 255.0
    return ColorImage(planes)


def load_gray(path) -> GrayImage:
    """Read a binary P5 raster as a GrayImage."""
    magic, width, height, raster = _parse_pnm(path)
    if magic != b"P5":
        raise RasterFormatError(f"{path}: expected a P5 gray raster")
    return GrayImage(raster.reshape(height, width).astype(np.float64) / 255.0)


def load_mask(path) -> PixelMask:
    """Read a P5 raster whose bytes encode the three mask states."""
    magic, width, height, raster = _parse_pnm(path)
    if magic != b"P5":
        raise RasterFormatError(f"{path}: expected a P5 mask raster")
    lut = np.full(256, 255, dtype=np.uint8)  # 255 = invalid sentinel
    lut[0] = UNKNOWN
    lut[128] = GRAY_ONLY
    lut[255] = KNOWN_COLOR
    states = lut[raster]
    if (states == 255).any():
        bad = int(raster[int(np.argmax(states == 255))])
        raise RasterFormatError(f"{path}: mask byte {bad} is not one of 255/128/0")
    return PixelMask(states.reshape(height, width))


def save_image(img: ColorImage | GrayImage, path) -> None:
    """Write an image as binary P6 (color) or P5 (gray), 8-bit."""
    if isinstance(img, ColorImage):
        magic, data = b"P6", _quantize(img.planes)
        width, height = img.width, img.height
    elif isinstance(img, GrayImage):
        magic, data = b"P5", _quantize(img.plane)
        width, height = img.width, img.height
    else:
        raise TypeError(f"save_image expects ColorImage or GrayImage, got {type(img)!r}")
    header = magic + f"\n{width} {height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + data.tobytes())


def save_mask(mask: PixelMask, path) -> None:
    """Write a mask as a P5 raster using the 255/128/0 state encoding."""
    data = _STATE_TO_BYTE[mask.states]
    header = b"P5" + f"\n{mask.width} {mask.height}\n255\n".encode("ascii")
    Path(path).write_bytes(header + data.tobytes())


def load_scene(color_path, gray_path, mask_path) -> ObservedScene:
    """Load and cross-validate the three rasters making up an observed scene."""
    color = load_color(color_path)
    gray = load_gray(gray_path)
    mask = load_mask(mask_path)
    shape = color.planes.shape[:2]
    if gray.plane.shape != shape:
        raise DimensionMismatchError(
            f"{gray_path}: gray raster is {gray.plane.shape[1]}x{gray.plane.shape[0]}, "
            f"color is {shape[1]}x{shape[0]}"
        )
    if mask.states.shape != shape:
        raise DimensionMismatchError(
            f"{mask_path}: mask raster is {mask.states.shape[1]}x{mask.states.shape[0]}, "
            f"color is {shape[1]}x{shape[0]}"
        )
    return ObservedScene(color, gray, mask)
