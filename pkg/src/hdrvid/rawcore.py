"""Core image types and exposure-domain conversions for raw video frames.

A captured mosaic frame (BayerFrame, integer DN) is packed into four
half-resolution planes in [0, 1] (PackedRaw), optionally white balanced, and
divided by its exposure time to reach the scene-referred radiance domain
(RadianceImage) where frames of different exposures are directly comparable.

All image types are immutable after construction (the payload array is
marked read-only) and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

SUPPORTED_PATTERNS = ("RGGB",)

# plane order R, G1, G2, B -> (row, col) offset inside each 2x2 mosaic cell
RGGB_SITES = ((0, 0), (0, 1), (1, 0), (1, 1))
PLANE_NAMES = ("R", "G1", "G2", "B")


def _readonly(a: np.ndarray) -> np.ndarray:
    view = np.ascontiguousarray(a).view()
    view.flags.writeable = False
    return view


@dataclass(frozen=True, eq=False)
class BayerFrame:
    """One captured raw mosaic frame plus the metadata needed to interpret it.

    `data` holds row-major unsigned integer samples, one per pixel.
    `exposure_time` is in relative units; `wb_gains` is (r, g, b) with g
    normalized to 1.
    """

    width: int
    height: int
    data: np.ndarray
    exposure_time: float
    pattern: str = "RGGB"
    bit_depth: int = 10
    black_level: int = 64
    white_level: int = 1023
    analog_gain: float = 1.0
    wb_gains: tuple[float, float, float] = (1.0, 1.0, 1.0)

    def __post_init__(self):
        if self.pattern not in SUPPORTED_PATTERNS:
            raise ValueError(f"unsupported Bayer pattern {self.pattern!r}")
        if self.width % 2 or self.height % 2:
            raise ValueError("Bayer frame dimensions must be even")
        if self.exposure_time <= 0:
            raise ValueError("exposure_time must be positive")
        if not self.black_level < self.white_level:
            raise ValueError("black_level must be below white_level")
        data = np.asarray(self.data)
        if data.shape != (self.height, self.width):
            raise ValueError(f"data shape {data.shape} != (height, width)")
        if not np.issubdtype(data.dtype, np.integer):
            raise ValueError("Bayer samples must be integers")
        if data.min() < 0 or data.max() > (1 << self.bit_depth) - 1:
            raise ValueError(f"samples exceed {self.bit_depth}-bit range")
        object.__setattr__(self, "data", _readonly(data.astype(np.uint16)))


@dataclass(frozen=True, eq=False)
class PackedRaw:
    """Four half-resolution planes (R, G1, G2, B) in [0, 1], exposure tagged."""

    data: np.ndarray  # (h, w, 4) float32
    exposure_time: float
    white_balanced: bool = False

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 3 or data.shape[2] != 4:
            raise ValueError("PackedRaw data must be (h, w, 4)")
        if self.exposure_time <= 0:
            raise ValueError("exposure_time must be positive")
        if data.min() < 0.0 or data.max() > 1.0:
            raise ValueError("PackedRaw values must lie in [0, 1]")
        object.__setattr__(self, "data", _readonly(data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class RadianceImage:
    """Linear scene-referred radiance, raw-layout (h, w, 4) or RGB (h, w, 3)."""

    data: np.ndarray
    layout: str = "raw4"  # raw4 | rgb3

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        expected = {"raw4": 4, "rgb3": 3}.get(self.layout)
        if expected is None:
            raise ValueError(f"unknown layout {self.layout!r}")
        if data.ndim != 3 or data.shape[2] != expected:
            raise ValueError(f"layout {self.layout} needs (h, w, {expected}) data")
        if not np.isfinite(data).all():
            raise ValueError("radiance must be finite")
        if data.min() < 0.0:
            raise ValueError("radiance must be non-negative")
        object.__setattr__(self, "data", _readonly(data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


@dataclass(frozen=True, eq=False)
class SRGBImage:
    """Display-referred 3-channel image with values in [0, 1]."""

    data: np.ndarray  # (h, w, 3) float32

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 3 or data.shape[2] != 3:
            raise ValueError("SRGBImage data must be (h, w, 3)")
        if data.min() < 0.0 or data.max() > 1.0:
            raise ValueError("SRGBImage values must lie in [0, 1]")
        object.__setattr__(self, "data", _readonly(data))

    @property
    def height(self) -> int:
        return self.data.shape[0]

    @property
    def width(self) -> int:
        return self.data.shape[1]


def pack_bayer(frame: BayerFrame) -> PackedRaw:
    """Rearrange an RGGB mosaic into four half-resolution planes in [0, 1].

    Each sample is black-level subtracted and normalized by
    (white_level - black_level), then clamped to [0, 1]. Plane p at (y, x)
    reads mosaic position (2y + dy_p, 2x + dx_p).
    """
    if frame.pattern != "RGGB":
        raise ValueError(f"unsupported Bayer pattern {frame.pattern!r}")
    mosaic = frame.data.astype(np.float64)
    scale = float(frame.white_level - frame.black_level)
    norm = (mosaic - frame.black_level) / scale
    h, w = frame.height // 2, frame.width // 2
    planes = np.empty((h, w, 4), dtype=np.float32)
    for p, (dy, dx) in enumerate(RGGB_SITES):
        planes[:, :, p] = norm[dy::2, dx::2]
    planes = np.clip(planes, 0.0, 1.0)
    return PackedRaw(planes, exposure_time=frame.exposure_time, white_balanced=False)


def unpack_bayer(img: PackedRaw, bit_depth: int, black_level: int,
                 white_level: int, *, pattern: str = "RGGB",
                 analog_gain: float = 1.0,
                 wb_gains: tuple[float, float, float] = (1.0, 1.0, 1.0)) -> BayerFrame:
    """Inverse of pack_bayer up to quantization (round half up)."""
    data = img.data
    if data.min() < 0.0 or data.max() > 1.0:
        raise ValueError("packed values must lie in [0, 1]")
    scale = float(white_level - black_level)
    h, w = data.shape[:2]
    mosaic = np.empty((2 * h, 2 * w), dtype=np.uint16)
    for p, (dy, dx) in enumerate(RGGB_SITES):
        dn = np.floor(data[:, :, p].astype(np.float64) * scale + black_level + 0.5)
        mosaic[dy::2, dx::2] = dn.astype(np.uint16)
    return BayerFrame(width=2 * w, height=2 * h, data=mosaic,
                      exposure_time=img.exposure_time, pattern=pattern,
                      bit_depth=bit_depth, black_level=black_level,
                      white_level=white_level, analog_gain=analog_gain,
                      wb_gains=wb_gains)


def white_balance(img: PackedRaw, gains: tuple[float, float, float]) -> PackedRaw:
    """Apply (r, g, b) gains to the (R, G1+G2, B) planes, clipping at 1.0.

    Clipping at 1.0 is load-bearing: the HDR merge relies on white-balanced
    saturated pixels reading exactly 1 so they are routed to the short frame.
    """
    r, g, b = (float(v) for v in gains)
    if min(r, g, b) <= 0.0:
        raise ValueError("white balance gains must be positive")
    if img.white_balanced:
        raise ValueError("white balance already applied")
    per_plane = np.array([r, g, g, b], dtype=np.float32)
    data = np.clip(img.data * per_plane, 0.0, 1.0)
    return PackedRaw(data, exposure_time=img.exposure_time, white_balanced=True)


def to_radiance(img: PackedRaw) -> RadianceImage:
    """Divide by exposure time: the HDR-domain normalization that makes
    frames of different exposures comparable."""
    return RadianceImage(img.data / np.float32(img.exposure_time), layout="raw4")


def match_exposure(ref: PackedRaw, t_target: float) -> PackedRaw:
    """Rescale to a neighbor's exposure: v <- clip(v * t_target / t_ref)."""
    if t_target <= 0:
        raise ValueError("target exposure must be positive")
    ratio = np.float32(t_target / ref.exposure_time)
    data = np.clip(ref.data * ratio, 0.0, 1.0)
    return PackedRaw(data, exposure_time=t_target, white_balanced=ref.white_balanced)


def gamma_correct(img, gamma: float = 2.2, peak: float | None = None):
    """v <- v^(1/gamma), enlarging low intensities ahead of flow estimation.

    PackedRaw input is already in [0, 1]. RadianceImage input is first
    normalized by `peak` (default: its max); keep the peak if you need to
    invert the mapping. Returns the same type as the input.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    inv = np.float32(1.0 / gamma)
    if isinstance(img, PackedRaw):
        return PackedRaw(np.power(img.data, inv), exposure_time=img.exposure_time,
                         white_balanced=img.white_balanced)
    if isinstance(img, RadianceImage):
        if peak is None:
            peak = float(img.data.max())
        if peak <= 0.0:
            return RadianceImage(img.data.copy(), layout=img.layout)
        return RadianceImage(np.power(img.data / np.float32(peak), inv),
                             layout=img.layout)
    raise TypeError(f"cannot gamma-correct {type(img).__name__}")
