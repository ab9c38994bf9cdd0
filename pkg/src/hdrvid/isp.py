"""Minimal ISP without white balance: demosaic, color matrix, display encoding.

White balance happens upstream (before HDR merging); this chain converts
raw-layout radiance to RGB radiance and, for previews only, to
display-referred sRGB. HDR outputs stay linear: the OETF is applied only
when encoding to [0, 1] for a PNG.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .rawcore import RadianceImage, SRGBImage
from .resample import bilinear_sample

_SRGB_LINEAR_KNEE = 0.0031308
_SRGB_DISPLAY_KNEE = 0.04045


@dataclass(frozen=True)
class IspConfig:
    ccm: tuple = ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0))
    oetf: str = "srgb"  # srgb | gamma | none
    gamma: float = 2.2
    demosaic: str = "bilinear-pack4"

    def __post_init__(self):
        m = np.asarray(self.ccm, dtype=np.float64)
        if m.shape != (3, 3):
            raise ValueError("ccm must be 3x3")
        if np.abs(m.sum(axis=1) - 1.0).max() > 1e-6:
            raise ValueError("ccm rows must sum to 1")
        if self.oetf not in ("srgb", "gamma", "none"):
            raise ValueError(f"unknown oetf {self.oetf!r}")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.demosaic != "bilinear-pack4":
            raise ValueError(f"unknown demosaic {self.demosaic!r}")
        object.__setattr__(self, "ccm", tuple(tuple(float(v) for v in row) for row in m))

    @classmethod
    def from_json(cls, path) -> "IspConfig":
        cfg = json.loads(open(path).read())
        return cls(**{k: tuple(map(tuple, v)) if k == "ccm" else v for k, v in cfg.items()})


def demosaic_pack4(img: RadianceImage) -> RadianceImage:
    """Bilinear demosaic of packed planes back to full-resolution RGB.

    Plane p holds samples at mosaic sites (2y+dy_p, 2x+dx_p); each output
    pixel samples the plane at its continuous plane coordinate with
    clamp-to-edge bilinear interpolation. G is the average of the two
    upsampled green planes.
    """
    if img.layout != "raw4":
        raise ValueError("demosaic_pack4 expects raw4 layout")
    h, w = img.height, img.width
    yy, xx = np.meshgrid(np.arange(2 * h, dtype=np.float32),
                         np.arange(2 * w, dtype=np.float32), indexing="ij")
    sites = ((0, 0), (0, 1), (1, 0), (1, 1))  # R, G1, G2, B
    up = [bilinear_sample(img.data[:, :, p], (yy - dy) / 2.0, (xx - dx) / 2.0)
          for p, (dy, dx) in enumerate(sites)]
    rgb = np.stack([up[0], 0.5 * (up[1] + up[2]), up[3]], axis=2)
    return RadianceImage(np.maximum(rgb, 0.0), layout="rgb3")


def apply_ccm(img: RadianceImage, ccm) -> RadianceImage:
    """Per-pixel 3x3 color matrix; negative results clip to 0."""
    if img.layout != "rgb3":
        raise ValueError("apply_ccm expects rgb3 layout")
    m = np.asarray(ccm, dtype=np.float32)
    if m.shape != (3, 3):
        raise ValueError("ccm must be 3x3")
    out = img.data @ m.T
    return RadianceImage(np.maximum(out, 0.0), layout="rgb3")


def srgb_oetf(v: np.ndarray) -> np.ndarray:
    """Standard piecewise sRGB encoding of linear values in [0, 1]."""
    v = np.asarray(v, dtype=np.float64)
    lo = 12.92 * v
    hi = 1.055 * np.power(np.maximum(v, _SRGB_LINEAR_KNEE), 1.0 / 2.4) - 0.055
    return np.where(v <= _SRGB_LINEAR_KNEE, lo, hi)


def srgb_eotf(v: np.ndarray) -> np.ndarray:
    """Inverse of srgb_oetf: display values back to linear light."""
    v = np.asarray(v, dtype=np.float64)
    lo = v / 12.92
    hi = np.power((np.maximum(v, _SRGB_DISPLAY_KNEE) + 0.055) / 1.055, 2.4)
    return np.where(v <= _SRGB_DISPLAY_KNEE, lo, hi)


def encode_display(img: RadianceImage, config: IspConfig = IspConfig(),
                   exposure_scale: float = 1.0) -> SRGBImage:
    """Scale, clip to [0, 1], and apply the configured OETF."""
    if exposure_scale <= 0:
        raise ValueError("exposure_scale must be positive")
    if img.layout != "rgb3":
        raise ValueError("encode_display expects rgb3 layout")
    v = np.clip(img.data.astype(np.float64) * exposure_scale, 0.0, 1.0)
    if config.oetf == "srgb":
        v = srgb_oetf(v)
    elif config.oetf == "gamma":
        v = np.power(v, 1.0 / config.gamma)
    return SRGBImage(np.clip(v, 0.0, 1.0).astype(np.float32))


def raw_to_srgb_hdr(img: RadianceImage, config: IspConfig = IspConfig()) -> RadianceImage:
    """Full linear chain used after merge/reconstruction: demosaic + CCM."""
    return apply_ccm(demosaic_pack4(img), config.ccm)
