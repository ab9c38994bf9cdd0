"""Staggered-pair HDR ground-truth construction in raw and sRGB domains.

A staggered readout yields a long and a short exposure of (almost) the same
instant. The long frame carries clean shadows but clips highlights; the short
frame covers the highlights. Merging trusts the long frame below a saturation
ramp and hands over to the short frame above it.

White balance is applied *before* fusion and clips at 1.0. Skipping that
order and white-balancing the merged result instead inflates the red channel
wherever the long frame clipped, because post-fusion gains rescale highlight
values that were already truncated to the same level as green.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .isp import srgb_eotf
from .rawcore import PackedRaw, RadianceImage, SRGBImage, white_balance


@dataclass(frozen=True)
class MergeCurve:
    """Linear handover ramp on the long frame's normalized value.

    w_long(v) is 1 up to tau_low, 0 from tau_high, linear between;
    w_short = 1 - w_long. `shape` names the curve family; only the linear
    ramp exists so far.
    """

    tau_low: float = 0.85
    tau_high: float = 0.97
    shape: str = "linear-ramp"

    def __post_init__(self):
        if not 0.0 <= self.tau_low < self.tau_high <= 1.0:
            raise ValueError("need 0 <= tau_low < tau_high <= 1")
        if self.shape != "linear-ramp":
            raise ValueError(f"unknown curve shape {self.shape!r}")

    def weight_long(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float32)
        w = (self.tau_high - v) / (self.tau_high - self.tau_low)
        return np.clip(w, 0.0, 1.0).astype(np.float32)

    def weight_short(self, v: np.ndarray) -> np.ndarray:
        return (1.0 - self.weight_long(v)).astype(np.float32)


@dataclass(frozen=True)
class StaggeredPair:
    """Long/short exposure pair of one frame instant, same domain and size."""

    long: PackedRaw | SRGBImage
    short: PackedRaw | SRGBImage
    ratio: float  # t_long / t_short

    def __post_init__(self):
        if type(self.long) is not type(self.short):
            raise ValueError("pair frames must share a domain")
        if self.long.data.shape != self.short.data.shape:
            raise ValueError("pair frames must share dimensions")
        if self.ratio <= 1.0:
            raise ValueError("exposure ratio must exceed 1")

    @property
    def is_raw(self) -> bool:
        return isinstance(self.long, PackedRaw)


@dataclass(frozen=True)
class ScreenReport:
    accepted: bool
    reason: str | None
    mean_displacement: float
    saturated_fraction: float


def merge_raw(pair: StaggeredPair, curve: MergeCurve,
              gains: tuple[float, float, float]) -> RadianceImage:
    """White balance both raw frames, then blend their radiance estimates.

    Weights are driven per channel by the long frame's post-WB value, so a
    clipped (post-WB == 1) long pixel is sourced entirely from the short
    frame.
    """
    if not pair.is_raw:
        raise ValueError("merge_raw expects a raw-domain pair")
    if pair.long.white_balanced or pair.short.white_balanced:
        raise ValueError("merge_raw applies white balance itself")
    t_long = pair.long.exposure_time
    t_short = pair.short.exposure_time
    if abs(t_long / t_short - pair.ratio) > 1e-6 * pair.ratio:
        raise ValueError("pair ratio does not match frame exposure times")
    long_wb = white_balance(pair.long, gains).data
    short_wb = white_balance(pair.short, gains).data
    w = curve.weight_long(long_wb)
    hdr = w * (long_wb / np.float32(t_long)) + (1.0 - w) * (short_wb / np.float32(t_short))
    return RadianceImage(hdr, layout="raw4")


def merge_srgb(pair: StaggeredPair, curve: MergeCurve,
               crf_inverse=None) -> RadianceImage:
    """Same handover in the sRGB domain: linearize, normalize, blend.

    `crf_inverse` maps display values to linear light; defaults to the sRGB
    EOTF. Weights are driven by the long frame's display value.
    """
    if pair.is_raw:
        raise ValueError("merge_srgb expects an sRGB-domain pair")
    if crf_inverse is None:
        crf_inverse = srgb_eotf
    t_short = 1.0
    t_long = pair.ratio
    lin_long = np.asarray(crf_inverse(pair.long.data), dtype=np.float32)
    lin_short = np.asarray(crf_inverse(pair.short.data), dtype=np.float32)
    w = curve.weight_long(pair.long.data)
    hdr = w * (lin_long / np.float32(t_long)) + (1.0 - w) * (lin_short / np.float32(t_short))
    return RadianceImage(np.maximum(hdr, 0.0), layout="rgb3")


def displacement_map(pair: StaggeredPair,
                     gains: tuple[float, float, float] | None = None,
                     saturation_threshold: float = 0.97
                     ) -> tuple[SRGBImage, float]:
    """Residual between the exposure-equalized short frame and the long frame.

    D = |clip(short * ratio) - long| per pixel per plane after white balance.
    The reported mean excludes elements where the long frame is at or above
    the saturation threshold: clipped highlights cannot be scaled to match,
    so residuals there say nothing about motion.
    """
    if not pair.is_raw:
        raise ValueError("displacement_map expects a raw-domain pair")
    long_img, short_img = pair.long, pair.short
    if gains is not None and not long_img.white_balanced:
        long_img = white_balance(long_img, gains)
        short_img = white_balance(short_img, gains)
    long_v = long_img.data
    short_scaled = np.clip(short_img.data * np.float32(pair.ratio), 0.0, 1.0)
    disp = np.abs(short_scaled - long_v)
    valid = long_v < saturation_threshold
    if valid.any():
        mean_disp = float(disp[valid].mean())
    else:
        mean_disp = 0.0
    heat = _hot_colormap(disp.mean(axis=2))
    return SRGBImage(heat), mean_disp


def screen_pair(pair: StaggeredPair, curve: MergeCurve, threshold: float,
                gains: tuple[float, float, float] | None = None,
                saturation_cap: float = 0.5) -> ScreenReport:
    """Automated stand-in for manual pair curation.

    Rejects pairs whose masked mean displacement exceeds `threshold` (motion
    between the staggered exposures) or whose long frame is saturated over
    more than `saturation_cap` of its elements (wrong exposure).
    """
    _, mean_disp = displacement_map(pair, gains=gains,
                                    saturation_threshold=curve.tau_high)
    long_img = pair.long
    if gains is not None and not long_img.white_balanced:
        long_img = white_balance(long_img, gains)
    sat_frac = float((long_img.data >= curve.tau_high).mean())
    if sat_frac > saturation_cap:
        return ScreenReport(False, "wrong-exposed", mean_disp, sat_frac)
    if mean_disp > threshold:
        return ScreenReport(False, "motion", mean_disp, sat_frac)
    return ScreenReport(True, None, mean_disp, sat_frac)


def _hot_colormap(v: np.ndarray) -> np.ndarray:
    """Black -> red -> yellow -> white ramp for residual visualization."""
    v = np.clip(np.asarray(v, dtype=np.float32), 0.0, 1.0)
    r = np.clip(3.0 * v, 0.0, 1.0)
    g = np.clip(3.0 * v - 1.0, 0.0, 1.0)
    b = np.clip(3.0 * v - 2.0, 0.0, 1.0)
    return np.stack([r, g, b], axis=2).astype(np.float32)
