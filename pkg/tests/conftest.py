"""Shared fixtures: synthetic sensors, staggered captures, scene builders."""

from __future__ import annotations

import numpy as np
import pytest

from hdrvid.merge import StaggeredPair
from hdrvid.rawcore import BayerFrame, RadianceImage
from hdrvid.synth import _periodic_texture, hdr_to_ldr

WB_GAINS = (1.9, 1.0, 1.6)
PLANE_GAINS = np.array([1.9, 1.0, 1.0, 1.6], dtype=np.float32)


def make_frame(samples, black_level=64, white_level=1023, bit_depth=10,
               exposure_time=1.0, wb_gains=(1.0, 1.0, 1.0)) -> BayerFrame:
    data = np.asarray(samples, dtype=np.uint16)
    h, w = data.shape
    return BayerFrame(width=w, height=h, data=data, exposure_time=exposure_time,
                      bit_depth=bit_depth, black_level=black_level,
                      white_level=white_level, wb_gains=wb_gains)


def sensor_scene(rng: np.random.Generator, h: int = 64, w: int = 64,
                 base_range=(0.02, 0.10), bright_range=(0.55, 0.90),
                 bright_radius_frac: float = 0.28) -> RadianceImage:
    """Sensor-domain radiance with a bright quasi-white disk.

    In the disk every plane carries the same sensor radiance drawn from
    `bright_range`, so the long exposure saturates there and the short
    exposure does not; outside, values stay below the merge ramp at the
    long exposure.
    """
    tex = _periodic_texture(rng, h, w, 2.0)
    lo, hi = base_range
    base = lo + tex * (hi - lo)
    planes = np.stack([base / g for g in PLANE_GAINS], axis=2)
    yy, xx = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    r = bright_radius_frac * min(h, w)
    disk = (yy - h / 2) ** 2 + (xx - w / 2) ** 2 < r ** 2
    blo, bhi = bright_range
    bright = blo + tex * (bhi - blo)
    data = np.where(disk[..., None], bright[..., None], planes)
    return RadianceImage(data.astype(np.float32), layout="raw4")


def capture_pair(sensor: RadianceImage, t_long: float = 8.0, t_short: float = 1.0,
                 bit_depth: int = 10) -> StaggeredPair:
    """Noiseless staggered capture of a sensor-domain radiance scene."""
    long_f = hdr_to_ldr(sensor, t_long, bit_depth, white_balanced=False)
    short_f = hdr_to_ldr(sensor, t_short, bit_depth, white_balanced=False)
    return StaggeredPair(long_f, short_f, ratio=t_long / t_short)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
