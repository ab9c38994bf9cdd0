"""Synthetic alternating-exposure LDR sequences from HDR video.

Each HDR frame is rendered at the alternating exposure time for its index:
v = quantize(clip(hdr * t + gaussian_noise, 0, 1), bit_depth). Noise is added
in the linear domain before quantization; its variance is drawn per frame
from the configured range. Raw frames are linear so no tone perturbation is
applied to them; sRGB-domain synthesis may perturb tone with v^exp(d).

RNG streams are split per frame by (seed, frame index) so sequences are
bit-reproducible and frames can be generated in parallel.
"""

from __future__ import annotations

import dataclasses
import warnings
from dataclasses import dataclass

import numpy as np

from .rawcore import PackedRaw, RadianceImage, SRGBImage


@dataclass(frozen=True)
class SynthConfig:
    exposure_times: tuple[float, ...] = (1.0, 8.0)
    bit_depth: int = 10
    noise_variance: tuple[float, float] = (1e-3, 3e-3)
    tone_d: tuple[float, float] = (-0.7, 0.7)
    rng_seed: int = 0
    domain: str = "raw"  # raw | srgb
    tone_perturb: bool = False  # only honored for srgb-domain output

    def __post_init__(self):
        if len(self.exposure_times) < 2 or min(self.exposure_times) <= 0:
            raise ValueError("need at least two positive exposure times")
        lo, hi = self.noise_variance
        if lo < 0 or hi < lo:
            raise ValueError("noise variance range must be 0 <= lo <= hi")
        if self.domain not in ("raw", "srgb"):
            raise ValueError(f"unknown domain {self.domain!r}")

    @classmethod
    def from_json_dict(cls, d: dict) -> "SynthConfig":
        kw = dict(d)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(kw) - known
        if unknown:
            raise ValueError(f"unknown synth config fields: {sorted(unknown)}")
        for key in ("exposure_times", "noise_variance", "tone_d"):
            if key in kw:
                kw[key] = tuple(kw[key])
        return cls(**kw)


@dataclass(frozen=True)
class SynthResult:
    frames: tuple            # PackedRaw or SRGBImage per frame
    ground_truth: tuple      # RadianceImage per frame
    exposure_times: tuple[float, ...]
    noise_variances: tuple[float, ...]
    config: SynthConfig


def frame_rng(seed: int, frame_index: int) -> np.random.Generator:
    return np.random.default_rng([seed, frame_index])


def hdr_to_ldr(hdr: RadianceImage, t: float, bit_depth: int = 10,
               sigma2: float = 0.0, rng: np.random.Generator | None = None,
               white_balanced: bool = True) -> PackedRaw | SRGBImage:
    """Simulate one quantized capture of an HDR frame at exposure t.

    raw4 input yields a PackedRaw, rgb3 input an SRGBImage; the math is the
    same either way: quantize(clip(hdr * t + noise, 0, 1), bit_depth).
    """
    if t <= 0:
        raise ValueError("exposure time must be positive")
    v = hdr.data.astype(np.float64) * t
    if sigma2 > 0:
        if rng is None:
            raise ValueError("noise requested without an rng")
        v = v + rng.normal(0.0, np.sqrt(sigma2), size=v.shape)
    v = np.clip(v, 0.0, 1.0)
    levels = (1 << bit_depth) - 1
    v = (np.floor(v * levels + 0.5) / levels).astype(np.float32)
    if hdr.layout == "rgb3":
        return SRGBImage(v)
    return PackedRaw(v, exposure_time=t, white_balanced=white_balanced)


def perturb_tone(img, d: float, allowed: tuple[float, float] = (-0.7, 0.7)):
    """v <- v^exp(d), the tone perturbation family; warns outside `allowed`."""
    if not allowed[0] <= d <= allowed[1]:
        warnings.warn(f"tone perturbation d={d} outside configured range {allowed}")
    g = np.float32(np.exp(d))
    if isinstance(img, PackedRaw):
        return PackedRaw(np.power(img.data, g), exposure_time=img.exposure_time,
                         white_balanced=img.white_balanced)
    if isinstance(img, SRGBImage):
        return SRGBImage(np.power(img.data, g))
    raise TypeError(f"cannot perturb {type(img).__name__}")


def synth_sequence(hdr_frames, config: SynthConfig) -> SynthResult:
    """Render an alternating-exposure LDR sequence plus per-frame HDR GT."""
    hdr_frames = list(hdr_frames)
    if len(hdr_frames) < 3:
        raise ValueError("need at least three HDR frames")
    n_times = len(config.exposure_times)
    lo, hi = config.noise_variance
    frames = []
    sigmas = []
    times = []
    for i, hdr in enumerate(hdr_frames):
        t = float(config.exposure_times[i % n_times])
        rng = frame_rng(config.rng_seed, i)
        sigma2 = float(rng.uniform(lo, hi)) if hi > 0 else 0.0
        ldr = hdr_to_ldr(hdr, t, config.bit_depth, sigma2, rng)
        if config.domain == "srgb" and config.tone_perturb:
            d = float(rng.uniform(*config.tone_d))
            ldr = perturb_tone(ldr, d, allowed=config.tone_d)
        frames.append(ldr)
        sigmas.append(sigma2)
        times.append(t)
    return SynthResult(tuple(frames), tuple(hdr_frames), tuple(times),
                       tuple(sigmas), config)


# ---------------------------------------------------------------------------
# Ground-truthed procedural test scenes
# ---------------------------------------------------------------------------

def _periodic_texture(rng: np.random.Generator, h: int, w: int,
                      smooth: float = 3.0) -> np.ndarray:
    """Smooth tileable noise in [0, 1]: white noise low-passed on the torus.

    Values are rank-equalized to a uniform distribution so the texture uses
    the full range instead of bunching around the mean; a pointwise monotone
    map keeps translations by np.roll exact.
    """
    noise = rng.standard_normal((h, w))
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    kernel = np.exp(-2.0 * (np.pi * smooth) ** 2 * (fy ** 2 + fx ** 2))
    tex = np.fft.ifft2(np.fft.fft2(noise) * kernel).real
    ranks = tex.ravel().argsort().argsort().astype(np.float64)
    return (ranks / max(ranks.size - 1, 1)).reshape(h, w).astype(np.float32)


def _to_raw4(lum: np.ndarray, value_range: tuple[float, float],
             channel_scale=(1.0, 0.97, 0.93, 0.88)) -> RadianceImage:
    lo, hi = value_range
    base = lo + lum * (hi - lo)
    planes = np.stack([base * s for s in channel_scale], axis=2)
    return RadianceImage(np.clip(planes, 0.0, None).astype(np.float32), layout="raw4")


def render_test_scene(kind: str, params: dict | None = None,
                      rng: np.random.Generator | None = None
                      ) -> tuple[list[RadianceImage], dict]:
    """Procedural radiance sequences with analytically known motion.

    Kinds:
      static        identical frames.
      global-shift  frame k is frame 0 rolled by k * shift (periodic texture,
                    so the translation is exact everywhere).
      two-motion    two vertical strips moving independently; per-pixel flow
                    fields are emitted in the metadata.

    Metadata carries backward flow on the reference grid for both neighbors:
    flow_to_prev = -step, flow_to_next = +step (per region for two-motion).
    """
    params = dict(params or {})
    rng = rng or np.random.default_rng(0)
    h = int(params.get("height", 128))
    w = int(params.get("width", 128))
    n = int(params.get("frames", 3))
    value_range = tuple(params.get("value_range", (0.02, 0.5)))
    smooth = float(params.get("smooth", 3.0))
    lum = _periodic_texture(rng, h, w, smooth)

    if kind == "static":
        frame = _to_raw4(lum, value_range)
        return [frame] * n, {"kind": kind, "step": (0, 0)}

    if kind == "global-shift":
        dx, dy = (int(v) for v in params.get("shift", (3, 0)))
        frames = []
        for k in range(n):
            rolled = np.roll(lum, (k * dy, k * dx), axis=(0, 1))
            frames.append(_to_raw4(rolled, value_range))
        flow_next = np.full((h, w, 2), (dx, dy), dtype=np.float32)
        return frames, {"kind": kind, "step": (dx, dy),
                        "flow_to_prev": -flow_next, "flow_to_next": flow_next}

    if kind == "two-motion":
        dxa, dya = (int(v) for v in params.get("shift_a", (4, 0)))
        dxb, dyb = (int(v) for v in params.get("shift_b", (0, 4)))
        split = int(params.get("split", w // 2))
        lum_b = _periodic_texture(rng, h, w, smooth)
        mask = np.zeros((h, w), dtype=bool)
        mask[:, :split] = True  # region A on the left
        frames = []
        for k in range(n):
            a = np.roll(lum, (k * dya, k * dxa), axis=(0, 1))
            b = np.roll(lum_b, (k * dyb, k * dxb), axis=(0, 1))
            frames.append(_to_raw4(np.where(mask, a, b), value_range))
        flow_next = np.where(mask[..., None],
                             np.array([dxa, dya], dtype=np.float32),
                             np.array([dxb, dyb], dtype=np.float32))
        return frames, {"kind": kind, "region_mask": mask,
                        "flow_to_prev": -flow_next, "flow_to_next": flow_next}

    raise ValueError(f"unknown test scene kind {kind!r}")
