"""Three-frame alternating-exposure HDR reconstruction.

For every interior frame: pack and white-balance the triple, lift each frame
to the radiance domain, estimate flow to both neighbors, warp the neighbors
with pyramid flow-guided deformable alignment, and fuse with normalized
per-pixel weights that favor well-exposed, well-aligned content. Pixels where
the reference is well exposed bypass fusion entirely and keep the reference
radiance (the detail-preserving skip path).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .align import AlignConfig, FlowPyramid, align_pyramid, estimate_flow_triple
from .rawcore import BayerFrame, PackedRaw, RadianceImage, pack_bayer, to_radiance, white_balance


@dataclass(frozen=True)
class WellExposedness:
    """Hat score: 0 at the extremes, ramps over [0, v_low] and [v_high, 1]."""

    v_low: float = 0.05
    v_high: float = 0.9

    def __post_init__(self):
        if not 0.0 < self.v_low < self.v_high < 1.0:
            raise ValueError("need 0 < v_low < v_high < 1")

    def __call__(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=np.float32)
        up = np.clip(v / self.v_low, 0.0, 1.0)
        down = np.clip((1.0 - v) / (1.0 - self.v_high), 0.0, 1.0)
        return np.minimum(up, down).astype(np.float32)


@dataclass(frozen=True)
class ReconstructConfig:
    align: AlignConfig = field(default_factory=AlignConfig)
    wellexp: WellExposedness = field(default_factory=WellExposedness)
    weight_eps: float = 1e-4
    skip_threshold: float = 0.99  # wellexp at or above this passes the ref through


@dataclass(frozen=True, eq=False)
class FrameContext:
    """One frame's LDR and radiance views plus its role in the window."""

    ldr: PackedRaw
    radiance: RadianceImage
    role: str  # prev | ref | next

    def __post_init__(self):
        if self.role not in ("prev", "ref", "next"):
            raise ValueError(f"unknown role {self.role!r}")
        expected = self.ldr.data / np.float32(self.ldr.exposure_time)
        if not np.allclose(self.radiance.data, expected, rtol=1e-5, atol=1e-7):
            raise ValueError("radiance is not ldr / exposure_time")

    @property
    def exposure_time(self) -> float:
        return self.ldr.exposure_time


@dataclass(frozen=True, eq=False)
class FusionWeights:
    """Raw and normalized per-source weight planes (prev, ref, next)."""

    raw: np.ndarray         # (h, w, c, 3)
    normalized: np.ndarray  # (h, w, c, 3), sums to 1 over the last axis

    def __post_init__(self):
        s = self.normalized.sum(axis=-1)
        if np.abs(s - 1.0).max() > 1e-5:
            raise ValueError("normalized weights must sum to 1")
        if self.normalized.min() < 0.0:
            raise ValueError("weights must be non-negative")


def build_context(frames, times=None) -> list[FrameContext]:
    """Wrap a (prev, ref, next) triple of white-balanced PackedRaw frames."""
    frames = list(frames)
    if len(frames) != 3:
        raise ValueError("expected exactly three frames")
    if times is not None:
        ts = [f.exposure_time for f in frames]
        if any(abs(a - b) > 1e-9 for a, b in zip(ts, times)):
            raise ValueError("times do not match the frames' exposure times")
    for f in frames:
        if not f.white_balanced:
            raise ValueError("frames must be white balanced before context assembly")
    t = [f.exposure_time for f in frames]
    if t[0] == t[1] or t[1] == t[2]:
        warnings.warn("exposure times do not alternate around the reference")
    roles = ("prev", "ref", "next")
    return [FrameContext(f, to_radiance(f), role) for f, role in zip(frames, roles)]


def compute_weights(ldr_ref: np.ndarray, warped_ldr_prev: np.ndarray,
                    warped_ldr_next: np.ndarray,
                    confidence: tuple[np.ndarray, np.ndarray],
                    wellexp: WellExposedness = WellExposedness(),
                    eps: float = 1e-4) -> FusionWeights:
    """Per-pixel source weights: exposure quality times alignment confidence.

    The reference gets wellexp + eps (so the denominator never vanishes);
    each neighbor gets wellexp of its warped LDR scaled by its confidence
    map. Weights are normalized to sum to one per pixel per channel.
    """
    conf_prev, conf_next = confidence
    for c in (conf_prev, conf_next):
        if c.min() < 0.0 or c.max() > 1.0:
            raise ValueError("confidence maps must lie in [0, 1]")
    a_ref = wellexp(ldr_ref) + np.float32(eps)
    a_prev = wellexp(warped_ldr_prev) * conf_prev[..., None]
    a_next = wellexp(warped_ldr_next) * conf_next[..., None]
    raw = np.stack([a_prev, a_ref, a_next], axis=-1)
    norm = raw / raw.sum(axis=-1, keepdims=True)
    return FusionWeights(raw, norm.astype(np.float32))


def fuse(radiances, weights: FusionWeights) -> np.ndarray:
    """Convex per-pixel combination of (prev, ref, next) radiance estimates."""
    stack = np.stack(list(radiances), axis=-1)
    if stack.shape != weights.normalized.shape:
        raise ValueError("sources do not match the weight planes")
    return (stack * weights.normalized).sum(axis=-1).astype(np.float32)


def reconstruct_frame(frames, config: ReconstructConfig | None = None
                      ) -> tuple[RadianceImage, dict]:
    """Reconstruct the middle frame's HDR radiance from a Bayer triple."""
    config = config or ReconstructConfig()
    frames = list(frames)
    if len(frames) != 3:
        raise ValueError("expected exactly three frames")
    if not all(isinstance(f, BayerFrame) for f in frames):
        raise ValueError("reconstruct_frame expects BayerFrame inputs")
    packed = [white_balance(pack_bayer(f), f.wb_gains) for f in frames]
    ctx = build_context(packed)
    prev_ctx, ref_ctx, next_ctx = ctx

    if config.align.enable_flow:
        pyr_prev, pyr_next = estimate_flow_triple(
            prev_ctx.ldr, ref_ctx.ldr, next_ctx.ldr, config.align)
    else:
        shape = (ref_ctx.ldr.height, ref_ctx.ldr.width)
        pyr_prev = FlowPyramid.zeros(shape, config.align.flow_levels)
        pyr_next = pyr_prev

    sat = config.align.saturation_threshold
    ref_sat = np.any(ref_ctx.ldr.data >= sat, axis=2)
    aligned = {}
    confs = {}
    for key, n_ctx, pyr in (("prev", prev_ctx, pyr_prev),
                            ("next", next_ctx, pyr_next)):
        n_sat = np.any(n_ctx.ldr.data >= sat, axis=2)
        a, c = align_pyramid(n_ctx.radiance.data, ref_ctx.radiance.data, pyr,
                             config.align, neighbor_sat=n_sat, ref_sat=ref_sat)
        aligned[key] = np.maximum(a, 0.0)
        confs[key] = c

    # warping commutes with the global 1/t scaling, so warped LDR = warped
    # radiance * t; clip guards bilinear rounding at the [0, 1] boundary
    warped_ldr_prev = np.clip(aligned["prev"] * np.float32(prev_ctx.exposure_time), 0.0, 1.0)
    warped_ldr_next = np.clip(aligned["next"] * np.float32(next_ctx.exposure_time), 0.0, 1.0)

    weights = compute_weights(ref_ctx.ldr.data, warped_ldr_prev, warped_ldr_next,
                              (confs["prev"], confs["next"]),
                              config.wellexp, config.weight_eps)
    fused = fuse((aligned["prev"], ref_ctx.radiance.data, aligned["next"]), weights)

    ref_quality = config.wellexp(ref_ctx.ldr.data)
    skip = ref_quality >= config.skip_threshold
    fused = np.where(skip, ref_ctx.radiance.data, fused)

    stats = {
        "exposure_time": ref_ctx.exposure_time,
        "weight_mass": {
            "prev": float(weights.normalized[..., 0].mean()),
            "ref": float(weights.normalized[..., 1].mean()),
            "next": float(weights.normalized[..., 2].mean()),
        },
        "saturated_fraction": float(ref_sat.mean()),
        "skip_fraction": float(skip.mean()),
        "confidence": {
            "prev": float(confs["prev"].mean()),
            "next": float(confs["next"].mean()),
        },
    }
    return RadianceImage(fused, layout="raw4"), stats


def reconstruct_video(frame_loader, n_frames: int,
                      config: ReconstructConfig | None = None):
    """Sliding-window driver: yields (index, RadianceImage, stats) for
    every interior frame i = 1 .. n-2; the first and last frames are skipped.

    `frame_loader(i)` must return the BayerFrame for index i.
    """
    if n_frames < 3:
        raise ValueError("need at least three frames")
    config = config or ReconstructConfig()
    cache: dict[int, BayerFrame] = {}

    def get(i: int) -> BayerFrame:
        if i not in cache:
            cache[i] = frame_loader(i)
        return cache[i]

    for i in range(1, n_frames - 1):
        triple = [get(i - 1), get(i), get(i + 1)]
        for j in list(cache):
            if j < i:
                del cache[j]
        hdr, stats = reconstruct_frame(triple, config)
        stats = {"frame": i, **stats}
        yield i, hdr, stats
