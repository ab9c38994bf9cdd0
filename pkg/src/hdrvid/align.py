"""Pyramid flow estimation and flow-guided deformable warping.

The neighbor-to-reference motion is estimated coarse to fine on
exposure-matched, gamma-corrected frames: at each pyramid level a per-block
integer search (SAD, with parabolic sub-pixel refinement) adds a residual to
the 2x-upscaled coarser flow. Alignment then warps the neighbor per scale
with deformable sampling offsets seeded from the flow and refined by a
second local search; a final flow-free pass at the finest scale cleans up
what the flow missed. Saturated regions are excluded from every search and
fall back to the propagated flow with floor confidence.

Flow fields map reference pixels to neighbor sampling coordinates:
warp(neighbor)(p) = neighbor(p + F(p)), flow planes ordered (dx, dy).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .rawcore import PackedRaw, gamma_correct, match_exposure
from .resample import bilinear_sample, box_downsample2, pad_to_multiple, upsample2, warp_backward

# 3x3 deformable kernel, row-major taps as (dx, dy); center tap is index 4
KERNEL_TAPS = np.array([(dx, dy) for dy in (-1, 0, 1) for dx in (-1, 0, 1)],
                       dtype=np.float32)
CENTER_TAP = 4

# relative cost improvement a candidate must show over the zero shift
ACCEPT_MARGIN = 0.2


@dataclass(frozen=True)
class AlignConfig:
    flow_levels: int = 5
    align_levels: int = 4
    block_size: int = 8
    search_radius: int = 4
    fine_search_radius: int = 2  # finer flow levels only correct the doubled coarse flow
    gamma: float = 2.2
    saturation_threshold: float = 0.97
    conf_scale: float = 0.25  # relative to the reference's robust intensity range
    conf_floor: float = 0.05
    min_valid_fraction: float = 0.1
    texture_floor: float = 0.01  # block std below which no motion is searched
    enable_flow: bool = True
    enable_refine: bool = True


@dataclass(frozen=True, eq=False)
class FlowField:
    """Per-pixel motion, planes (dx, dy) in pixels at this scale."""

    data: np.ndarray  # (h, w, 2) float32

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        if data.ndim != 3 or data.shape[2] != 2:
            raise ValueError("flow data must be (h, w, 2)")
        if not np.isfinite(data).all():
            raise ValueError("flow must be finite")
        object.__setattr__(self, "data", data)

    @property
    def shape(self):
        return self.data.shape[:2]


@dataclass(frozen=True, eq=False)
class FlowPyramid:
    """Finest-first flow levels, each half the resolution of the previous.

    `residuals[s]` is the per-level increment: levels[s].data equals
    2 * upsample2(levels[s+1].data) + residuals[s] exactly, by construction.
    `orig_size` is the unpadded frame size; levels live on the padded grid.
    """

    levels: tuple
    residuals: tuple
    orig_size: tuple[int, int]

    def __post_init__(self):
        for a, b in zip(self.levels, self.levels[1:]):
            if a.shape != (2 * b.shape[0], 2 * b.shape[1]):
                raise ValueError("pyramid levels must halve exactly")

    @classmethod
    def zeros(cls, shape: tuple[int, int], levels: int) -> "FlowPyramid":
        padded, _ = pad_to_multiple(np.zeros(shape, dtype=np.float32), 1 << (levels - 1))
        h, w = padded.shape
        lv, res = [], []
        for s in range(levels):
            z = np.zeros((h >> s, w >> s, 2), dtype=np.float32)
            lv.append(FlowField(z))
            res.append(z.copy())
        return cls(tuple(lv), tuple(res), shape)

    def check_consistency(self) -> bool:
        for s in range(len(self.levels) - 1):
            up = 2.0 * upsample2(self.levels[s + 1].data)
            if not np.array_equal(up + self.residuals[s], self.levels[s].data):
                return False
        return True


@dataclass(frozen=True, eq=False)
class OffsetField:
    """Per-pixel, per-tap sampling displacements plus modulation weights."""

    data: np.ndarray        # (h, w, K, 2) as (dx, dy)
    modulation: np.ndarray  # (h, w, K) in [0, 1]

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        mod = np.asarray(self.modulation, dtype=np.float32)
        if data.ndim != 4 or data.shape[3] != 2:
            raise ValueError("offsets must be (h, w, K, 2)")
        if mod.shape != data.shape[:3]:
            raise ValueError("modulation must be (h, w, K)")
        if not np.isfinite(data).all():
            raise ValueError("offsets must be finite")
        if mod.min() < 0.0 or mod.max() > 1.0:
            raise ValueError("modulation must lie in [0, 1]")
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "modulation", mod)

    @property
    def taps(self) -> int:
        return self.data.shape[2]


# ---------------------------------------------------------------------------
# Pyramids
# ---------------------------------------------------------------------------

def build_pyramid(img: np.ndarray, levels: int) -> list[np.ndarray]:
    """Finest-first list; each level is the 2x box downsample of the previous."""
    if levels < 1:
        raise ValueError("levels must be >= 1")
    h, w = img.shape[:2]
    if min(h, w) < (1 << (levels - 1)):
        raise ValueError(f"image {h}x{w} too small for {levels} levels")
    pyr = [np.asarray(img, dtype=np.float32)]
    for _ in range(levels - 1):
        pyr.append(box_downsample2(pyr[-1]))
    return pyr


# ---------------------------------------------------------------------------
# Block search
# ---------------------------------------------------------------------------

def _candidate_order(radius: int) -> np.ndarray:
    cands = [(dv, du) for dv in range(-radius, radius + 1)
             for du in range(-radius, radius + 1)]
    cands.sort(key=lambda c: (c[0] * c[0] + c[1] * c[1], c[0], c[1]))
    return np.array(cands, dtype=np.int64)


def _shift2d(a: np.ndarray, dv: int, du: int) -> tuple[np.ndarray, np.ndarray]:
    """out[y, x] = a[y + dv, x + du]; second return marks in-range pixels."""
    h, w = a.shape
    out = np.zeros_like(a)
    ok = np.zeros((h, w), dtype=bool)
    ys_dst = slice(max(0, -dv), h - max(0, dv))
    xs_dst = slice(max(0, -du), w - max(0, du))
    ys_src = slice(max(0, dv), h - max(0, -dv))
    xs_src = slice(max(0, du), w - max(0, -du))
    out[ys_dst, xs_dst] = a[ys_src, xs_src]
    ok[ys_dst, xs_dst] = True
    return out, ok


def _block_search(fixed: np.ndarray, moving: np.ndarray, radius: int, block: int,
                  valid_fixed: np.ndarray | None = None,
                  valid_moving: np.ndarray | None = None,
                  min_valid_fraction: float = 0.1,
                  texture_floor: float = 0.0,
                  subpixel: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """Per-block displacement minimizing masked mean |fixed - shift(moving)|.

    Ties resolve to the smallest displacement magnitude (candidates are
    scanned in magnitude order and only strict improvements win). Blocks
    without enough valid pixels report zero displacement and infinite cost.
    Blocks whose valid reference pixels are nearly constant (std below
    `texture_floor`) cannot anchor a match: they keep zero displacement but
    report the zero-shift cost, so quantization noise in flat or mostly
    saturated blocks never fabricates motion.

    Returns (disp, cost): disp is (nby, nbx, 2) float32 ordered (dx, dy),
    cost is the best masked mean absolute difference per block.
    """
    h, w = fixed.shape
    nby = -(-h // block)
    nbx = -(-w // block)
    ph, pw = nby * block - h, nbx * block - w
    fixed = np.pad(fixed, ((0, ph), (0, pw)), mode="edge")
    moving = np.pad(moving, ((0, ph), (0, pw)), mode="edge")
    vf = np.ones(fixed.shape, bool) if valid_fixed is None else \
        np.pad(valid_fixed, ((0, ph), (0, pw)), mode="constant")
    vm = np.ones(moving.shape, bool) if valid_moving is None else \
        np.pad(valid_moving, ((0, ph), (0, pw)), mode="constant")
    min_count = max(1, int(round(min_valid_fraction * block * block)))

    cands = _candidate_order(radius)
    cost = np.full((len(cands), nby, nbx), np.inf, dtype=np.float32)
    for ci, (dv, du) in enumerate(cands):
        shifted, ok = _shift2d(moving, int(dv), int(du))
        vm_shift, _ = _shift2d(vm, int(dv), int(du))
        m = vf & ok & vm_shift
        diff = np.abs(fixed - shifted) * m
        s = diff.reshape(nby, block, nbx, block).sum(axis=(1, 3))
        cnt = m.reshape(nby, block, nbx, block).sum(axis=(1, 3))
        cost[ci] = np.where(cnt >= min_count, s / np.maximum(cnt, 1), np.inf)

    if texture_floor > 0.0:
        vf_f = vf.astype(np.float32)
        cnt0 = vf_f.reshape(nby, block, nbx, block).sum(axis=(1, 3))
        s1 = (fixed * vf_f).reshape(nby, block, nbx, block).sum(axis=(1, 3))
        s2 = (fixed * fixed * vf_f).reshape(nby, block, nbx, block).sum(axis=(1, 3))
        denom = np.maximum(cnt0, 1.0)
        var = s2 / denom - (s1 / denom) ** 2
        flat = var < texture_floor ** 2
        cost[1:, flat] = np.inf  # candidates are magnitude-sorted, [0] = (0, 0)

    best = cost.min(axis=0)
    win = (cost <= best[None]).argmax(axis=0)  # first hit = smallest magnitude
    # a nonzero displacement must beat staying put by a clear margin, or
    # quantization noise in weak blocks fabricates motion that the coarse-to
    # fine doubling then amplifies
    zero_cost = cost[0]
    with np.errstate(invalid="ignore"):
        insignificant = np.isfinite(zero_cost) & ~(best < (1.0 - ACCEPT_MARGIN) * zero_cost)
    win = np.where(insignificant, 0, win)
    best = np.where(insignificant, zero_cost, best)
    disp = cands[win][..., ::-1].astype(np.float32)  # (dv, du) -> (dx, dy)

    if subpixel:
        lut = np.full((2 * radius + 1, 2 * radius + 1), -1, dtype=np.int64)
        for ci, (dv, du) in enumerate(cands):
            lut[dv + radius, du + radius] = ci
        by, bx = np.meshgrid(np.arange(nby), np.arange(nbx), indexing="ij")
        win_dv = cands[win][..., 0]
        win_du = cands[win][..., 1]
        c0 = cost[win, by, bx]
        # SAD asymmetry on a sparse support fakes a sub-pixel minimum, so
        # the parabola is only trusted on majority-valid blocks
        support = (vf & vm).reshape(nby, block, nbx, block).sum(axis=(1, 3))
        full_support = support >= 0.5 * block * block

        def cost_at(dv, du):
            inside = (np.abs(dv) <= radius) & (np.abs(du) <= radius)
            ci = lut[np.clip(dv, -radius, radius) + radius,
                     np.clip(du, -radius, radius) + radius]
            return np.where(inside, cost[ci, by, bx], np.inf)

        for axis, (ddv, ddu) in enumerate(((0, 1), (1, 0))):
            cm = cost_at(win_dv - ddv, win_du - ddu)
            cp = cost_at(win_dv + ddv, win_du + ddu)
            with np.errstate(invalid="ignore"):
                denom = cm - 2.0 * c0 + cp
                # the parabola needs a real valley on both sides, not noise;
                # an exactly-zero minimum is already perfectly aligned
                usable = (full_support
                          & np.isfinite(cm) & np.isfinite(cp) & np.isfinite(c0)
                          & (c0 > 0.0)
                          & (denom > 1e-12)
                          & (cm > (1.0 + ACCEPT_MARGIN) * c0)
                          & (cp > (1.0 + ACCEPT_MARGIN) * c0))
                delta = np.where(usable, 0.5 * (cm - cp) / np.where(usable, denom, 1.0), 0.0)
            disp[..., axis] += np.clip(delta, -0.5, 0.5).astype(np.float32)

    return disp, best


def _blocks_to_pixels(a: np.ndarray, block: int, h: int, w: int) -> np.ndarray:
    return np.repeat(np.repeat(a, block, axis=0), block, axis=1)[:h, :w]


# ---------------------------------------------------------------------------
# Flow estimation
# ---------------------------------------------------------------------------

def _coarse_to_fine_flow(fixed: np.ndarray, moving: np.ndarray,
                         valid_fixed: np.ndarray, valid_moving: np.ndarray,
                         orig_size: tuple[int, int],
                         config: AlignConfig) -> FlowPyramid:
    levels = config.flow_levels
    pyr_f = build_pyramid(fixed, levels)
    pyr_m = build_pyramid(moving, levels)
    pyr_vf = build_pyramid(valid_fixed.astype(np.float32), levels)
    pyr_vm = build_pyramid(valid_moving.astype(np.float32), levels)

    lv: list = [None] * levels
    res: list = [None] * levels
    total = None
    for s in range(levels - 1, -1, -1):
        f, m = pyr_f[s], pyr_m[s]
        if total is None:
            base = np.zeros(f.shape + (2,), dtype=np.float32)
            radius = config.search_radius
        else:
            base = 2.0 * upsample2(total)
            radius = min(config.search_radius, config.fine_search_radius)
        warped = warp_backward(m, base)
        vm_warped = warp_backward(pyr_vm[s], base) > 0.5
        disp, _ = _block_search(
            f, warped, radius, config.block_size,
            valid_fixed=pyr_vf[s] > 0.5, valid_moving=vm_warped,
            min_valid_fraction=config.min_valid_fraction,
            texture_floor=config.texture_floor, subpixel=True)
        h, w = f.shape
        res_px = np.stack([_blocks_to_pixels(disp[..., 0], config.block_size, h, w),
                           _blocks_to_pixels(disp[..., 1], config.block_size, h, w)],
                          axis=2)
        total = base + res_px
        lv[s] = FlowField(total)
        res[s] = res_px
    return FlowPyramid(tuple(lv), tuple(res), orig_size)


def estimate_flow_triple(prev: PackedRaw, ref: PackedRaw, nxt: PackedRaw,
                         config: AlignConfig | None = None,
                         match_exposures: bool = True
                         ) -> tuple[FlowPyramid, FlowPyramid]:
    """Flow pyramids mapping the reference to each neighbor.

    The reference is exposure-matched to each neighbor, all frames are
    gamma-corrected to enlarge low intensities, and a grayscale (plane mean)
    coarse-to-fine block search produces one pyramid per neighbor.
    """
    config = config or AlignConfig()
    if prev.data.shape != ref.data.shape or nxt.data.shape != ref.data.shape:
        raise ValueError("frame dimensions must match")
    pad = 1 << (config.flow_levels - 1)

    def prep(img: PackedRaw, original: PackedRaw | None = None):
        # clipping survives exposure matching invisibly (a darkened saturated
        # pixel reads mid-gray), so saturation is judged on the original
        # values as well as the matched ones
        sat = np.any(img.data >= config.saturation_threshold, axis=2)
        if original is not None:
            sat |= np.any(original.data >= config.saturation_threshold, axis=2)
        gray = gamma_correct(img, config.gamma).data.mean(axis=2).astype(np.float32)
        gray_p, orig = pad_to_multiple(gray, pad)
        valid_p, _ = pad_to_multiple(~sat, pad)
        return gray_p, valid_p, orig

    def matched_ref(target_t: float) -> PackedRaw:
        if match_exposures and target_t != ref.exposure_time:
            return match_exposure(ref, target_t)
        return ref

    gray_prev, valid_prev, orig = prep(prev)
    gray_next, valid_next, _ = prep(nxt)
    ref_for_prev, ref_valid_prev, _ = prep(matched_ref(prev.exposure_time), ref)
    if nxt.exposure_time == prev.exposure_time:
        ref_for_next, ref_valid_next = ref_for_prev, ref_valid_prev
    else:
        ref_for_next, ref_valid_next, _ = prep(matched_ref(nxt.exposure_time), ref)

    pyr_prev = _coarse_to_fine_flow(ref_for_prev, gray_prev,
                                    ref_valid_prev, valid_prev, orig, config)
    pyr_next = _coarse_to_fine_flow(ref_for_next, gray_next,
                                    ref_valid_next, valid_next, orig, config)
    return pyr_prev, pyr_next


# ---------------------------------------------------------------------------
# Deformable offsets and sampling
# ---------------------------------------------------------------------------

def flow_to_offsets(flow: FlowField | np.ndarray) -> OffsetField:
    """Broadcast flow to all taps: o_k = flow + kernel displacement, mod = 1."""
    data = flow.data if isinstance(flow, FlowField) else np.asarray(flow, np.float32)
    offs = data[:, :, None, :] + KERNEL_TAPS[None, None, :, :]
    mod = np.ones(offs.shape[:3], dtype=np.float32)
    return OffsetField(offs, mod)


def center_tap_weights(taps: int = 9) -> np.ndarray:
    w = np.zeros(taps, dtype=np.float32)
    w[taps // 2] = 1.0
    return w


def deformable_sample(img: np.ndarray, offsets: OffsetField,
                      tap_weights: np.ndarray | None = None,
                      apply_modulation: bool = True) -> np.ndarray:
    """out(p) = sum_k w_k * m_k(p) * bilinear(img, p + o_k(p)), clamp-to-edge.

    With a single active center tap, zero offsets, and unit modulation this
    is plain backward warping (bit-exact identity for zero flow).
    """
    img = np.asarray(img, dtype=np.float32)
    h, w = img.shape[:2]
    if offsets.data.shape[:2] != (h, w):
        raise ValueError("offsets do not match image size")
    if tap_weights is None:
        tap_weights = center_tap_weights(offsets.taps)
    tap_weights = np.asarray(tap_weights, dtype=np.float32)
    if tap_weights.shape != (offsets.taps,):
        raise ValueError("need one weight per tap")
    yy, xx = np.meshgrid(np.arange(h, dtype=np.float32),
                         np.arange(w, dtype=np.float32), indexing="ij")
    out = np.zeros_like(img)
    for k in range(offsets.taps):
        wk = float(tap_weights[k])
        if wk == 0.0:
            continue
        v = bilinear_sample(img, yy + offsets.data[:, :, k, 1],
                            xx + offsets.data[:, :, k, 0])
        if apply_modulation:
            m = offsets.modulation[:, :, k]
            v = v * (m[..., None] if img.ndim == 3 else m)
        out = out + wk * v
    return out


def refine_offsets(warped_neighbor: np.ndarray, ref: np.ndarray,
                   base_offsets: OffsetField, search_radius: int,
                   block: int = 8,
                   valid_ref: np.ndarray | None = None,
                   valid_neighbor: np.ndarray | None = None,
                   confidence_scale: float | None = None,
                   conf_floor: float = 0.05,
                   min_valid_fraction: float = 0.1) -> OffsetField:
    """Integer per-block correction of the current offsets.

    Searches residual shifts of the already-warped neighbor against the
    reference on valid (unsaturated in both) pixels, adds the winner to all
    taps of the block, and writes a confidence into the modulation: 1 for a
    perfect match, decaying to `conf_floor` as the block's SAD approaches
    `confidence_scale`. Fully invalid and textureless blocks keep the
    propagated offsets (zero residual); fully invalid ones get floor
    confidence.
    """
    ref_gray = ref.mean(axis=2) if ref.ndim == 3 else ref
    mov_gray = warped_neighbor.mean(axis=2) if warped_neighbor.ndim == 3 else warped_neighbor
    if confidence_scale is None:
        lo, hi = np.percentile(ref_gray, (1.0, 99.0))
        confidence_scale = 0.25 * max(float(hi - lo), 1e-6)
    disp, cost = _block_search(
        ref_gray.astype(np.float32), mov_gray.astype(np.float32),
        search_radius, block, valid_fixed=valid_ref, valid_moving=valid_neighbor,
        min_valid_fraction=min_valid_fraction,
        texture_floor=0.16 * confidence_scale, subpixel=False)
    h, w = ref_gray.shape
    res_px = np.stack([_blocks_to_pixels(disp[..., 0], block, h, w),
                       _blocks_to_pixels(disp[..., 1], block, h, w)], axis=2)
    with np.errstate(invalid="ignore"):
        conf = 1.0 - cost / np.float32(confidence_scale)
    conf = np.clip(np.nan_to_num(conf, nan=0.0, neginf=0.0), conf_floor, 1.0)
    conf_px = _blocks_to_pixels(conf.astype(np.float32), block, h, w)
    offs = base_offsets.data + res_px[:, :, None, :]
    mod = base_offsets.modulation * conf_px[:, :, None]
    return OffsetField(offs, mod)


# ---------------------------------------------------------------------------
# Pyramid alignment
# ---------------------------------------------------------------------------

def align_pyramid(neighbor: np.ndarray, ref: np.ndarray,
                  flow_pyramid: FlowPyramid, config: AlignConfig | None = None,
                  neighbor_sat: np.ndarray | None = None,
                  ref_sat: np.ndarray | None = None,
                  return_debug: bool = False):
    """Warp `neighbor` onto `ref` using per-scale flow-seeded offsets.

    Coarsest scale: offsets come straight from the flow, refined once.
    Finer scales: the refined coarser residual is upsampled into the base
    offsets, refined again, and the warp is blended equal-weight with a warp
    by the upsampled coarser total offsets. The finest scale runs one extra
    flow-free refinement (the cascading pass) whose modulation becomes the
    returned confidence map. Modulation is reported, not multiplied into the
    output, so the warp stays radiometrically neutral.

    Returns (aligned, confidence); with return_debug also a dict carrying
    the final per-pixel flow.
    """
    config = config or AlignConfig()
    levels = config.align_levels
    if len(flow_pyramid.levels) < levels:
        raise ValueError("flow pyramid has fewer levels than requested")
    neighbor = np.asarray(neighbor, dtype=np.float32)
    ref = np.asarray(ref, dtype=np.float32)
    if neighbor.shape != ref.shape:
        raise ValueError("neighbor and ref must match")
    h0, w0 = neighbor.shape[:2]
    target = flow_pyramid.levels[0].shape
    if (h0, w0) != target:
        neighbor_p = _pad_to_shape(neighbor, target)
        ref_p = _pad_to_shape(ref, target)
    else:
        neighbor_p, ref_p = neighbor, ref
    if neighbor_sat is None:
        neighbor_sat = np.zeros((h0, w0), bool)
    if ref_sat is None:
        ref_sat = np.zeros((h0, w0), bool)
    nval = _pad_to_shape((~neighbor_sat).astype(np.float32), target)
    rval = _pad_to_shape((~ref_sat).astype(np.float32), target)

    pyr_n = build_pyramid(neighbor_p, levels)
    pyr_r = build_pyramid(ref_p, levels)
    pyr_nv = build_pyramid(nval, levels)
    pyr_rv = build_pyramid(rval, levels)

    gray0 = pyr_r[0].mean(axis=2) if pyr_r[0].ndim == 3 else pyr_r[0]
    lo, hi = np.percentile(gray0, (1.0, 99.0))
    conf_scale = config.conf_scale * max(float(hi - lo), 1e-6)

    aligned = None
    residual = None      # total offset minus flow at the previous (coarser) scale
    total_flow = None    # refined center-tap flow at the previous scale
    for s in range(levels - 1, -1, -1):
        n_s, r_s = pyr_n[s], pyr_r[s]
        flow_s = flow_pyramid.levels[s].data
        if residual is None:
            base_flow = flow_s
        else:
            base_flow = flow_s + 2.0 * upsample2(residual)
        off = flow_to_offsets(base_flow)
        if config.enable_refine:
            warped = warp_backward(n_s, base_flow)
            wval = warp_backward(pyr_nv[s], base_flow) > 0.5
            off = refine_offsets(
                warped, r_s, off, config.search_radius, block=config.block_size,
                valid_ref=pyr_rv[s] > 0.5, valid_neighbor=wval,
                confidence_scale=conf_scale, conf_floor=config.conf_floor,
                min_valid_fraction=config.min_valid_fraction)
        fine = deformable_sample(n_s, off, apply_modulation=False)
        if aligned is None:
            aligned = fine
        else:
            coarse = warp_backward(n_s, 2.0 * upsample2(total_flow))
            aligned = 0.5 * (fine + coarse)
        total_flow = off.data[:, :, CENTER_TAP, :]
        residual = total_flow - flow_s

    confidence = np.ones(target, dtype=np.float32)
    if config.enable_refine:
        # cascading pass: refine the already-aligned finest scale without flow
        zero = OffsetField(
            np.broadcast_to(KERNEL_TAPS[None, None], target + (9, 2)).copy(),
            np.ones(target + (9,), dtype=np.float32))
        wval = warp_backward(pyr_nv[0], total_flow) > 0.5
        off0 = refine_offsets(
            aligned, pyr_r[0], zero, config.search_radius, block=config.block_size,
            valid_ref=pyr_rv[0] > 0.5, valid_neighbor=wval,
            confidence_scale=conf_scale, conf_floor=config.conf_floor,
            min_valid_fraction=config.min_valid_fraction)
        aligned = deformable_sample(aligned, off0, apply_modulation=False)
        confidence = off0.modulation[:, :, CENTER_TAP]
        total_flow = total_flow + off0.data[:, :, CENTER_TAP, :]

    aligned = aligned[:h0, :w0]
    confidence = np.clip(confidence[:h0, :w0], 0.0, 1.0)
    if return_debug:
        return aligned, confidence, {"total_flow": total_flow[:h0, :w0]}
    return aligned, confidence


def _pad_to_shape(img: np.ndarray, target: tuple[int, int]) -> np.ndarray:
    h, w = img.shape[:2]
    th, tw = target
    if (h, w) == (th, tw):
        return img
    if th < h or tw < w:
        raise ValueError("flow pyramid smaller than the image")
    pads = [(0, th - h), (0, tw - w)] + [(0, 0)] * (img.ndim - 2)
    return np.pad(img, pads, mode="symmetric")
