"""Grid resampling primitives shared by the ISP and alignment code.

All functions accept (H, W) or (H, W, C) float arrays and keep dtype float32.
Out-of-range coordinates clamp to the nearest edge sample.
"""

from __future__ import annotations

import numpy as np


def bilinear_sample(img: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Sample `img` at fractional (ys, xs) with bilinear weights, clamp-to-edge.

    At exact integer coordinates the weights collapse to {1, 0} so the result
    is bit-identical to direct indexing.
    """
    h, w = img.shape[:2]
    y0f = np.floor(ys)
    x0f = np.floor(xs)
    fy = (ys - y0f).astype(np.float32)
    fx = (xs - x0f).astype(np.float32)
    y0 = y0f.astype(np.int64)
    x0 = x0f.astype(np.int64)
    y0c = np.clip(y0, 0, h - 1)
    y1c = np.clip(y0 + 1, 0, h - 1)
    x0c = np.clip(x0, 0, w - 1)
    x1c = np.clip(x0 + 1, 0, w - 1)
    if img.ndim == 3:
        fy = fy[..., None]
        fx = fx[..., None]
    v00 = img[y0c, x0c]
    v01 = img[y0c, x1c]
    v10 = img[y1c, x0c]
    v11 = img[y1c, x1c]
    top = v00 * (1.0 - fx) + v01 * fx
    bot = v10 * (1.0 - fx) + v11 * fx
    return (top * (1.0 - fy) + bot * fy).astype(np.float32)


def warp_backward(img: np.ndarray, flow: np.ndarray) -> np.ndarray:
    """Backward warp: out(p) = img(p + flow(p)), flow planes ordered (dx, dy)."""
    h, w = img.shape[:2]
    yy, xx = np.meshgrid(np.arange(h, dtype=np.float32),
                         np.arange(w, dtype=np.float32), indexing="ij")
    return bilinear_sample(img, yy + flow[..., 1], xx + flow[..., 0])


def box_downsample2(img: np.ndarray) -> np.ndarray:
    """Half-resolution 2x2 box mean; odd dimensions are edge-padded first."""
    h, w = img.shape[:2]
    if h % 2 or w % 2:
        pads = [(0, h % 2), (0, w % 2)] + [(0, 0)] * (img.ndim - 2)
        img = np.pad(img, pads, mode="edge")
        h, w = img.shape[:2]
    if img.ndim == 2:
        out = img.reshape(h // 2, 2, w // 2, 2).mean(axis=(1, 3))
    else:
        out = img.reshape(h // 2, 2, w // 2, 2, img.shape[2]).mean(axis=(1, 3))
    return out.astype(np.float32)


def upsample2(img: np.ndarray) -> np.ndarray:
    """2x bilinear upsample with the half-pixel-center convention."""
    h, w = img.shape[:2]
    ys = (np.arange(2 * h, dtype=np.float32) + 0.5) / 2.0 - 0.5
    xs = (np.arange(2 * w, dtype=np.float32) + 0.5) / 2.0 - 0.5
    yy, xx = np.meshgrid(ys, xs, indexing="ij")
    return bilinear_sample(img, yy, xx)


def pad_to_multiple(img: np.ndarray, multiple: int) -> tuple[np.ndarray, tuple[int, int]]:
    """Reflect-pad bottom/right so both spatial dims divide `multiple`.

    Returns the padded array and the original (h, w) for cropping back.
    Symmetric reflection is used so the pad may equal the axis length.
    """
    h, w = img.shape[:2]
    ph = (-h) % multiple
    pw = (-w) % multiple
    if ph or pw:
        pads = [(0, ph), (0, pw)] + [(0, 0)] * (img.ndim - 2)
        img = np.pad(img, pads, mode="symmetric")
    return img, (h, w)
