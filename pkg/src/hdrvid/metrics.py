"""mu-law tonemapping, the tonemapped L1 loss, and PSNR in the mu-law domain.

HDR frames are judged after logarithmic compression T = log(1 + mu*h) /
log(1 + mu) with mu = 5000, computed on values normalized into [0, 1] by a
robust peak shared between prediction and ground truth (the ground truth's
99.9th percentile by default, so a few fireflies cannot shift the scale).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PSNR_CAP_DB = 99.0


@dataclass(frozen=True)
class TonemapParams:
    mu: float = 5000.0
    normalization: float = 1.0

    def __post_init__(self):
        if self.mu <= 0:
            raise ValueError("mu must be positive")
        if self.normalization <= 0:
            raise ValueError("normalization must be positive")

    @classmethod
    def from_reference(cls, reference: np.ndarray, mu: float = 5000.0,
                       percentile: float = 99.9) -> "TonemapParams":
        peak = float(np.percentile(np.asarray(reference, dtype=np.float64), percentile))
        return cls(mu=mu, normalization=max(peak, np.finfo(np.float64).tiny))


def mu_tonemap(h: np.ndarray, params: TonemapParams = TonemapParams()) -> np.ndarray:
    """T = log(1 + mu*h_norm) / log(1 + mu), h_norm clipped into [0, 1]."""
    h = np.asarray(h, dtype=np.float64)
    if h.min() < 0:
        raise ValueError("radiance must be non-negative")
    h_norm = np.clip(h / params.normalization, 0.0, 1.0)
    return np.log1p(params.mu * h_norm) / np.log1p(params.mu)


def clip_fraction(h: np.ndarray, params: TonemapParams) -> float:
    """Fraction of values above the normalization peak (clipped by mu_tonemap)."""
    h = np.asarray(h, dtype=np.float64)
    return float((h > params.normalization).mean())


def l1_tonemapped(pred: np.ndarray, gt: np.ndarray,
                  params: TonemapParams | None = None) -> float:
    """Mean absolute difference of the mu-law tonemapped images."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {gt.shape}")
    if params is None:
        params = TonemapParams.from_reference(gt)
    return float(np.abs(mu_tonemap(pred, params) - mu_tonemap(gt, params)).mean())


def psnr_mu(pred: np.ndarray, gt: np.ndarray,
            params: TonemapParams | None = None) -> float:
    """10*log10(1/MSE) on tonemapped images, capped at 99 dB."""
    pred = np.asarray(pred, dtype=np.float64)
    gt = np.asarray(gt, dtype=np.float64)
    if pred.shape != gt.shape:
        raise ValueError(f"shape mismatch {pred.shape} vs {gt.shape}")
    if params is None:
        params = TonemapParams.from_reference(gt)
    mse = float(np.mean((mu_tonemap(pred, params) - mu_tonemap(gt, params)) ** 2))
    if mse <= 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 10.0 * np.log10(1.0 / mse))


def dynamic_range_gain(ratio: float) -> float:
    """Dynamic range added by a long/short exposure ratio, in dB."""
    if ratio <= 1.0:
        raise ValueError("exposure ratio must exceed 1")
    return 20.0 * float(np.log10(ratio))


def evaluate_pair(pred: np.ndarray, gt: np.ndarray, mu: float = 5000.0) -> dict:
    """Machine-readable metric bundle for one prediction/ground-truth pair."""
    params = TonemapParams.from_reference(gt, mu=mu)
    return {
        "psnr_mu": psnr_mu(pred, gt, params),
        "l1_mu": l1_tonemapped(pred, gt, params),
        "clip_fraction": clip_fraction(pred, params),
        "params": {"mu": params.mu, "normalization": params.normalization},
    }
