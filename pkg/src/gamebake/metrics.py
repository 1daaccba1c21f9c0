"""Image and depth quality metrics."""

from __future__ import annotations

import numpy as np


def psnr(img: np.ndarray, ref: np.ndarray, peak: float = 1.0) -> float:
    """Peak signal-to-noise ratio in dB; +inf for identical inputs."""
    mse = float(np.mean((np.asarray(img, np.float64) - np.asarray(ref, np.float64)) ** 2))
    if mse == 0.0:
        return float("inf")
    return 10.0 * np.log10(peak * peak / mse)


def depth_metrics(pred: np.ndarray, ref: np.ndarray, valid=None, outlier_thresh: float = 1.5):
    """MAE / RMSE / outlier-% over valid pixels (ref > 0 by default)."""
    pred = np.asarray(pred, np.float64)
    ref = np.asarray(ref, np.float64)
    if valid is None:
        valid = ref > 0
    err = pred[valid] - ref[valid]
    if err.size == 0:
        return {"depth_mae": 0.0, "depth_rmse": 0.0, "outlier_pct": 0.0}
    return {
        "depth_mae": float(np.abs(err).mean()),
        "depth_rmse": float(np.sqrt((err**2).mean())),
        "outlier_pct": float((np.abs(err) > outlier_thresh).mean() * 100.0),
    }
