"""Quality and loss metrics.

PSNR_avg is computed from the mean per-frame MSE rather than by averaging
per-frame PSNR values; with channel losses the two differ substantially.
SSIM is luma only, on non-overlapping 8x8 windows by default, with sample
(N-1) variances and covariance and the usual stabilizers
``C1 = (0.01 d)^2``, ``C2 = (0.03 d)^2``. Partial windows at the right and
bottom edges are ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .receiver import DeliveryRecord, DeliveryStatus
from .trace import Description, Packet

PEAK_8BIT = 255.0
PSNR_CAP_DB = 100.0
SSIM_WINDOW = 8


@dataclass
class MetricsReport:
    per_frame_psnr: list[float] | None
    psnr_avg: float | None
    sigma_mse: float | None
    ssim_mean: float | None
    lost_packets: dict[str, int]
    transmitted_packets: int  # video packets handed to the MAC
    queue_fill_series: list = field(default_factory=list)


def _as_luma(frame) -> np.ndarray:
    arr = np.asarray(frame, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("a raw frame must be a 2-D array of luma samples")
    return arr


def _check_pair(reference, test) -> tuple[np.ndarray, np.ndarray]:
    a, b = _as_luma(reference), _as_luma(test)
    if a.shape != b.shape:
        raise ValueError(f"frame dimensions differ: {a.shape} vs {b.shape}")
    return a, b


def frame_mse(reference, test) -> float:
    a, b = _check_pair(reference, test)
    return float(np.mean((a - b) ** 2))


def frame_psnr(mse: float, peak: float = PEAK_8BIT, cap: float = PSNR_CAP_DB) -> float:
    if mse < 0:
        raise ValueError("mse must be non-negative")
    if mse == 0:
        return cap
    return 10.0 * math.log10(peak * peak / mse)


def average_psnr(mse_series: Sequence[float], peak: float = PEAK_8BIT, cap: float = PSNR_CAP_DB) -> float:
    if len(mse_series) == 0:
        raise ValueError("average_psnr needs at least one frame")
    return frame_psnr(math.fsum(mse_series) / len(mse_series), peak, cap)


def sigma_mse(mse_series: Sequence[float]) -> float:
    """Sample standard deviation (K-1 denominator) of per-frame MSE."""
    k = len(mse_series)
    if k < 2:
        raise ValueError("sigma_mse needs at least two frames")
    mean = math.fsum(mse_series) / k
    return math.sqrt(math.fsum((x - mean) ** 2 for x in mse_series) / (k - 1))


def frame_ssim(reference, test, window: int = SSIM_WINDOW, peak: float = PEAK_8BIT, step: int | None = None) -> float:
    """Mean SSIM over ``window`` x ``window`` blocks placed every ``step`` pixels.

    ``step`` defaults to ``window`` (non-overlapping tiles); ``step=1`` gives
    the fully sliding variant.
    """
    a, b = _check_pair(reference, test)
    rows, cols = a.shape
    if window < 2 or window > min(rows, cols):
        raise ValueError(f"window {window} does not fit a {rows}x{cols} frame")
    step = step or window
    c1 = (0.01 * peak) ** 2
    c2 = (0.03 * peak) ** 2

    wa = np.lib.stride_tricks.sliding_window_view(a, (window, window))[::step, ::step]
    wb = np.lib.stride_tricks.sliding_window_view(b, (window, window))[::step, ::step]
    n = window * window
    mu_a = wa.mean(axis=(-2, -1))
    mu_b = wb.mean(axis=(-2, -1))
    da = wa - mu_a[..., None, None]
    db = wb - mu_b[..., None, None]
    var_a = (da * da).sum(axis=(-2, -1)) / (n - 1)
    var_b = (db * db).sum(axis=(-2, -1)) / (n - 1)
    cov = (da * db).sum(axis=(-2, -1)) / (n - 1)
    ssim = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / ((mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2))
    return float(ssim.mean())


def loss_accounting(records: Iterable[DeliveryRecord], packets: Sequence[Packet]) -> dict[str, int]:
    by_id = {p.packet_id: p for p in packets if p.is_video}
    lost = {Description.D1.value: 0, Description.D2.value: 0}
    for rec in records:
        packet = by_id.get(rec.packet_id)
        if packet is not None and rec.status is not DeliveryStatus.DELIVERED:
            lost[packet.description.value] += 1
    lost["total"] = lost["D1"] + lost["D2"]
    return lost


def read_raw_frames(path: str | Path, width: int, height: int, layout: str = "y") -> np.ndarray:
    """Load planar 8-bit frames as a ``(frames, height, width)`` luma array.

    ``layout`` is ``"y"`` for luma-only files or ``"yuv420"`` for I420 files,
    whose chroma planes are skipped.
    """
    if width < 1 or height < 1:
        raise ValueError("width and height must be positive")
    luma = width * height
    frame_bytes = {"y": luma, "yuv420": luma + 2 * ((width + 1) // 2) * ((height + 1) // 2)}.get(layout)
    if frame_bytes is None:
        raise ValueError(f"unknown raw layout {layout!r}")
    data = np.fromfile(path, dtype=np.uint8)
    if data.size == 0 or data.size % frame_bytes:
        raise ValueError(f"{path}: size {data.size} is not a multiple of the {frame_bytes}-byte frame")
    frames = data.reshape(-1, frame_bytes)[:, :luma]
    return frames.reshape(-1, height, width)


def score_raw(reference: np.ndarray, test: np.ndarray, window: int = SSIM_WINDOW) -> dict:
    """Per-frame PSNR/SSIM plus sequence summaries for two decoded sequences."""
    if reference.shape != test.shape:
        raise ValueError(f"sequence shapes differ: {reference.shape} vs {test.shape}")
    mse = [frame_mse(r, t) for r, t in zip(reference, test)]
    ssim = [frame_ssim(r, t, window) for r, t in zip(reference, test)]
    return {
        "mse": mse,
        "psnr": [frame_psnr(m) for m in mse],
        "ssim": ssim,
        "psnr_avg": average_psnr(mse),
        "sigma_mse": sigma_mse(mse) if len(mse) > 1 else None,
        "ssim_mean": float(np.mean(ssim)),
    }
