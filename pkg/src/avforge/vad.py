"""Energy-based voice activity detection for segment extraction.

Frame energies are computed on the peak-normalized signal, so the output is
invariant to any positive gain applied to the input. The activity threshold
adapts to the recording: a noise-floor percentile plus a margin, capped just
below the loudest frame so fully-voiced recordings still count as active.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .audio_io import read_wav

_EPS = 1e-10  # -200 dB floor for digital silence


@dataclass(frozen=True)
class VadParams:
    window_s: float = 0.025
    hop_s: float = 0.010
    noise_percentile: float = 10.0
    margin_db: float = 12.0
    peak_guard_db: float = 20.0
    min_dur_s: float = 1.0
    max_dur_s: float = 15.0
    merge_gap_s: float = 0.3


DEFAULT_VAD = VadParams()


def frame_energies_db(samples: np.ndarray, sample_rate: int, params: VadParams) -> np.ndarray:
    """Per-frame RMS energy in dB relative to the utterance peak."""
    x = np.asarray(samples, dtype=np.float64)
    peak = float(np.max(np.abs(x))) if x.size else 0.0
    if peak == 0.0:
        return np.empty(0)
    x = x / peak
    win = max(int(round(params.window_s * sample_rate)), 1)
    hop = max(int(round(params.hop_s * sample_rate)), 1)
    n_frames = (x.size - win) // hop + 1
    if n_frames <= 0:
        return np.empty(0)
    idx = np.arange(win)[None, :] + hop * np.arange(n_frames)[:, None]
    frames = x[idx]
    rms = np.sqrt(np.mean(np.square(frames), axis=1))
    return 20.0 * np.log10(rms + _EPS)


def extract_segments(
    samples: np.ndarray,
    sample_rate: int,
    params: VadParams = DEFAULT_VAD,
) -> list[tuple[float, float]]:
    """Speech segments as (start_s, end_s), non-overlapping and ordered.

    Regions of active frames are merged across gaps shorter than merge_gap_s,
    regions shorter than min_dur_s are dropped, and longer ones are split
    evenly so every returned segment fits within [min_dur_s, max_dur_s].
    """
    e_db = frame_energies_db(samples, sample_rate, params)
    if e_db.size == 0:
        return []
    noise_floor = float(np.percentile(e_db, params.noise_percentile))
    threshold = min(noise_floor + params.margin_db, float(np.max(e_db)) - params.peak_guard_db)
    active = e_db > threshold
    if not np.any(active):
        return []

    hop_s = max(int(round(params.hop_s * sample_rate)), 1) / sample_rate
    win_s = max(int(round(params.window_s * sample_rate)), 1) / sample_rate
    duration_s = len(samples) / sample_rate

    # frame runs -> time regions
    regions: list[list[float]] = []
    start = None
    for i, flag in enumerate(active):
        if flag and start is None:
            start = i
        elif not flag and start is not None:
            regions.append([start * hop_s, (i - 1) * hop_s + win_s])
            start = None
    if start is not None:
        regions.append([start * hop_s, (active.size - 1) * hop_s + win_s])

    merged: list[list[float]] = []
    for region in regions:
        if merged and region[0] - merged[-1][1] < params.merge_gap_s:
            merged[-1][1] = region[1]
        else:
            merged.append(region)

    out: list[tuple[float, float]] = []
    for lo, hi in merged:
        hi = min(hi, duration_s)
        if hi - lo < params.min_dur_s:
            continue
        n_chunks = max(int(math.ceil((hi - lo) / params.max_dur_s)), 1)
        width = (hi - lo) / n_chunks
        for k in range(n_chunks):
            out.append((lo + k * width, lo + (k + 1) * width))
    return out


def extract_segments_file(path: str | Path, params: VadParams = DEFAULT_VAD) -> list[tuple[float, float]]:
    samples, rate = read_wav(path)
    return extract_segments(samples, rate, params)
