"""WAV reading/writing via the stdlib wave module, plus basic signal helpers.

Only integer PCM WAV is handled (16- and 32-bit, mono or multichannel).
Samples are exchanged as float64 arrays scaled to [-1, 1].
"""

from __future__ import annotations

import wave
from pathlib import Path

import numpy as np


class AudioFormatError(Exception):
    """Raised when a file is not a readable PCM WAV."""


def probe_wav(path: str | Path) -> tuple[int, int]:
    """Return (n_samples, sample_rate) from the WAV header without decoding."""
    try:
        with wave.open(str(path), "rb") as wf:
            return wf.getnframes(), wf.getframerate()
    except (wave.Error, EOFError, OSError) as exc:
        raise AudioFormatError(f"not a readable WAV file: {path}: {exc}") from exc


def read_wav(path: str | Path, mono: bool = True) -> tuple[np.ndarray, int]:
    """Decode a PCM WAV file to float64 samples in [-1, 1]."""
    try:
        with wave.open(str(path), "rb") as wf:
            n_channels = wf.getnchannels()
            width = wf.getsampwidth()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError, OSError) as exc:
        raise AudioFormatError(f"not a readable WAV file: {path}: {exc}") from exc
    if width == 2:
        data = np.frombuffer(raw, dtype="<i2").astype(np.float64) / 32768.0
    elif width == 4:
        data = np.frombuffer(raw, dtype="<i4").astype(np.float64) / 2147483648.0
    else:
        raise AudioFormatError(f"unsupported sample width {width * 8} bit: {path}")
    if n_channels > 1:
        data = data.reshape(-1, n_channels)
        if mono:
            data = data.mean(axis=1)
    return data, rate


def write_wav(path: str | Path, samples: np.ndarray, sample_rate: int) -> None:
    """Write float samples in [-1, 1] as 16-bit PCM WAV (values are clipped)."""
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 1:
        raise ValueError("write_wav expects a mono 1-D array")
    pcm = np.clip(np.round(samples * 32767.0), -32768, 32767).astype("<i2")
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(int(sample_rate))
        wf.writeframes(pcm.tobytes())


def cut_wav(src: str | Path, dst: str | Path, start_s: float, end_s: float) -> int:
    """Copy the [start_s, end_s) span of a WAV file; returns samples written.

    Sample-exact: boundaries are rounded to the nearest sample index, so the
    cut duration differs from (end_s - start_s) by at most one sample.
    """
    data, rate = read_wav(src, mono=False)
    n = data.shape[0]
    lo = min(max(int(round(start_s * rate)), 0), n)
    hi = min(max(int(round(end_s * rate)), lo), n)
    clip = data[lo:hi]
    if clip.ndim > 1:
        clip = clip.mean(axis=1)
    write_wav(dst, clip, rate)
    return hi - lo


def rms(x: np.ndarray) -> float:
    """Root-mean-square amplitude of a sample vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.size == 0:
        return 0.0
    return float(np.sqrt(np.mean(np.square(x))))
