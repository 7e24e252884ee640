"""Additive white Gaussian noise at an exact target SNR.

The scale factor acts on RMS amplitude, so the dB conversion is 10^(snr/20)
(equivalently 10^(snr/10) on power). The power reference is the RMS of the
full utterance, recorded in the spec so results are reproducible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .audio_io import rms

POWER_REFERENCES = ("full-utterance-rms",)


class SilentSignalError(ValueError):
    """Raised when the input signal has zero RMS, making SNR undefined."""


@dataclass(frozen=True)
class NoiseSpec:
    snr_db: float
    seed: int
    power_reference: str = "full-utterance-rms"

    def __post_init__(self):
        if not math.isfinite(self.snr_db):
            raise ValueError(f"snr_db must be finite, got {self.snr_db}")
        if self.power_reference not in POWER_REFERENCES:
            raise ValueError(f"unknown power reference {self.power_reference!r}")


def scaled_noise(spec: NoiseSpec, n_samples: int, signal_rms: float) -> np.ndarray:
    """The exact noise vector mix_noise adds: seeded standard Gaussian scaled
    so that 20*log10(signal_rms / rms(noise)) equals spec.snr_db."""
    rng = np.random.Generator(np.random.PCG64(spec.seed))
    raw = rng.standard_normal(n_samples)
    gain = signal_rms / (rms(raw) * 10.0 ** (spec.snr_db / 20.0))
    return gain * raw


def mix_noise(signal: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """Return signal plus seeded white Gaussian noise at the target SNR.

    Output stays floating point; no clipping is applied, so values may leave
    [-1, 1] at low SNR.
    """
    x = np.asarray(signal, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("mix_noise expects a mono 1-D signal")
    signal_rms = rms(x)
    if signal_rms == 0.0:
        raise SilentSignalError("silent-signal: zero-RMS input has no defined SNR")
    return x + scaled_noise(spec, x.size, signal_rms)


def measured_snr_db(signal: np.ndarray, noise: np.ndarray) -> float:
    """SNR actually achieved by an (input, added-noise) pair, in dB."""
    return 20.0 * math.log10(rms(signal) / rms(noise))
