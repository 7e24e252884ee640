from __future__ import annotations

import sys
from pathlib import Path

import cv2
import numpy as np
import pytest

from avforge.audio_io import write_wav
from avforge.facepool import FaceDetection
from avforge.manifest import UtteranceRecord, write_manifest

sys.path.insert(0, str(Path(__file__).parent))  # make tests/oracles.py importable


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_tone(duration_s: float, sample_rate: int = 16000, freq: float = 440.0, amp: float = 0.5) -> np.ndarray:
    t = np.arange(int(round(duration_s * sample_rate))) / sample_rate
    return amp * np.sin(2 * np.pi * freq * t)


@pytest.fixture
def tone_wav(tmp_path):
    def _make(name: str, duration_s: float, sample_rate: int = 16000, freq: float = 440.0) -> Path:
        path = tmp_path / name
        write_wav(path, make_tone(duration_s, sample_rate, freq), sample_rate)
        return path

    return _make


@pytest.fixture
def face_image(tmp_path):
    def _make(name: str = "face.png", size: int = 128, value: int = 180) -> Path:
        img = np.full((size, size, 3), value, dtype=np.uint8)
        img[size // 2 :, :, 0] = 90  # break symmetry so codecs cannot cheat
        path = tmp_path / name
        cv2.imwrite(str(path), img)
        return path

    return _make


@pytest.fixture
def small_corpus(tmp_path):
    """N tone utterances with wav files and a manifest on disk."""

    def _make(n: int = 5, base_duration_s: float = 0.8, sample_rate: int = 16000):
        corpus_dir = tmp_path / "corpus"
        corpus_dir.mkdir(exist_ok=True)
        records = []
        for i in range(n):
            duration = base_duration_s + 0.13 * i
            wav = corpus_dir / f"utt{i:03d}.wav"
            write_wav(wav, make_tone(duration, sample_rate, 300.0 + 20 * i), sample_rate)
            n_samples = int(round(duration * sample_rate))
            records.append(
                UtteranceRecord(
                    id=f"utt{i:03d}",
                    audio_path=str(wav),
                    sample_rate=sample_rate,
                    audio_samples=n_samples,
                    transcript=f"frase de prova número {i}",
                    language="ca",
                )
            )
        manifest_path = corpus_dir / "manifest.jsonl"
        write_manifest(manifest_path, records)
        return records, manifest_path

    return _make


class StubDetector:
    """In-process detector returning canned detections per image, or from a
    callable for frame-content-dependent behavior."""

    def __init__(self, result=None, by_path=None, fn=None):
        self.result = result if result is not None else []
        self.by_path = by_path or {}
        self.fn = fn
        self.calls = 0

    def detect(self, image):
        self.calls += 1
        if self.fn is not None:
            return self.fn(image)
        if not isinstance(image, np.ndarray):
            key = Path(image).name
            if key in self.by_path:
                return self.by_path[key]
        return self.result


def one_face(mouth_conf: float = 0.9, side: float = 120.0) -> list[FaceDetection]:
    return [FaceDetection(bbox=(10.0, 10.0, side, side), mouth_conf=mouth_conf)]


@pytest.fixture
def stub_scripts(tmp_path):
    """Write executable python scripts realizing the subprocess adapter
    contracts, for tests that must exercise real process boundaries."""

    def _write(name: str, body: str) -> str:
        path = tmp_path / name
        path.write_text("#!/usr/bin/env python3\n" + body, encoding="utf-8")
        path.chmod(0o755)
        return f"{sys.executable} {path}"

    return _write
