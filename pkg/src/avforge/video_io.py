"""Thin OpenCV wrappers for lossless frame-accurate video files.

FFV1 in an AVI container is used throughout: it round-trips pixels exactly
and reports exact frame counts, both of which the synthesis verification
step depends on.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterable, Iterator

import cv2
import numpy as np

FOURCC = "FFV1"
VIDEO_EXT = ".avi"


class VideoIOError(Exception):
    """Raised when a video file cannot be opened, written, or decoded."""


def write_video(path: str | Path, frames: Iterable[np.ndarray], fps: float) -> int:
    """Write BGR uint8 frames losslessly; returns the number of frames written."""
    path = str(path)
    writer = None
    count = 0
    for frame in frames:
        if writer is None:
            h, w = frame.shape[:2]
            writer = cv2.VideoWriter(path, cv2.VideoWriter_fourcc(*FOURCC), fps, (w, h))
            if not writer.isOpened():
                raise VideoIOError(f"cannot open video writer for {path}")
        writer.write(frame)
        count += 1
    if writer is None:
        raise VideoIOError(f"no frames to write: {path}")
    writer.release()
    return count


def probe_video(path: str | Path) -> tuple[int, float, int, int]:
    """Return (frame_count, fps, width, height) for a decodable video."""
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise VideoIOError(f"cannot open video: {path}")
    try:
        n = int(cap.get(cv2.CAP_PROP_FRAME_COUNT))
        fps = float(cap.get(cv2.CAP_PROP_FPS))
        w = int(cap.get(cv2.CAP_PROP_FRAME_WIDTH))
        h = int(cap.get(cv2.CAP_PROP_FRAME_HEIGHT))
    finally:
        cap.release()
    return n, fps, w, h


def read_frames(path: str | Path, indices: Iterable[int] | None = None) -> Iterator[np.ndarray]:
    """Yield decoded BGR frames, either all of them or the given sorted indices."""
    cap = cv2.VideoCapture(str(path))
    if not cap.isOpened():
        raise VideoIOError(f"cannot open video: {path}")
    try:
        if indices is None:
            while True:
                ok, frame = cap.read()
                if not ok:
                    return
                yield frame
        else:
            for idx in indices:
                cap.set(cv2.CAP_PROP_POS_FRAMES, int(idx))
                ok, frame = cap.read()
                if not ok:
                    return
                yield frame
    finally:
        cap.release()


def cut_video(src: str | Path, dst: str | Path, start_s: float, end_s: float) -> int:
    """Re-encode the [start_s, end_s) span of a video; returns frames written."""
    n, fps, _, _ = probe_video(src)
    lo = min(max(int(round(start_s * fps)), 0), n)
    hi = min(max(int(round(end_s * fps)), lo), n)
    if hi == lo:
        raise VideoIOError(f"empty cut [{start_s}, {end_s}) of {src}")
    return write_video(dst, read_frames(src, range(lo, hi)), fps)
