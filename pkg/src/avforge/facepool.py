"""Face-pool construction: filter still images down to usable synthesis faces.

The detector itself is external. An adapter reports zero or more faces per
image (bounding box plus, when available, a mouth confidence or mouth box);
this module turns adapter output into an accept/reject verdict per image and
assembles the registry the synthesis stage samples from.
"""

from __future__ import annotations

import json
import logging
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import cv2
import numpy as np

log = logging.getLogger(__name__)

IMAGE_EXTS = {".png", ".jpg", ".jpeg", ".bmp", ".webp"}

REJECT_REASONS = ("no-face", "multiple-faces", "mouth-occluded", "too-small", "decode-error")


class DetectorError(Exception):
    """Raised when a detector adapter itself fails (not when it finds no face)."""


@dataclass(frozen=True)
class FaceDetection:
    """One detector hit: pixel bbox as (x, y, w, h), optional mouth evidence."""

    bbox: tuple[float, float, float, float]
    mouth_conf: float | None = None
    mouth_bbox: tuple[float, float, float, float] | None = None


class FaceDetectorAdapter(Protocol):
    def detect(self, image: str | Path | np.ndarray) -> list[FaceDetection]: ...


class SubprocessDetector:
    """External detector contract: `CMD IMAGE_PATH` emits one JSON document
    {"faces": [{"bbox": [x, y, w, h], "mouth_conf": f, "mouth_bbox": [...]}]}
    on standard output."""

    def __init__(self, cmd: Sequence[str], timeout_s: float = 120.0):
        self.cmd = list(cmd)
        self.timeout_s = timeout_s

    def detect(self, image: str | Path | np.ndarray) -> list[FaceDetection]:
        if isinstance(image, np.ndarray):
            with tempfile.NamedTemporaryFile(suffix=".png", delete=False) as tmp:
                cv2.imwrite(tmp.name, image)
                try:
                    return self._run(tmp.name)
                finally:
                    Path(tmp.name).unlink(missing_ok=True)
        return self._run(str(image))

    def _run(self, path: str) -> list[FaceDetection]:
        try:
            proc = subprocess.run(
                self.cmd + [path], capture_output=True, timeout=self.timeout_s, text=True
            )
        except subprocess.TimeoutExpired as exc:
            raise DetectorError(f"detector timed out on {path}") from exc
        if proc.returncode != 0:
            raise DetectorError(f"detector exited {proc.returncode} on {path}: {proc.stderr.strip()}")
        try:
            doc = json.loads(proc.stdout)
            faces = doc["faces"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DetectorError(f"detector emitted invalid JSON on {path}") from exc
        out = []
        for face in faces:
            out.append(
                FaceDetection(
                    bbox=tuple(float(v) for v in face["bbox"]),
                    mouth_conf=(float(face["mouth_conf"]) if face.get("mouth_conf") is not None else None),
                    mouth_bbox=(tuple(float(v) for v in face["mouth_bbox"]) if face.get("mouth_bbox") else None),
                )
            )
        return out


@dataclass(frozen=True)
class PoolPolicy:
    """Acceptance rule parameters; the scoring formula is configurable policy,
    not a claim about any particular detector."""

    threshold: float = 0.5
    min_face_side: int = 96
    # mouth-to-face area ratio mapped linearly onto [0, 1] over this range,
    # used only when the detector reports a mouth box but no confidence
    ramp_lo: float = 0.01
    ramp_hi: float = 0.08


DEFAULT_POLICY = PoolPolicy()


@dataclass
class FaceAsset:
    """Scan result for one image: detection outcome and verdict."""

    image_path: str
    width: int
    height: int
    face_bbox: tuple[float, float, float, float] | None
    mouth_score: float
    verdict: str
    reject_reason: str | None = None

    def to_json(self) -> str:
        out: dict[str, object] = {
            "image_path": self.image_path,
            "width": self.width,
            "height": self.height,
            "face_bbox": list(self.face_bbox) if self.face_bbox is not None else None,
            "mouth_score": self.mouth_score,
            "verdict": self.verdict,
        }
        if self.reject_reason is not None:
            out["reject_reason"] = self.reject_reason
        return json.dumps(out, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "FaceAsset":
        raw = json.loads(line)
        bbox = raw.get("face_bbox")
        return cls(
            image_path=raw["image_path"],
            width=int(raw["width"]),
            height=int(raw["height"]),
            face_bbox=tuple(bbox) if bbox is not None else None,
            mouth_score=float(raw["mouth_score"]),
            verdict=raw["verdict"],
            reject_reason=raw.get("reject_reason"),
        )


def mouth_score_of(det: FaceDetection, policy: PoolPolicy = DEFAULT_POLICY) -> float:
    """Mouth visibility in [0, 1]: the detector's confidence when reported,
    else the mouth/face area ratio through a fixed linear ramp, else 0."""
    if det.mouth_conf is not None:
        return min(max(float(det.mouth_conf), 0.0), 1.0)
    if det.mouth_bbox is not None:
        fx, fy, fw, fh = det.bbox
        mx, my, mw, mh = det.mouth_bbox
        face_area = max(fw * fh, 1e-9)
        ratio = (mw * mh) / face_area
        return min(max((ratio - policy.ramp_lo) / (policy.ramp_hi - policy.ramp_lo), 0.0), 1.0)
    return 0.0


def classify(
    image_path: str,
    width: int,
    height: int,
    detections: Sequence[FaceDetection] | None,
    policy: PoolPolicy = DEFAULT_POLICY,
) -> FaceAsset:
    """Apply the acceptance rule table. detections=None marks a decode failure.

    Accepted iff exactly one face was found, its box meets the minimum side
    length, and the mouth score reaches the threshold; otherwise rejected
    with the first matching reason.
    """
    if detections is None:
        return FaceAsset(image_path, width, height, None, 0.0, "rejected", "decode-error")
    if len(detections) == 0:
        return FaceAsset(image_path, width, height, None, 0.0, "rejected", "no-face")
    if len(detections) > 1:
        return FaceAsset(image_path, width, height, None, 0.0, "rejected", "multiple-faces")
    det = detections[0]
    score = mouth_score_of(det, policy)
    _, _, fw, fh = det.bbox
    if min(fw, fh) < policy.min_face_side:
        return FaceAsset(image_path, width, height, det.bbox, score, "rejected", "too-small")
    if score < policy.threshold:
        return FaceAsset(image_path, width, height, det.bbox, score, "rejected", "mouth-occluded")
    return FaceAsset(image_path, width, height, det.bbox, score, "accepted", None)


def detect_and_score(
    image_path: str | Path,
    detector: FaceDetectorAdapter,
    policy: PoolPolicy = DEFAULT_POLICY,
) -> FaceAsset:
    """Decode, detect, and classify one image. Undecodable images become a
    decode-error rejection, never an exception."""
    img = cv2.imread(str(image_path))
    if img is None:
        return classify(str(image_path), 0, 0, None, policy)
    height, width = img.shape[:2]
    detections = detector.detect(str(image_path))
    return classify(str(image_path), width, height, detections, policy)


def build_pool(
    image_dir: str | Path,
    detector: FaceDetectorAdapter,
    policy: PoolPolicy = DEFAULT_POLICY,
    workers: int = 1,
) -> list[FaceAsset]:
    """Score every image under a directory, in sorted path order.

    Per-image scoring may run in parallel; results are assembled in the
    scan order so the registry is identical for any worker count.
    """
    image_dir = Path(image_dir)
    if not image_dir.is_dir():
        raise FileNotFoundError(f"image directory not readable: {image_dir}")
    paths = sorted(p for p in image_dir.rglob("*") if p.suffix.lower() in IMAGE_EXTS)
    if not paths:
        log.warning("no images found under %s; registry will be empty", image_dir)
        return []
    if workers <= 1:
        return [detect_and_score(p, detector, policy) for p in paths]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(lambda p: detect_and_score(p, detector, policy), paths))


def write_registry(path: str | Path, assets: Iterable[FaceAsset]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for asset in assets:
            fh.write(asset.to_json())
            fh.write("\n")
            n += 1
    return n


def read_registry(path: str | Path) -> list[FaceAsset]:
    assets = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                assets.append(FaceAsset.from_json(line))
    return assets


def accepted_images(assets: Iterable[FaceAsset]) -> list[str]:
    """The sampling population for synthesis, in registry order."""
    return [a.image_path for a in assets if a.verdict == "accepted"]
