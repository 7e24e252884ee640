"""Annotation pipeline: mouth-visibility filtering, pseudo-labeling, the
reviewable task store, and benchmark export.

Raw media is referenced as a WAV file, or as a video file with a sibling WAV
of the same stem (this toolkit does not demux container audio). The task
store is a JSON-lines journal plus snapshot: human-review volume is small,
and replaying the journal reproduces the state exactly after a crash.
"""

from __future__ import annotations

import json
import logging
import os
import subprocess
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Protocol, Sequence

import cv2

from . import facepool
from .audio_io import cut_wav, probe_wav
from .manifest import UtteranceRecord
from .video_io import VIDEO_EXT, VideoIOError, cut_video, probe_video

log = logging.getLogger(__name__)

TASK_STATUSES = ("pending", "accepted", "rejected", "skipped")
VERDICTS = {"accept": "accepted", "reject": "rejected", "skip": "skipped"}

SNAPSHOT_FILENAME = "tasks.snapshot.jsonl"
JOURNAL_FILENAME = "tasks.journal.jsonl"


class TaskStoreError(Exception):
    pass


class StaleRevisionError(TaskStoreError):
    """Optimistic-concurrency conflict: the submitted revision is not current."""


@dataclass(frozen=True)
class ReviewTask:
    """One extracted segment on its way through human verification."""

    id: str
    source_media: str
    start_s: float
    end_s: float
    pseudo_transcript: str
    final_transcript: str | None = None
    status: str = "pending"
    revision: int = 0
    mouth_ok: bool = True
    reviewer: str | None = None
    updated_at: float = 0.0
    asr_failed: bool = False

    def validate(self) -> None:
        if not (0 <= self.start_s < self.end_s):
            raise TaskStoreError(f"{self.id}: boundaries must satisfy 0 <= start < end")
        if self.status not in TASK_STATUSES:
            raise TaskStoreError(f"{self.id}: unknown status {self.status!r}")
        if self.status == "accepted" and not (self.final_transcript or "").strip():
            raise TaskStoreError(f"{self.id}: accepted task needs a non-empty final transcript")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "source_media": self.source_media,
            "start_s": self.start_s,
            "end_s": self.end_s,
            "pseudo_transcript": self.pseudo_transcript,
            "final_transcript": self.final_transcript,
            "status": self.status,
            "revision": self.revision,
            "mouth_ok": self.mouth_ok,
            "reviewer": self.reviewer,
            "updated_at": self.updated_at,
            "asr_failed": self.asr_failed,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "ReviewTask":
        return cls(
            id=raw["id"],
            source_media=raw["source_media"],
            start_s=float(raw["start_s"]),
            end_s=float(raw["end_s"]),
            pseudo_transcript=raw.get("pseudo_transcript", ""),
            final_transcript=raw.get("final_transcript"),
            status=raw.get("status", "pending"),
            revision=int(raw.get("revision", 0)),
            mouth_ok=bool(raw.get("mouth_ok", True)),
            reviewer=raw.get("reviewer"),
            updated_at=float(raw.get("updated_at", 0.0)),
            asr_failed=bool(raw.get("asr_failed", False)),
        )


def resolve_audio(media: str | Path) -> Path:
    """The WAV carrying the media's audio track: the file itself or a sibling."""
    media = Path(media)
    if media.suffix.lower() == ".wav":
        return media
    sibling = media.with_suffix(".wav")
    if sibling.is_file():
        return sibling
    raise FileNotFoundError(f"no audio track for {media}: expected WAV at {sibling}")


def media_duration_s(media: str | Path) -> float:
    audio = resolve_audio(media)
    n, rate = probe_wav(audio)
    return n / rate


def has_video_track(media: str | Path) -> bool:
    media = Path(media)
    if media.suffix.lower() == ".wav":
        return False
    try:
        n, _, _, _ = probe_video(media)
    except VideoIOError:
        return False
    return n > 0


def filter_mouth_visible(
    media: str | Path,
    segments: Sequence[tuple[float, float]],
    detector: facepool.FaceDetectorAdapter,
    frame_stride: int = 5,
    ratio_threshold: float = 0.5,
    policy: facepool.PoolPolicy = facepool.DEFAULT_POLICY,
) -> list[tuple[float, float, bool]]:
    """Annotate segments with mouth visibility.

    A segment passes when at least ratio_threshold of its sampled frames
    satisfy the face-pool acceptance rule. Media without a video track gets
    mouth_ok=False everywhere, with a warning rather than an error.
    """
    media = Path(media)
    if not has_video_track(media):
        log.warning("%s has no video track; marking all segments mouth_ok=false", media)
        return [(start, end, False) for start, end in segments]
    n_frames, fps, width, height = probe_video(media)
    cap = cv2.VideoCapture(str(media))
    try:
        out = []
        for start, end in segments:
            lo = max(int(round(start * fps)), 0)
            hi = min(int(round(end * fps)), n_frames)
            indices = list(range(lo, hi, max(frame_stride, 1)))
            passed = sampled = 0
            for idx in indices:
                cap.set(cv2.CAP_PROP_POS_FRAMES, idx)
                ok, frame = cap.read()
                if not ok:
                    continue
                sampled += 1
                detections = detector.detect(frame)
                asset = facepool.classify(f"{media}@{idx}", width, height, detections, policy)
                if asset.verdict == "accepted":
                    passed += 1
            mouth_ok = sampled > 0 and passed / sampled >= ratio_threshold
            out.append((start, end, mouth_ok))
        return out
    finally:
        cap.release()


class AsrAdapter(Protocol):
    def transcribe(self, wav_path: str) -> dict: ...


class AsrError(Exception):
    pass


class SubprocessAsr:
    """External pseudo-labeler contract: `CMD WAV_PATH` emits JSON
    {"text": ..., "segments": [{"start": s, "end": e, "text": t}, ...]}."""

    def __init__(self, cmd: Sequence[str], timeout_s: float = 300.0):
        self.cmd = list(cmd)
        self.timeout_s = timeout_s

    def transcribe(self, wav_path: str) -> dict:
        try:
            proc = subprocess.run(
                self.cmd + [wav_path], capture_output=True, timeout=self.timeout_s, text=True
            )
        except subprocess.TimeoutExpired as exc:
            raise AsrError(f"ASR timed out on {wav_path}") from exc
        if proc.returncode != 0:
            raise AsrError(f"ASR exited {proc.returncode}: {proc.stderr.strip()[:500]}")
        try:
            doc = json.loads(proc.stdout)
            if not isinstance(doc, dict) or "text" not in doc:
                raise ValueError("missing text field")
        except (json.JSONDecodeError, ValueError) as exc:
            raise AsrError(f"ASR emitted invalid JSON on {wav_path}") from exc
        return doc


def pseudo_label(
    media: str | Path,
    segments: Sequence[tuple[float, float, bool]],
    asr: AsrAdapter,
    clip_dir: str | Path | None = None,
) -> list[ReviewTask]:
    """Create one pending ReviewTask per mouth-visible segment.

    An ASR failure never drops a segment: the task is created with an empty
    pseudo transcript and flagged for the reviewer.
    """
    media = Path(media)
    audio = resolve_audio(media)
    clip_dir = Path(clip_dir) if clip_dir is not None else media.parent / ".pseudo_clips"
    clip_dir.mkdir(parents=True, exist_ok=True)
    now = time.time()
    tasks = []
    index = 0
    for start, end, mouth_ok in segments:
        if not mouth_ok:
            continue
        task_id = f"{media.stem}-{index:04d}"
        index += 1
        clip_path = clip_dir / f"{task_id}.wav"
        text = ""
        failed = False
        try:
            cut_wav(audio, clip_path, start, end)
            doc = asr.transcribe(str(clip_path))
            text = str(doc.get("text", ""))
        except (AsrError, OSError) as exc:
            failed = True
            log.warning("pseudo-label failed for %s [%0.2f, %0.2f]: %s", media, start, end, exc)
        tasks.append(
            ReviewTask(
                id=task_id,
                source_media=str(media),
                start_s=float(start),
                end_s=float(end),
                pseudo_transcript=text,
                mouth_ok=True,
                updated_at=now,
                asr_failed=failed,
            )
        )
    return tasks


class TaskStore:
    """Crash-consistent review task store: snapshot plus append-only journal.

    Every mutation is appended and fsynced before it is acknowledged; replay
    order reproduces the in-memory state exactly. A partial trailing line
    (crash during append) is ignored on load.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._tasks: dict[str, ReviewTask] = {}
        self._journal_fh = None
        # mutations are serialized: concurrent reviewers race on revisions,
        # never on the journal or the revision check itself
        self._write_lock = threading.Lock()
        self._load()

    @property
    def snapshot_path(self) -> Path:
        return self.root / SNAPSHOT_FILENAME

    @property
    def journal_path(self) -> Path:
        return self.root / JOURNAL_FILENAME

    def _load(self) -> None:
        for path in (self.snapshot_path, self.journal_path):
            if not path.exists():
                continue
            data = path.read_bytes()
            lines = data.split(b"\n")
            if data and not data.endswith(b"\n"):
                lines = lines[:-1]
            for line in lines:
                line = line.strip()
                if not line:
                    continue
                try:
                    task = ReviewTask.from_dict(json.loads(line))
                except (json.JSONDecodeError, KeyError):
                    continue
                self._tasks[task.id] = task

    def _append(self, task: ReviewTask) -> None:
        if self._journal_fh is None:
            self._journal_fh = self.journal_path.open("a", encoding="utf-8", newline="\n")
        self._journal_fh.write(json.dumps(task.to_dict(), ensure_ascii=False, separators=(",", ":")))
        self._journal_fh.write("\n")
        self._journal_fh.flush()
        os.fsync(self._journal_fh.fileno())

    def close(self) -> None:
        if self._journal_fh is not None:
            self._journal_fh.close()
            self._journal_fh = None

    def __len__(self) -> int:
        return len(self._tasks)

    def get(self, task_id: str) -> ReviewTask:
        if task_id not in self._tasks:
            raise KeyError(task_id)
        return self._tasks[task_id]

    def list(self, status: str | None = None, limit: int | None = None) -> list[ReviewTask]:
        tasks = sorted(self._tasks.values(), key=lambda t: t.id)
        if status is not None:
            tasks = [t for t in tasks if t.status == status]
        if limit is not None:
            tasks = tasks[: max(limit, 0)]
        return tasks

    def counts(self) -> dict[str, int]:
        out = {status: 0 for status in TASK_STATUSES}
        for task in self._tasks.values():
            out[task.status] += 1
        return out

    def add_tasks(self, tasks: Sequence[ReviewTask]) -> int:
        """Insert freshly created tasks; existing ids are left untouched."""
        added = 0
        with self._write_lock:
            for task in tasks:
                if task.id in self._tasks:
                    log.info("task %s already present, keeping stored state", task.id)
                    continue
                task.validate()
                self._tasks[task.id] = task
                self._append(task)
                added += 1
        return added

    def submit(
        self,
        task_id: str,
        revision: int,
        verdict: str,
        reviewer: str,
        final_transcript: str | None = None,
        start_s: float | None = None,
        end_s: float | None = None,
    ) -> ReviewTask:
        """Apply a review decision under optimistic concurrency.

        The caller's revision must match the stored one or nothing changes.
        Accepting without an explicit transcript adopts the pseudo transcript.
        """
        with self._write_lock:
            task = self.get(task_id)
            if revision != task.revision:
                raise StaleRevisionError(
                    f"{task_id}: submitted revision {revision}, current is {task.revision}"
                )
            if verdict not in VERDICTS:
                raise TaskStoreError(f"unknown verdict {verdict!r}, expected one of {sorted(VERDICTS)}")
            if not (reviewer or "").strip():
                raise TaskStoreError("a reviewer identity is required to change a task")
            status = VERDICTS[verdict]
            transcript = task.final_transcript
            if final_transcript is not None:
                transcript = final_transcript
            elif status == "accepted" and transcript is None:
                transcript = task.pseudo_transcript
            updated = replace(
                task,
                status=status,
                final_transcript=transcript,
                start_s=task.start_s if start_s is None else float(start_s),
                end_s=task.end_s if end_s is None else float(end_s),
                revision=task.revision + 1,
                reviewer=reviewer,
                updated_at=time.time(),
            )
            updated.validate()
            self._tasks[task_id] = updated
            self._append(updated)
            return updated

    def snapshot(self) -> None:
        """Compact the journal into the snapshot file."""
        with self._write_lock:
            tmp = self.snapshot_path.with_suffix(".tmp")
            with tmp.open("w", encoding="utf-8", newline="\n") as fh:
                for task in self.list():
                    fh.write(json.dumps(task.to_dict(), ensure_ascii=False, separators=(",", ":")))
                    fh.write("\n")
                fh.flush()
                os.fsync(fh.fileno())
            tmp.replace(self.snapshot_path)
            self.close()
            self.journal_path.unlink(missing_ok=True)


def export_benchmark(
    store: TaskStore,
    out_dir: str | Path,
    language: str,
) -> tuple[list[UtteranceRecord], float]:
    """Cut accepted tasks into clips and emit an evaluation manifest.

    Deterministic and idempotent: the same store contents produce the same
    clips and manifest bytes. Returns (records, total clip seconds).
    """
    out_dir = Path(out_dir)
    clips_dir = out_dir / "clips"
    clips_dir.mkdir(parents=True, exist_ok=True)
    accepted = store.list(status="accepted")
    if not accepted:
        log.warning("no accepted tasks; exporting an empty benchmark manifest")
    records = []
    total_s = 0.0
    for task in accepted:
        audio_src = resolve_audio(task.source_media)
        clip_wav = clips_dir / f"{task.id}.wav"
        n_samples = cut_wav(audio_src, clip_wav, task.start_s, task.end_s)
        _, rate = probe_wav(clip_wav)
        video_path = None
        video_frames = None
        if has_video_track(task.source_media):
            clip_video = clips_dir / f"{task.id}{VIDEO_EXT}"
            video_frames = cut_video(task.source_media, clip_video, task.start_s, task.end_s)
            video_path = str(clip_video)
        rec = UtteranceRecord(
            id=task.id,
            audio_path=str(clip_wav),
            sample_rate=rate,
            audio_samples=n_samples,
            transcript=task.final_transcript or "",
            language=language,
            video_path=video_path,
            video_frames=video_frames,
            speaker_id=None,
        )
        rec.validate()
        records.append(rec)
        total_s += rec.duration_s
    log.info("exported %d accepted tasks, %.1f s of clips", len(records), total_s)
    return records, total_s
