"""Synthesis orchestration: pair utterances with faces, scaffold still-frame
videos, drive an external lip-sync engine, verify outputs, emit an AV manifest.

The run is resumable: every attempt outcome is appended to a JSON-lines
journal, and completed jobs are never re-run. Jobs are independent, so any
worker count produces the same final manifest.
"""

from __future__ import annotations

import json
import logging
import math
import shutil
import subprocess
import time
from collections import deque
from concurrent.futures import FIRST_COMPLETED, Future, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import cv2
import numpy as np

from .manifest import UtteranceRecord
from .seeding import derive_seed
from .video_io import VIDEO_EXT, VideoIOError, probe_video, write_video

log = logging.getLogger(__name__)

DEFAULT_FPS = 25.0
DEFAULT_MAX_ATTEMPTS = 2
FRAME_TOLERANCE = 1

JOB_STATUSES = ("pending", "running", "done", "failed")


class SynthError(Exception):
    """Base for per-job synthesis failures; carries a journal reason code."""

    reason = "synth-error"


class EngineError(SynthError):
    reason = "engine-error"


class EngineTimeout(SynthError):
    reason = "timeout"


class ScaffoldError(SynthError):
    reason = "scaffold-error"


class EmptyUtteranceError(ScaffoldError):
    reason = "empty-utterance"


def frame_count(duration_s: float, fps: float) -> int:
    """Frames in a video of the given duration: round(duration * fps),
    halves rounding up."""
    return int(math.floor(duration_s * fps + 0.5))


@dataclass
class VerifyResult:
    actual_frames: int
    duration_delta_s: float
    ok: bool


@dataclass
class SynthJob:
    """One utterance-to-face pairing and its synthesis state."""

    utterance_id: str
    face_image: str
    seed: int
    fps: float
    expected_frames: int
    status: str = "pending"
    output_video: str | None = None
    verify: VerifyResult | None = None
    attempt: int = 0
    reason: str | None = None

    def to_json(self) -> str:
        out: dict[str, object] = {
            "utterance_id": self.utterance_id,
            "face_image": self.face_image,
            "seed": self.seed,
            "fps": self.fps,
            "expected_frames": self.expected_frames,
            "status": self.status,
            "attempt": self.attempt,
        }
        if self.output_video is not None:
            out["output_video"] = self.output_video
        if self.verify is not None:
            out["verify"] = {
                "actual_frames": self.verify.actual_frames,
                "duration_delta_s": self.verify.duration_delta_s,
                "ok": self.verify.ok,
            }
        if self.reason is not None:
            out["reason"] = self.reason
        return json.dumps(out, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "SynthJob":
        raw = json.loads(line)
        verify = None
        if raw.get("verify") is not None:
            v = raw["verify"]
            verify = VerifyResult(int(v["actual_frames"]), float(v["duration_delta_s"]), bool(v["ok"]))
        return cls(
            utterance_id=raw["utterance_id"],
            face_image=raw["face_image"],
            seed=int(raw["seed"]),
            fps=float(raw["fps"]),
            expected_frames=int(raw["expected_frames"]),
            status=raw.get("status", "pending"),
            output_video=raw.get("output_video"),
            verify=verify,
            attempt=int(raw.get("attempt", 0)),
            reason=raw.get("reason"),
        )


def write_jobs(path: str | Path, jobs: Sequence[SynthJob]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for job in jobs:
            fh.write(job.to_json())
            fh.write("\n")
    return len(jobs)


def read_jobs(path: str | Path) -> list[SynthJob]:
    jobs = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                jobs.append(SynthJob.from_json(line))
    return jobs


def assign_pairs(
    records: Sequence[UtteranceRecord],
    accepted_faces: Sequence[str],
    run_seed: int,
    fps: float = DEFAULT_FPS,
) -> list[SynthJob]:
    """Pair every utterance with a face drawn uniformly from the accepted pool.

    The per-utterance seed is a hash of (run_seed, utterance_id), so the
    assignment is reproducible and independent of record order or scheduling.
    """
    if not accepted_faces:
        raise ValueError("accepted face pool is empty; nothing to pair against")
    jobs = []
    for rec in records:
        seed = derive_seed(run_seed, rec.id)
        rng = np.random.Generator(np.random.PCG64(seed))
        face = accepted_faces[int(rng.integers(0, len(accepted_faces)))]
        jobs.append(
            SynthJob(
                utterance_id=rec.id,
                face_image=face,
                seed=seed,
                fps=fps,
                expected_frames=frame_count(rec.duration_s, fps),
            )
        )
    return jobs


def scaffold_still_video(image_path: str | Path, duration_s: float, fps: float, out_path: str | Path) -> int:
    """Write a video that repeats one still image for the utterance duration.

    Frame count is round(duration_s * fps); encoding is lossless, so every
    frame decodes back to the input pixels.
    """
    if duration_s <= 0:
        raise EmptyUtteranceError(f"empty-utterance: duration {duration_s}s")
    if fps <= 0:
        raise ScaffoldError(f"fps must be positive, got {fps}")
    img = cv2.imread(str(image_path))
    if img is None:
        raise ScaffoldError(f"cannot decode face image: {image_path}")
    n = frame_count(duration_s, fps)
    if n == 0:
        raise EmptyUtteranceError(f"empty-utterance: {duration_s}s at {fps} fps rounds to 0 frames")
    try:
        return write_video(out_path, (img for _ in range(n)), fps)
    except VideoIOError as exc:
        raise ScaffoldError(str(exc)) from exc


class LipSyncAdapter(Protocol):
    def synthesize(self, face_video: str, audio_path: str, out_video: str) -> None: ...


class SubprocessEngine:
    """External engine contract: `ENGINE --face VIDEO --audio WAV --out VIDEO`,
    exit status 0 on success. The engine must preserve the audio duration, so
    the output video length is checked against the input audio."""

    def __init__(self, cmd: Sequence[str], timeout_s: float = 600.0):
        self.cmd = list(cmd)
        self.timeout_s = timeout_s

    def synthesize(self, face_video: str, audio_path: str, out_video: str) -> None:
        argv = self.cmd + ["--face", face_video, "--audio", audio_path, "--out", out_video]
        try:
            proc = subprocess.run(argv, capture_output=True, timeout=self.timeout_s, text=True)
        except subprocess.TimeoutExpired as exc:
            raise EngineTimeout(f"engine timed out after {self.timeout_s}s") from exc
        if proc.returncode != 0:
            raise EngineError(f"engine exited {proc.returncode}: {proc.stderr.strip()[:500]}")


class CopyThroughEngine:
    """In-process stand-in that passes the scaffold video through unchanged.
    Useful for pipeline smoke tests; real engines are external processes."""

    def synthesize(self, face_video: str, audio_path: str, out_video: str) -> None:
        shutil.copyfile(face_video, out_video)


def verify_output(job: SynthJob, record: UtteranceRecord, out_video: str | Path) -> VerifyResult:
    """Check the engine output: duration within one frame period of the audio
    and frame count within FRAME_TOLERANCE of the expectation."""
    try:
        actual_frames, _, _, _ = probe_video(out_video)
    except VideoIOError:
        return VerifyResult(0, float("-inf"), False)
    delta = actual_frames / job.fps - record.duration_s
    # compare in frame units so the one-frame boundary survives float rounding
    frame_delta = actual_frames - record.duration_s * job.fps
    ok = abs(frame_delta) <= 1.0 + 1e-9 and abs(actual_frames - job.expected_frames) <= FRAME_TOLERANCE
    return VerifyResult(actual_frames, delta, ok)


def run_engine(
    job: SynthJob,
    record: UtteranceRecord,
    engine: LipSyncAdapter,
    scaffold_dir: str | Path,
    out_dir: str | Path,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> SynthJob:
    """Run one synthesis attempt and verify the result.

    done implies verify.ok; every failure mode sets status failed with a
    reason code and leaves the job retryable until max_attempts.
    """
    if job.status == "done":
        return job
    if job.attempt >= max_attempts:
        raise ValueError(f"{job.utterance_id}: attempts exhausted ({job.attempt}/{max_attempts})")
    job.attempt += 1
    job.status = "running"
    job.reason = None
    scaffold_path = Path(scaffold_dir) / f"{job.utterance_id}.scaffold{VIDEO_EXT}"
    out_path = Path(out_dir) / f"{job.utterance_id}{VIDEO_EXT}"
    try:
        scaffold_still_video(job.face_image, record.duration_s, job.fps, scaffold_path)
        engine.synthesize(str(scaffold_path), record.audio_path, str(out_path))
    except SynthError as exc:
        job.status = "failed"
        job.reason = exc.reason
        log.warning("job %s failed (%s): %s", job.utterance_id, exc.reason, exc)
        return job
    finally:
        scaffold_path.unlink(missing_ok=True)
    job.verify = verify_output(job, record, out_path)
    if job.verify.ok:
        job.status = "done"
        job.output_video = str(out_path)
    else:
        job.status = "failed"
        job.reason = "desync"
        log.warning(
            "job %s failed verification: %d frames vs %d expected, delta %.4fs",
            job.utterance_id, job.verify.actual_frames, job.expected_frames,
            job.verify.duration_delta_s,
        )
    return job


@dataclass
class JournalEntry:
    job_id: str
    status: str
    timestamp: float
    reason: str | None = None

    def to_json(self) -> str:
        out: dict[str, object] = {
            "job_id": self.job_id,
            "status": self.status,
            "timestamp": self.timestamp,
        }
        if self.reason is not None:
            out["reason"] = self.reason
        return json.dumps(out, ensure_ascii=False, separators=(",", ":"))


def replay_journal(path: str | Path) -> tuple[dict[str, str], dict[str, int]]:
    """Reconstruct per-job state from the append-only journal.

    Returns (last status per job, failed-attempt count per job). A trailing
    partial line from a crash mid-append is ignored.
    """
    status: dict[str, str] = {}
    attempts: dict[str, int] = {}
    path = Path(path)
    if not path.exists():
        return status, attempts
    data = path.read_bytes()
    lines = data.split(b"\n")
    if data and not data.endswith(b"\n"):
        lines = lines[:-1]  # crash-truncated tail, not yet committed
    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            raw = json.loads(line)
        except json.JSONDecodeError:
            continue
        job_id = raw.get("job_id")
        if not job_id:
            continue
        status[job_id] = raw.get("status", "failed")
        if raw.get("status") == "failed":
            attempts[job_id] = attempts.get(job_id, 0) + 1
    return status, attempts


@dataclass
class RunSummary:
    done: int = 0
    failed: int = 0
    skipped: int = 0
    engine_calls: int = 0
    failures: dict[str, str] = field(default_factory=dict)

    @property
    def all_done(self) -> bool:
        return self.failed == 0


def run_all(
    jobs: Sequence[SynthJob],
    records_by_id: dict[str, UtteranceRecord],
    engine: LipSyncAdapter,
    out_dir: str | Path,
    journal_path: str | Path,
    workers: int = 1,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> tuple[list[UtteranceRecord], RunSummary]:
    """Run every job not already journaled as done; emit the AV manifest.

    The journal is append-only with a single writer (this thread); each
    completed attempt is flushed before the next job result is handled, so a
    killed run resumes exactly where it stopped. The returned manifest holds
    one record per done job, in the original job order, with video fields
    filled; audio fields are carried over untouched, so total duration is
    preserved to the sample.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    scaffold_dir = out_dir / "scaffolds"
    scaffold_dir.mkdir(exist_ok=True)
    journal_path = Path(journal_path)
    journal_path.parent.mkdir(parents=True, exist_ok=True)

    prior_status, prior_attempts = replay_journal(journal_path)
    summary = RunSummary()

    queue: deque[SynthJob] = deque()
    for job in jobs:
        if job.utterance_id not in records_by_id:
            raise ValueError(f"job {job.utterance_id} has no record in the manifest")
        if prior_status.get(job.utterance_id) == "done" or job.status == "done":
            job.status = "done"
            summary.skipped += 1
            continue
        job.attempt = max(job.attempt, prior_attempts.get(job.utterance_id, 0))
        if job.attempt >= max_attempts:
            job.status = "failed"
            job.reason = job.reason or "attempts-exhausted"
            continue
        queue.append(job)

    def attempt(job: SynthJob) -> SynthJob:
        return run_engine(job, records_by_id[job.utterance_id], engine, scaffold_dir, out_dir, max_attempts)

    workers = max(workers, 1)
    with journal_path.open("a", encoding="utf-8", newline="\n") as journal:

        def commit(job: SynthJob) -> None:
            entry = JournalEntry(job.utterance_id, job.status, time.time(), job.reason)
            journal.write(entry.to_json())
            journal.write("\n")
            journal.flush()

        # Bounded submission: at most `workers` jobs in flight, so at most
        # that much work is uncommitted if the process dies mid-run.
        with ThreadPoolExecutor(max_workers=workers) as pool:
            in_flight: dict[Future, SynthJob] = {}

            def pump() -> None:
                while queue and len(in_flight) < workers:
                    job = queue.popleft()
                    in_flight[pool.submit(attempt, job)] = job
                    summary.engine_calls += 1

            pump()
            while in_flight:
                finished, _ = wait(set(in_flight), return_when=FIRST_COMPLETED)
                for fut in finished:
                    job = in_flight.pop(fut)
                    job = fut.result()
                    commit(job)
                    if job.status == "failed" and job.attempt < max_attempts:
                        queue.append(job)
                pump()

    summary.done = sum(1 for j in jobs if j.status == "done")
    summary.failed = sum(1 for j in jobs if j.status == "failed")
    for job in jobs:
        if job.status == "failed":
            summary.failures.setdefault(job.utterance_id, job.reason or "failed")

    av_records = []
    for job in jobs:
        if job.status != "done":
            continue
        rec = records_by_id[job.utterance_id]
        out_path = out_dir / f"{job.utterance_id}{VIDEO_EXT}"
        try:
            frames, _, _, _ = probe_video(out_path)
        except VideoIOError as exc:
            raise RuntimeError(f"journaled-done job {job.utterance_id} has no decodable video") from exc
        av_records.append(
            UtteranceRecord(
                id=rec.id,
                audio_path=rec.audio_path,
                sample_rate=rec.sample_rate,
                audio_samples=rec.audio_samples,
                transcript=rec.transcript,
                language=rec.language,
                video_path=str(out_path),
                video_frames=frames,
                speaker_id=rec.speaker_id,
            )
        )
    return av_records, summary
