"""Canonical utterance manifests: ingestion from heterogeneous sources and stats.

The canonical manifest is JSON-lines, UTF-8, one record per line with a fixed
key order, so files are appendable, diff-able, and byte-stable round-trip.
"""

from __future__ import annotations

import csv
import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .audio_io import AudioFormatError, probe_wav

log = logging.getLogger(__name__)

AUDIO_EXTS = {".wav"}

# Column synonyms accepted by tabular and JSON-lines sources.
_KEY_ALIASES = {
    "id": ("id", "utt_id", "utterance_id", "name"),
    "audio_path": ("audio_path", "audio", "path", "file", "wav", "audio_filepath"),
    "transcript": ("transcript", "text", "sentence", "transcription"),
    "speaker_id": ("speaker_id", "speaker", "client_id", "spk"),
    "duration_s": ("duration_s", "duration", "dur"),
    "language": ("language", "lang", "locale"),
}

# Duration declared by the source may disagree with the decoded header by at
# most this much before the row is rejected.
DURATION_TOLERANCE_S = 0.1


class ManifestError(Exception):
    """Raised for unreadable sources or invariant violations in a manifest."""


@dataclass
class UtteranceRecord:
    """One audio (or audiovisual) sample: the manifest row."""

    id: str
    audio_path: str
    sample_rate: int
    audio_samples: int
    transcript: str
    language: str
    video_path: str | None = None
    video_frames: int | None = None
    speaker_id: str | None = None

    @property
    def duration_s(self) -> float:
        return self.audio_samples / self.sample_rate

    def validate(self) -> None:
        if not self.id:
            raise ManifestError("record has empty id")
        if self.sample_rate <= 0:
            raise ManifestError(f"{self.id}: sample_rate must be positive")
        if self.audio_samples < 0:
            raise ManifestError(f"{self.id}: audio_samples must be non-negative")
        if self.duration_s <= 0:
            raise ManifestError(f"{self.id}: duration must be positive")
        if self.video_path is not None and self.video_frames is None:
            raise ManifestError(f"{self.id}: video_path set without video_frames")

    def to_json(self) -> str:
        out: dict[str, object] = {
            "id": self.id,
            "audio_path": self.audio_path,
            "sample_rate": self.sample_rate,
            "audio_samples": self.audio_samples,
            "transcript": self.transcript,
            "language": self.language,
        }
        if self.video_path is not None:
            out["video_path"] = self.video_path
        if self.video_frames is not None:
            out["video_frames"] = self.video_frames
        if self.speaker_id is not None:
            out["speaker_id"] = self.speaker_id
        return json.dumps(out, ensure_ascii=False, separators=(",", ":"))

    @classmethod
    def from_json(cls, line: str) -> "UtteranceRecord":
        try:
            raw = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ManifestError(f"malformed manifest line: {exc}") from exc
        if not isinstance(raw, dict):
            raise ManifestError("manifest line is not a JSON object")
        try:
            return cls(
                id=str(raw["id"]),
                audio_path=str(raw["audio_path"]),
                sample_rate=int(raw["sample_rate"]),
                audio_samples=int(raw["audio_samples"]),
                transcript=str(raw["transcript"]),
                language=str(raw["language"]),
                video_path=raw.get("video_path"),
                video_frames=(int(raw["video_frames"]) if raw.get("video_frames") is not None else None),
                speaker_id=raw.get("speaker_id"),
            )
        except KeyError as exc:
            raise ManifestError(f"manifest line missing field {exc}") from exc


@dataclass(frozen=True)
class Reject:
    """A source row that was not admitted, with a machine-readable reason code."""

    source: str
    reason: str
    detail: str = ""

    def to_json(self) -> str:
        out = {"source": self.source, "reason": self.reason}
        if self.detail:
            out["detail"] = self.detail
        return json.dumps(out, ensure_ascii=False, separators=(",", ":"))


def write_manifest(path: str | Path, records: Iterable[UtteranceRecord]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(rec.to_json())
            fh.write("\n")
            n += 1
    return n


def read_manifest(path: str | Path, validate: bool = True) -> list[UtteranceRecord]:
    """Load a manifest; with validate=True, enforce the record invariants."""
    records = []
    seen: set[str] = set()
    with Path(path).open("r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = UtteranceRecord.from_json(line)
            except ManifestError as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from exc
            if validate:
                rec.validate()
                if rec.id in seen:
                    raise ManifestError(f"{path}:{lineno}: duplicate id {rec.id!r}")
                seen.add(rec.id)
            records.append(rec)
    return records


def write_rejects(path: str | Path, rejects: Iterable[Reject]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rej in rejects:
            fh.write(rej.to_json())
            fh.write("\n")
            n += 1
    return n


def _pick(raw: dict, field: str):
    for key in _KEY_ALIASES[field]:
        if key in raw and raw[key] not in (None, ""):
            return raw[key]
    return None


def _rows_tabular(source_dir: Path) -> Iterator[tuple[str, dict]]:
    files = sorted(p for p in source_dir.rglob("*") if p.suffix.lower() in (".tsv", ".csv"))
    if not files:
        raise ManifestError(f"no .tsv or .csv files under {source_dir}")
    for path in files:
        delim = "\t" if path.suffix.lower() == ".tsv" else ","
        with path.open("r", encoding="utf-8", newline="") as fh:
            reader = csv.DictReader(fh, delimiter=delim)
            for lineno, row in enumerate(reader, 2):
                yield f"{path}:{lineno}", {k: v for k, v in row.items() if k is not None}


def _rows_jsonl(source_dir: Path) -> Iterator[tuple[str, dict]]:
    files = sorted(p for p in source_dir.rglob("*") if p.suffix.lower() in (".jsonl", ".ndjson"))
    if not files:
        raise ManifestError(f"no .jsonl files under {source_dir}")
    for path in files:
        with path.open("r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.strip()
                if not line:
                    continue
                source = f"{path}:{lineno}"
                try:
                    raw = json.loads(line)
                except json.JSONDecodeError:
                    yield source, {"__malformed__": line}
                    continue
                yield source, raw if isinstance(raw, dict) else {"__malformed__": line}


def _rows_scan(source_dir: Path) -> Iterator[tuple[str, dict]]:
    for path in sorted(p for p in source_dir.rglob("*") if p.suffix.lower() in AUDIO_EXTS):
        sidecar = path.with_suffix(".txt")
        text = sidecar.read_text(encoding="utf-8").strip() if sidecar.exists() else ""
        rel = path.relative_to(source_dir)
        yield str(path), {
            "id": rel.with_suffix("").as_posix().replace("/", "-"),
            "audio_path": str(path),
            "transcript": text,
        }


_ROW_SOURCES = {"tabular": _rows_tabular, "jsonl": _rows_jsonl, "scan": _rows_scan}
INGEST_FORMATS = tuple(_ROW_SOURCES)


def ingest(
    source_dir: str | Path,
    fmt: str,
    language: str,
) -> tuple[list[UtteranceRecord], list[Reject]]:
    """Normalize a source corpus into canonical records plus a rejects report.

    Deterministic: files and rows are visited in sorted order, so the same
    source always produces the same manifest. Rows that cannot be admitted
    are returned as rejects with a reason code, never dropped silently.
    Duration always comes from decoding the audio header; a declared duration
    that disagrees by more than DURATION_TOLERANCE_S rejects the row.
    """
    source_dir = Path(source_dir)
    if not source_dir.is_dir():
        raise ManifestError(f"source directory not readable: {source_dir}")
    if fmt not in _ROW_SOURCES:
        raise ManifestError(f"unknown ingest format {fmt!r}, expected one of {INGEST_FORMATS}")

    records: list[UtteranceRecord] = []
    rejects: list[Reject] = []
    seen_ids: set[str] = set()

    for source, raw in _ROW_SOURCES[fmt](source_dir):
        if "__malformed__" in raw:
            rejects.append(Reject(source, "bad-row", "unparseable row"))
            continue
        audio = _pick(raw, "audio_path")
        if not audio:
            rejects.append(Reject(source, "missing-audio", "no audio path in row"))
            continue
        audio_path = Path(audio)
        if not audio_path.is_absolute():
            audio_path = source_dir / audio_path
        if not audio_path.is_file():
            rejects.append(Reject(source, "missing-audio", str(audio_path)))
            continue

        transcript = _pick(raw, "transcript")
        if transcript is None or not str(transcript).strip():
            rejects.append(Reject(source, "empty-transcript"))
            continue
        transcript = str(transcript)

        try:
            n_samples, rate = probe_wav(audio_path)
        except AudioFormatError as exc:
            rejects.append(Reject(source, "unreadable-audio", str(exc)))
            continue
        if n_samples <= 0:
            rejects.append(Reject(source, "empty-audio", str(audio_path)))
            continue

        declared = _pick(raw, "duration_s")
        if declared is not None:
            try:
                declared_s = float(declared)
            except (TypeError, ValueError):
                rejects.append(Reject(source, "bad-row", f"unparseable duration {declared!r}"))
                continue
            if abs(declared_s - n_samples / rate) > DURATION_TOLERANCE_S:
                rejects.append(
                    Reject(source, "duration-mismatch",
                           f"declared {declared_s:.3f}s, decoded {n_samples / rate:.3f}s")
                )
                continue

        utt_id = _pick(raw, "id")
        utt_id = str(utt_id) if utt_id else audio_path.stem
        if utt_id in seen_ids:
            rejects.append(Reject(source, "duplicate-id", utt_id))
            continue
        seen_ids.add(utt_id)

        lang = _pick(raw, "language")
        speaker = _pick(raw, "speaker_id")
        rec = UtteranceRecord(
            id=utt_id,
            audio_path=str(audio_path.resolve()),
            sample_rate=rate,
            audio_samples=n_samples,
            transcript=transcript,
            language=str(lang) if lang else language,
            speaker_id=str(speaker) if speaker else None,
        )
        rec.validate()
        records.append(rec)

    log.info("ingest: %d admitted, %d rejected from %s", len(records), len(rejects), source_dir)
    return records, rejects


def corpus_stats(records: list[UtteranceRecord]) -> dict:
    """Utterance count, total hours, mean duration, and per-language hours.

    total_hours is the sum of the per-language entries in sorted key order
    (one accumulator), so the per-language breakdown always adds up exactly.
    """
    per_lang_seconds: dict[str, float] = {}
    for rec in records:
        per_lang_seconds[rec.language] = per_lang_seconds.get(rec.language, 0.0) + rec.duration_s
    per_language_hours = {lang: per_lang_seconds[lang] / 3600.0 for lang in sorted(per_lang_seconds)}
    total_hours = 0.0
    for lang in sorted(per_language_hours):
        total_hours += per_language_hours[lang]
    count = len(records)
    mean = (total_hours * 3600.0 / count) if count else 0.0
    return {
        "utterance_count": count,
        "total_hours": total_hours,
        "mean_duration_s": mean,
        "per_language_hours": per_language_hours,
    }
