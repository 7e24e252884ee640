"""Modality-ablation and SNR-sweep evaluation against a pluggable recognizer.

Each evaluation condition is (modality, SNR level or clean). Noisy audio is
generated once per condition from per-utterance seeds, so any degree of
parallelism or re-running yields identical inputs. The recognizer only ever
sees the streams its modality allows: audio-only conditions mask video paths,
video-only conditions mask audio.
"""

from __future__ import annotations

import json
import logging
import subprocess
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

from .audio_io import read_wav, write_wav
from .manifest import UtteranceRecord
from .noise import NoiseSpec, mix_noise
from .seeding import derive_seed
from .textnorm import DEFAULT_POLICY, NormalizePolicy, normalize_text
from .wer import WerBreakdown, corpus_wer

log = logging.getLogger(__name__)

MODALITIES = ("AV", "A", "V")
CLEAN = None  # SNR level meaning "no added noise"


@dataclass(frozen=True)
class EvalCondition:
    modality: str
    snr_db: float | None = None

    def label(self) -> str:
        if self.snr_db is None:
            return f"{self.modality}/clean"
        return f"{self.modality}/snr{self.snr_db:+g}dB"


@dataclass
class EvalRecord:
    condition: EvalCondition
    breakdown: WerBreakdown
    dataset_id: str
    model_id: str
    power_reference: str = "full-utterance-rms"

    def to_json(self) -> str:
        return json.dumps(
            {
                "modality": self.condition.modality,
                "snr_db": self.condition.snr_db,
                "dataset_id": self.dataset_id,
                "model_id": self.model_id,
                "power_reference": self.power_reference,
                **self.breakdown.to_dict(),
            },
            ensure_ascii=False,
            separators=(",", ":"),
        )

    @classmethod
    def from_json(cls, line: str) -> "EvalRecord":
        raw = json.loads(line)
        return cls(
            condition=EvalCondition(raw["modality"], raw["snr_db"]),
            breakdown=WerBreakdown(
                substitutions=int(raw["substitutions"]),
                deletions=int(raw["deletions"]),
                insertions=int(raw["insertions"]),
                reference_words=int(raw["reference_words"]),
            ),
            dataset_id=raw["dataset_id"],
            model_id=raw["model_id"],
            power_reference=raw.get("power_reference", "full-utterance-rms"),
        )


class RecognizerAdapter(Protocol):
    def transcribe_batch(self, manifest_path: str, modality: str, snr_db: float | None) -> dict[str, str]: ...


class SubprocessRecognizer:
    """External recognizer contract: invoked as
    `CMD --manifest PATH --modality {AV|A|V} [--snr-db X]`,
    reading the shard manifest and emitting JSON-lines {"id": ..., "text": ...}
    on standard output."""

    def __init__(self, cmd: Sequence[str], timeout_s: float = 3600.0):
        self.cmd = list(cmd)
        self.timeout_s = timeout_s

    def transcribe_batch(self, manifest_path: str, modality: str, snr_db: float | None) -> dict[str, str]:
        argv = self.cmd + ["--manifest", str(manifest_path), "--modality", modality]
        if snr_db is not None:
            argv += ["--snr-db", repr(float(snr_db))]
        proc = subprocess.run(argv, capture_output=True, timeout=self.timeout_s, text=True)
        if proc.returncode != 0:
            raise RuntimeError(f"recognizer exited {proc.returncode}: {proc.stderr.strip()[:500]}")
        out: dict[str, str] = {}
        for line in proc.stdout.splitlines():
            line = line.strip()
            if not line:
                continue
            raw = json.loads(line)
            out[str(raw["id"])] = str(raw.get("text", ""))
        return out


def _masked_row(rec: UtteranceRecord, modality: str, audio_override: str | None) -> dict:
    row: dict[str, object] = {"id": rec.id, "sample_rate": rec.sample_rate, "transcript": rec.transcript}
    if modality in ("AV", "A"):
        row["audio_path"] = audio_override or rec.audio_path
        row["audio_samples"] = rec.audio_samples
    if modality in ("AV", "V"):
        if rec.video_path is not None:
            row["video_path"] = rec.video_path
            row["video_frames"] = rec.video_frames
    return row


def prepare_condition(
    records: Sequence[UtteranceRecord],
    condition: EvalCondition,
    run_seed: int,
    workdir: Path,
) -> Path:
    """Write the shard manifest for one condition, generating noisy audio
    deterministically from per-utterance seeds when an SNR level is set."""
    cond_dir = workdir / condition.label().replace("/", "_")
    cond_dir.mkdir(parents=True, exist_ok=True)
    shard_path = cond_dir / "shard.jsonl"
    needs_audio = condition.modality in ("AV", "A")
    with shard_path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            audio_override = None
            if needs_audio and condition.snr_db is not None:
                noisy_path = cond_dir / f"{rec.id}.wav"
                if not noisy_path.exists():
                    samples, rate = read_wav(rec.audio_path)
                    spec = NoiseSpec(snr_db=condition.snr_db, seed=derive_seed(run_seed, rec.id))
                    write_wav(noisy_path, mix_noise(samples, spec), rate)
                audio_override = str(noisy_path)
            fh.write(json.dumps(_masked_row(rec, condition.modality, audio_override),
                                ensure_ascii=False, separators=(",", ":")))
            fh.write("\n")
    return shard_path


def run_sweep(
    recognizer: RecognizerAdapter,
    records: Sequence[UtteranceRecord],
    snr_levels: Sequence[float | None],
    modalities: Sequence[str],
    run_seed: int,
    workdir: str | Path,
    dataset_id: str = "dataset",
    model_id: str = "model",
    policy: NormalizePolicy = DEFAULT_POLICY,
) -> list[EvalRecord]:
    """One EvalRecord per (modality, SNR level).

    A recognizer failure on an utterance counts as an empty hypothesis
    (every reference word deleted) and is logged; the sweep never aborts on
    a single bad utterance.
    """
    if not records:
        raise ValueError("run_sweep needs a non-empty manifest")
    for modality in modalities:
        if modality not in MODALITIES:
            raise ValueError(f"unknown modality {modality!r}, expected one of {MODALITIES}")
    workdir = Path(workdir)
    results = []
    for modality in modalities:
        for snr_db in snr_levels:
            condition = EvalCondition(modality, snr_db)
            shard = prepare_condition(records, condition, run_seed, workdir)
            try:
                hyps = recognizer.transcribe_batch(str(shard), modality, snr_db)
            except Exception as exc:
                log.error("recognizer failed on %s: %s; scoring empty hypotheses", condition.label(), exc)
                hyps = {}
            pairs = []
            for rec in records:
                hyp = hyps.get(rec.id)
                if hyp is None:
                    log.warning("no hypothesis for %s under %s; counting as empty", rec.id, condition.label())
                    hyp = ""
                pairs.append((normalize_text(rec.transcript, policy), normalize_text(hyp, policy)))
            results.append(
                EvalRecord(condition, corpus_wer(pairs), dataset_id=dataset_id, model_id=model_id)
            )
    return results


def write_records(path: str | Path, records: Iterable[EvalRecord]) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(rec.to_json())
            fh.write("\n")
            n += 1
    return n


def read_records(path: str | Path) -> list[EvalRecord]:
    records = []
    with Path(path).open("r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                records.append(EvalRecord.from_json(line))
    return records


def format_table(records: Sequence[EvalRecord]) -> str:
    """Fixed-layout text table: one row per condition level, one WER column
    per modality, percentages to one decimal."""
    if not records:
        raise ValueError("no evaluation records to report")
    modalities = [m for m in MODALITIES if any(r.condition.modality == m for r in records)]
    levels = sorted(
        {r.condition.snr_db for r in records},
        key=lambda s: (0, 0.0) if s is None else (1, s),
    )
    by_key = {(r.condition.modality, r.condition.snr_db): r for r in records}
    header = ["condition"] + [f"{m} WER%" for m in modalities]
    rows = [header]
    for level in levels:
        label = "clean" if level is None else f"snr={level:+g}dB"
        row = [label]
        for m in modalities:
            rec = by_key.get((m, level))
            row.append(f"{100.0 * rec.breakdown.wer:.1f}" if rec is not None else "-")
        rows.append(row)
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = []
    for row in rows:
        lines.append("  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip())
    return "\n".join(lines) + "\n"


def format_curve(records: Sequence[EvalRecord]) -> str:
    """WER-vs-SNR curve data: snr_db<TAB>modality<TAB>wer_percent, SNR
    ascending; clean (no-SNR) conditions are table-only."""
    rows = []
    for rec in sorted(
        (r for r in records if r.condition.snr_db is not None),
        key=lambda r: (r.condition.snr_db, MODALITIES.index(r.condition.modality)),
    ):
        rows.append(f"{rec.condition.snr_db:g}\t{rec.condition.modality}\t{100.0 * rec.breakdown.wer:.1f}")
    return "\n".join(rows) + ("\n" if rows else "")


def emit_report(records: Sequence[EvalRecord], out_dir: str | Path) -> tuple[Path, Path]:
    """Write table.txt and curve.tsv; emission is deterministic, so re-running
    on the same records is byte-identical."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    table_path = out_dir / "table.txt"
    curve_path = out_dir / "curve.tsv"
    table_path.write_text(format_table(records), encoding="utf-8")
    curve_path.write_text(format_curve(records), encoding="utf-8")
    return table_path, curve_path
