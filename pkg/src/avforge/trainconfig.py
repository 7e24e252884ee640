"""Fine-tuning schedule math and config bundle emission.

The learning rate profile is tri-stage: linear warmup from a scaled floor to
the peak, a constant hold at the peak, then decay to a scaled floor. Decay is
geometric by default, linear as an option. The encoder freeze policy is a
step threshold. Bundles are emitted for an external seq2seq trainer; nothing
here computes gradients.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .manifest import ManifestError, read_manifest, write_manifest

BUNDLE_SCHEMA_VERSION = 1
CONFIG_FILENAME = "config.cfg"
SCHEDULE_FILENAME = "schedule.tsv"
TRAIN_FILENAME = "train.jsonl"
VALID_FILENAME = "valid.jsonl"

DECAY_FORMS = ("exponential", "linear")


class BundleError(Exception):
    """Raised when a bundle cannot be emitted or parsed."""


@dataclass(frozen=True)
class TriStageSchedule:
    warmup_steps: int
    hold_steps: int
    decay_steps: int
    peak_lr: float = 1e-3
    init_scale: float = 0.01
    final_scale: float = 0.01
    decay_form: str = "exponential"

    def __post_init__(self):
        if min(self.warmup_steps, self.hold_steps, self.decay_steps) < 0:
            raise ValueError("schedule phase lengths must be non-negative")
        if self.peak_lr <= 0:
            raise ValueError("peak_lr must be positive")
        for name, scale in (("init_scale", self.init_scale), ("final_scale", self.final_scale)):
            if not (0 < scale <= 1):
                raise ValueError(f"{name} must be in (0, 1], got {scale}")
        if self.decay_form not in DECAY_FORMS:
            raise ValueError(f"decay_form must be one of {DECAY_FORMS}")

    @property
    def total_steps(self) -> int:
        return self.warmup_steps + self.hold_steps + self.decay_steps

    @classmethod
    def from_total(cls, total_updates: int, **overrides) -> "TriStageSchedule":
        """Default phase split of 10% warmup, 40% hold, 50% decay."""
        if total_updates <= 0:
            raise ValueError("total_updates must be positive")
        warmup = int(total_updates * 0.1)
        hold = int(total_updates * 0.4)
        decay = total_updates - warmup - hold
        return cls(warmup_steps=warmup, hold_steps=hold, decay_steps=decay, **overrides)


def lr_at(step: int, schedule: TriStageSchedule) -> float:
    """Learning rate at an update step.

    Piecewise: linear ramp on [0, warmup), exactly peak_lr on the hold phase
    boundaries included, decay to peak*final_scale, constant floor after.
    """
    if step < 0:
        raise ValueError(f"step must be non-negative, got {step}")
    w, h, d = schedule.warmup_steps, schedule.hold_steps, schedule.decay_steps
    peak = schedule.peak_lr
    if step < w:
        init = peak * schedule.init_scale
        return init + (peak - init) * (step / w)
    if step <= w + h:
        return peak
    u = step - w - h
    if u >= d:
        return peak * schedule.final_scale
    if schedule.decay_form == "exponential":
        return peak * schedule.final_scale ** (u / d)
    floor = peak * schedule.final_scale
    return peak + (floor - peak) * (u / d)


@dataclass(frozen=True)
class FreezePolicy:
    freeze_updates: int = 22500


def encoder_frozen(step: int, policy: FreezePolicy) -> bool:
    """True while the pre-trained encoder stays frozen (step below threshold)."""
    if step < 0:
        raise ValueError(f"step must be non-negative, got {step}")
    return step < policy.freeze_updates


@dataclass(frozen=True)
class VocabSpec:
    vocab_size: int
    training_text: str
    model_type: str = "unigram"


@dataclass(frozen=True)
class ArchSpec:
    decoder_layers: int = 6
    init_checkpoint: str = ""
    optimizer: str = "adam"


@dataclass(frozen=True)
class ConfigBundle:
    schedule: TriStageSchedule
    policy: FreezePolicy
    vocab: VocabSpec
    arch: ArchSpec = field(default_factory=ArchSpec)


def character_inventory(transcripts) -> set[str]:
    """Distinct non-whitespace characters across the training transcripts."""
    chars: set[str] = set()
    for text in transcripts:
        chars.update(ch for ch in text if not ch.isspace())
    return chars


def _schedule_sample_steps(schedule: TriStageSchedule, points: int = 50) -> list[int]:
    total = schedule.total_steps
    steps = {0, schedule.warmup_steps, schedule.warmup_steps + schedule.hold_steps, total}
    if total > 0:
        stride = max(total // points, 1)
        steps.update(range(0, total + 1, stride))
    return sorted(steps)


def emit_bundle(
    train_manifest: str | Path,
    valid_manifest: str | Path,
    bundle: ConfigBundle,
    out_dir: str | Path,
) -> Path:
    """Write a self-describing config bundle directory.

    Contents: both manifests re-serialized canonically, a sampled step-to-lr
    schedule table, and a single flat key-value config file. All validation
    happens before anything is written, so a failed emission leaves nothing.
    """
    try:
        train_records = read_manifest(train_manifest)
        valid_records = read_manifest(valid_manifest)
    except (OSError, ManifestError) as exc:
        raise BundleError(f"cannot emit bundle: {exc}") from exc

    inventory = character_inventory(rec.transcript for rec in train_records)
    if bundle.vocab.vocab_size < len(inventory):
        raise BundleError(
            f"vocab_size {bundle.vocab.vocab_size} is below the character "
            f"inventory of the training text ({len(inventory)} distinct characters)"
        )

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_manifest(out_dir / TRAIN_FILENAME, train_records)
    write_manifest(out_dir / VALID_FILENAME, valid_records)

    sched = bundle.schedule
    with (out_dir / SCHEDULE_FILENAME).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write("step\tlr\n")
        for step in _schedule_sample_steps(sched):
            fh.write(f"{step}\t{lr_at(step, sched):.12e}\n")

    keys = {
        "schema_version": BUNDLE_SCHEMA_VERSION,
        "train_manifest": TRAIN_FILENAME,
        "valid_manifest": VALID_FILENAME,
        "schedule_table": SCHEDULE_FILENAME,
        "peak_lr": sched.peak_lr,
        "warmup_steps": sched.warmup_steps,
        "hold_steps": sched.hold_steps,
        "decay_steps": sched.decay_steps,
        "init_scale": sched.init_scale,
        "final_scale": sched.final_scale,
        "decay_form": sched.decay_form,
        "freeze_updates": bundle.policy.freeze_updates,
        "vocab_model_type": bundle.vocab.model_type,
        "vocab_size": bundle.vocab.vocab_size,
        "vocab_training_text": bundle.vocab.training_text,
        "decoder_layers": bundle.arch.decoder_layers,
        "init_checkpoint": bundle.arch.init_checkpoint,
        "optimizer": bundle.arch.optimizer,
    }
    with (out_dir / CONFIG_FILENAME).open("w", encoding="utf-8", newline="\n") as fh:
        for key, value in keys.items():
            fh.write(f"{key} = {json.dumps(value, ensure_ascii=False)}\n")
    return out_dir


def parse_bundle(bundle_dir: str | Path) -> ConfigBundle:
    """Read back an emitted bundle; parse(emit(x)) equals x structurally."""
    path = Path(bundle_dir) / CONFIG_FILENAME
    if not path.is_file():
        raise BundleError(f"no {CONFIG_FILENAME} in {bundle_dir}")
    keys: dict[str, object] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if " = " not in line:
            raise BundleError(f"{path}:{lineno}: expected 'key = value'")
        key, _, value = line.partition(" = ")
        try:
            keys[key] = json.loads(value)
        except json.JSONDecodeError as exc:
            raise BundleError(f"{path}:{lineno}: bad value: {exc}") from exc
    version = keys.get("schema_version")
    if version != BUNDLE_SCHEMA_VERSION:
        raise BundleError(f"unsupported bundle schema version {version!r}")
    try:
        schedule = TriStageSchedule(
            warmup_steps=int(keys["warmup_steps"]),
            hold_steps=int(keys["hold_steps"]),
            decay_steps=int(keys["decay_steps"]),
            peak_lr=float(keys["peak_lr"]),
            init_scale=float(keys["init_scale"]),
            final_scale=float(keys["final_scale"]),
            decay_form=str(keys["decay_form"]),
        )
        policy = FreezePolicy(freeze_updates=int(keys["freeze_updates"]))
        vocab = VocabSpec(
            vocab_size=int(keys["vocab_size"]),
            training_text=str(keys["vocab_training_text"]),
            model_type=str(keys["vocab_model_type"]),
        )
        arch = ArchSpec(
            decoder_layers=int(keys["decoder_layers"]),
            init_checkpoint=str(keys["init_checkpoint"]),
            optimizer=str(keys["optimizer"]),
        )
    except KeyError as exc:
        raise BundleError(f"bundle config missing key {exc}") from exc
    return ConfigBundle(schedule=schedule, policy=policy, vocab=vocab, arch=arch)
