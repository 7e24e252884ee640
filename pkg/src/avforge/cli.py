"""Command-line interface.

Exit codes: 0 success, 1 partial failure (some jobs failed but the run
completed), 2 fatal input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import shlex
import sys
from pathlib import Path

from . import annotate, facepool, manifest, review_service, sweep, synth, trainconfig, vad
from .audio_io import AudioFormatError
from .textnorm import DEFAULT_POLICY, RAW_POLICY, normalize_text
from .wer import corpus_wer

log = logging.getLogger("avforge")

EXIT_OK = 0
EXIT_PARTIAL = 1
EXIT_FATAL = 2


class FatalInputError(Exception):
    pass


def _split_cmd(cmd: str) -> list[str]:
    argv = shlex.split(cmd)
    if not argv:
        raise FatalInputError("empty adapter command")
    return argv


def _load_manifest(path: str, validate: bool = True):
    try:
        return manifest.read_manifest(path, validate=validate)
    except (OSError, manifest.ManifestError) as exc:
        raise FatalInputError(str(exc)) from exc


# ---------------------------------------------------------------- ingest

def cmd_ingest(args) -> int:
    fmt = {"tabular": "tabular", "jsonl": "jsonl", "scan": "scan"}[args.format]
    try:
        records, rejects = manifest.ingest(args.source, fmt, args.lang)
    except manifest.ManifestError as exc:
        raise FatalInputError(str(exc)) from exc
    manifest.write_manifest(args.out, records)
    rejects_path = args.rejects or (str(args.out) + ".rejects.jsonl")
    manifest.write_rejects(rejects_path, rejects)
    print(f"admitted {len(records)} records -> {args.out}")
    print(f"rejected {len(rejects)} rows -> {rejects_path}")
    return EXIT_OK


def cmd_stats(args) -> int:
    records = _load_manifest(args.manifest)
    stats = manifest.corpus_stats(records)
    if args.json:
        print(json.dumps(stats, ensure_ascii=False, indent=2))
    else:
        print(f"utterances:      {stats['utterance_count']}")
        print(f"total hours:     {stats['total_hours']:.3f}")
        print(f"mean duration:   {stats['mean_duration_s']:.2f} s")
        for lang, hours in stats["per_language_hours"].items():
            print(f"  {lang}: {hours:.3f} h")
    return EXIT_OK


# ---------------------------------------------------------------- facepool

def cmd_facepool_build(args) -> int:
    detector = facepool.SubprocessDetector(_split_cmd(args.detector))
    policy = facepool.PoolPolicy(threshold=args.threshold, min_face_side=args.min_face_side)
    try:
        assets = facepool.build_pool(args.images, detector, policy, workers=args.workers)
    except FileNotFoundError as exc:
        raise FatalInputError(str(exc)) from exc
    facepool.write_registry(args.out, assets)
    accepted = len(facepool.accepted_images(assets))
    print(f"scanned {len(assets)} images, accepted {accepted} -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------- synth

def cmd_synth_pair(args) -> int:
    records = _load_manifest(args.manifest)
    assets = facepool.read_registry(args.pool)
    faces = facepool.accepted_images(assets)
    if not faces:
        raise FatalInputError(f"face pool {args.pool} has no accepted faces")
    jobs = synth.assign_pairs(records, faces, run_seed=args.seed, fps=args.fps)
    synth.write_jobs(args.out, jobs)
    print(f"paired {len(jobs)} utterances with {len(faces)} faces -> {args.out}")
    return EXIT_OK


def cmd_synth_scaffold(args) -> int:
    try:
        n = synth.scaffold_still_video(args.image, args.duration, args.fps, args.out)
    except synth.SynthError as exc:
        raise FatalInputError(str(exc)) from exc
    print(f"wrote {n} frames at {args.fps} fps -> {args.out}")
    return EXIT_OK


def cmd_synth_run(args) -> int:
    records = _load_manifest(args.manifest)
    records_by_id = {rec.id: rec for rec in records}
    if args.jobs:
        jobs = synth.read_jobs(args.jobs)
    else:
        assets = facepool.read_registry(args.pool) if args.pool else None
        if assets is None:
            raise FatalInputError("synth run needs --jobs or --pool")
        faces = facepool.accepted_images(assets)
        if not faces:
            raise FatalInputError(f"face pool {args.pool} has no accepted faces")
        jobs = synth.assign_pairs(records, faces, run_seed=args.seed, fps=args.fps)
    engine = synth.SubprocessEngine(_split_cmd(args.engine), timeout_s=args.engine_timeout)
    out_dir = args.out_dir if args.out_dir else str(args.out) + ".videos"
    av_records, summary = synth.run_all(
        jobs,
        records_by_id,
        engine,
        out_dir=out_dir,
        journal_path=args.journal,
        workers=args.workers,
        max_attempts=args.max_attempts,
    )
    manifest.write_manifest(args.out, av_records)
    meta = {
        "fps": args.fps,
        "run_seed": args.seed,
        "engine": args.engine,
        "done": summary.done,
        "failed": summary.failed,
    }
    Path(str(args.out) + ".meta.json").write_text(json.dumps(meta, indent=2) + "\n", encoding="utf-8")
    print(f"done {summary.done}, failed {summary.failed}, manifest -> {args.out}")
    if summary.failed:
        for utt_id, reason in sorted(summary.failures.items()):
            print(f"  failed {utt_id}: {reason}", file=sys.stderr)
        return EXIT_PARTIAL
    return EXIT_OK


# ---------------------------------------------------------------- annotate

def cmd_annotate_segment(args) -> int:
    params = vad.VadParams(min_dur_s=args.min_dur, max_dur_s=args.max_dur)
    try:
        segments = vad.extract_segments_file(annotate.resolve_audio(args.media), params)
    except (FileNotFoundError, AudioFormatError) as exc:
        raise FatalInputError(str(exc)) from exc
    with open(args.out, "w", encoding="utf-8") as fh:
        for start, end in segments:
            fh.write(json.dumps({"start_s": start, "end_s": end}) + "\n")
    print(f"{len(segments)} segments -> {args.out}")
    return EXIT_OK


def _read_segments(path: str) -> list[tuple[float, float]]:
    segments = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                raw = json.loads(line)
                segments.append((float(raw["start_s"]), float(raw["end_s"])))
    return segments


def cmd_annotate_filter(args) -> int:
    detector = facepool.SubprocessDetector(_split_cmd(args.detector))
    segments = _read_segments(args.segments)
    annotated = annotate.filter_mouth_visible(
        args.media, segments, detector,
        frame_stride=args.frame_stride, ratio_threshold=args.ratio_threshold,
    )
    with open(args.out, "w", encoding="utf-8") as fh:
        for start, end, mouth_ok in annotated:
            fh.write(json.dumps({"start_s": start, "end_s": end, "mouth_ok": mouth_ok}) + "\n")
    kept = sum(1 for _, _, ok in annotated if ok)
    print(f"{kept}/{len(annotated)} segments mouth-visible -> {args.out}")
    return EXIT_OK


def cmd_annotate_pseudolabel(args) -> int:
    asr = annotate.SubprocessAsr(_split_cmd(args.asr))
    with open(args.segments, "r", encoding="utf-8") as fh:
        segments = []
        for line in fh:
            line = line.strip()
            if line:
                raw = json.loads(line)
                segments.append((float(raw["start_s"]), float(raw["end_s"]), bool(raw.get("mouth_ok", True))))
    tasks = annotate.pseudo_label(args.media, segments, asr)
    store = annotate.TaskStore(args.store)
    added = store.add_tasks(tasks)
    store.close()
    print(f"created {added} review tasks in {args.store}")
    return EXIT_OK


def cmd_annotate_serve(args) -> int:
    review_service.serve(args.store, bind=args.bind, ui_dir=args.ui_dir)
    return EXIT_OK


def cmd_annotate_export(args) -> int:
    store = annotate.TaskStore(args.store)
    try:
        records, total_s = annotate.export_benchmark(store, args.out_dir, language=args.lang)
    finally:
        store.close()
    out_manifest = Path(args.out_dir) / "benchmark.jsonl"
    manifest.write_manifest(out_manifest, records)
    minutes, seconds = divmod(int(round(total_s)), 60)
    print(f"exported {len(records)} clips, {minutes} min {seconds} s -> {out_manifest}")
    return EXIT_OK


# ---------------------------------------------------------------- eval

def cmd_eval_wer(args) -> int:
    records = _load_manifest(args.ref)
    hyps: dict[str, str] = {}
    try:
        with open(args.hyp, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    raw = json.loads(line)
                    hyps[str(raw["id"])] = str(raw.get("text", ""))
    except (OSError, json.JSONDecodeError, KeyError) as exc:
        raise FatalInputError(f"cannot read hypotheses {args.hyp}: {exc}") from exc
    policy = RAW_POLICY if args.no_normalize else DEFAULT_POLICY
    pairs = []
    for rec in records:
        hyp = hyps.get(rec.id, "")
        pairs.append((normalize_text(rec.transcript, policy), normalize_text(hyp, policy)))
    breakdown = corpus_wer(pairs)
    print(json.dumps(breakdown.to_dict(), indent=2))
    return EXIT_OK


def _parse_snr_levels(spec: str) -> list[float | None]:
    levels: list[float | None] = []
    for part in spec.split(","):
        part = part.strip()
        if not part:
            continue
        if part.lower() == "clean":
            levels.append(None)
        else:
            try:
                levels.append(float(part))
            except ValueError:
                raise FatalInputError(f"bad SNR level {part!r}")
    if not levels:
        raise FatalInputError("no SNR levels given")
    return levels


def cmd_eval_sweep(args) -> int:
    records = _load_manifest(args.manifest)
    recognizer = sweep.SubprocessRecognizer(_split_cmd(args.recognizer))
    levels = _parse_snr_levels(args.snr)
    modalities = [m.strip() for m in args.modalities.split(",") if m.strip()]
    policy = RAW_POLICY if args.no_normalize else DEFAULT_POLICY
    try:
        results = sweep.run_sweep(
            recognizer, records, levels, modalities,
            run_seed=args.seed, workdir=Path(args.out) / "conditions",
            dataset_id=args.dataset_id, model_id=args.model_id, policy=policy,
        )
    except ValueError as exc:
        raise FatalInputError(str(exc)) from exc
    sweep.write_records(Path(args.out) / "records.jsonl", results)
    table_path, curve_path = sweep.emit_report(results, args.out)
    print(table_path.read_text(encoding="utf-8"), end="")
    print(f"records -> {Path(args.out) / 'records.jsonl'}")
    print(f"curve   -> {curve_path}")
    return EXIT_OK


def cmd_eval_report(args) -> int:
    records_path = Path(args.in_dir) / "records.jsonl"
    if not records_path.is_file():
        raise FatalInputError(f"no records.jsonl under {args.in_dir}")
    records = sweep.read_records(records_path)
    if not records:
        raise FatalInputError(f"{records_path} is empty")
    table_path, curve_path = sweep.emit_report(records, args.in_dir)
    print(table_path.read_text(encoding="utf-8"), end="")
    print(f"curve -> {curve_path}")
    return EXIT_OK


# ---------------------------------------------------------------- train

def cmd_train_emit_config(args) -> int:
    schedule = trainconfig.TriStageSchedule.from_total(
        args.total_updates,
        peak_lr=args.peak_lr,
        init_scale=args.init_scale,
        final_scale=args.final_scale,
        decay_form=args.decay_form,
    )
    bundle = trainconfig.ConfigBundle(
        schedule=schedule,
        policy=trainconfig.FreezePolicy(freeze_updates=args.freeze),
        vocab=trainconfig.VocabSpec(vocab_size=args.vocab_size, training_text=trainconfig.TRAIN_FILENAME),
        arch=trainconfig.ArchSpec(decoder_layers=args.decoder_layers, init_checkpoint=args.init_checkpoint),
    )
    try:
        trainconfig.emit_bundle(args.train, args.valid, bundle, args.out)
    except trainconfig.BundleError as exc:
        raise FatalInputError(str(exc)) from exc
    print(f"config bundle -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="avforge", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="normalize a source corpus into a canonical manifest")
    p.add_argument("--source", required=True)
    p.add_argument("--format", required=True, choices=("tabular", "jsonl", "scan"))
    p.add_argument("--lang", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--rejects", default=None, help="rejects report path (default: OUT.rejects.jsonl)")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("stats", help="report corpus statistics from a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("facepool", help="face pool registry commands")
    fp_sub = p.add_subparsers(dest="subcommand", required=True)
    b = fp_sub.add_parser("build", help="score a directory of images")
    b.add_argument("--images", required=True)
    b.add_argument("--detector", required=True, help="detector adapter command")
    b.add_argument("--threshold", type=float, default=facepool.DEFAULT_POLICY.threshold)
    b.add_argument("--min-face-side", type=int, default=facepool.DEFAULT_POLICY.min_face_side)
    b.add_argument("--workers", type=int, default=1)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_facepool_build)

    p = sub.add_parser("synth", help="synthetic AV generation commands")
    sy_sub = p.add_subparsers(dest="subcommand", required=True)
    sp = sy_sub.add_parser("pair", help="assign a face to every utterance")
    sp.add_argument("--manifest", required=True)
    sp.add_argument("--pool", required=True)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--fps", type=float, default=synth.DEFAULT_FPS)
    sp.add_argument("--out", required=True)
    sp.set_defaults(func=cmd_synth_pair)
    sc = sy_sub.add_parser("scaffold", help="write a still-frame video for one image")
    sc.add_argument("--image", required=True)
    sc.add_argument("--duration", type=float, required=True)
    sc.add_argument("--fps", type=float, default=synth.DEFAULT_FPS)
    sc.add_argument("--out", required=True)
    sc.set_defaults(func=cmd_synth_scaffold)
    sr = sy_sub.add_parser("run", help="run the lip-sync engine over all jobs")
    sr.add_argument("--manifest", required=True)
    sr.add_argument("--pool", default=None)
    sr.add_argument("--jobs", default=None, help="job list from `synth pair` (else pairs from --pool)")
    sr.add_argument("--engine", required=True, help="lip-sync engine command")
    sr.add_argument("--engine-timeout", type=float, default=600.0)
    sr.add_argument("--fps", type=float, default=synth.DEFAULT_FPS)
    sr.add_argument("--seed", type=int, default=0)
    sr.add_argument("--workers", type=int, default=1)
    sr.add_argument("--max-attempts", type=int, default=synth.DEFAULT_MAX_ATTEMPTS)
    sr.add_argument("--journal", required=True)
    sr.add_argument("--out-dir", default=None, help="directory for generated videos (default: OUT.videos/)")
    sr.add_argument("--out", required=True, help="output AV manifest")
    sr.set_defaults(func=cmd_synth_run)

    p = sub.add_parser("annotate", help="benchmark annotation commands")
    an_sub = p.add_subparsers(dest="subcommand", required=True)
    a = an_sub.add_parser("segment", help="energy-VAD segment extraction")
    a.add_argument("--media", required=True)
    a.add_argument("--min-dur", type=float, default=vad.DEFAULT_VAD.min_dur_s)
    a.add_argument("--max-dur", type=float, default=vad.DEFAULT_VAD.max_dur_s)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_annotate_segment)
    a = an_sub.add_parser("filter", help="mouth-visibility filtering")
    a.add_argument("--media", required=True)
    a.add_argument("--segments", required=True)
    a.add_argument("--detector", required=True)
    a.add_argument("--frame-stride", type=int, default=5)
    a.add_argument("--ratio-threshold", type=float, default=0.5)
    a.add_argument("--out", required=True)
    a.set_defaults(func=cmd_annotate_filter)
    a = an_sub.add_parser("pseudolabel", help="ASR pseudo-labeling into a task store")
    a.add_argument("--media", required=True)
    a.add_argument("--segments", required=True)
    a.add_argument("--asr", required=True, help="ASR adapter command")
    a.add_argument("--store", required=True)
    a.set_defaults(func=cmd_annotate_pseudolabel)
    a = an_sub.add_parser("serve", help="run the review HTTP service")
    a.add_argument("--store", required=True)
    a.add_argument("--bind", default="127.0.0.1:8765")
    a.add_argument("--ui-dir", default=None, help="built review UI to serve at /")
    a.set_defaults(func=cmd_annotate_serve)
    a = an_sub.add_parser("export", help="export accepted tasks as a benchmark")
    a.add_argument("--store", required=True)
    a.add_argument("--lang", required=True)
    a.add_argument("--out-dir", required=True)
    a.set_defaults(func=cmd_annotate_export)

    p = sub.add_parser("eval", help="evaluation commands")
    ev_sub = p.add_subparsers(dest="subcommand", required=True)
    e = ev_sub.add_parser("wer", help="pooled corpus WER of hypotheses against a manifest")
    e.add_argument("--ref", required=True)
    e.add_argument("--hyp", required=True)
    e.add_argument("--no-normalize", action="store_true")
    e.set_defaults(func=cmd_eval_wer)
    e = ev_sub.add_parser("sweep", help="modality and SNR sweep against a recognizer")
    e.add_argument("--manifest", required=True)
    e.add_argument("--recognizer", required=True, help="recognizer adapter command")
    e.add_argument("--snr", required=True, help="comma list of dB levels, 'clean' allowed")
    e.add_argument("--modalities", default="AV,A,V")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--no-normalize", action="store_true")
    e.add_argument("--dataset-id", default="dataset")
    e.add_argument("--model-id", default="model")
    e.add_argument("--out", required=True)
    e.set_defaults(func=cmd_eval_sweep)
    e = ev_sub.add_parser("report", help="re-emit table and curve from sweep records")
    e.add_argument("--in", dest="in_dir", required=True)
    e.set_defaults(func=cmd_eval_report)

    p = sub.add_parser("train", help="training configuration commands")
    tr_sub = p.add_subparsers(dest="subcommand", required=True)
    t = tr_sub.add_parser("emit-config", help="emit a validated fine-tuning config bundle")
    t.add_argument("--train", required=True)
    t.add_argument("--valid", required=True)
    t.add_argument("--total-updates", type=int, required=True)
    t.add_argument("--out", required=True)
    t.add_argument("--peak-lr", type=float, default=1e-3)
    t.add_argument("--freeze", type=int, default=22500)
    t.add_argument("--vocab-size", type=int, default=1000)
    t.add_argument("--init-scale", type=float, default=0.01)
    t.add_argument("--final-scale", type=float, default=0.01)
    t.add_argument("--decay-form", choices=trainconfig.DECAY_FORMS, default="exponential")
    t.add_argument("--decoder-layers", type=int, default=6)
    t.add_argument("--init-checkpoint", default="")
    t.set_defaults(func=cmd_train_emit_config)

    return parser


def _fuse_dash_values(argv: list[str], flags: tuple[str, ...] = ("--snr",)) -> list[str]:
    # argparse misreads "--snr -5,0,..." as a missing argument; fold the value in
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in flags and i + 1 < len(argv) and argv[i + 1].startswith("-"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv: list[str] | None = None) -> int:
    if argv is None:
        argv = sys.argv[1:]
    parser = build_parser()
    args = parser.parse_args(_fuse_dash_values(list(argv)))
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except FatalInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FATAL
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 130


if __name__ == "__main__":
    sys.exit(main())
