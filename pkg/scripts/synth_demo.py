#!/usr/bin/env python3
"""End-to-end synthetic-AV demo on generated fixtures.

Builds a small tone corpus and a one-image face pool, pairs and runs the
stub lip-sync engine through the CLI, and prints the resulting AV manifest
stats. Everything lands under --workdir (default ./demo_synth).
"""

import argparse
import json
import shlex
import subprocess
import sys
from pathlib import Path

import cv2
import numpy as np

SCRIPTS = Path(__file__).parent


def run(cmd: str):
    print(f"$ {cmd}", flush=True)
    subprocess.run(shlex.split(cmd), check=True)


def build_fixtures(workdir: Path, n_utts: int):
    import wave

    src = workdir / "source"
    src.mkdir(parents=True, exist_ok=True)
    rows = []
    for i in range(n_utts):
        sr = 16000
        duration = 0.8 + 0.1 * i
        t = np.arange(int(duration * sr)) / sr
        pcm = (0.4 * np.sin(2 * np.pi * (180 + 15 * i) * t) * 32767).astype("<i2")
        wav = src / f"utt{i:03d}.wav"
        with wave.open(str(wav), "wb") as fh:
            fh.setnchannels(1)
            fh.setsampwidth(2)
            fh.setframerate(sr)
            fh.writeframes(pcm.tobytes())
        rows.append({"id": f"utt{i:03d}", "audio": str(wav), "text": f"frase sintètica {i}"})
    with (src / "rows.jsonl").open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    faces = workdir / "faces"
    faces.mkdir(exist_ok=True)
    rng = np.random.default_rng(0)
    for i in range(3):
        img = rng.integers(60, 200, size=(256, 256, 3), dtype=np.uint8)
        cv2.imwrite(str(faces / f"face{i}.png"), img)
    return src, faces


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--workdir", default="demo_synth")
    parser.add_argument("--utterances", type=int, default=10)
    args = parser.parse_args()
    work = Path(args.workdir)
    src, faces = build_fixtures(work, args.utterances)
    py = sys.executable

    manifest = work / "manifest.jsonl"
    run(f"{py} -m avforge.cli ingest --source {src} --format jsonl --lang ca --out {manifest}")
    pool = work / "pool.jsonl"
    run(f"{py} -m avforge.cli facepool build --images {faces} "
        f"--detector '{py} {SCRIPTS / 'stub_face_detector.py'}' --out {pool}")
    jobs = work / "jobs.jsonl"
    run(f"{py} -m avforge.cli synth pair --manifest {manifest} --pool {pool} --seed 7 --out {jobs}")
    av_manifest = work / "av_manifest.jsonl"
    run(f"{py} -m avforge.cli synth run --manifest {manifest} --jobs {jobs} "
        f"--engine '{py} {SCRIPTS / 'stub_lipsync_engine.py'}' "
        f"--journal {work / 'journal.jsonl'} --out-dir {work / 'videos'} "
        f"--out {av_manifest} --workers 4")
    run(f"{py} -m avforge.cli stats --manifest {av_manifest}")


if __name__ == "__main__":
    main()
