#!/usr/bin/env python3
"""WER-vs-SNR sweep demo against the degrading stub recognizer.

Builds a fixture corpus, runs `eval sweep` over the usual SNR grid for all
three modality masks, and leaves table.txt / curve.tsv under --workdir.
"""

import argparse
import json
import shlex
import subprocess
import sys
import wave
from pathlib import Path

import numpy as np

SCRIPTS = Path(__file__).parent


def run(cmd: str):
    print(f"$ {cmd}", flush=True)
    subprocess.run(shlex.split(cmd), check=True)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--workdir", default="demo_sweep")
    parser.add_argument("--utterances", type=int, default=8)
    args = parser.parse_args()
    work = Path(args.workdir)
    src = work / "source"
    src.mkdir(parents=True, exist_ok=True)

    rows = []
    for i in range(args.utterances):
        sr = 16000
        t = np.arange(int(1.2 * sr)) / sr
        pcm = (0.4 * np.sin(2 * np.pi * (160 + 25 * i) * t) * 32767).astype("<i2")
        wav = src / f"utt{i:03d}.wav"
        with wave.open(str(wav), "wb") as fh:
            fh.setnchannels(1)
            fh.setsampwidth(2)
            fh.setframerate(sr)
            fh.writeframes(pcm.tobytes())
        text = f"una frase de prova amb prou paraules per degradar {i}"
        rows.append({"id": f"utt{i:03d}", "audio": str(wav), "text": text})
    with (src / "rows.jsonl").open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")

    py = sys.executable
    manifest = work / "manifest.jsonl"
    run(f"{py} -m avforge.cli ingest --source {src} --format jsonl --lang ca --out {manifest}")
    run(f"{py} -m avforge.cli eval sweep --manifest {manifest} "
        f"--recognizer '{py} {SCRIPTS / 'stub_recognizer.py'}' "
        f"--snr clean,-5,0,5,10,20 --modalities AV,A,V --seed 13 --out {work / 'results'}")
    print((work / "results" / "curve.tsv").read_text(), end="")


if __name__ == "__main__":
    main()
