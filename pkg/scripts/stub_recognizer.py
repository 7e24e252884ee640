#!/usr/bin/env python3
"""Reference recognizer adapter: echoes references, degrading under noise.

Implements the recognizer subprocess contract
    CMD --manifest SHARD --modality {AV|A|V} [--snr-db X]
emitting JSON-lines {"id", "text"} on stdout. The hypothesis corrupts more
leading words as SNR drops (and is useless for video-only), which makes the
demo WER-vs-SNR curve behave like a real system's.
"""

import argparse
import json


def corrupted_words(modality: str, snr_db):
    if modality == "V":
        return 10**6  # video-only: no usable stream in this stub
    if snr_db is None:
        return 0
    return max(int(round((20.0 - float(snr_db)) / 5.0)), 0)


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--manifest", required=True)
    parser.add_argument("--modality", required=True)
    parser.add_argument("--snr-db", default=None)
    args = parser.parse_args()
    k = corrupted_words(args.modality, args.snr_db)
    with open(args.manifest, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            row = json.loads(line)
            words = row.get("transcript", "").split()
            for i in range(min(k, len(words))):
                words[i] = f"erro{i}"
            print(json.dumps({"id": row["id"], "text": " ".join(words)}, ensure_ascii=False))


if __name__ == "__main__":
    main()
