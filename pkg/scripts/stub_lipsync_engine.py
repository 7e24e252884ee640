#!/usr/bin/env python3
"""Reference lip-sync engine adapter: copies the still-frame scaffold through.

Implements the engine subprocess contract
    ENGINE --face VIDEO --audio WAV --out VIDEO
so pipelines can be exercised end to end without a GPU model. Swap in a real
GAN-based lip-sync generator by pointing --engine at it instead.
"""

import argparse
import shutil


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--face", required=True)
    parser.add_argument("--audio", required=True)
    parser.add_argument("--out", required=True)
    args = parser.parse_args()
    shutil.copyfile(args.face, args.out)


if __name__ == "__main__":
    main()
