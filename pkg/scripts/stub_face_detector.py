#!/usr/bin/env python3
"""Reference face detector adapter for demos.

Implements the detector subprocess contract: invoked with an image path,
emits {"faces": [{"bbox": [x, y, w, h], "mouth_conf": f}]} on stdout.
Reports one centered face spanning 80% of the image with a fixed mouth
confidence; replace with a real detector for production pools.
"""

import json
import sys

import cv2


def main():
    img = cv2.imread(sys.argv[1])
    if img is None:
        print(json.dumps({"faces": []}))
        return
    h, w = img.shape[:2]
    side = 0.8 * min(w, h)
    bbox = [0.5 * (w - side), 0.5 * (h - side), side, side]
    print(json.dumps({"faces": [{"bbox": bbox, "mouth_conf": 0.9}]}))


if __name__ == "__main__":
    main()
