#!/usr/bin/env python3
"""Writes the file-format conformance fixtures under tests/conformance.

Uses only the Python standard library so the fixtures are produced
independently of the C++ encoders they are checked against.
"""

import json
import struct
import sys
import zlib
from pathlib import Path

SEGMENT_MAGIC = b"BOSCSEG1"
FEATURE_MAGIC = b"BOSCFEA1"


def segment_raster(width, height, ids):
    assert len(ids) == width * height
    return SEGMENT_MAGIC + struct.pack("<II", width, height) + struct.pack(f"<{len(ids)}I", *ids)


def feature_table(rows):
    dims = len(rows[0][1])
    out = FEATURE_MAGIC + struct.pack("<II", len(rows), dims)
    for segment, values in rows:
        out += struct.pack("<I", segment) + struct.pack(f"<{dims}d", *values)
    return out


def png_rgb(width, height, pixels):
    def chunk(kind, data):
        body = kind + data
        return struct.pack(">I", len(data)) + body + struct.pack(">I", zlib.crc32(body) & 0xFFFFFFFF)

    raw = b"".join(b"\x00" + bytes(v for px in pixels[r * width:(r + 1) * width] for v in px)
                   for r in range(height))
    header = struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0)
    return (b"\x89PNG\r\n\x1a\n" + chunk(b"IHDR", header) + chunk(b"IDAT", zlib.compress(raw)) +
            chunk(b"IEND", b""))


def write(path, data):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(data if isinstance(data, bytes) else data.encode())


def main(root):
    ids = [1, 1, 2, 0, 2, 2]
    good = segment_raster(3, 2, ids)
    write(root / "segments_3x2.bin", good)
    write(root / "bad_magic.bin", b"BOSCSEG2" + good[8:])
    write(root / "truncated.bin", good[:-2])
    write(root / "trailing.bin", good + b"\x00")
    write(root / "zero_width.bin", segment_raster(0, 2, []))

    table = [(3, [0.5, 1.0]), (7, [-2.0, 0.001])]
    write(root / "features.bin", feature_table(table))
    write(root / "features.txt", "# segment_id f0 f1\n3 0.5 1.0\n\n7 -2.0 0.001\n")
    write(root / "features_ragged.txt", "3 0.5 1.0\n7 -2.0\n")

    project = root / "project"
    manifest = {
        "format_version": 1,
        "project_id": "conformance",
        "name": "two regions",
        "created": 1700000000,
        "modified": 1700000100,
        "image_file": "image.png",
        "segment_file": "segments.bin",
        "class_file": "classes.json",
        "georef": {"coefficients": [1.0, 0.0, 33554432.0, 0.0, 1.0, 33554432.0], "anchor_zoom": 18},
        "control_points": [],
        "segmenter": {"k": 500.0, "min_region_size": 16},
        "clustering": {"k": 2, "t": None, "propagate": True, "standardize": False},
        "jobs": [],
    }
    classes = {
        "classes": [
            {"id": 1, "name": "default", "color": [255, 255, 255, 255]},
            {"id": 4, "name": "roof", "color": [200, 40, 40, 255]},
        ],
        "class_map": [[1, 1], [2, 4]],
    }
    write(project / "manifest.json", json.dumps(manifest, indent=2) + "\n")
    write(project / "classes.json", json.dumps(classes, indent=2) + "\n")
    write(project / "segments.bin", good)
    write(project / "image.png", png_rgb(3, 2, [(10, 10, 10), (10, 10, 10), (90, 0, 0),
                                               (0, 0, 0), (90, 0, 0), (90, 0, 0)]))

    bad_version = root / "bad_version"
    write(bad_version / "manifest.json", json.dumps({**manifest, "format_version": 99}, indent=2) + "\n")
    write(bad_version / "classes.json", json.dumps(classes, indent=2) + "\n")
    write(bad_version / "segments.bin", good)
    write(bad_version / "image.png", (project / "image.png").read_bytes())


if __name__ == "__main__":
    main(Path(sys.argv[1]) if len(sys.argv) > 1 else Path(__file__).resolve().parent.parent / "tests" / "conformance")
