"""Writer for the prior bundle directory read by the reconstruction engine.

Pair file: b"VLPR", then version, H, W, M as little-endian u32, then f32
arrays pointmap_a (H*W*3), pointmap_b (H*W*3), confidence_a (H*W),
confidence_b (H*W) and matches (M*4), row-major, unpadded.
"""

import os
import struct
from dataclasses import dataclass

import numpy as np

MAGIC = b"VLPR"
VERSION = 1


@dataclass
class Pair:
    view_a: int
    view_b: int
    pointmap_a: np.ndarray  # (H, W, 3), view_a camera frame
    pointmap_b: np.ndarray  # (H, W, 3), view_a camera frame
    confidence_a: np.ndarray  # (H, W)
    confidence_b: np.ndarray  # (H, W)
    matches: np.ndarray  # (M, 4): xa, ya, xb, yb

    def check(self):
        h, w = self.confidence_a.shape
        for name, arr, shape in (
            ("pointmap_a", self.pointmap_a, (h, w, 3)),
            ("pointmap_b", self.pointmap_b, (h, w, 3)),
            ("confidence_b", self.confidence_b, (h, w)),
        ):
            if arr.shape != shape:
                raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
        if self.matches.ndim != 2 or self.matches.shape[1] != 4:
            raise ValueError("matches must be (M, 4)")
        arrays = (self.pointmap_a, self.pointmap_b, self.confidence_a, self.confidence_b,
                  self.matches)
        if not all(np.isfinite(a).all() for a in arrays):
            raise ValueError("non-finite value")
        if (self.confidence_a < 0).any() or (self.confidence_b < 0).any():
            raise ValueError("negative confidence")
        m = self.matches
        if len(m) and ((m[:, [0, 2]] < 0).any() or (m[:, [0, 2]] > w - 1).any()
                       or (m[:, [1, 3]] < 0).any() or (m[:, [1, 3]] > h - 1).any()):
            raise ValueError("match outside image bounds")


def pair_file_name(view_a, view_b):
    return f"pair_{view_a}_{view_b}.bin"


def encode_pair(pair):
    pair.check()
    h, w = pair.confidence_a.shape
    header = MAGIC + struct.pack("<4I", VERSION, h, w, len(pair.matches))
    body = b"".join(
        np.ascontiguousarray(a, dtype="<f4").tobytes()
        for a in (pair.pointmap_a, pair.pointmap_b, pair.confidence_a, pair.confidence_b,
                  pair.matches.reshape(-1, 4)))
    return header + body


def _write_atomic(path, data):
    tmp = path + ".tmp"
    with open(tmp, "wb") as f:
        f.write(data)
    os.replace(tmp, path)


def format_float(v):
    # Same digits as the engine's manifest writer (17 significant, %g style).
    return "%.17g" % float(v)


def write_bundle(out_dir, intrinsics, pairs, skipped=()):
    """intrinsics = (fx, fy, cx, cy, W, H); skipped lists (a, b, reason)."""
    os.makedirs(out_dir, exist_ok=True)
    fx, fy, cx, cy, w, h = intrinsics
    lines = [f"intrinsics {format_float(fx)} {format_float(fy)} {format_float(cx)} "
             f"{format_float(cy)} {int(w)} {int(h)}"]
    for a, b, reason in skipped:
        lines.append(f"# skipped pair {a} {b}: {reason}")
    for pair in sorted(pairs, key=lambda p: (p.view_a, p.view_b)):
        if pair.confidence_a.shape != (h, w):
            raise ValueError("pair size differs from intrinsics")
        name = pair_file_name(pair.view_a, pair.view_b)
        _write_atomic(os.path.join(out_dir, name), encode_pair(pair))
        lines.append(f"pair {pair.view_a} {pair.view_b} {name}")
    _write_atomic(os.path.join(out_dir, "manifest.txt"), ("\n".join(lines) + "\n").encode())
