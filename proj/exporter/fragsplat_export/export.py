"""export --frames DIR --out DIR --k 4 --model NAME --long-side 512

Runs a two-view prior over every pair the engine will request and writes a
bundle. Model backends register themselves in MODELS; none ships here.
"""

import argparse
import os
import re
import sys

from .bundle import write_bundle
from .pairs import enumerate_pairs


class ModelLoadFailure(RuntimeError):
    pass


class PairInferenceFailure(RuntimeError):
    pass


# name -> factory(long_side) returning an object with
#   intrinsics(frames) -> (fx, fy, cx, cy, W, H)
#   infer(frame_a, frame_b, view_a, view_b) -> bundle.Pair
MODELS = {}

FRAME_RE = re.compile(r"frame_(\d{4})\.ppm$")


def list_frames(frame_dir):
    frames = {}
    for name in sorted(os.listdir(frame_dir)):
        m = FRAME_RE.match(name)
        if m:
            frames[int(m.group(1))] = os.path.join(frame_dir, name)
    if not frames or sorted(frames) != list(range(1, len(frames) + 1)):
        raise ValueError(f"{frame_dir}: frames must be frame_0001.ppm, frame_0002.ppm, ...")
    return frames


def export(frame_dir, out_dir, k, model, long_side=512):
    frames = list_frames(frame_dir)
    pairs = enumerate_pairs(len(frames), k)
    if model not in MODELS:
        raise ModelLoadFailure(f"model '{model}' is not available")
    runner = MODELS[model](long_side)
    results, skipped = [], []
    for a, b in pairs:
        try:
            pair = runner.infer(frames[a], frames[b], a, b)
        except PairInferenceFailure as e:
            skipped.append((a, b, str(e)))
            continue
        if max(pair.confidence_a.shape) > long_side:
            raise ValueError(f"pair ({a}, {b}) exceeds the resolution cap")
        results.append(pair)
    write_bundle(out_dir, runner.intrinsics(frames), results, skipped)
    return pairs


def main(argv=None):
    parser = argparse.ArgumentParser(prog="export")
    parser.add_argument("--frames", required=True)
    parser.add_argument("--out", required=True)
    parser.add_argument("--k", type=int, default=4)
    parser.add_argument("--model", required=True)
    parser.add_argument("--long-side", type=int, default=512)
    args = parser.parse_args(argv)
    try:
        export(args.frames, args.out, args.k, args.model, args.long_side)
    except (ModelLoadFailure, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
