"""Regenerates the golden fixtures under tests/data with the exporter's own
writer and pair enumeration:

  golden_bundle/     two 3x4 pairs with closed-form contents
  pairs_n16_k4.txt   pair list for N=16, k=4
"""

import os
import sys

import numpy as np

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
from fragsplat_export import Pair, enumerate_pairs, write_bundle  # noqa: E402

H, W = 3, 4
INTRINSICS = (4.0, 4.0, 1.5, 1.0, W, H)


def golden_pair(view_a, view_b):
    i = np.arange(H * W * 3, dtype=np.float64).reshape(H, W, 3)
    pointmap_a = 0.25 * i + view_a
    pointmap_b = -0.5 * i + view_b
    confidence_a = np.arange(H * W, dtype=np.float64).reshape(H, W) / 8.0
    confidence_b = np.full((H, W), 0.01 * view_b)
    matches = np.array([[0, 0, 1.5, 0.25], [3, 2, 2.75, 1.5], [1, 1, 0.5, 2]],
                       dtype=np.float64)[: view_b - view_a + 1]
    return Pair(view_a, view_b, pointmap_a, pointmap_b, confidence_a, confidence_b, matches)


def main():
    data = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "tests", "data")
    write_bundle(os.path.join(data, "golden_bundle"), INTRINSICS,
                 [golden_pair(1, 2), golden_pair(1, 3)])
    with open(os.path.join(data, "pairs_n16_k4.txt"), "w") as f:
        for a, b in enumerate_pairs(16, 4):
            f.write(f"{a} {b}\n")


if __name__ == "__main__":
    main()
