"""Pair list requested by the reconstruction engine for (N, k).

Kept independent of the C++ code on purpose; a fixture test checks that both
sides agree.
"""


def partition(frame_count, fragment_size):
    """Disjoint windows of consecutive 1-based frames.

    A trailing window of two or more frames stays short; a single trailing
    frame joins the previous window.
    """
    if fragment_size < 2:
        raise ValueError("fragment_size must be >= 2")
    if frame_count < 2:
        raise ValueError("need at least two frames")
    windows = []
    start = 1
    while start <= frame_count:
        end = min(start + fragment_size - 1, frame_count)
        windows.append(list(range(start, end + 1)))
        start = end + 1
    if len(windows) > 1 and len(windows[-1]) == 1:
        windows[-2].extend(windows.pop())
    return windows


def keyframe_edges(keyframes):
    """Keyframe pairs at most two fragments apart."""
    edges = []
    for gap in (1, 2):
        for i in range(len(keyframes) - gap):
            edges.append((keyframes[i], keyframes[i + gap]))
    return edges


def enumerate_pairs(frame_count, fragment_size):
    windows = partition(frame_count, fragment_size)
    pairs = set()
    for window in windows:
        for frame in window[1:]:
            pairs.add((window[0], frame))
    pairs.update(keyframe_edges([w[0] for w in windows]))
    return sorted(pairs)
