import numpy as np
import pytest

from delib import MetricInstance


def random_euclidean_instance(rng, m, n, dim=2):
    """Random planar instance: m candidates, n weighted voter locations.

    Euclidean distances satisfy the triangle inequality by construction,
    so the result always validates.
    """
    pts = rng.standard_normal((m + n, dim))
    names = [f"c{i}" for i in range(m)] + [f"v{i}" for i in range(n)]
    w = rng.random(n)
    w /= w.sum()
    dists = {
        (names[a], names[b]): float(np.linalg.norm(pts[a] - pts[b]))
        for a in range(m + n)
        for b in range(a + 1, m + n)
    }
    return MetricInstance.build(
        names[:m], [(names[m + i], w[i]) for i in range(n)], dists
    )


@pytest.fixture
def small_line_instance():
    """Three candidates and three voter blocks on a line segment [0, 4]."""
    # A at 0, B at 2, C at 4; voters at 0.5 (mass .5), 2.5 (.3), 3.5 (.2)
    pos = {"A": 0.0, "B": 2.0, "C": 4.0, "u": 0.5, "v": 2.5, "w": 3.5}
    dists = {
        (a, b): abs(pos[a] - pos[b])
        for i, a in enumerate(pos)
        for b in list(pos)[i + 1:]
    }
    return MetricInstance.build(
        ["A", "B", "C"], [("u", 0.5), ("v", 0.3), ("w", 0.2)], dists
    )
