"""Independent brute-force references shared by the test modules."""

import numpy as np


def zoom_argmin(f, lo: float, hi: float, n: int, levels: int = 3, n_zoom: int = 1001):
    """Grid minimization of ``f`` (vectorized over a 1-D array), then repeated grid zooms."""
    g = np.linspace(lo, hi, n)
    v = f(g)
    j = int(np.argmin(v))
    best, h = (float(v[j]), float(g[j])), g[1] - g[0]
    for _ in range(levels):
        g = np.linspace(best[1] - h, best[1] + h, n_zoom)
        v = f(g)
        j = int(np.argmin(v))
        best, h = (float(v[j]), float(g[j])), g[1] - g[0]
    return best


def envelope_sup(a: np.ndarray, b: np.ndarray, chunk: int = 200):
    """``gamma -> max_w |a(w) + gamma b(w)|`` for sampled real ``a``, ``b``."""

    def f(gs):
        out = np.empty(gs.size)
        for i in range(0, gs.size, chunk):
            out[i : i + chunk] = np.abs(a + gs[i : i + chunk, None] * b).max(axis=1)
        return out

    return f
