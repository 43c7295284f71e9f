"""Pure numpy implementations of the Monte Carlo hot loops."""
import math

import numpy as np

_LOG2E = math.log2(math.e)


def walk_stats(harvest, use, threshold):
    """Scan S_k = sum_{l<=k} (harvest_l - use_l), k = 1..n.

    Returns ``(min_S, first_k, final_S)`` where ``first_k`` is the 1-based
    first index with ``S_k < -threshold`` or 0 when the walk never drops
    below the threshold.
    """
    s = np.cumsum(np.asarray(harvest, dtype=float) - np.asarray(use, dtype=float))
    below = np.flatnonzero(s < -threshold)
    first = int(below[0]) + 1 if below.size else 0
    return float(s.min()), first, float(s[-1])


def info_densities(book, w, noise_var, out_var):
    """Information density in bits of every codebook row against ``w``."""
    book = np.asarray(book, dtype=float)
    w = np.asarray(w, dtype=float)
    n = w.shape[0]
    dist = np.einsum("ij,ij->i", book - w, book - w)
    ww = float(np.dot(w, w))
    return 0.5 * n * math.log2(out_var / noise_var) + \
        _LOG2E * (ww / (2.0 * out_var) - dist / (2.0 * noise_var))
