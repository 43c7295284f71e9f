"""Hot-loop dispatch: compiled extension when built, numpy fallback otherwise.

Set ``EHFBL_PURE_PYTHON=1`` to force the fallback.
"""
import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if os.environ.get("EHFBL_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # noqa: F811
        BACKEND = "cython"
    except ImportError:
        pass


def walk_stats(harvest, use, threshold):
    harvest = np.ascontiguousarray(harvest, dtype=np.float64)
    use = np.ascontiguousarray(use, dtype=np.float64)
    if harvest.shape != use.shape:
        raise ValueError(f"length mismatch: {harvest.shape[0]} harvests vs {use.shape[0]} uses")
    if harvest.size == 0:
        raise ValueError("empty walk")
    return _impl.walk_stats(harvest, use, float(threshold))


def info_densities(book, w, noise_var, out_var):
    book = np.ascontiguousarray(book, dtype=np.float64)
    w = np.ascontiguousarray(w, dtype=np.float64)
    if book.ndim != 2 or book.shape[1] != w.shape[0]:
        raise ValueError(f"codebook shape {book.shape} does not match length {w.shape[0]}")
    return _impl.info_densities(book, w, float(noise_var), float(out_var))
