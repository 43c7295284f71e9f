import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ehfbl import _pykernels, kernels

compiled = pytest.importorskip("ehfbl._ckernels", reason="compiled kernels not built")

walks = st.integers(1, 300).flatmap(lambda n: st.tuples(
    arrays(np.float64, n, elements=st.floats(0, 10)),
    arrays(np.float64, n, elements=st.floats(0, 10)),
    st.floats(0, 50),
))


@settings(max_examples=300, deadline=None)
@given(walks)
def test_walk_stats_parity(case):
    h, u, thr = case
    py = _pykernels.walk_stats(h, u, thr)
    c = compiled.walk_stats(h, u, thr)
    assert py[1] == c[1]
    np.testing.assert_allclose(py[0], c[0], rtol=1e-12, atol=1e-9)
    np.testing.assert_allclose(py[2], c[2], rtol=1e-12, atol=1e-9)


@pytest.mark.parametrize("M, n", [(1, 1), (3, 17), (64, 256), (500, 33)])
def test_info_densities_parity(M, n):
    rng = np.random.default_rng(M * 1000 + n)
    book = rng.normal(size=(M, n))
    w = rng.normal(size=n) * 1.7
    np.testing.assert_allclose(compiled.info_densities(book, w, 0.6, 1.6),
                               _pykernels.info_densities(book, w, 0.6, 1.6), rtol=1e-11, atol=1e-9)


def test_dispatch_backend_and_validation():
    assert kernels.BACKEND in ("cython", "python")
    with pytest.raises(ValueError):
        kernels.walk_stats(np.ones(3), np.ones(4), 1.0)
    with pytest.raises(ValueError):
        kernels.walk_stats(np.ones(0), np.ones(0), 1.0)
    with pytest.raises(ValueError):
        kernels.info_densities(np.ones((2, 3)), np.ones(4), 1.0, 2.0)
    # non-contiguous input is copied, not misread
    h = np.arange(20.0)[::2]
    assert kernels.walk_stats(h, np.zeros(10), 0.0) == _pykernels.walk_stats(np.ascontiguousarray(h), np.zeros(10), 0.0)


def test_pure_python_switch():
    import os
    import subprocess
    import sys
    env = dict(os.environ, EHFBL_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import ehfbl.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
