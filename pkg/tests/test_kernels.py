import os
import subprocess
import sys
from itertools import combinations

import numpy as np
import pytest

from cliquehit import _accel, kernels
from cliquehit.procgen import standard_process

pytestmark = pytest.mark.skipif(not _accel.ENABLED, reason="numba is disabled; nothing to compare")


def py(f):
    return f.py_func


def test_hitting_kernels_agree():
    for s in range(40):
        g = standard_process(10, 2, s).edge_array() - 1
        h = standard_process(9, 3, s).edge_array() - 1
        assert kernels.min_degree_hit(h, 9) == py(kernels.min_degree_hit)(h, 9)
        for r in (3, 4):
            assert kernels.clique_cover_hit(g, 10, r) == py(kernels.clique_cover_hit)(g, 10, r)


def test_exact_cover_agrees():
    rng = np.random.default_rng(0)
    all_e = np.array(list(combinations(range(9), 3)), dtype=np.int64)
    for _ in range(60):
        e = all_e[np.sort(rng.choice(len(all_e), size=int(rng.integers(3, 30)), replace=False))]
        a, b = kernels.exact_cover(e, 9, 10 ** 6), py(kernels.exact_cover)(e, 9, 10 ** 6)
        assert a[0] == b[0] and list(a[1]) == list(b[1])


def test_wmc_and_thinning_agree():
    rng = np.random.default_rng(1)
    for _ in range(30):
        cl = rng.integers(1, 1 << 10, size=int(rng.integers(0, 6))).astype(np.int64)
        assert kernels.wmc_enumerate(cl, 10, 0.3) == pytest.approx(py(kernels.wmc_enumerate)(cl, 10, 0.3), abs=1e-14)
        e = standard_process(12, 3, int(rng.integers(1000))).edge_array() - 1
        keep = rng.random(len(e)) < 0.7
        assert kernels.degree_ok_after_thinning(e, keep, 12, 30) == py(kernels.degree_ok_after_thinning)(e, keep, 12, 30)


def test_fallback_process_runs_same_results():
    code = ("from cliquehit import _accel, kernels\n"
            "from cliquehit.procgen import standard_process, hitting_time_clique_cover\n"
            "assert not _accel.ENABLED\n"
            "print([hitting_time_clique_cover(standard_process(9, 2, s), 3) for s in range(10)])\n")
    env = dict(os.environ, CLIQUEHIT_DISABLE_NUMBA="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    from cliquehit.procgen import hitting_time_clique_cover
    want = [hitting_time_clique_cover(standard_process(9, 2, s), 3) for s in range(10)]
    assert out.stdout.strip() == str(want)
