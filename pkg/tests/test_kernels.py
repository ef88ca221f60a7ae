import subprocess
import sys

import numpy as np
import pytest

from fragsched import kernels
from fragsched.instances import random_instance
from fragsched.milp.objective import gain_table


def test_env_flag_selects_numpy():
    code = "from fragsched import kernels; print(kernels.BACKEND)"
    env = {"FRAGSCHED_DISABLE_NUMBA": "1", "PATH": ""}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True)
    assert out.stdout.strip() == "numpy"


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get_backend("fortran")


def _tables(seed):
    rng = np.random.default_rng(seed)
    state, cfg = random_instance(rng, max_jobs=5, max_nodes=14)
    _, gains, sizes, changed, nchoice = gain_table(state, cfg)
    return gains, sizes, changed, nchoice, state.n_nodes


@pytest.mark.parametrize("seed", range(20))
def test_backends_agree_bitwise(seed):
    args = _tables(seed)
    a = kernels.get_backend("numpy")
    b = kernels.get_backend("numba")
    Va, Ca = a.budget_dp(*args)
    Vb, Cb = b.budget_dp(*args)
    assert np.array_equal(Va, Vb) and np.array_equal(Ca, Cb)
    ia, oa, ta = a.exhaustive_best(*args)
    ib, ob, tb = b.exhaustive_best(*args)
    assert list(ia) == list(ib) and oa == ob and ta == tb


def test_dp_budget_zero_takes_all_downs(kernel):
    # two jobs currently at 3 and 2 nodes; with no budget both drop to zero
    gains = np.array([[-3 * 10.0 * 5, 1.0, 2.0], [-2 * 10.0 * 5, 1.0, -np.inf]])
    sizes = np.array([[0, 1, 2], [0, 1, 0]], dtype=np.int64)
    changed = np.array([[1, 1, 1], [1, 1, 0]], dtype=np.int64)
    nchoice = np.array([3, 2], dtype=np.int64)
    V, _ = kernel.budget_dp(gains, sizes, changed, nchoice, 0)
    assert V[0, 0] == -250.0


def test_exhaustive_counts_candidates(kernel):
    gains = np.zeros((2, 5))
    sizes = np.tile(np.arange(5, dtype=np.int64), (2, 1))
    changed = np.zeros((2, 5), dtype=np.int64)
    nchoice = np.array([5, 5], dtype=np.int64)
    _, _, total = kernel.exhaustive_best(gains, sizes, changed, nchoice, 8)
    assert total == 25


def test_benchmark_script_runs():
    import pathlib
    import subprocess
    import sys

    script = pathlib.Path(__file__).parents[1] / "benchmarks" / "bench_kernels.py"
    proc = subprocess.run([sys.executable, str(script), "--instances", "3"],
                          capture_output=True, text=True, timeout=300)
    assert proc.returncode == 0, proc.stderr
    assert "count-dp" in proc.stdout and "bb (simplex)" in proc.stdout
