import json
import os
import subprocess
import sys

import numpy as np
import pytest

from nbstein import _kernels, backend_name
from nbstein._accel import JIT_ENABLED
from nbstein.k1k2 import K1K2Config, table1, two_param_params
from nbstein.oracle import NB_ANCHOR_STRIDE, _stream_length, nb_logpmf

needs_numba = pytest.mark.skipif(not JIT_ENABLED, reason="numba backend disabled")


@needs_numba
@pytest.mark.parametrize("a,k,length", [(3 / 1024, 5, 5000), (0.2, 2, 300), (1e-5, 10, 20000)])
def test_recurrence(a, k, length):
    head = np.linspace(1.0, 0.5, k)
    np.testing.assert_allclose(
        _kernels._recurrence_numba(head, a, k, length), _kernels._recurrence_numpy(head, a, k, length), rtol=1e-12, atol=1e-300
    )


@needs_numba
@pytest.mark.parametrize("a,k,t", [(3 / 1024, 5, 400), (0.1, 3, 200)])
def test_event_table(a, k, t):
    np.testing.assert_allclose(
        _kernels._event_count_numba(a, k, t), _kernels._event_count_numpy(a, k, t), rtol=1e-12, atol=1e-300
    )


@needs_numba
def test_stream_tv():
    cfg = K1K2Config(1, 4, 0.25, 5)
    params = two_param_params(cfg)
    L = _stream_length(cfg, params)
    anchors = nb_logpmf(np.arange(0, L, NB_ANCHOR_STRIDE, dtype=np.float64), params.alpha, params.p)
    args = (cfg.a, cfg.k, cfg.n, params.alpha, params.p, L, anchors, NB_ANCHOR_STRIDE)
    np.testing.assert_allclose(_kernels._waiting_nb_tv_numba(*args), _kernels._waiting_nb_tv_numpy(*args), rtol=1e-9)


@needs_numba
def test_simulators_same_law():
    # different generators, so compare sample means against the exact mean
    a = _kernels._simulate_numba(1, 2, 0.5, 2, 50_000, 1)
    b = _kernels._simulate_numpy(1, 2, 0.5, 2, 50_000, 1)
    cfg = K1K2Config(1, 2, 0.5, 2)
    exact = cfg.n * (1 - cfg.k * cfg.a) / cfg.a
    se = np.sqrt(cfg.n * (1 - (2 * cfg.k - 1) * cfg.a) / cfg.a**2 / 50_000)
    assert abs(a.mean() - exact) < 5 * se
    assert abs(b.mean() - exact) < 5 * se


WORKER = """
import json
from nbstein import backend_name
from nbstein.k1k2 import table1
print(json.dumps({"backend": backend_name(), "bounds": [c.bound for c in table1()]}))
"""


def run_worker(flag):
    env = dict(os.environ, NB_STEIN_NUMBA=flag)
    out = subprocess.run([sys.executable, "-c", WORKER], env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


@pytest.mark.parametrize("flag,name", [("0", "numpy"), ("off", "numpy"), ("1", "numba")])
def test_env_flag(flag, name):
    got = run_worker(flag)
    assert got["backend"] == name
    np.testing.assert_allclose(got["bounds"], [c.bound for c in table1()], rtol=1e-9)


def test_backend_name():
    assert backend_name() == ("numba" if JIT_ENABLED else "numpy")
