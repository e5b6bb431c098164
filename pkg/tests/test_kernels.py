import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from redisgrowth import _kernels_py, kernels
from redisgrowth.econ import SCHEME_CODES, SCHEMES, FiscalPolicy, step
from redisgrowth.eta import PRESETS, sample

from oracles import naive_trajectory

compiled = pytest.importorskip("redisgrowth._kernels", reason="compiled kernel not built")
BACKENDS = [("cython", compiled.simulate_totals), ("python", _kernels_py.simulate_totals)]


def by_steps(draws, scheme, a, b):
    """Y(t) and H(t) via the per-step model function."""
    pol = FiscalPolicy(scheme, a, b)
    n, T = draws.shape
    y = np.ones(n)
    Y, H = [float(n)], [float(n)]
    for t in range(1, T):
        r = step(y, draws[:, t], pol)
        y = r.income
        Y.append(y.sum())
        H.append(r.human_capital.sum())
    return np.array(Y), np.array(H)


@pytest.mark.parametrize("name,fn", BACKENDS)
@pytest.mark.parametrize("scheme", SCHEMES)
@pytest.mark.parametrize("n", [1, 2, 10, 37])
def test_matches_step(name, fn, scheme, n):
    draws = sample(PRESETS["intermediate"], 3, n, 60).draws
    Y, H = fn(draws[None], SCHEME_CODES[scheme], 0.35, 0.15)
    Yr, Hr = by_steps(draws, scheme, 0.35, 0.15)
    np.testing.assert_allclose(Y[0], Yr, rtol=1e-12)
    np.testing.assert_allclose(H[0], Hr, rtol=1e-12)


@pytest.mark.parametrize("scheme", SCHEMES)
def test_matches_naive_loops(scheme):
    draws = sample(PRESETS["less_risky"], 8, 6, 25).draws
    Y, _ = kernels.simulate_totals(draws[None], SCHEME_CODES[scheme], 0.45, 0.3)
    np.testing.assert_allclose(Y[0], naive_trajectory(6, draws, scheme, 0.45, 0.3), rtol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 40), st.integers(2, 40), st.floats(0, 1), st.floats(0, 1),
       st.sampled_from(SCHEMES), st.integers(0, 2**32))
def test_backends_agree(n, T, a, b, scheme, seed):
    draws = sample(PRESETS["more_risky"], seed, n, T).draws[None]
    Yc, Hc = compiled.simulate_totals(draws, SCHEME_CODES[scheme], a, b)
    Yp, Hp = _kernels_py.simulate_totals(draws, SCHEME_CODES[scheme], a, b)
    np.testing.assert_allclose(Yc, Yp, rtol=1e-11)
    np.testing.assert_allclose(Hc, Hp, rtol=1e-11)


@pytest.mark.parametrize("name,fn", BACKENDS)
@pytest.mark.parametrize("scheme", SCHEMES)
def test_ties(name, fn, scheme):
    # every agent identical: all schemes tax equally
    draws = np.full((1, 8, 30), 1.3)
    Y, _ = fn(draws, SCHEME_CODES[scheme], 0.4, 0.25)
    np.testing.assert_allclose(Y[0], 8 * (1.3 * 0.9) ** np.arange(30), rtol=1e-12)


@pytest.mark.parametrize("name,fn", BACKENDS)
def test_batch_rows_independent(name, fn):
    d = np.stack([sample(PRESETS["intermediate"], s, 5, 40).draws for s in range(4)])
    Y, _ = fn(d, SCHEME_CODES["progressive"], 0.5, 0.1)
    for i in range(4):
        Yi, _ = fn(d[i:i + 1], SCHEME_CODES["progressive"], 0.5, 0.1)
        np.testing.assert_array_equal(Y[i], Yi[0])


@pytest.mark.parametrize("name,fn", BACKENDS)
def test_underflow_to_zero(name, fn):
    draws = np.full((1, 3, 400), 1e-300)
    Y, _ = fn(draws, SCHEME_CODES["regressive"], 0.5, 0.5)
    assert Y[0, -1] == 0.0 and np.all(np.isfinite(Y))


def test_backend_selected():
    assert kernels.BACKEND == "cython"


def test_pure_python_switch():
    env = dict(os.environ, REDISGROWTH_PURE="1")
    out = subprocess.run([sys.executable, "-c", "from redisgrowth import kernels; print(kernels.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
