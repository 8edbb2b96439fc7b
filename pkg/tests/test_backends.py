"""The compiled kernel and the pure Python twin must agree bitwise."""

import os
import subprocess
import sys

import numpy as np
import pytest

import travflow
from travflow import _backend
from travflow import _kernel_py

try:
    from travflow import _kernel
    HAS_COMPILED = True
except ImportError:
    HAS_COMPILED = False

needs_compiled = pytest.mark.skipif(not HAS_COMPILED,
                                    reason="compiled kernel unavailable")


@pytest.fixture
def restore_backend():
    yield
    travflow.set_backend(None)


def test_default_backend_name():
    assert travflow.backend_name() in ("compiled", "python")


def test_switch_and_restore(restore_backend):
    travflow.set_backend("python")
    assert travflow.backend_name() == "python"
    travflow.set_backend(None)
    assert travflow.backend_name() in ("compiled", "python")
    with pytest.raises(travflow.TravflowError):
        travflow.set_backend("fortran")


@needs_compiled
def test_batch_evaluation_is_bitwise_equal(annulus):
    rng = np.random.default_rng(0)
    points = rng.uniform(-2.5, 2.5, size=(500, 2))
    compiled = np.asarray(_kernel.eval_program_batch(annulus.z_program, points))
    python = np.asarray(_kernel_py.eval_program_batch(annulus.z_program, points))
    assert np.array_equal(compiled, python)


@needs_compiled
def test_rk_stage_is_bitwise_equal(annulus):
    y = np.array([0.3, -0.7])
    out_c = np.zeros(2)
    out_p = np.zeros(2)
    err_c = np.zeros(2)
    err_p = np.zeros(2)
    k_c = np.zeros((7, 2))
    k_p = np.zeros((7, 2))
    _kernel.rk_step(annulus.v_program, y, 0.125, 1.0, k_c, out_c, err_c)
    _kernel_py.rk_step(annulus.v_program, y, 0.125, 1.0, k_p, out_p, err_p)
    assert np.array_equal(out_c, out_p)
    assert np.array_equal(err_c, err_p)
    assert np.array_equal(k_c, k_p)


@needs_compiled
def test_traces_are_bitwise_equal(annulus, restore_backend):
    seeds = [[1.0, -1.2], [1.7, 0.3], [0.0, 1.5]]
    travflow.set_backend("compiled")
    compiled = [travflow.trace(annulus, seed, want_polyline=False)
                for seed in seeds]
    travflow.set_backend("python")
    python = [travflow.trace(annulus, seed, want_polyline=False)
              for seed in seeds]
    for a, b in zip(compiled, python):
        assert a.omega.word == b.omega.word
        for ca, cb in zip(a.divisor.contacts, b.divisor.contacts):
            assert tuple(ca.coords) == tuple(cb.coords)
            assert ca.fval == cb.fval


def test_environment_override():
    code = "import travflow; print(travflow.backend_name())"
    env = dict(os.environ, TRAVFLOW_BACKEND="python")
    result = subprocess.run([sys.executable, "-c", code], env=env,
                            capture_output=True, text=True, check=True)
    assert result.stdout.strip() == "python"
