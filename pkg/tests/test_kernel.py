"""The compiled and pure-Python evaluation loops must agree bit for bit."""

import numpy as np
import pytest

from gaitevo import kernel
from gaitevo.genome import decode
from gaitevo.physics import RobotConfig
from gaitevo.sim import free_body_rollout, run_evaluation

needs_cython = pytest.mark.skipif("cython" not in kernel.BACKENDS, reason="compiled extension not built")


def test_python_backend_always_available():
    assert "python" in kernel.BACKENDS
    assert kernel.get_backend("python").simulate is not None


def test_unknown_backend():
    with pytest.raises(ValueError):
        kernel.get_backend("fortran")


@needs_cython
@pytest.mark.parametrize("mode", ["open", "closed"])
@pytest.mark.parametrize("seed", [0, 7])
def test_backends_bit_identical(mode, seed):
    genome = np.random.default_rng(seed).uniform(size=10)
    params = decode(genome, mode)
    a = run_evaluation(params, duration=3.0, seed=seed, backend="python")
    b = run_evaluation(params, duration=3.0, seed=seed, backend="cython")
    assert a.fell == b.fell
    assert np.array_equal(a.rows(), b.rows())


@needs_cython
def test_backends_agree_on_falls():
    from gaitevo.cpg import ControllerParams, GlobalParams, LegParams
    leg = LegParams(target_amp=(0.0, 0.0), target_swing=0.0, target_stance=0.0)
    params = ControllerParams(GlobalParams(), (leg,) * 4)
    cfg = RobotConfig(hips=((-0.1, 0.3, 0.0), (0.1, 0.3, 0.0), (-0.1, 0.25, 0.0), (0.1, 0.25, 0.0)))
    a = run_evaluation(params, cfg, duration=2.0, backend="python")
    b = run_evaluation(params, cfg, duration=2.0, backend="cython")
    assert a.fell and b.fell
    assert np.array_equal(a.rows(), b.rows())


@needs_cython
def test_body_rollout_bit_identical():
    state = np.array([0, 0, 1, 1, 0, 0, 0, 0.1, 0.2, 0, 0.7, -1.3, 2.1], dtype=float)
    forces = np.array([[0.0, 0.0, 20.0], [1.0, 0.0, 30.0]])
    points = np.array([[0.1, 0.2, -0.3], [-0.1, -0.2, -0.3]])
    cfg = RobotConfig()
    a = free_body_rollout(state, forces, points, cfg, 0.002, 3000, backend="python")
    b = free_body_rollout(state, forces, points, cfg, 0.002, 3000, backend="cython")
    assert np.array_equal(a, b)
