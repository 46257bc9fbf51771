import math

import numpy as np
import pytest

from gaitevo.cmaes import CMAES, CmaConfig, StrategyConstants, minimize
from gaitevo.errors import ParameterError


def sphere_target(seed):
    return np.random.default_rng(1000 + seed).uniform(0.2, 0.8, size=10)


def test_defaults_match_protocol():
    cfg = CmaConfig()
    assert (cfg.dimension, cfg.popsize, cfg.sigma0, cfg.max_evaluations) == (10, 10, 0.3, 2510)
    assert np.array_equal(cfg.initial_mean(), np.full(10, 0.5))


def test_strategy_constants():
    c = StrategyConstants.default(10, 10)
    assert c.mu == 5
    assert c.weights.sum() == pytest.approx(1.0)
    assert np.all(np.diff(c.weights) < 0)
    assert 0 < c.c1 + c.cmu <= 1
    assert c.chi_n == pytest.approx(math.sqrt(10) * (1 - 1 / 40 + 1 / 2100))


@pytest.mark.parametrize("kwargs", [dict(popsize=1), dict(sigma0=0.0), dict(dimension=0),
                                    dict(mean0=(0.5,) * 3), dict(bounds=(1.0, 0.0)),
                                    dict(mean0=(2.0,) * 10)])
def test_config_validation(kwargs):
    with pytest.raises(ParameterError):
        CmaConfig(**kwargs)


def test_same_seed_same_candidates():
    a, b = CMAES(seed=5), CMAES(seed=5)
    assert np.array_equal(a.ask().x, b.ask().x)
    assert not np.array_equal(CMAES(seed=6).ask().x, CMAES(seed=5).ask().x)


def test_tiny_sigma_collapses_to_mean():
    es = CMAES(sigma0=1e-300)
    assert np.allclose(es.ask().x, 0.5, atol=1e-200)


def test_sample_mean():
    es = CMAES(dimension=5, popsize=10_000, sigma0=1.0, bounds=None, seed=2)
    x = es.ask().x
    stderr = 1.0 / math.sqrt(len(x))
    assert np.all(np.abs(x.mean(axis=0)) < 3 * stderr)


def test_candidates_in_box():
    es = CMAES(sigma0=2.0, seed=1)
    for _ in range(20):
        cand = es.ask()
        assert np.all((cand.x >= 0) & (cand.x <= 1))
        es.tell(cand, -np.sum((cand.x - 0.1) ** 2, axis=1))


def test_equal_fitness_is_well_defined():
    es = CMAES(seed=3)
    cand = es.ask()
    es.tell(cand, np.zeros(10))
    assert np.all(np.isfinite(es.state.mean)) and es.state.sigma > 0
    y = (cand.raw[:5] - 0.5) / 0.3
    assert np.allclose(es.state.mean, 0.5 + 0.3 * (es.constants.weights @ y))


def test_non_finite_ranked_last():
    es = CMAES(seed=4)
    cand = es.ask()
    f = np.arange(10, dtype=float)
    f[9] = np.nan
    f[8] = -np.inf
    es.tell(cand, f)
    assert es.state.best_f == 7.0
    assert np.array_equal(es.state.best_x, cand.x[7])


def test_wrong_fitness_length():
    es = CMAES()
    with pytest.raises(ParameterError):
        es.tell(es.ask(), np.zeros(9))


def test_covariance_stays_symmetric_positive_definite():
    es = CMAES(seed=9)
    for _ in range(60):
        cand = es.ask()
        es.tell(cand, -np.sum(np.arange(1, 11) * (cand.x - 0.3) ** 2, axis=1))
        cov = es.state.cov
        assert np.max(np.abs(cov - cov.T)) < 1e-12
        assert np.linalg.eigvalsh(cov).min() > 0


def test_repair_of_broken_covariance():
    es = CMAES(seed=1)
    es.state.cov = -np.eye(10)
    es._decompose()
    assert es.state.repairs == 1
    assert np.linalg.eigvalsh(es.state.cov).min() > 0


def test_budget_bookkeeping():
    es = CMAES(seed=0)
    calls = 0
    while es.state.generation < 250:
        cand = es.ask()
        es.tell(cand, -np.sum(cand.x ** 2, axis=1))
        calls += 1
    assert es.state.evaluations == 2500 == calls * 10
    assert es.state.evaluations + 10 == es.config.max_evaluations


def test_best_so_far_monotone():
    es = CMAES(seed=2)
    noise = np.random.default_rng(0)
    best = -np.inf
    for _ in range(40):
        cand = es.ask()
        es.tell(cand, -np.sum((cand.x - 0.6) ** 2, axis=1) + noise.normal(0, 0.01, size=10))
        assert es.state.best_f >= best
        best = es.state.best_f


@pytest.mark.parametrize("seed", range(3))
def test_shifted_sphere(seed):
    target = sphere_target(seed)
    es, hist = minimize(lambda x: float(np.sum((x - target) ** 2)), CmaConfig(seed=seed))
    assert hist[-1] < 1e-8
    assert es.state.evaluations <= 2510


def test_rosenbrock():
    def rosen(x):
        return float(np.sum(100 * (x[1:] - x[:-1] ** 2) ** 2 + (1 - x[:-1]) ** 2))
    cfg = CmaConfig(dimension=5, popsize=10, sigma0=0.5, mean0=(0.0,) * 5, bounds=None,
                    max_evaluations=10_000, seed=0)
    _, hist = minimize(rosen, cfg)
    assert np.all(np.diff(hist) <= 0)
    assert hist[-1] < 1e-4


def test_checkpoint_round_trip(tmp_path):
    def f(x):
        return -np.sum((x - 0.25) ** 2, axis=1)
    a = CMAES(seed=11)
    for _ in range(5):
        c = a.ask()
        a.tell(c, f(c.x))
    a.save(tmp_path / "ck.json")
    b = CMAES.load(tmp_path / "ck.json")
    for _ in range(5):
        ca, cb = a.ask(), b.ask()
        assert np.array_equal(ca.x, cb.x)
        a.tell(ca, f(ca.x))
        b.tell(cb, f(cb.x))
    assert np.array_equal(a.state.mean, b.state.mean)
    assert a.state.sigma == b.state.sigma


def test_record_external_point():
    es = CMAES()
    es.record(np.full(10, 0.5), 1.5)
    es.record(np.full(10, 0.4), float("nan"))
    assert es.state.best_f == 1.5


def test_overrides_and_config_exclusive():
    with pytest.raises(TypeError):
        CMAES(CmaConfig(), seed=1)
