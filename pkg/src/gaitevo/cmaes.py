"""Covariance matrix adaptation evolution strategy (maximising, box-bounded).

Strategy constants follow Hansen's standard defaults.  Out-of-box samples
are redrawn up to ``max_resample`` times and clamped as a last resort; the
unclamped draw is what enters the distribution update.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalDegeneracy, ParameterError


@dataclass(frozen=True)
class CmaConfig:
    dimension: int = 10
    popsize: int = 10
    sigma0: float = 0.3
    mean0: tuple | None = None
    max_evaluations: int = 2510
    seed: int = 0
    bounds: tuple | None = (0.0, 1.0)
    max_resample: int = 10

    def __post_init__(self):
        if self.dimension < 1:
            raise ParameterError("dimension must be >= 1")
        if self.popsize < 2:
            raise ParameterError("population size must be >= 2")
        if not self.sigma0 > 0:
            raise ParameterError("initial step size must be positive")
        if self.mean0 is not None and len(self.mean0) != self.dimension:
            raise ParameterError("initial mean has the wrong length")
        if self.bounds is not None:
            lo, hi = self.bounds
            if not lo < hi:
                raise ParameterError("bounds must satisfy lower < upper")
            m = self.initial_mean()
            if np.any(m < lo) or np.any(m > hi):
                raise ParameterError("initial mean lies outside the bounds")

    def initial_mean(self) -> np.ndarray:
        if self.mean0 is None:
            if self.bounds is None:
                return np.zeros(self.dimension)
            lo, hi = self.bounds
            return np.full(self.dimension, 0.5 * (lo + hi))
        return np.asarray(self.mean0, dtype=float)


@dataclass(frozen=True)
class StrategyConstants:
    mu: int
    weights: np.ndarray
    mueff: float
    cc: float
    cs: float
    c1: float
    cmu: float
    damps: float
    chi_n: float

    @classmethod
    def default(cls, n: int, lam: int) -> "StrategyConstants":
        mu = lam // 2
        raw = math.log((lam + 1) / 2.0) - np.log(np.arange(1, mu + 1))
        weights = raw / raw.sum()
        mueff = 1.0 / float(np.sum(weights ** 2))
        cc = (4.0 + mueff / n) / (n + 4.0 + 2.0 * mueff / n)
        cs = (mueff + 2.0) / (n + mueff + 5.0)
        c1 = 2.0 / ((n + 1.3) ** 2 + mueff)
        cmu = min(1.0 - c1, 2.0 * (mueff - 2.0 + 1.0 / mueff) / ((n + 2.0) ** 2 + mueff))
        damps = 1.0 + 2.0 * max(0.0, math.sqrt((mueff - 1.0) / (n + 1.0)) - 1.0) + cs
        chi_n = math.sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n))
        return cls(mu, weights, mueff, cc, cs, c1, cmu, damps, chi_n)


@dataclass
class CmaState:
    mean: np.ndarray
    sigma: float
    cov: np.ndarray
    p_sigma: np.ndarray
    p_c: np.ndarray
    generation: int = 0
    evaluations: int = 0
    best_x: np.ndarray | None = None
    best_f: float = -math.inf
    repairs: int = 0


@dataclass
class Candidates:
    """One population: in-box genomes plus the raw draws used for updating."""

    x: np.ndarray
    raw: np.ndarray
    generation: int

    def __len__(self):
        return len(self.x)


def _eigen(cov):
    vals, vecs = np.linalg.eigh(cov)
    return vals, vecs


class CMAES:
    def __init__(self, config: CmaConfig | None = None, **overrides):
        if config is None:
            config = CmaConfig(**overrides)
        elif overrides:
            raise TypeError("pass either a CmaConfig or keyword overrides, not both")
        self.config = config
        n = config.dimension
        self.constants = StrategyConstants.default(n, config.popsize)
        self.rng = np.random.default_rng(config.seed)
        self.state = CmaState(
            mean=config.initial_mean().copy(),
            sigma=float(config.sigma0),
            cov=np.eye(n),
            p_sigma=np.zeros(n),
            p_c=np.zeros(n),
        )
        self._decompose()

    # ------------------------------------------------------------------
    def _decompose(self):
        """Refresh ``B``, ``D`` from the covariance, repairing it if needed."""
        st = self.state
        st.cov = 0.5 * (st.cov + st.cov.T)
        try:
            vals, vecs = _eigen(st.cov)
            ok = np.all(np.isfinite(vals)) and vals.min() > 0
        except np.linalg.LinAlgError:
            ok = False
        if not ok:
            st.repairs += 1
            cov = np.nan_to_num(st.cov, nan=0.0, posinf=0.0, neginf=0.0)
            cov = 0.5 * (cov + cov.T)
            try:
                vals, vecs = _eigen(cov)
            except np.linalg.LinAlgError as exc:
                raise NumericalDegeneracy("covariance decomposition failed") from exc
            top = max(float(np.max(np.abs(vals))), 1.0)
            vals = np.maximum(vals, 1e-14 * top)
            st.cov = (vecs * vals) @ vecs.T
            st.cov = 0.5 * (st.cov + st.cov.T)
            vals, vecs = _eigen(st.cov)
            if not vals.min() > 0:
                raise NumericalDegeneracy("covariance could not be repaired to positive definite")
        self._B = vecs
        self._D = np.sqrt(vals)

    def _in_bounds(self, x) -> bool:
        b = self.config.bounds
        return b is None or bool(np.all((x >= b[0]) & (x <= b[1])))

    @property
    def popsize(self) -> int:
        return self.config.popsize

    def stop(self) -> bool:
        return self.state.evaluations + self.config.popsize > self.config.max_evaluations

    # ------------------------------------------------------------------
    def ask(self) -> Candidates:
        st = self.state
        n, lam = self.config.dimension, self.config.popsize
        xs = np.empty((lam, n))
        raws = np.empty((lam, n))
        bd = self._B * self._D
        for k in range(lam):
            raw = st.mean + st.sigma * (bd @ self.rng.standard_normal(n))
            tries = 0
            while not self._in_bounds(raw) and tries < self.config.max_resample:
                raw = st.mean + st.sigma * (bd @ self.rng.standard_normal(n))
                tries += 1
            raws[k] = raw
            if self.config.bounds is None:
                xs[k] = raw
            else:
                xs[k] = np.clip(raw, *self.config.bounds)
        return Candidates(xs, raws, st.generation + 1)

    def tell(self, candidates: Candidates, fitness) -> CmaState:
        """Update from fitness values (larger is better); non-finite values rank last."""
        st = self.state
        c = self.constants
        n = self.config.dimension
        f = np.asarray(fitness, dtype=float)
        if f.shape != (len(candidates),):
            raise ParameterError("need exactly one fitness per candidate")
        key = np.where(np.isfinite(f), -f, np.inf)
        order = np.argsort(key, kind="stable")

        for idx in order:
            if np.isfinite(f[idx]) and f[idx] > st.best_f:
                st.best_f = float(f[idx])
                st.best_x = candidates.x[idx].copy()

        y = (candidates.raw[order[: c.mu]] - st.mean) / st.sigma
        y_w = c.weights @ y
        old_mean = st.mean
        st.mean = old_mean + st.sigma * y_w

        inv_sqrt = (self._B / self._D) @ self._B.T
        st.p_sigma = (1.0 - c.cs) * st.p_sigma + math.sqrt(c.cs * (2.0 - c.cs) * c.mueff) * (inv_sqrt @ y_w)
        norm_ps = float(np.linalg.norm(st.p_sigma))
        gen = st.generation + 1
        h_sigma = norm_ps / math.sqrt(1.0 - (1.0 - c.cs) ** (2 * gen)) < (1.4 + 2.0 / (n + 1.0)) * c.chi_n
        h = 1.0 if h_sigma else 0.0
        st.p_c = (1.0 - c.cc) * st.p_c + h * math.sqrt(c.cc * (2.0 - c.cc) * c.mueff) * y_w

        rank_mu = (y.T * c.weights) @ y
        delta_h = (1.0 - h) * c.cc * (2.0 - c.cc)
        st.cov = ((1.0 - c.c1 - c.cmu + c.c1 * delta_h) * st.cov
                  + c.c1 * np.outer(st.p_c, st.p_c)
                  + c.cmu * rank_mu)
        st.sigma = st.sigma * math.exp((c.cs / c.damps) * (norm_ps / c.chi_n - 1.0))

        st.generation = gen
        st.evaluations += len(candidates)
        self._decompose()
        return st

    def record(self, x, f) -> None:
        """Offer an externally evaluated point to the best-so-far archive."""
        if np.isfinite(f) and f > self.state.best_f:
            self.state.best_f = float(f)
            self.state.best_x = np.array(x, dtype=float)

    # ------------------------------------------------------------------
    def checkpoint(self) -> dict:
        st = self.state
        cfg = self.config
        return {
            "config": {
                "dimension": cfg.dimension, "popsize": cfg.popsize, "sigma0": cfg.sigma0,
                "mean0": None if cfg.mean0 is None else [float(v) for v in cfg.mean0],
                "max_evaluations": cfg.max_evaluations, "seed": cfg.seed,
                "bounds": None if cfg.bounds is None else list(cfg.bounds),
                "max_resample": cfg.max_resample,
            },
            "mean": st.mean.tolist(),
            "sigma": st.sigma,
            "cov": st.cov.tolist(),
            "p_sigma": st.p_sigma.tolist(),
            "p_c": st.p_c.tolist(),
            "generation": st.generation,
            "evaluations": st.evaluations,
            "best_x": None if st.best_x is None else st.best_x.tolist(),
            "best_f": st.best_f if math.isfinite(st.best_f) else None,
            "repairs": st.repairs,
            "rng": self.rng.bit_generator.state,
        }

    @classmethod
    def from_checkpoint(cls, data: dict) -> "CMAES":
        cfg = dict(data["config"])
        if cfg.get("mean0") is not None:
            cfg["mean0"] = tuple(cfg["mean0"])
        if cfg.get("bounds") is not None:
            cfg["bounds"] = tuple(cfg["bounds"])
        es = cls(CmaConfig(**cfg))
        es.state = CmaState(
            mean=np.array(data["mean"], dtype=float),
            sigma=float(data["sigma"]),
            cov=np.array(data["cov"], dtype=float),
            p_sigma=np.array(data["p_sigma"], dtype=float),
            p_c=np.array(data["p_c"], dtype=float),
            generation=int(data["generation"]),
            evaluations=int(data["evaluations"]),
            best_x=None if data["best_x"] is None else np.array(data["best_x"], dtype=float),
            best_f=-math.inf if data["best_f"] is None else float(data["best_f"]),
            repairs=int(data.get("repairs", 0)),
        )
        es.rng.bit_generator.state = data["rng"]
        es._decompose()
        return es

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.checkpoint(), fh)

    @classmethod
    def load(cls, path) -> "CMAES":
        with open(path, encoding="utf-8") as fh:
            return cls.from_checkpoint(json.load(fh))


def minimize(func, config: CmaConfig):
    """Convenience loop minimising ``func``; returns ``(es, best_f_history)``."""
    es = CMAES(config)
    history = []
    while not es.stop():
        cand = es.ask()
        values = np.array([func(x) for x in cand.x])
        es.tell(cand, -values)
        history.append(-es.state.best_f)
    return es, history
