"""Evolution campaigns, re-evaluation and data export.

Output layout of ``evolve``::

    <out>/manifest.json          index of runs, config hash, settings
    <out>/sim_config.ini         snapshot of the simulator settings
    <out>/run_000/evaluations.csv  every evaluated individual, all generations
    <out>/run_000/checkpoint.json  optimizer state after the last finished generation

Generation 0 evaluates the initial mean ``popsize`` times with distinct
seeds; generations 1..G are CMA-ES populations.  Every evaluation's seed is
stored, so any number in any export can be recomputed.
"""

from __future__ import annotations

import csv
import json
import logging
import math
import os
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from .cmaes import CMAES, CmaConfig
from .config import SimSettings, config_hash, load_sim_settings, save_sim_settings
from .cpg import Mode
from .errors import ConfigurationError, SimulationDiverged
from .fitness import FitnessRecord, evaluate_trace
from .genome import GENE_SYMBOLS, GENOME_LENGTH, decode
from .sim import run_evaluation

log = logging.getLogger(__name__)

RESULT_COLUMNS = ("run", "generation", "individual", "seed", "composite", "distance",
                  "stability", "distance_last_half", "max_angle", "fell")
GENE_COLUMNS = tuple(f"g{i}" for i in range(GENOME_LENGTH))
EVALUATION_COLUMNS = RESULT_COLUMNS + GENE_COLUMNS
REEVALUATION_COLUMNS = ("mode", "controller", "run", "repeat", "seed", "composite", "distance",
                        "stability", "distance_last_half", "max_angle", "fell")


@dataclass(frozen=True)
class ExperimentConfig:
    mode: Mode = Mode.OPEN
    repetitions: int = 20
    generations: int = 250
    duration: float | None = None  # overrides the sim settings when set
    base_seed: int = 0
    sim_config: str | None = None
    output: str = "runs"
    popsize: int = 10
    sigma0: float = 0.3
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mode", Mode.parse(self.mode))
        if self.repetitions < 1:
            raise ConfigurationError("repetitions must be >= 1")
        if self.generations < 1:
            raise ConfigurationError("generations must be >= 1")
        if self.workers < 1:
            raise ConfigurationError("workers must be >= 1")

    def settings(self) -> SimSettings:
        s = load_sim_settings(self.sim_config)
        if self.duration is not None:
            s = replace(s, evaluation=replace(s.evaluation, duration=float(self.duration)))
        return s


def evaluation_seed(run_seed: int, generation: int, individual: int) -> int:
    return int(np.random.SeedSequence([int(run_seed), int(generation), int(individual)]).generate_state(1)[0])


def evaluate_genome(genome, mode, seed: int, settings: SimSettings, backend=None) -> FitnessRecord:
    """Simulate one genome and score it.  Divergence scores ``-inf``."""
    ev = settings.evaluation
    try:
        trace = run_evaluation(decode(genome, mode), settings.robot, settings.ground, ev.duration, seed,
                               dt=ev.dt, sample_rate=ev.sample_rate, perturbation=ev.phase_perturbation,
                               start_at_target=ev.start_at_target, backend=backend)
    except SimulationDiverged as exc:
        log.warning("evaluation diverged at step %d (seed %d); scored as worst", exc.step, seed)
        nan = float("nan")
        return FitnessRecord(-math.inf, nan, 0.0, nan, nan, True)
    return evaluate_trace(trace, ev.direction, ev.angle_max)


def _evaluate_job(job):
    genome, mode, seed, settings = job
    return evaluate_genome(genome, mode, seed, settings)


class _Evaluator:
    """Maps jobs in order, optionally across processes."""

    def __init__(self, workers: int):
        self.workers = workers
        self._pool = ProcessPoolExecutor(workers) if workers > 1 else None

    def map(self, jobs):
        if self._pool is None:
            return [_evaluate_job(j) for j in jobs]
        return list(self._pool.map(_evaluate_job, jobs))

    def close(self):
        if self._pool is not None:
            self._pool.shutdown()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


# --------------------------------------------------------------------------
# archives


@dataclass
class Generation:
    index: int
    genomes: np.ndarray
    fitness: np.ndarray
    seeds: list
    records: list

    @property
    def best_index(self) -> int:
        f = np.where(np.isfinite(self.fitness), self.fitness, -np.inf)
        return int(np.argmax(f))

    @property
    def best_fitness(self) -> float:
        return float(self.fitness[self.best_index])

    @property
    def best_genome(self) -> np.ndarray:
        return self.genomes[self.best_index]


@dataclass
class RunArchive:
    run: int
    mode: Mode
    seed: int
    config_hash: str
    generations: list = field(default_factory=list)

    def best_so_far(self) -> np.ndarray:
        """Best fitness up to and including each generation (generation 0 first)."""
        best = -np.inf
        out = []
        for g in self.generations:
            best = max(best, g.best_fitness)
            out.append(best)
        return np.array(out)

    def best(self):
        """``(genome, fitness, seed)`` of the best individual ever evaluated."""
        top = None
        for g in self.generations:
            i = g.best_index
            if top is None or g.fitness[i] > top[1]:
                top = (g.genomes[i].copy(), float(g.fitness[i]), g.seeds[i])
        return top

    @property
    def last_generation(self) -> int:
        return self.generations[-1].index if self.generations else -1


def _record_row(run, gen, ind, seed, rec: FitnessRecord, genome):
    return ([run, gen, ind, seed, repr(rec.composite), repr(rec.distance), repr(rec.stability),
             repr(rec.distance_last_half), repr(rec.max_angle), int(rec.fell)]
            + [repr(float(v)) for v in genome])


def _append_generation(path: Path, run: int, gen: Generation, header: bool):
    with open(path, "a", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        if header:
            w.writerow(EVALUATION_COLUMNS)
        for i, rec in enumerate(gen.records):
            w.writerow(_record_row(run, gen.index, i, gen.seeds[i], rec, gen.genomes[i]))


def read_evaluations(path, mode, seed=0, chash="") -> RunArchive:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
    by_gen: dict = {}
    run = 0
    for r in rows:
        run = int(r["run"])
        by_gen.setdefault(int(r["generation"]), []).append(r)
    archive = RunArchive(run=run, mode=Mode.parse(mode), seed=seed, config_hash=chash)
    for gi in sorted(by_gen):
        rs = sorted(by_gen[gi], key=lambda r: int(r["individual"]))
        recs = [FitnessRecord(float(r["composite"]), float(r["distance"]), float(r["stability"]),
                              float(r["distance_last_half"]), float(r["max_angle"]), bool(int(r["fell"])))
                for r in rs]
        genomes = np.array([[float(r[c]) for c in GENE_COLUMNS] for r in rs])
        archive.generations.append(Generation(gi, genomes, np.array([x.composite for x in recs]),
                                              [int(r["seed"]) for r in rs], recs))
    return archive


def load_archives(out_dir) -> list:
    out_dir = Path(out_dir)
    manifest = json.loads((out_dir / "manifest.json").read_text())
    archives = []
    for entry in manifest["runs"]:
        path = out_dir / entry["dir"] / "evaluations.csv"
        if path.exists():
            archives.append(read_evaluations(path, manifest["mode"], entry["seed"], manifest["config_hash"]))
    return archives


# --------------------------------------------------------------------------
# evolution


def _run_dir(out: Path, run: int) -> Path:
    return out / f"run_{run:03d}"


def evolve_run(cfg: ExperimentConfig, settings: SimSettings, run: int, evaluator, chash: str) -> RunArchive:
    out = Path(cfg.output)
    rdir = _run_dir(out, run)
    rdir.mkdir(parents=True, exist_ok=True)
    run_seed = cfg.base_seed + run
    evals_path = rdir / "evaluations.csv"
    ckpt_path = rdir / "checkpoint.json"
    mode = cfg.mode

    es = None
    archive = RunArchive(run=run, mode=mode, seed=run_seed, config_hash=chash)
    if ckpt_path.exists() and evals_path.exists():
        ckpt = json.loads(ckpt_path.read_text())
        if ckpt.get("config_hash") == chash:
            es = CMAES.from_checkpoint(ckpt["cmaes"])
            done = int(ckpt["generation"])
            old = read_evaluations(evals_path, mode, run_seed, chash)
            archive.generations = [g for g in old.generations if g.index <= done]
            # drop rows written after the checkpoint
            evals_path.unlink()
            for k, g in enumerate(archive.generations):
                _append_generation(evals_path, run, g, header=(k == 0))
            log.info("run %d: resuming after generation %d", run, done)
        else:
            log.warning("run %d: checkpoint from a different configuration ignored", run)
    if es is None:
        for p in (evals_path, ckpt_path):
            if p.exists():
                p.unlink()
        es = CMAES(CmaConfig(dimension=GENOME_LENGTH, popsize=cfg.popsize, sigma0=cfg.sigma0,
                             max_evaluations=cfg.popsize * cfg.generations, seed=run_seed))
        mean = es.state.mean.copy()
        seeds = [evaluation_seed(run_seed, 0, i) for i in range(cfg.popsize)]
        recs = evaluator.map([(mean, mode, s, settings) for s in seeds])
        gen0 = Generation(0, np.tile(mean, (cfg.popsize, 1)), np.array([r.composite for r in recs]), seeds, recs)
        for r in recs:
            es.record(mean, r.composite)
        archive.generations.append(gen0)
        _append_generation(evals_path, run, gen0, header=True)
        _save_checkpoint(ckpt_path, es, 0, chash)

    while es.state.generation < cfg.generations:
        cand = es.ask()
        gi = cand.generation
        seeds = [evaluation_seed(run_seed, gi, i) for i in range(len(cand))]
        recs = evaluator.map([(x, mode, s, settings) for x, s in zip(cand.x, seeds)])
        fitness = np.array([r.composite for r in recs])
        es.tell(cand, fitness)
        gen = Generation(gi, cand.x.copy(), fitness, seeds, recs)
        archive.generations.append(gen)
        _append_generation(evals_path, run, gen, header=False)
        _save_checkpoint(ckpt_path, es, gi, chash)
        log.info("run %d gen %d: best %.4f, best so far %.4f", run, gi, gen.best_fitness, es.state.best_f)
    return archive


def _save_checkpoint(path: Path, es: CMAES, generation: int, chash: str):
    tmp = path.with_suffix(".tmp")
    tmp.write_text(json.dumps({"generation": generation, "config_hash": chash, "cmaes": es.checkpoint()}))
    os.replace(tmp, path)


def experiment_hash(cfg: ExperimentConfig, settings: SimSettings) -> str:
    """Hash of everything that shapes a run's trajectory.

    The generation budget and repetition count are left out so a finished
    campaign can be extended by resuming it with larger values.
    """
    return config_hash({
        "mode": cfg.mode.value, "base_seed": cfg.base_seed, "popsize": cfg.popsize,
        "sigma0": cfg.sigma0, "sim": settings.as_dict(),
    })


def evolve(cfg: ExperimentConfig) -> list:
    """Run ``cfg.repetitions`` independent CMA-ES runs; resumable from checkpoints."""
    settings = cfg.settings()
    out = Path(cfg.output)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".write_test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigurationError(f"output directory {out} is not writable: {exc}") from exc
    chash = experiment_hash(cfg, settings)
    save_sim_settings(settings, out / "sim_config.ini")

    archives = []
    statuses = []
    with _Evaluator(cfg.workers) as evaluator:
        for run in range(cfg.repetitions):
            try:
                archives.append(evolve_run(cfg, settings, run, evaluator, chash))
                statuses.append("complete")
            except Exception:
                log.exception("run %d failed", run)
                statuses.append("failed")
    manifest = {
        "mode": cfg.mode.value,
        "repetitions": cfg.repetitions,
        "generations": cfg.generations,
        "popsize": cfg.popsize,
        "sigma0": cfg.sigma0,
        "base_seed": cfg.base_seed,
        "config_hash": chash,
        "settings": settings.as_dict(),
        "runs": [{"run": r, "seed": cfg.base_seed + r, "dir": _run_dir(Path("."), r).name, "status": s}
                 for r, s in enumerate(statuses)],
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return archives


# --------------------------------------------------------------------------
# re-evaluation


def select_best(archives, top_k: int):
    """Best final controller of each run, the ``top_k`` best of those."""
    cands = []
    for a in archives:
        b = a.best()
        if b is not None and math.isfinite(b[1]):
            cands.append((b[1], a.run, b[0], b[2], a.mode))
    cands.sort(key=lambda c: (-c[0], c[1]))
    if top_k > len(cands):
        warnings.warn(f"requested {top_k} controllers but only {len(cands)} available", RuntimeWarning,
                      stacklevel=2)
    return cands[:top_k]


def reevaluate(archives, top_k: int = 5, repeats: int = 10, seeds=None, settings: SimSettings | None = None,
               base_seed: int = 10_000, workers: int = 1) -> list:
    """Re-run the best controllers; one row dict per evaluation.

    ``seeds`` may be a list (one per repeat) or ``"archived"`` to reuse the
    seed each controller was scored with during evolution.
    """
    if not archives:
        raise ConfigurationError("no archives to re-evaluate")
    settings = settings or SimSettings()
    chosen = select_best(archives, top_k)
    jobs, meta = [], []
    for rank, (fit, run, genome, arch_seed, mode) in enumerate(chosen):
        for rep in range(repeats):
            if seeds == "archived":
                seed = arch_seed
            elif seeds is not None:
                seed = int(seeds[rep])
            else:
                seed = base_seed + rep
            jobs.append((genome, mode, seed, settings))
            meta.append((mode, rank, run, rep, seed))
    with _Evaluator(workers) as ev:
        recs = ev.map(jobs)
    rows = []
    for (mode, rank, run, rep, seed), rec in zip(meta, recs):
        rows.append({"mode": Mode.parse(mode).value, "controller": rank, "run": run, "repeat": rep,
                     "seed": seed, **rec.as_dict()})
    return rows


# --------------------------------------------------------------------------
# export / import


def _write_csv(path, header, rows):
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(header)
            w.writerows(rows)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


def _fmt(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


def export_fitness(archives, path):
    """``run, generation, best_fitness`` (best so far) for generations 1..G."""
    rows = []
    for a in archives:
        bsf = a.best_so_far()
        for g, b in zip(a.generations, bsf):
            if g.index >= 1:
                rows.append((a.run, g.index, repr(float(b))))
    return _write_csv(path, ("run", "generation", "best_fitness"), rows)


def export_genomes(archives, path):
    """Long format: one row per run, generation, individual and gene."""
    rows = []
    for a in archives:
        symbols = GENE_SYMBOLS[Mode.parse(a.mode)]
        for g in a.generations:
            for i, genome in enumerate(g.genomes):
                for k, v in enumerate(genome):
                    rows.append((a.run, g.index, i, symbols[k], repr(float(v))))
    return _write_csv(path, ("run", "generation", "individual", "gene", "value"), rows)


def export_reevaluation(rows, path):
    return _write_csv(path, REEVALUATION_COLUMNS, [[_fmt(r[c]) for c in REEVALUATION_COLUMNS] for r in rows])


def read_reevaluation(path) -> list:
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            out.append({
                "mode": r["mode"], "controller": int(r["controller"]), "run": int(r["run"]),
                "repeat": int(r["repeat"]), "seed": int(r["seed"]),
                "composite": float(r["composite"]), "distance": float(r["distance"]),
                "stability": float(r["stability"]), "distance_last_half": float(r["distance_last_half"]),
                "max_angle": float(r["max_angle"]), "fell": bool(int(r["fell"])),
            })
    return out


def read_fitness_export(path) -> dict:
    """``{run: [best_fitness per generation]}`` from ``export_fitness`` output."""
    out: dict = {}
    with open(path, newline="", encoding="utf-8") as fh:
        for r in csv.DictReader(fh):
            out.setdefault(int(r["run"]), []).append((int(r["generation"]), float(r["best_fitness"])))
    return {k: [v for _, v in sorted(vs)] for k, vs in out.items()}


def export_all(archives, out_dir, manifest_extra=None) -> dict:
    out_dir = Path(out_dir)
    paths = {
        "fitness": str(export_fitness(archives, out_dir / "fitness.csv")),
        "genomes": str(export_genomes(archives, out_dir / "genomes.csv")),
    }
    manifest = {"files": {k: Path(v).name for k, v in paths.items()},
                "runs": [a.run for a in archives],
                "modes": sorted({Mode.parse(a.mode).value for a in archives}),
                "config_hashes": sorted({a.config_hash for a in archives})}
    if manifest_extra:
        manifest.update(manifest_extra)
    (out_dir / "export_manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True))
    return paths


def generation_medians(archives, generation: int) -> float:
    """Median over runs of the best-so-far fitness at ``generation``."""
    vals = []
    for a in archives:
        bsf = a.best_so_far()
        idx = [g.index for g in a.generations].index(generation)
        vals.append(bsf[idx])
    return float(np.median(vals))
