import json
import math
import shutil

import numpy as np
import pytest

from gaitevo.cli import main
from gaitevo.config import SimSettings, save_sim_settings
from gaitevo.errors import ConfigurationError
from gaitevo.experiment import (ExperimentConfig, evaluate_genome, evaluation_seed, evolve, export_all,
                                export_reevaluation, load_archives, read_fitness_export, read_reevaluation,
                                reevaluate)
from gaitevo.genome import save_genome
from gaitevo.stats import summarize

SHORT = 2.0


def smoke_config(out, mode="open", **kw):
    base = dict(mode=mode, repetitions=2, generations=3, duration=SHORT, base_seed=7, output=str(out))
    base.update(kw)
    return ExperimentConfig(**base)


@pytest.fixture(scope="module")
def smoke(tmp_path_factory):
    out = tmp_path_factory.mktemp("smoke")
    archives = evolve(smoke_config(out / "open"))
    return out, archives


def test_structure(smoke):
    out, archives = smoke
    assert len(archives) == 2
    for a in archives:
        assert [g.index for g in a.generations] == [0, 1, 2, 3]
        for g in a.generations:
            assert g.genomes.shape == (10, 10)
            assert np.all((g.genomes >= 0) & (g.genomes <= 1))
        assert np.all(a.generations[0].genomes == 0.5)
    manifest = json.loads((out / "open" / "manifest.json").read_text())
    assert [r["status"] for r in manifest["runs"]] == ["complete", "complete"]
    assert manifest["runs"][1]["seed"] == 8
    assert (out / "open" / "sim_config.ini").exists()


def test_best_so_far_non_decreasing_and_recomputable(smoke):
    _, archives = smoke
    for a in archives:
        bsf = a.best_so_far()
        assert np.all(np.diff(bsf) >= 0)
        recomputed = np.maximum.accumulate([np.max(g.fitness) for g in a.generations])
        assert np.array_equal(bsf, recomputed)


def test_archive_reload_matches(smoke):
    out, archives = smoke
    loaded = load_archives(out / "open")
    for a, b in zip(archives, loaded):
        assert np.array_equal(a.best_so_far(), b.best_so_far())
        for ga, gb in zip(a.generations, b.generations):
            assert np.array_equal(ga.genomes, gb.genomes)
            assert ga.seeds == gb.seeds


def test_provenance(smoke):
    _, archives = smoke
    settings = SimSettings()
    from dataclasses import replace
    settings = replace(settings, evaluation=replace(settings.evaluation, duration=SHORT))
    g = archives[1].generations[2]
    i = g.best_index
    rec = evaluate_genome(g.genomes[i], "open", g.seeds[i], settings)
    assert rec.composite == g.fitness[i]
    assert g.seeds[i] == evaluation_seed(8, 2, i)


def test_deterministic_exports(smoke, tmp_path):
    out, _ = smoke
    again = evolve(smoke_config(tmp_path / "again"))
    export_all(load_archives(out / "open"), tmp_path / "e1")
    export_all(again, tmp_path / "e2")
    for name in ("fitness.csv", "genomes.csv"):
        assert (tmp_path / "e1" / name).read_bytes() == (tmp_path / "e2" / name).read_bytes()


def test_export_shapes(smoke, tmp_path):
    _, archives = smoke
    export_all(archives, tmp_path)
    fit = (tmp_path / "fitness.csv").read_text().splitlines()
    assert fit[0] == "run,generation,best_fitness"
    assert len(fit) - 1 == 2 * 3
    gen = (tmp_path / "genomes.csv").read_text().splitlines()
    assert gen[0] == "run,generation,individual,gene,value"
    assert len(gen) - 1 == 2 * 4 * 10 * 10
    back = read_fitness_export(tmp_path / "fitness.csv")
    for a in archives:
        assert back[a.run] == list(a.best_so_far()[1:])
    manifest = json.loads((tmp_path / "export_manifest.json").read_text())
    assert manifest["runs"] == [0, 1]


def test_extend_by_resuming(tmp_path):
    evolve(smoke_config(tmp_path / "r", repetitions=1, generations=2))
    resumed = evolve(smoke_config(tmp_path / "r", repetitions=1, generations=4))
    fresh = evolve(smoke_config(tmp_path / "f", repetitions=1, generations=4))
    assert [g.index for g in resumed[0].generations] == [0, 1, 2, 3, 4]
    a = (tmp_path / "r" / "run_000" / "evaluations.csv").read_bytes()
    b = (tmp_path / "f" / "run_000" / "evaluations.csv").read_bytes()
    assert a == b


def test_resume_after_interruption(tmp_path):
    full = evolve(smoke_config(tmp_path / "i", repetitions=1, generations=3))
    run_dir = tmp_path / "i" / "run_000"
    before = (run_dir / "evaluations.csv").read_bytes()
    # a checkpoint from generation 1 next to rows up to generation 3 mimics a
    # crash between writing rows and writing the checkpoint
    evolve(smoke_config(tmp_path / "p", repetitions=1, generations=1))
    shutil.copy(tmp_path / "p" / "run_000" / "checkpoint.json", run_dir / "checkpoint.json")
    resumed = evolve(smoke_config(tmp_path / "i", repetitions=1, generations=3))
    assert (run_dir / "evaluations.csv").read_bytes() == before
    assert np.array_equal(resumed[0].best_so_far(), full[0].best_so_far())


def test_foreign_checkpoint_ignored(tmp_path):
    evolve(smoke_config(tmp_path / "a", repetitions=1, generations=1))
    other = evolve(smoke_config(tmp_path / "a", repetitions=1, generations=1, sigma0=0.2))
    fresh = evolve(smoke_config(tmp_path / "b", repetitions=1, generations=1, sigma0=0.2))
    assert np.array_equal(other[0].best_so_far(), fresh[0].best_so_far())


def test_reevaluate(smoke):
    _, archives = smoke
    with pytest.warns(RuntimeWarning):
        rows = reevaluate(archives, top_k=5, repeats=3, settings=_short())
    assert len(rows) == 2 * 3
    assert {r["seed"] for r in rows} == {10_000, 10_001, 10_002}
    assert all(r["mode"] == "open" for r in rows)


def test_reevaluate_archived_seed_reproduces(smoke):
    _, archives = smoke
    rows = reevaluate(archives, top_k=1, repeats=1, seeds="archived", settings=_short())
    best = max((a.best() for a in archives), key=lambda b: b[1])
    assert rows[0]["composite"] == best[1]


def test_reevaluate_empty():
    with pytest.raises(ConfigurationError):
        reevaluate([], 5, 10)


def test_reevaluation_round_trip(smoke, tmp_path):
    _, archives = smoke
    rows = reevaluate(archives, top_k=2, repeats=2, settings=_short())
    export_reevaluation(rows, tmp_path / "re.csv")
    back = read_reevaluation(tmp_path / "re.csv")
    assert back == rows
    a = summarize(rows, "run")
    b = summarize(back, "run")
    assert a == b


def test_divergence_scored_worst(monkeypatch):
    from gaitevo import experiment
    from gaitevo.errors import SimulationDiverged

    def boom(*args, **kwargs):
        raise SimulationDiverged(42)
    monkeypatch.setattr(experiment, "run_evaluation", boom)
    rec = evaluate_genome(np.full(10, 0.5), "open", 0, SimSettings())
    assert rec.composite == -math.inf and rec.fell


def test_config_validation(tmp_path):
    with pytest.raises(ConfigurationError):
        ExperimentConfig(repetitions=0)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(generations=0)
    with pytest.raises(ConfigurationError):
        ExperimentConfig(mode="trot")
    with pytest.raises(ConfigurationError):
        evolve(ExperimentConfig(sim_config=str(tmp_path / "missing.ini"), output=str(tmp_path / "o")))


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ConfigurationError):
        evolve(smoke_config(blocker / "sub"))


def test_parallel_matches_serial(tmp_path):
    a = evolve(smoke_config(tmp_path / "s", repetitions=1, generations=1))
    b = evolve(smoke_config(tmp_path / "w", repetitions=1, generations=1, workers=2))
    assert np.array_equal(a[0].best_so_far(), b[0].best_so_far())
    assert (tmp_path / "s" / "run_000" / "evaluations.csv").read_bytes() == \
        (tmp_path / "w" / "run_000" / "evaluations.csv").read_bytes()


def _short():
    from dataclasses import replace
    s = SimSettings()
    return replace(s, evaluation=replace(s.evaluation, duration=SHORT))


class TestCli:
    def test_full_pipeline(self, tmp_path, capsys):
        ini = tmp_path / "sim.ini"
        save_sim_settings(_short(), ini)
        for mode in ("open", "closed"):
            assert main(["evolve", "--mode", mode, "--repetitions", "2", "--generations", "2",
                         "--config", str(ini), "-o", str(tmp_path / mode)]) == 0
        assert main(["export", str(tmp_path / "open"), "-o", str(tmp_path / "exp")]) == 0
        assert (tmp_path / "exp" / "fitness.csv").exists()
        assert main(["reevaluate", str(tmp_path / "open"), str(tmp_path / "closed"), "--top-k", "2",
                     "--repeats", "3", "--config", str(ini), "-o", str(tmp_path / "re.csv")]) == 0
        assert len(read_reevaluation(tmp_path / "re.csv")) == 12
        assert main(["stats", str(tmp_path / "re.csv"), "-o", str(tmp_path / "st")]) == 0
        report = json.loads((tmp_path / "st" / "stats.json").read_text())
        assert report["composite"]["corrected_alpha"] == pytest.approx(0.05 / 16)
        assert len(report["distance"]["comparisons"]) == 1
        out = capsys.readouterr().out
        assert "closed vs open" in out

    def test_replay(self, tmp_path, capsys):
        save_genome(tmp_path / "g.json", np.full(10, 0.5), "closed")
        assert main(["replay", str(tmp_path / "g.json"), "--duration", "1", "-o", str(tmp_path / "tr")]) == 0
        assert (tmp_path / "tr.csv").exists() and (tmp_path / "tr.npz").exists()
        rec = json.loads(capsys.readouterr().out)
        assert set(rec) >= {"composite", "distance"}

    def test_replay_bad_genome(self, tmp_path, capsys):
        (tmp_path / "g.json").write_text('{"mode": "open", "genes": [0.5,, 0.5]}')
        assert main(["replay", str(tmp_path / "g.json"), "-o", str(tmp_path / "tr")]) == 2
        assert "line 1, column" in capsys.readouterr().err

    def test_failed_run_exit_code(self, tmp_path, monkeypatch):
        from gaitevo import experiment

        def broken(*args, **kwargs):
            raise RuntimeError("disk on fire")
        monkeypatch.setattr(experiment, "evolve_run", broken)
        assert main(["evolve", "--repetitions", "1", "--generations", "1", "-o", str(tmp_path / "x")]) == 1

    def test_bad_config_exit_code(self, tmp_path):
        assert main(["evolve", "--config", str(tmp_path / "none.ini"), "-o", str(tmp_path / "x")]) == 2
