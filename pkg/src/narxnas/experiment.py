"""Seeded multi-call experiments, the exhaustive grid baseline and reporting."""

from __future__ import annotations

import csv
import json
import logging
import time
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .fitness import FitnessWeights, evaluate_genome, mean_error
from .genome import Genome, simulate_closed_loop
from .hybrid import run_dnas4
from .results import GenerationStats, RunResult
from .search import evolve
from .seeding import call_seed, derive_rng
from .training import TrainerKind, TrainSpec, train_from_scratch

log = logging.getLogger(__name__)


def run_algorithm(config, dataset, seed: Optional[int] = None) -> RunResult:
    if config.algorithm == "dnas4":
        return run_dnas4(config, dataset, seed)
    return evolve(config, dataset, seed)


@dataclass
class CallOutcome:
    call: int
    seed: int
    result: Optional[RunResult] = None
    error: Optional[str] = None


def run_calls(config, dataset) -> list:
    """Independent seeded calls of the configured algorithm, in call order.

    A failing call is recorded, not raised.  Calls run concurrently when
    ``config.workers > 1``; each call evaluates serially in that case.
    """
    config.validate()

    def one(call: int) -> CallOutcome:
        s = call_seed(config.seed, call)
        try:
            inner = config.replace(workers=1) if config.workers > 1 else config
            return CallOutcome(call, s, run_algorithm(inner, dataset, s))
        except Exception as exc:  # recorded per call
            log.exception("call %d failed", call)
            return CallOutcome(call, s, error=f"{type(exc).__name__}: {exc}")

    calls = range(config.calls)
    if config.workers > 1 and config.calls > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            return list(pool.map(one, calls))
    return [one(c) for c in calls]


@dataclass(frozen=True)
class IndicatorSummary:
    completed_calls: int
    failed_calls: int
    avg_mean_error: float
    median_mean_error: float
    avg_neurons: float
    median_neurons: float
    avg_du: float
    avg_dy: float
    avg_best_fitness: float
    median_best_fitness: float
    avg_wall_clock_s: float


def summarize(outcomes: Sequence[CallOutcome]) -> IndicatorSummary:
    done = [o.result for o in outcomes if o.result is not None]
    failed = len(outcomes) - len(done)
    if not done:
        nan = float("nan")
        return IndicatorSummary(0, failed, *([nan] * 9))
    err = np.array([r.best.record.mean_error for r in done])
    neu = np.array([r.best.genome.neuron_count for r in done], dtype=float)
    fit = np.array([r.best.fitness for r in done])
    return IndicatorSummary(
        completed_calls=len(done),
        failed_calls=failed,
        avg_mean_error=float(err.mean()),
        median_mean_error=float(np.median(err)),
        avg_neurons=float(neu.mean()),
        median_neurons=float(np.median(neu)),
        avg_du=float(np.mean([r.best.genome.du for r in done])),
        avg_dy=float(np.mean([r.best.genome.dy for r in done])),
        avg_best_fitness=float(fit.mean()),
        median_best_fitness=float(np.median(fit)),
        avg_wall_clock_s=float(np.mean([r.duration_s for r in done])),
    )


def best_neuron_histogram(outcomes: Sequence[CallOutcome]) -> dict:
    counts = Counter(o.result.best.genome.neuron_count for o in outcomes if o.result)
    return dict(sorted(counts.items()))


def genome_document(genome: Genome, record=None, trainer: Optional[str] = None, **extra) -> dict:
    doc = {"genome": genome.to_dict()}
    if trainer:
        doc["trainer"] = trainer
    if record is not None:
        doc["record"] = asdict(record)
    doc.update(extra)
    return doc


def load_genome(path: str | Path) -> Genome:
    data = json.loads(Path(path).read_text())
    return Genome.from_dict(data.get("genome", data))


def _dump_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def write_run_outputs(outdir: str | Path, config, outcomes: Sequence[CallOutcome]) -> dict:
    """Write summary.json, generations.csv, histogram.csv and per-call genomes."""
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    indicators = summarize(outcomes)
    calls = []
    for o in outcomes:
        entry = {"call": o.call, "seed": o.seed, "error": o.error}
        if o.result is not None:
            entry.update(o.result.summary())
            _dump_json(out / f"best_genome_call{o.call:03d}.json",
                       genome_document(o.result.best.genome, o.result.best.record,
                                       o.result.best.trainer, call=o.call, seed=o.seed))
        calls.append(entry)
    summary = {
        "config": config.as_dict(),
        "indicators": asdict(indicators),
        "neuron_histogram": {str(k): v for k, v in best_neuron_histogram(outcomes).items()},
        "calls": calls,
    }
    _dump_json(out / "summary.json", summary)

    with (out / "generations.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("call",) + GenerationStats.FIELDS)
        for o in outcomes:
            if o.result is None:
                continue
            for s in o.result.history:
                w.writerow((o.call,) + tuple(_cell(getattr(s, f)) for f in GenerationStats.FIELDS))
    with (out / "histogram.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("neurons", "best_individuals"))
        for k, v in best_neuron_histogram(outcomes).items():
            w.writerow((k, v))
    (out / "config.txt").write_text(config.to_text())
    return summary


def _cell(v):
    if isinstance(v, bool):
        return int(v)
    if isinstance(v, float):
        return repr(v)
    return v


@dataclass(frozen=True)
class GridPoint:
    neurons: int
    du: int
    dy: int
    fitness: float
    mean_error: float
    repeats: int


@dataclass
class ExhaustiveResult:
    points: list
    best_point: GridPoint
    best_genome: Genome
    trainings: int
    duration_s: float


def exhaustive_search(config, dataset, seed: Optional[int] = None) -> ExhaustiveResult:
    """Train every (neurons, du, dy) grid point ``gridRepeats`` times; keep the best.

    Single hidden layer, one training method, scored with the same fitness
    function as the evolutionary searches.
    """
    config.validate()
    seed = config.seed if seed is None else seed
    weights = FitnessWeights.from_config(config)
    spec = TrainSpec.from_config(config, TrainerKind(config.trainer))
    if max(*config.gridDu, *config.gridDy) >= len(dataset):
        raise ValueError("grid delays exceed the dataset length")
    started = time.perf_counter()
    grid = [(n, du, dy) for n in range(1, config.gridNeurons + 1)
            for du in config.gridDu for dy in config.gridDy]

    def point(job):
        n, du, dy = job
        best = None
        for rep in range(config.gridRepeats):
            rng = derive_rng(seed, n, du, dy, rep)
            res = train_from_scratch((n,), du, dy, dataset, spec, rng)
            rec = evaluate_genome(res.genome, dataset, weights)
            if best is None or rec.fitness > best[1].fitness:
                best = (res.genome, rec)
        return best

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            found = list(pool.map(point, grid))
    else:
        found = [point(j) for j in grid]
    points = [GridPoint(n, du, dy, rec.fitness, rec.mean_error, config.gridRepeats)
              for (n, du, dy), (_, rec) in zip(grid, found)]
    k = max(range(len(points)), key=lambda i: (points[i].fitness, -i))
    return ExhaustiveResult(points, points[k], found[k][0], len(grid) * config.gridRepeats,
                            time.perf_counter() - started)


def write_exhaustive_outputs(outdir: str | Path, config, result: ExhaustiveResult) -> dict:
    out = Path(outdir)
    out.mkdir(parents=True, exist_ok=True)
    with (out / "grid.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("neurons", "du", "dy", "fitness", "mean_error", "repeats"))
        for p in result.points:
            w.writerow((p.neurons, p.du, p.dy, repr(p.fitness), repr(p.mean_error), p.repeats))
    summary = {
        "config": config.as_dict(),
        "best": asdict(result.best_point),
        "trainings": result.trainings,
        "wall_clock_s": result.duration_s,
    }
    _dump_json(out / "summary.json", summary)
    _dump_json(out / "best_genome.json", genome_document(result.best_genome,
                                                         trainer=config.trainer))
    (out / "config.txt").write_text(config.to_text())
    return summary


def verify(genome: Genome, datasets: Sequence) -> list:
    """Free-run mean error of ``genome`` on each dataset: ``[(name, error), ...]``."""
    rows = []
    for ds in datasets:
        if max(genome.du, genome.dy) >= len(ds):
            raise ValueError(
                f"delay levels du={genome.du}, dy={genome.dy} exceed dataset {ds.name!r} "
                f"of {len(ds)} samples"
            )
        y = simulate_closed_loop(genome, ds.inputs, ds.nominal_input, ds.nominal_output)
        rows.append((ds.name, mean_error(y, ds.targets)))
    return rows
