"""Command-line entry point: ``narxnas <subcommand> [flags]``.

Configuration is resolved in layers: algorithm defaults (or ``--preset``),
then a ``--config`` key=value file, then individual flags, which are named
exactly like the config fields (``--popSize 30 --pMutW 0.1``).

Exit codes: 0 success, 1 every call failed or an I/O error, 2 bad
configuration or input contract violation.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
import zlib
from dataclasses import fields
from pathlib import Path

from .config import ConfigError, NasConfig, coerce, parse_config_text, preset, table_defaults, PRESETS
from .experiment import (exhaustive_search, load_genome, run_calls, verify,
                         write_exhaustive_outputs, write_run_outputs)
from .genome import StructureError
from .plant import (DEFAULT_DURATION, ROD_MAX, ROD_MIN, SCHEDULES, Dataset, DatasetError,
                    PlantError, SurrogatePlantParams, bundled_dataset, generate_dataset,
                    load_csv, save_csv)
from .seeding import derive_rng

log = logging.getLogger("narxnas")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2

_CONFIG_FIELDS = [f.name for f in fields(NasConfig)]


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--preset", choices=sorted(PRESETS))
    p.add_argument("--out", default="results", help="output directory")
    group = p.add_argument_group("configuration fields")
    for name in _CONFIG_FIELDS:
        group.add_argument(f"--{name}", dest=f"cfg_{name}", metavar="VALUE")


def resolve_config(args, default_algorithm: str = "dnas3") -> NasConfig:
    file_text = Path(args.config).read_text() if args.config else ""
    file_cfg = parse_config_text(file_text) if file_text else None
    file_keys = _keys_in(file_text)

    algorithm = getattr(args, "cfg_algorithm", None)
    if algorithm is None and "algorithm" in file_keys:
        algorithm = file_cfg.algorithm
    if args.preset:
        base = preset(args.preset)
        if algorithm is not None and algorithm != base.algorithm:
            raise ConfigError(f"preset {args.preset} is for {base.algorithm}, not {algorithm}")
    else:
        base = table_defaults(algorithm or default_algorithm)
    if file_text:
        base = parse_config_text(file_text, base)
    changes = {}
    for name in _CONFIG_FIELDS:
        raw = getattr(args, f"cfg_{name}", None)
        if raw is not None:
            changes[name] = coerce(name, raw)
    return base.replace(**changes).validate()


def _keys_in(text: str) -> set:
    keys = set()
    for line in text.splitlines():
        line = line.split("#", 1)[0]
        if "=" in line:
            keys.add(line.split("=", 1)[0].strip())
    return keys


def _dataset(config: NasConfig) -> Dataset:
    if config.data:
        return load_csv(config.data)
    return bundled_dataset("learning")


def cmd_run(args) -> int:
    config = resolve_config(args)
    if config.algorithm == "exhaustive":
        return _exhaustive(config, args.out)
    dataset = _dataset(config)
    outcomes = run_calls(config, dataset)
    summary = write_run_outputs(args.out, config, outcomes)
    ind = summary["indicators"]
    print(f"{config.algorithm}: {ind['completed_calls']}/{config.calls} calls completed, "
          f"avg mean error {ind['avg_mean_error']:.5f}, avg neurons {ind['avg_neurons']:.2f} "
          f"-> {args.out}")
    for o in outcomes:
        if o.error:
            print(f"call {o.call} failed: {o.error}", file=sys.stderr)
    return EXIT_OK if ind["completed_calls"] > 0 else EXIT_FAILED


def cmd_exhaustive(args) -> int:
    return _exhaustive(resolve_config(args, "exhaustive").replace(algorithm="exhaustive"),
                       args.out)


def _exhaustive(config: NasConfig, out: str) -> int:
    result = exhaustive_search(config, _dataset(config))
    write_exhaustive_outputs(out, config, result)
    b = result.best_point
    print(f"grid winner: {b.neurons} neurons, du={b.du}, dy={b.dy}, fitness {b.fitness:.6f}, "
          f"mean error {b.mean_error:.5f} ({result.trainings} trainings) -> {out}")
    return EXIT_OK


def _read_schedule(path: str) -> list:
    steps = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or row[0].strip().startswith("#"):
                continue
            try:
                t, z = float(row[0]), float(row[1])
            except (ValueError, IndexError):
                if lineno == 1:
                    continue  # header
                raise ConfigError(f"{path}:{lineno}: expected 'time,position', got {row}") from None
            if not ROD_MIN <= z <= ROD_MAX:
                raise ConfigError(f"{path}:{lineno}: rod position {z} outside [{ROD_MIN}, {ROD_MAX}]")
            steps.append((t, z))
    return steps


def cmd_generate_data(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    jobs = []
    if args.schedule_file:
        jobs.append((Path(args.schedule_file).stem, _read_schedule(args.schedule_file)))
    names = args.schedule or ([] if args.schedule_file else ["learning", "verification1",
                                                             "verification2"])
    for name in names:
        if name not in SCHEDULES:
            raise ConfigError(f"unknown schedule {name!r}; choose from {sorted(SCHEDULES)}")
        jobs.append((name, SCHEDULES[name]))
    params = SurrogatePlantParams()
    for name, steps in jobs:
        rng = derive_rng(args.seed, zlib.crc32(name.encode()))
        ds = generate_dataset(params, steps, args.duration, args.sample_period, rng,
                              args.noise, name)
        path = out / f"{name}.csv"
        save_csv(ds, path)
        print(f"{path}: {len(ds)} samples, power {ds.targets.min():.4f}..{ds.targets.max():.4f}")
    return EXIT_OK


def cmd_verify(args) -> int:
    genome = load_genome(args.genome)
    if args.datasets:
        sets = [load_csv(p) for p in args.datasets]
    else:
        sets = [bundled_dataset("verification1"), bundled_dataset("verification2")]
    rows = verify(genome, sets)
    print("dataset,mean_error")
    for name, err in rows:
        print(f"{name},{err!r}")
    if args.out:
        report = {"genome": str(args.genome),
                  "errors": [{"dataset": n, "mean_error": e} for n, e in rows]}
        Path(args.out).write_text(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


_REPORT_KEYS = ("completed_calls", "failed_calls", "avg_mean_error", "avg_neurons",
                "avg_du", "avg_dy", "avg_wall_clock_s")


def cmd_report(args) -> int:
    """Indicator table over one or more ``run`` output directories."""
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(("run", "algorithm") + _REPORT_KEYS + ("neuron_histogram",))
    for d in args.runs:
        summary = json.loads((Path(d) / "summary.json").read_text())
        if "indicators" not in summary:
            best = summary["best"]
            w.writerow((d, "exhaustive", 1, 0, best["mean_error"], best["neurons"],
                        best["du"], best["dy"], summary["wall_clock_s"], ""))
            continue
        ind = summary["indicators"]
        hist = " ".join(f"{k}:{v}" for k, v in summary["neuron_histogram"].items())
        w.writerow((d, summary["config"]["algorithm"]) + tuple(ind[k] for k in _REPORT_KEYS)
                   + (hist,))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="narxnas",
                                     description="Evolutionary architecture search for NARX models")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate-data", help="simulate the surrogate plant and write CSV datasets")
    p.add_argument("--out", default="data")
    p.add_argument("--schedule", action="append", help=f"one of {sorted(SCHEDULES)} (repeatable)")
    p.add_argument("--schedule-file", help="CSV of time_s,rod_position_m steps")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.0, help="std of additive power noise")
    p.add_argument("--duration", type=float, default=DEFAULT_DURATION)
    p.add_argument("--sample-period", type=float, default=1.0)
    p.set_defaults(func=cmd_generate_data)

    p = sub.add_parser("run", help="seeded calls of one search algorithm")
    _add_config_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("exhaustive", help="grid-search baseline")
    _add_config_flags(p)
    p.set_defaults(func=cmd_exhaustive)

    p = sub.add_parser("verify", help="free-run error of a trained genome on verification sets")
    p.add_argument("--genome", required=True, help="genome JSON written by run/exhaustive")
    p.add_argument("datasets", nargs="*", help="CSV datasets (default: bundled verification sets)")
    p.add_argument("--out", help="optional JSON report path")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("report", help="indicator table of finished runs")
    p.add_argument("runs", nargs="+", help="output directories of run/exhaustive")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, DatasetError, StructureError, ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, PlantError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
