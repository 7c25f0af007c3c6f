"""Command line entry point.

Exit codes: 0 success, 2 configuration or usage error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .arch import cost, decode, format_architecture
from .archive import FORMAT_VERSION, Archive, Evaluated, ObjectiveMode, front_csv, high_tradeoff, initialize, nondominated
from .config import ConfigError, RunConfig, load_config
from .encoding import Genome, InvalidGenomeError
from .pipeline import build_evaluator, run
from .predictors import ALL_KINDS, benchmark, rows_to_csv, warmup
from .sampling import SAMPLERS, depth_histograms, sample_many

EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class UsageError(Exception):
    pass


def _config(args) -> RunConfig:
    overrides = {}
    for key in ("seed", "scheme", "objective", "jobs", "iterations", "archive_size"):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    return load_config(getattr(args, "config", None), overrides)


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def cmd_sample(args) -> None:
    cfg = _config(args)
    scheme = cfg.build_scheme()
    genomes = sample_many(scheme, args.n, np.random.default_rng(cfg.seed), args.method)
    if args.histogram:
        stage, network = depth_histograms(genomes)
        _emit(json.dumps({"stage_depth": stage, "network_depth": network}, indent=2) + "\n", args.out)
        return
    lines = [json.dumps({"format_version": FORMAT_VERSION, **g.to_dict()}) for g in genomes]
    _emit("".join(line + "\n" for line in lines), args.out)


def cmd_cost(args) -> None:
    cfg = _config(args)
    scheme = cfg.build_scheme()
    genome = Genome.from_text(scheme, args.genome)
    arch = decode(genome, cfg.build_macro(), aep_exits=args.aep_exits)
    if args.pretty:
        _emit(format_architecture(arch) + "\n", args.out)
        return
    _emit(json.dumps(cost(arch).to_dict(), indent=2) + "\n", args.out)


def cmd_init_archive(args) -> None:
    cfg = _config(args)
    scheme = cfg.build_scheme()
    macro = cfg.build_macro()
    archive, n = initialize(scheme, macro, build_evaluator(cfg, scheme, macro), cfg.archive_size,
                            cfg.oversample, np.random.default_rng(np.random.SeedSequence(cfg.seed).spawn(1)[0]),
                            cfg.objective, cfg.jobs)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    archive.save(out / "archive.jsonl")
    print(f"{n} evaluations, archive of {len(archive)} written to {out / 'archive.jsonl'}", file=sys.stderr)


def cmd_search(args) -> None:
    cfg = _config(args)
    resume = None
    if args.resume:
        resume = Archive.load(args.resume, cfg.build_scheme(), cfg.archive_size, cfg.objective)
    result = run(cfg, archive=resume, out_dir=args.out_dir)
    print(f"{result.evaluations} evaluations, {len(result.nondominated)} non-dominated, "
          f"{len(result.high_tradeoff)} high trade-off; outputs in {args.out_dir}", file=sys.stderr)


def cmd_bench(args) -> None:
    cfg = _config(args)
    from .evaluator import SyntheticOracle

    scheme = cfg.build_scheme()
    oracle = SyntheticOracle(scheme, cfg.build_macro(), seed=cfg.seed, noise=cfg.oracle.noise)
    kinds = args.kinds.split(",") if args.kinds else list(ALL_KINDS)
    sizes = [int(s) for s in args.sizes.split(",")]
    encodings = args.encodings.split(",")
    for e in encodings:
        if e not in ("integer", "onehot"):
            raise ConfigError(f"unknown encoding {e!r}")
    warmup()
    rows = benchmark(kinds, scheme, oracle, sizes, encodings, np.random.default_rng(cfg.seed),
                     k=args.folds, repeats=args.repeats)
    _emit(rows_to_csv(rows), args.out)


def _read_members(path: str, scheme) -> list[Evaluated]:
    text = Path(path).read_text()
    if path.endswith(".csv"):
        rows = list(csv.DictReader(text.splitlines()))
        return [Evaluated(Genome.from_text(scheme, r["genome"]), float(r["accuracy"]), int(r["params"]),
                          int(r["macs"])) for r in rows]
    return Archive.from_jsonl(text, scheme, capacity=max(3, text.count("\n") + 1)).members


def cmd_knee(args) -> None:
    cfg = _config(args)
    members = _read_members(args.front, cfg.build_scheme())
    mode = ObjectiveMode(cfg.objective)
    if mode is ObjectiveMode.ACC_ONLY:
        raise ConfigError("knee selection needs a two-objective mode")
    front = nondominated(members, mode)
    _emit(front_csv(high_tradeoff(front, mode, args.threshold)), args.out)


def cmd_export_front(args) -> None:
    cfg = _config(args)
    members = _read_members(args.archive, cfg.build_scheme())
    _emit(front_csv(nondominated(members, cfg.objective)), args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="natsearch", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, seed_required=False):
        sp.add_argument("--config", help="TOML config file")
        sp.add_argument("--seed", type=int, required=seed_required)
        sp.add_argument("--scheme", help="Baseline | Parallel | EarlyExits | EarlyExitsParallel")
        sp.add_argument("--objective", help="AccOnly | AccParams | AccMacs")
        sp.add_argument("--out", help="output file (default: stdout)")

    sp = sub.add_parser("sample", help="emit random genomes as JSONL")
    common(sp)
    sp.add_argument("-n", type=int, default=10)
    sp.add_argument("--method", choices=sorted(SAMPLERS), default="depth-uniform")
    sp.add_argument("--histogram", action="store_true", help="print stage/network depth histograms instead")
    sp.set_defaults(func=cmd_sample)

    sp = sub.add_parser("cost", help="params/MACs of one genome")
    common(sp)
    sp.add_argument("--genome", required=True, help="text form, e.g. 'R:0 W:0 X:1 L:1,1,0,0,...'")
    sp.add_argument("--aep-exits", action="store_true", help="re-attach all earlier exits")
    sp.add_argument("--pretty", action="store_true", help="print the architecture instead")
    sp.set_defaults(func=cmd_cost)

    sp = sub.add_parser("init-archive", help="oversampled archive initialization")
    common(sp, seed_required=True)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--jobs", type=int)
    sp.add_argument("--archive-size", dest="archive_size", type=int)
    sp.set_defaults(func=cmd_init_archive)

    sp = sub.add_parser("search", help="full search run")
    common(sp, seed_required=True)
    sp.add_argument("--out-dir", required=True)
    sp.add_argument("--jobs", type=int)
    sp.add_argument("--iterations", type=int)
    sp.add_argument("--archive-size", dest="archive_size", type=int)
    sp.add_argument("--resume", help="archive JSONL to continue from")
    sp.set_defaults(func=cmd_search)

    sp = sub.add_parser("bench-predictors", help="predictor rank-correlation and fit-time table")
    common(sp, seed_required=True)
    sp.add_argument("--sizes", default="300")
    sp.add_argument("--encodings", default="integer,onehot")
    sp.add_argument("--kinds", help="comma-separated predictor kinds (default: all)")
    sp.add_argument("--folds", type=int, default=10)
    sp.add_argument("--repeats", type=int, default=1)
    sp.set_defaults(func=cmd_bench)

    sp = sub.add_parser("knee", help="high trade-off points of a front")
    common(sp)
    sp.add_argument("--front", required=True, help="front CSV or archive JSONL")
    sp.add_argument("--threshold", type=float, default=1.0)
    sp.set_defaults(func=cmd_knee)

    sp = sub.add_parser("export-front", help="non-dominated set of an archive as CSV")
    common(sp)
    sp.add_argument("--archive", required=True)
    sp.set_defaults(func=cmd_export_front)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else 0
    try:
        args.func(args)
    except (ConfigError, InvalidGenomeError, UsageError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        # malformed genome text and similar input problems
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return 0


if __name__ == "__main__":
    sys.exit(main())
