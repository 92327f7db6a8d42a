"""Command line entry point: ``simrsma {run,sweep,converge,oracle-check}``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, SystemConfig
from .harness import (AXES, ExperimentSpec, aggregate, convergence_experiment, emit_convergence_csv,
                      emit_csv, load_spec, manifest, run_cells, write_manifest)
from .schemes import SCHEMES


def _values(text: str) -> list[float]:
    try:
        return [float(v) for v in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a list of numbers: {text!r}") from None


def _schemes(text: str) -> list[str]:
    names = [s for s in text.replace(",", " ").split() if s]
    bad = [s for s in names if s not in SCHEMES]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown schemes {bad}; choose from {', '.join(SCHEMES)}")
    return names


def _add_common(p: argparse.ArgumentParser, config_required: bool = False):
    p.add_argument("--config", required=config_required, help="JSON config (SystemConfig + experiment keys)")
    p.add_argument("--out", help="output directory (default: ./results)")
    p.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
    p.add_argument("--trials", type=int, help="trials per point")
    p.add_argument("--threads", type=int, help="worker processes")
    p.add_argument("--schemes", type=_schemes, help=f"comma list from {', '.join(SCHEMES)}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="simrsma", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment described by a config file")
    _add_common(run, config_required=True)

    sweep = sub.add_parser("sweep", help="sweep one system parameter")
    sweep.add_argument("--axis", required=True, choices=[a for a in AXES if a != "none"])
    sweep.add_argument("--values", required=True, type=_values,
                       help="increasing values (dBm for pmax), comma or space separated")
    _add_common(sweep)

    conv = sub.add_parser("converge", help="record the AO trace per outer iteration")
    _add_common(conv)

    oracle = sub.add_parser("oracle-check", help="run the independent oracle suite")
    oracle.add_argument("--seed", type=int, default=0)
    oracle.add_argument("--samples", type=int, default=10_000,
                        help="random samples per tiny instance")
    return parser


def _resolve(args, **overrides) -> tuple[ExperimentSpec, int]:
    threads = None
    if args.config:
        spec, threads = load_spec(args.config)
    else:
        spec = ExperimentSpec(base=SystemConfig())
    changes = dict(overrides)
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.trials is not None:
        changes["trials"] = args.trials
    if args.schemes:
        changes["schemes"] = tuple(args.schemes)
    if args.out:
        changes["out"] = args.out
    spec = spec.replace(**changes)
    if args.threads is not None:
        threads = args.threads
    return spec, max(1, int(threads or 1))


def _out_dir(spec: ExperimentSpec) -> Path:
    return Path(spec.out or "results")


def _progress(total: int):
    done = [0]

    def report(res):
        done[0] += 1
        flag = "" if res.ok else f"  FAILED: {res.error}"
        print(f"[{done[0]}/{total}] {res.scheme} {res.axis}={res.axis_value} trial {res.trial}"
              f" min_rate={res.min_rate:.4f}{flag}", file=sys.stderr)
    return report


def _run_table(spec: ExperimentSpec, threads: int) -> int:
    out = _out_dir(spec)
    total = len(spec.points) * len(spec.schemes) * spec.trials
    collected = []
    report = _progress(total)

    def on_result(res):
        collected.append(res)
        report(res)

    try:
        rows = run_cells(spec, threads, on_result=on_result)
    except KeyboardInterrupt:
        # flush what finished before the interruption
        rows = collected
        table = rows + aggregate(rows)
        emit_csv(table, out / "results.csv")
        write_manifest(manifest(spec, table, interrupted=True), out / "manifest.json")
        print(f"interrupted; partial results in {out}", file=sys.stderr)
        return 130
    table = rows + aggregate(rows)
    emit_csv(table, out / "results.csv")
    write_manifest(manifest(spec, table, threads=threads), out / "manifest.json")
    print(f"wrote {out / 'results.csv'} and {out / 'manifest.json'}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "oracle-check":
            from .oracles import run_all

            outcomes = run_all(seed=args.seed, random_samples=args.samples)
            for o in outcomes:
                print(f"{'PASS' if o.passed else 'FAIL'}  {o.name}: {o.detail}")
            return 0 if all(o.passed for o in outcomes) else 1
        if args.command == "run":
            spec, threads = _resolve(args)
            return _run_table(spec, threads)
        if args.command == "sweep":
            values = tuple(args.values)
            if args.axis != "pmax":
                if any(v != int(v) for v in values):
                    raise ConfigError(f"axis {args.axis} takes integer values")
                values = tuple(int(v) for v in values)
            spec, threads = _resolve(args, axis=args.axis, values=values)
            return _run_table(spec, threads)
        if args.command == "converge":
            spec, threads = _resolve(args, axis="none", values=())
            rows = convergence_experiment(spec, threads)
            out = _out_dir(spec)
            emit_convergence_csv(rows, out / "convergence.csv")
            write_manifest(manifest(spec, None, kind="convergence", threads=threads),
                           out / "manifest.json")
            print(f"wrote {out / 'convergence.csv'}")
            return 0
    except (ConfigError, OSError, ValueError) as exc:
        print(f"simrsma: error: {exc}", file=sys.stderr)
        return 2
    return 2


if __name__ == "__main__":
    sys.exit(main())
