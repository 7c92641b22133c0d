"""Command-line entry point gluing the pipeline for batch use.

Stages stream JSON lines between files: generation is cheap and exact,
LLM evaluation is slow and resumable, so they are separate subcommands
rather than one monolithic run. Human summaries go to stdout, logs to
stderr, machine-readable output to files. Exit codes: 0 success, 1 domain
error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import __version__
from .counter import CountMethod, count_models
from .encodings import ExampleBank, PromptEncoding, Task
from .errors import SatlabError
from .generators import (
    Family,
    GenSpec,
    InstanceRecord,
    build_pool,
    dataset_alpha_grid,
    parse_alpha,
    phase_rows,
    pool_digest,
    psat_crossing,
    read_pool,
    write_pool,
)
from .harness import (
    ExperimentConfig,
    analyze_records,
    encode_instance,
    EvalRecord,
    export_results,
    overall_accuracy,
    phase_csv_bytes,
    run_experiment,
)
from .solver import SolveMode, SolveOptions, Verdict, export_trace, solve
from .subjects import OracleSubject, subject_adapter

FAMILIES = {"3sat": Family.KSAT3, "2sat": Family.KSAT2, "horn13": Family.HORN13}


def _parse_n_range(text: str) -> list[int]:
    if ".." in text:
        lo, hi = text.split("..", 1)
        return list(range(int(lo), int(hi) + 1))
    return [int(text)]


def _parse_grid(text: str, family: Family, n: int) -> list[Fraction]:
    if text == "paper":
        return dataset_alpha_grid(n, family)
    return [parse_alpha(a) for a in text.split(",") if a.strip()]


def _log(message: str) -> None:
    print(message, file=sys.stderr)


def cmd_generate(args) -> int:
    family = FAMILIES[args.family]
    specs = [
        GenSpec(family, n, alpha, args.seed, args.per_alpha)
        for n in _parse_n_range(args.n_range)
        for alpha in _parse_grid(args.alpha_grid, family, n)
    ]
    build = build_pool(specs, counting_cap_n=args.counting_cap, jobs=args.jobs)
    write_pool(build.records, args.out)
    per_n: dict[int, list[InstanceRecord]] = {}
    for rec in build.records:
        per_n.setdefault(rec.n, []).append(rec)
    print(f"pool: {len(build.records)} instances -> {args.out}")
    print("n      count   sat_fraction")
    for n in sorted(per_n):
        group = per_n[n]
        sat = sum(1 for r in group if r.label == "SAT")
        print(f"{n:<6} {len(group):<7} {sat / len(group):.3f}")
    if args.stats_out:
        rows = phase_rows(build)
        Path(args.stats_out).write_bytes(phase_csv_bytes(rows, psat_crossing(rows)))
        _log(f"phase stats -> {args.stats_out}")
    return 0


def cmd_solve(args) -> int:
    records = read_pool(args.input)
    mode = SolveMode.SEARCH if args.mode == "search" else SolveMode.DECISION
    trace_dir = Path(args.trace_out) if args.trace_out else None
    if trace_dir:
        trace_dir.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", encoding="utf-8") as out:
        for rec in records:
            opts = SolveOptions(trace=trace_dir is not None)
            outcome = solve(rec.formula, mode, opts)
            if outcome.verdict is Verdict.LIMIT_EXCEEDED:
                raise SatlabError(f"{rec.id}: node budget exceeded")
            if rec.label and outcome.verdict.value != rec.label:
                raise SatlabError(
                    f"{rec.id}: solver verdict {outcome.verdict.value} "
                    f"contradicts stored label {rec.label}"
                )
            obj = rec.to_json()
            obj["verdict"] = outcome.verdict.value
            obj["decisions"] = outcome.stats.decisions
            obj["unit_propagations"] = outcome.stats.unit_propagations
            obj["backtracks"] = outcome.stats.backtracks
            out.write(json.dumps(obj, separators=(",", ":")) + "\n")
            if trace_dir:
                (trace_dir / f"{rec.id}.json").write_text(
                    json.dumps(export_trace(outcome)) + "\n"
                )
    print(f"solved {len(records)} instances -> {args.out}")
    return 0


def cmd_count(args) -> int:
    records = read_pool(args.input)
    counted = 0
    with open(args.out, "w", encoding="utf-8") as out:
        for rec in records:
            obj = rec.to_json()
            if rec.n <= args.cap:
                obj["model_count"] = count_models(
                    rec.formula, CountMethod.ENUM, cap=args.cap
                ).model_count
                counted += 1
            else:
                _log(f"warning: {rec.id} has n={rec.n} > cap {args.cap}, left uncounted")
            out.write(json.dumps(obj, separators=(",", ":")) + "\n")
    print(f"counted {counted}/{len(records)} instances -> {args.out}")
    return 0


def _load_bank(args, records, config) -> ExampleBank | None:
    if args.shots == 0:
        return None
    if getattr(args, "bank", None):
        return ExampleBank.load_jsonl(args.bank)
    from .harness import make_example_bank
    return make_example_bank(records, config, limit=max(24, 8 * args.shots))


def cmd_encode(args) -> int:
    records = read_pool(args.input)
    config = ExperimentConfig(
        task=Task.SEARCH if args.task == "search" else Task.DECISION,
        encoding=PromptEncoding(args.encoding),
        shots=args.shots,
        master_seed=args.seed,
    )
    bank = _load_bank(args, records, config)
    with open(args.out, "w", encoding="utf-8") as out:
        for rec in records:
            enc = encode_instance(rec, config, bank)
            out.write(json.dumps(
                {"id": rec.id, "messages": enc.messages}, ensure_ascii=False
            ) + "\n")
    print(f"encoded {len(records)} prompts -> {args.out}")
    return 0


def cmd_eval(args) -> int:
    records = read_pool(args.pool)
    config = ExperimentConfig(
        task=Task.SEARCH if args.task == "search" else Task.DECISION,
        encoding=PromptEncoding(args.encoding),
        shots=args.shots,
        subject_spec=args.subject,
        master_seed=args.seed,
        jobs=args.jobs,
    )
    subject = subject_adapter(args.subject, seed=args.seed, cache_dir=args.cache_dir)
    bank = _load_bank(args, records, config)
    results, manifest = run_experiment(
        records, config, subject, bank, pool_digest=pool_digest(args.pool)
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.jsonl").write_bytes("".join(
        json.dumps(r.to_json(), sort_keys=True, separators=(",", ":")) + "\n"
        for r in results
    ).encode())
    (out / "manifest.json").write_bytes(
        json.dumps(manifest, sort_keys=True, indent=2).encode() + b"\n"
    )
    print(f"accuracy {overall_accuracy(results):.3f}")
    _log(f"results -> {out / 'results.jsonl'}")
    return 0


def cmd_analyze(args) -> int:
    results_path = Path(args.results)
    if results_path.is_dir():
        results_path = results_path / "results.jsonl"
    records = [
        EvalRecord.from_json(json.loads(line))
        for line in results_path.read_text().splitlines() if line.strip()
    ]
    pool = read_pool(args.pool)
    bundle = analyze_records(records, pool, window=args.window, bins=args.bins)
    paths = export_results(records, bundle, args.out)
    for name, path in sorted(paths.items()):
        _log(f"{name} -> {path}")
    print(f"analyzed {len(records)} records, "
          f"{len(bundle.alpha_curve)} alpha-curve points")
    return 0


def cmd_trace(args) -> int:
    records = read_pool(args.input)
    match = [r for r in records if r.id == args.id]
    if not match:
        raise SatlabError(f"instance {args.id!r} not found in {args.input}")
    mode = SolveMode.SEARCH if args.mode == "search" else SolveMode.DECISION
    outcome = solve(match[0].formula, mode, SolveOptions(trace=True))
    doc = export_trace(outcome)
    Path(args.out).write_text(json.dumps(doc, indent=1) + "\n")
    print(f"{args.id}: {outcome.verdict.value}, "
          f"{outcome.stats.decisions} decisions -> {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="satlab",
        description="Random SAT phase-transition laboratory",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build a labeled instance pool")
    p.add_argument("--family", choices=sorted(FAMILIES), default="3sat")
    p.add_argument("--n-range", default="3..10", help="e.g. 3..10 or 100")
    p.add_argument("--alpha-grid", default="paper",
                   help="'paper' or a comma-separated alpha list")
    p.add_argument("--per-alpha", type=int, default=300)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--counting-cap", type=int, default=20)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--stats-out", help="write per-(n, alpha) phase stats CSV")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("solve", help="re-solve a pool, cross-checking labels")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--mode", choices=["decision", "search"], default="decision")
    p.add_argument("--trace-out", help="directory for per-instance trace JSON")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("count", help="annotate a pool with exact model counts")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--cap", type=int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("encode", help="render prompts for a pool")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--encoding", choices=[e.value for e in PromptEncoding],
                   required=True)
    p.add_argument("--task", choices=["decision", "search"], default="search")
    p.add_argument("--shots", type=int, default=0, choices=[0, 3])
    p.add_argument("--bank", help="example-bank JSONL (built from the pool if omitted)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("eval", help="run a subject over a pool and score it")
    p.add_argument("--pool", required=True)
    p.add_argument("--task", choices=["decision", "search"], required=True)
    p.add_argument("--encoding", choices=[e.value for e in PromptEncoding],
                   required=True)
    p.add_argument("--shots", type=int, default=0, choices=[0, 3])
    p.add_argument("--subject", required=True,
                   help="oracle | random | llm:<config-file>")
    p.add_argument("--bank")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--cache-dir", default="cache")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("analyze", help="aggregate results into curve CSVs")
    p.add_argument("--results", required=True, help="results.jsonl or its directory")
    p.add_argument("--pool", required=True)
    p.add_argument("--window", type=int, default=4)
    p.add_argument("--bins", type=int, default=10)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("trace", help="export one instance's search trace")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--id", required=True)
    p.add_argument("--mode", choices=["decision", "search"], default="search")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_trace)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SatlabError, OSError) as err:
        _log(f"error: {err}")
        return 1


if __name__ == "__main__":
    sys.exit(main())
