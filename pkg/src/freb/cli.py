"""Command-line interface.

Subcommands: perturb (write perturbed dataset files), classify (label
questions as extraction vs reasoning), evaluate (run the perturb-predict-
score pipeline), report (render a saved report), toydata (write the bundled
synthetic datasets).  Exit codes: 0 success, 1 configuration error, 2 data
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .classify import (
    ComparativeLexicon,
    HttpSecondary,
    SubprocessSecondary,
    classify_combined,
    classify_rule_based,
)
from .core import EQ, RQ, UNKNOWN
from .errors import BackendError, ConfigError, DatasetError, PerturbSkip
from .ingest import (
    PositionalWordList,
    filter_positional_questions,
    instance_to_record,
    load_dataset,
    write_records,
)
from .perturb import apply_perturbation
from .pipeline import (
    DEFAULT_BACKEND,
    RunConfig,
    parse_config_file,
    parse_kinds,
    parse_seeds,
    render_report_text,
    report_to_json,
    run_pipeline,
)
from .toydata import build_sorted_dataset, build_toy_dataset


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors; route them through
    # ConfigError so bad flags are exit code 1 and bad data stays 2.
    def error(self, message):
        raise ConfigError(message)


def _build_parser() -> _Parser:
    parser = _Parser(
        prog="freb",
        description="Build robustness benchmarks from table-QA datasets and score models on them.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("perturb", parents=[], help="write perturbed copies of a dataset")
    p.add_argument("--in", dest="input", required=True, help="input dataset (JSONL)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--kinds", required=True, help="comma-separated kinds or groups (all/structure/relevance/value)")
    p.add_argument("--seeds", default="0,1,2,3,4", help="comma-separated integer seeds")

    c = sub.add_parser("classify", help="label questions as extraction (EQ) or reasoning (RQ)")
    c.add_argument("--in", dest="input", required=True)
    c.add_argument("--out", required=True)
    c.add_argument("--lexicon", help="JSON file overriding the comparative lexicon")
    c.add_argument("--combined", action="store_true", help="require a secondary classifier to confirm EQ labels")
    c.add_argument("--secondary-cmd", help="shell command used as the secondary classifier")
    c.add_argument("--secondary-url", help="HTTP endpoint used as the secondary classifier")
    c.add_argument("--timeout", type=float, default=30.0)
    c.add_argument("--retries", type=int, default=0)
    c.add_argument("--positional-words", help="file with one positional word per line")
    c.add_argument("--drop-positional", action="store_true", help="drop questions containing positional words")

    e = sub.add_parser("evaluate", help="run perturb -> predict -> score and write a report")
    e.add_argument("--config", help="key = value config file")
    e.add_argument("--dataset")
    e.add_argument("--kinds")
    e.add_argument("--seeds")
    e.add_argument("--backend", help="reference:<model>, file:<dir>, subprocess:<cmd>, or http:<url>")
    e.add_argument("--max-tokens", type=int, dest="max_tokens")
    e.add_argument("--lexicon")
    e.add_argument("--timeout", type=float)
    e.add_argument("--retries", type=int)
    e.add_argument("--workers", type=int)
    e.add_argument("--out", help="report JSON path (stdout when omitted)")
    e.add_argument("--text", action="store_true", help="also print the text rendering")

    r = sub.add_parser("report", help="render a saved report JSON as text")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--out", help="text output path (stdout when omitted)")

    t = sub.add_parser("toydata", help="write the bundled synthetic dataset")
    t.add_argument("--out", required=True)
    t.add_argument("--variant", choices=["main", "sorted"], default="main")
    return parser


def _cmd_perturb(args) -> int:
    instances = load_dataset(args.input)
    kinds = parse_kinds(args.kinds)
    seeds = parse_seeds(args.seeds)
    outdir = Path(args.out)
    outdir.mkdir(parents=True, exist_ok=True)
    skipped: list[dict] = []
    for kind in kinds:
        for seed in seeds:
            records = []
            for inst in instances:
                try:
                    perturbed, rec = apply_perturbation(inst, kind, seed)
                except PerturbSkip as exc:
                    skipped.append(
                        {
                            "id": inst.id,
                            "kind": kind.lower(),
                            "seed": seed,
                            "reason": type(exc).__name__,
                            "detail": str(exc),
                        }
                    )
                    continue
                record = instance_to_record(perturbed)
                record["provenance"] = {
                    "kind": kind.lower(),
                    "global_seed": seed,
                    "derived_seed": rec.seed,
                    "source_id": rec.source_id,
                    "params": rec.params,
                }
                records.append(record)
            path = outdir / f"{kind.lower()}.seed{seed}.jsonl"
            write_records(records, path)
            print(f"{path}: {len(records)} instances")
    if skipped:
        write_records(skipped, outdir / "skipped.jsonl")
        print(f"{outdir / 'skipped.jsonl'}: {len(skipped)} skipped")
    return 0


def _make_secondary(args):
    if bool(args.secondary_cmd) == bool(args.secondary_url):
        raise ConfigError("--combined needs exactly one of --secondary-cmd or --secondary-url")
    if args.secondary_cmd:
        return SubprocessSecondary(args.secondary_cmd, timeout=args.timeout, retries=args.retries)
    return HttpSecondary(args.secondary_url, timeout=args.timeout, retries=args.retries)


def _cmd_classify(args) -> int:
    instances = load_dataset(args.input)
    lexicon = ComparativeLexicon.from_file(args.lexicon) if args.lexicon else ComparativeLexicon()

    dropped = []
    if args.drop_positional:
        words = (
            PositionalWordList.from_file(args.positional_words)
            if args.positional_words
            else PositionalWordList()
        )
        instances, dropped = filter_positional_questions(instances, words)

    secondary = _make_secondary(args) if args.combined else None
    counts = {EQ: 0, RQ: 0, UNKNOWN: 0}
    records = []
    for inst in instances:
        if secondary is not None:
            try:
                label = classify_combined(inst, lexicon, secondary)
            except BackendError:
                label = UNKNOWN
        else:
            label = classify_rule_based(inst, lexicon)
        counts[label] += 1
        record = instance_to_record(inst)
        record["question_type"] = label
        records.append(record)
    write_records(records, args.out)
    print(
        f"{args.out}: {counts[EQ]} EQ, {counts[RQ]} RQ, {counts[UNKNOWN]} unknown"
        + (f", {len(dropped)} dropped as positional" if args.drop_positional else "")
    )
    return 0


def _cmd_evaluate(args) -> int:
    if args.config:
        config = parse_config_file(args.config)
    elif args.dataset and args.kinds:
        config = RunConfig(dataset=Path(args.dataset), kinds=parse_kinds(args.kinds))
    else:
        raise ConfigError("evaluate needs --config, or both --dataset and --kinds")

    overrides: dict = {}
    if args.config and args.dataset:
        overrides["dataset"] = Path(args.dataset)
    if args.config and args.kinds:
        overrides["kinds"] = parse_kinds(args.kinds)
    if args.seeds:
        overrides["seeds"] = parse_seeds(args.seeds)
    if args.backend:
        overrides["backend"] = args.backend
    if args.max_tokens is not None:
        overrides["max_tokens"] = args.max_tokens
    if args.lexicon:
        overrides["lexicon"] = Path(args.lexicon)
    if args.timeout is not None:
        overrides["timeout"] = args.timeout
    if args.retries is not None:
        overrides["retries"] = args.retries
    if args.workers is not None:
        overrides["workers"] = args.workers
    if overrides:
        from dataclasses import replace

        config = replace(config, **overrides)

    report = run_pipeline(config)
    text = report_to_json(report)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"report written to {args.out}")
    else:
        sys.stdout.write(text)
    if args.text:
        print(render_report_text(report))
    return 0


def _cmd_report(args) -> int:
    path = Path(args.input)
    if not path.exists():
        raise DatasetError(f"report file not found: {path}")
    try:
        report = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: not valid JSON: {exc}") from exc
    try:
        text = render_report_text(report)
    except (KeyError, TypeError) as exc:
        raise DatasetError(f"{path}: not a report produced by 'freb evaluate' ({exc})") from exc
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def _cmd_toydata(args) -> int:
    instances = build_sorted_dataset() if args.variant == "sorted" else build_toy_dataset()
    write_records([instance_to_record(i) for i in instances], args.out)
    print(f"{args.out}: {len(instances)} instances")
    return 0


_HANDLERS = {
    "perturb": _cmd_perturb,
    "classify": _cmd_classify,
    "evaluate": _cmd_evaluate,
    "report": _cmd_report,
    "toydata": _cmd_toydata,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except DatasetError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
