"""End-to-end run: perturb, query a backend, score, and assemble the report.

Every perturbed condition is compared against the original predictions
restricted to the same instances, so Emd and VP always pair like with like
even when eligibility rules shrink a condition's instance set.  The report
is a plain dict with deterministic ordering, rendered to JSON with sorted
keys — identical configs produce byte-identical reports.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .backends import parse_backend
from .classify import ComparativeLexicon
from .core import QAInstance
from .errors import ConfigError, DatasetError, PerturbSkip
from .ingest import load_dataset
from .metrics import (
    ORIGINAL,
    PredictionSet,
    aggregate_seeds,
    em,
    is_correct,
    vp_from_correctness,
)
from .perturb import (
    ALL_KINDS,
    RELEVANCE_KINDS,
    REMOVE_RELEVANT,
    REMOVE_TABLE,
    STRUCTURE_KINDS,
    VALUE_KINDS,
    apply_perturbation,
    kind_from_name,
)
from .serialize import length_filter

DEFAULT_SEEDS = (0, 1, 2, 3, 4)
DEFAULT_BACKEND = "reference:faithful_oracle"

KIND_GROUPS = {
    "all": ALL_KINDS,
    "structure": STRUCTURE_KINDS,
    "relevance": RELEVANCE_KINDS,
    "value": VALUE_KINDS,
}


@dataclass(frozen=True)
class RunConfig:
    dataset: Path
    kinds: tuple[str, ...]
    seeds: tuple[int, ...] = DEFAULT_SEEDS
    backend: str = DEFAULT_BACKEND
    max_tokens: int | None = None
    lexicon: Path | None = None
    timeout: float = 30.0
    retries: int = 0
    workers: int = 1


def parse_kinds(text: str) -> tuple[str, ...]:
    """Comma-separated kind names; the group aliases all/structure/relevance/
    value expand in canonical order."""
    kinds: list[str] = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if chunk.lower() in KIND_GROUPS:
            for kind in KIND_GROUPS[chunk.lower()]:
                if kind not in kinds:
                    kinds.append(kind)
            continue
        try:
            kind = kind_from_name(chunk)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if kind not in kinds:
            kinds.append(kind)
    if not kinds:
        raise ConfigError("no perturbation kinds given")
    return tuple(kinds)


def parse_seeds(text: str) -> tuple[int, ...]:
    seeds: list[int] = []
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            seed = int(chunk)
        except ValueError as exc:
            raise ConfigError(f"bad seed {chunk!r}: seeds must be integers") from exc
        if seed not in seeds:
            seeds.append(seed)
    if not seeds:
        raise ConfigError("no seeds given")
    return tuple(seeds)


_CONFIG_KEYS = (
    "dataset",
    "kinds",
    "seeds",
    "backend",
    "max_tokens",
    "lexicon",
    "timeout",
    "retries",
    "workers",
)


def parse_config_file(path: str | Path) -> RunConfig:
    """Key = value lines; # starts a comment; unknown keys are errors."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    values: dict[str, str] = {}
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}: line {lineno}: expected 'key = value'")
        key = key.strip().lower()
        if key not in _CONFIG_KEYS:
            raise ConfigError(
                f"{path}: line {lineno}: unknown key {key!r}; known keys: "
                + ", ".join(_CONFIG_KEYS)
            )
        values[key] = value.strip()
    if "dataset" not in values:
        raise ConfigError(f"{path}: missing required key 'dataset'")
    if "kinds" not in values:
        raise ConfigError(f"{path}: missing required key 'kinds'")

    def number(key: str, cast, default):
        if key not in values:
            return default
        try:
            return cast(values[key])
        except ValueError as exc:
            raise ConfigError(f"{path}: bad value for {key}: {values[key]!r}") from exc

    return RunConfig(
        dataset=Path(values["dataset"]),
        kinds=parse_kinds(values["kinds"]),
        seeds=parse_seeds(values["seeds"]) if "seeds" in values else DEFAULT_SEEDS,
        backend=values.get("backend", DEFAULT_BACKEND),
        max_tokens=number("max_tokens", int, None),
        lexicon=Path(values["lexicon"]) if "lexicon" in values else None,
        timeout=number("timeout", float, 30.0),
        retries=number("retries", int, 0),
        workers=number("workers", int, 1),
    )


def run_pipeline(config: RunConfig) -> dict:
    """Evaluate the configured backend under every (kind, seed) condition."""
    instances = load_dataset(config.dataset)
    lexicon = (
        ComparativeLexicon.from_file(config.lexicon) if config.lexicon else ComparativeLexicon()
    )
    backend = parse_backend(
        config.backend,
        lexicon=lexicon,
        timeout=config.timeout,
        retries=config.retries,
        workers=config.workers,
    )

    if config.max_tokens is not None:
        kept, dropped = length_filter(instances, config.max_tokens)
    else:
        kept, dropped = list(instances), []
    if not kept:
        raise DatasetError("no instances left to evaluate after length filtering")

    original_entries, original_failures = backend.predictions_for((ORIGINAL, 0), kept)
    original_preds = PredictionSet(backend.model_id, (ORIGINAL, 0), original_entries)
    em_original = em(original_preds, kept)
    original_correct = {
        inst.id: is_correct(original_entries.get(inst.id), inst.answers) for inst in kept
    }

    conditions = []
    for kind in config.kinds:
        for seed in config.seeds:
            conditions.append(
                _evaluate_condition(backend, kept, kind, seed, original_correct, lexicon)
            )

    report = {
        "model": backend.model_id,
        "config": {
            "dataset": str(config.dataset),
            "kinds": [k.lower() for k in config.kinds],
            "seeds": list(config.seeds),
            "backend": config.backend,
            "max_tokens": config.max_tokens,
            "lexicon": str(config.lexicon) if config.lexicon else None,
        },
        "n_loaded": len(instances),
        "n_scored": len(kept),
        "dropped_by_length": [inst.id for inst in dropped],
        "original": {
            "em": em_original,
            "n": len(kept),
            "failures": dict(sorted(original_failures.items())),
        },
        "conditions": conditions,
        "kind_summaries": [_summarize_kind(kind, conditions) for kind in config.kinds],
        "notes": {
            "pairing": "perturbed conditions are scored against the original "
            "predictions restricted to the same instances",
            "serialization": "flat 'col : ... row k : ...' rendering; token counts "
            "are whitespace-split approximations",
            "scoring": "answers are normalized (case, whitespace, numeric "
            "canonicalization) before comparison",
        },
    }
    report["findings"] = _findings(report)
    return report


def _evaluate_condition(backend, kept, kind, seed, original_correct, lexicon) -> dict:
    perturbed: list[QAInstance] = []
    skipped: list[dict] = []
    for inst in kept:
        try:
            result, _ = apply_perturbation(inst, kind, seed)
            perturbed.append(result)
        except PerturbSkip as exc:
            skipped.append(
                {"id": inst.id, "reason": type(exc).__name__, "detail": str(exc)}
            )

    entry: dict = {
        "kind": kind.lower(),
        "seed": seed,
        "n": len(perturbed),
        "skipped": skipped,
    }
    if not perturbed:
        entry.update(
            {
                "failures": {},
                "em": None,
                "em_original_paired": None,
                "emd": None,
                "vp": None,
                "vp_pct": None,
                "c2w": None,
                "w2c": None,
                "gap": None,
            }
        )
        return entry

    entries, failures = backend.predictions_for((kind, seed), perturbed)
    after_correct = {
        inst.id: is_correct(entries.get(inst.id), inst.answers) for inst in perturbed
    }
    before_correct = {inst.id: original_correct[inst.id] for inst in perturbed}

    em_perturbed = sum(after_correct.values()) / len(perturbed)
    em_before = sum(before_correct.values()) / len(perturbed)
    flips = vp_from_correctness(before_correct, after_correct)

    entry.update(
        {
            "failures": dict(sorted(failures.items())),
            "em": em_perturbed,
            "em_original_paired": em_before,
            "emd": em_perturbed - em_before,
            "vp": flips.vp,
            "vp_pct": 100.0 * flips.vp,
            "c2w": flips.c2w,
            "w2c": flips.w2c,
            "gap": _gap_entry(perturbed, before_correct, after_correct, lexicon),
        }
    )
    return entry


def _gap_entry(perturbed, before_correct, after_correct, lexicon) -> dict:
    compare_ids = {i.id for i in perturbed if lexicon.question_has_cue(i.question)}
    noncompare_ids = {i.id for i in perturbed} - compare_ids

    def split(ids: set[str]) -> dict | None:
        if not ids:
            return None
        flips = vp_from_correctness(
            {i: before_correct[i] for i in ids}, {i: after_correct[i] for i in ids}
        )
        return {
            "vp": flips.vp,
            "vp_pct": 100.0 * flips.vp,
            "c2w": flips.c2w,
            "w2c": flips.w2c,
            "n": flips.n,
        }

    compare = split(compare_ids)
    noncompare = split(noncompare_ids)
    gap = None
    if compare is not None and noncompare is not None:
        gap = compare["vp"] - noncompare["vp"]
    return {"compare": compare, "noncompare": noncompare, "gap": gap}


def _summarize_kind(kind: str, conditions: list[dict]) -> dict:
    mine = [c for c in conditions if c["kind"] == kind.lower() and c["n"] > 0]
    summary: dict = {
        "kind": kind.lower(),
        "seeds_used": [c["seed"] for c in mine],
        "skipped_total": sum(
            len(c["skipped"]) for c in conditions if c["kind"] == kind.lower()
        ),
    }
    if not mine:
        summary.update(
            {
                "n": 0,
                "em_mean": None,
                "em_std": None,
                "emd_mean": None,
                "emd_std": None,
                "vp_mean": None,
                "vp_std": None,
                "vp_pct_mean": None,
                "vp_pct_std": None,
                "gap_mean": None,
                "gap_std": None,
            }
        )
        return summary

    em_mean, em_std = aggregate_seeds([c["em"] for c in mine])
    emd_mean, emd_std = aggregate_seeds([c["emd"] for c in mine])
    vp_mean, vp_std = aggregate_seeds([c["vp"] for c in mine])
    summary.update(
        {
            "n": max(c["n"] for c in mine),
            "em_mean": em_mean,
            "em_std": em_std,
            "emd_mean": emd_mean,
            "emd_std": emd_std,
            "vp_mean": vp_mean,
            "vp_std": vp_std,
            "vp_pct_mean": 100.0 * vp_mean,
            "vp_pct_std": 100.0 * vp_std,
        }
    )
    gaps = [c["gap"]["gap"] for c in mine if c.get("gap")]
    if gaps and all(g is not None for g in gaps):
        gap_mean, gap_std = aggregate_seeds(gaps)
        summary["gap_mean"] = gap_mean
        summary["gap_std"] = gap_std
    else:
        summary["gap_mean"] = None
        summary["gap_std"] = None
    return summary


def _findings(report: dict) -> dict:
    """Cross-condition signals: a model whose answers survive the removal of
    its evidence is not reading the table."""
    removal_kinds = {REMOVE_RELEVANT.lower(), REMOVE_TABLE.lower()}
    relevant = [
        c for c in report["conditions"] if c["kind"] in removal_kinds and c["n"] > 0
    ]
    flagged = bool(relevant) and all(
        c["emd"] == 0.0 and c["vp"] == 0.0 for c in relevant
    )
    if flagged:
        detail = (
            "predictions are unchanged when relevant cells or the entire table "
            "are removed; the model does not depend on table content"
        )
    elif relevant:
        detail = "predictions change when table evidence is removed"
    else:
        detail = "no removal conditions were evaluated"
    return {
        "table_independence": {
            "flagged": flagged,
            "kinds": sorted({c["kind"] for c in relevant}),
            "detail": detail,
        }
    }


def report_to_json(report: dict) -> str:
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def render_report_text(report: dict) -> str:
    """Fixed-width text rendering of a report dict."""
    lines = []
    lines.append(f"model    {report['model']}")
    lines.append(
        f"dataset  {report['config']['dataset']}  "
        f"({report['n_scored']} scored / {report['n_loaded']} loaded)"
    )
    original = report["original"]
    lines.append(f"original Em {original['em']:.4f}  (n={original['n']})")
    lines.append("")

    lines.append("per-kind summary (mean +/- std over seeds)")
    header = f"{'kind':<22}{'n':>6}  {'Em':>15}  {'Emd':>16}  {'VP%':>14}"
    lines.append(header)
    lines.append("-" * len(header))
    for s in report["kind_summaries"]:
        if s["em_mean"] is None:
            lines.append(f"{s['kind']:<22}{0:>6}  {'-':>15}  {'-':>16}  {'-':>14}")
            continue
        lines.append(
            f"{s['kind']:<22}{s['n']:>6}  "
            f"{s['em_mean']:.4f}+/-{s['em_std']:.4f}  "
            f"{s['emd_mean']:+.4f}+/-{s['emd_std']:.4f}  "
            f"{s['vp_pct_mean']:5.2f}+/-{s['vp_pct_std']:.2f}"
        )
    lines.append("")

    gapped = [s for s in report["kind_summaries"] if s.get("gap_mean") is not None]
    if gapped:
        lines.append("VP split by comparative cues (gap = compare - non-compare)")
        for s in gapped:
            lines.append(f"{s['kind']:<22}gap {100.0 * s['gap_mean']:+.2f}%")
        lines.append("")

    skip_counts: dict[tuple[str, str], int] = {}
    for c in report["conditions"]:
        for s in c["skipped"]:
            key = (c["kind"], s["reason"])
            skip_counts[key] = skip_counts.get(key, 0) + 1
    if skip_counts:
        lines.append("skipped (kind, reason, count over all seeds)")
        for (kind, reason), count in sorted(skip_counts.items()):
            lines.append(f"{kind:<22}{reason:<20}{count:>6}")
        lines.append("")

    finding = report["findings"]["table_independence"]
    if finding["flagged"]:
        lines.append("FLAG table-independence: " + finding["detail"])
        lines.append("")
    return "\n".join(lines)
