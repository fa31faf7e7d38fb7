"""Dataset reading/writing and the table-structure question filter.

The on-disk format is UTF-8 JSON Lines, one QA instance per line:

    {"id": ..., "question": ..., "answers": [...],
     "table": {"headers": [...], "rows": [[...], ...]},
     "question_type"?, "relevant_cells"?, "aggregation"?, "source"?}

Extra keys (e.g. "provenance" on perturbed files) are preserved by the
record-level helpers and ignored by the instance decoder.  Converters from
native dataset formats are expected to emit this format; none are bundled.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .core import (
    AggregationDescriptor,
    CellCoord,
    QAInstance,
    Table,
    UNKNOWN,
    validate,
)
from .errors import DatasetError

# Positional prepositions and ordinals whose presence marks a question as
# depending on table structure rather than content.
DEFAULT_POSITIONAL_WORDS = frozenset(
    {
        "first",
        "second",
        "third",
        "last",
        "top",
        "bottom",
        "before",
        "previous",
        "latter",
        "after",
        "next",
        "below",
        "above",
    }
)

_TOKEN = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class PositionalWordList:
    words: frozenset[str] = DEFAULT_POSITIONAL_WORDS

    @staticmethod
    def from_file(path) -> PositionalWordList:
        words = set()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            word = line.strip().lower()
            if word:
                words.add(word)
        if not words:
            raise DatasetError(f"positional word list {path} is empty")
        return PositionalWordList(frozenset(words))


def tokenize(text: str) -> list[str]:
    """Lowercased tokens split on non-alphanumeric boundaries.

    Catches "first-place" and "first," uniformly; substring matches do not
    fire ("secondary" does not contain the token "second").
    """
    return _TOKEN.findall(text.lower())


def filter_positional_questions(
    instances, word_list: PositionalWordList = PositionalWordList()
):
    """Partition instances into (kept, removed) by positional-word tokens."""
    kept, removed = [], []
    for instance in instances:
        tokens = tokenize(instance.question)
        if any(token in word_list.words for token in tokens):
            removed.append(instance)
        else:
            kept.append(instance)
    return kept, removed


def instance_to_record(instance: QAInstance) -> dict:
    record = {
        "id": instance.id,
        "question": instance.question,
        "answers": list(instance.answers),
        "table": {
            "headers": list(instance.table.headers),
            "rows": instance.table.grid_values(),
        },
    }
    if instance.question_type != UNKNOWN:
        record["question_type"] = instance.question_type
    if instance.relevant_cells is not None:
        record["relevant_cells"] = [[c.row, c.col] for c in instance.relevant_cells]
    if instance.aggregation is not None:
        record["aggregation"] = _aggregation_to_json(instance.aggregation)
    if instance.source:
        record["source"] = instance.source
    return record


def _aggregation_to_json(agg: AggregationDescriptor) -> dict:
    out = {"kind": agg.kind, "value_col": agg.value_col}
    if agg.label_col is not None:
        out["label_col"] = agg.label_col
    if agg.filter is not None:
        out["filter"] = {"col": agg.filter[0], "value": agg.filter[1]}
    if agg.operands is not None:
        out["operands"] = [[c.row, c.col] for c in agg.operands]
    return out


def _aggregation_from_json(data: dict) -> AggregationDescriptor:
    filt = None
    if data.get("filter") is not None:
        filt = (int(data["filter"]["col"]), str(data["filter"]["value"]))
    operands = None
    if data.get("operands") is not None:
        a, b = data["operands"]
        operands = (CellCoord(int(a[0]), int(a[1])), CellCoord(int(b[0]), int(b[1])))
    return AggregationDescriptor(
        kind=str(data["kind"]),
        value_col=int(data["value_col"]),
        label_col=None if data.get("label_col") is None else int(data["label_col"]),
        filter=filt,
        operands=operands,
    )


def instance_from_record(record: dict) -> QAInstance:
    try:
        table = Table.from_values(record["table"]["headers"], record["table"]["rows"])
        relevant = None
        if record.get("relevant_cells") is not None:
            relevant = tuple(
                CellCoord(int(r), int(c)) for r, c in record["relevant_cells"]
            )
        aggregation = None
        if record.get("aggregation") is not None:
            aggregation = _aggregation_from_json(record["aggregation"])
        return QAInstance(
            id=str(record["id"]),
            question=str(record["question"]),
            answers=tuple(str(a) for a in record["answers"]),
            table=table,
            question_type=str(record.get("question_type", UNKNOWN)),
            relevant_cells=relevant,
            aggregation=aggregation,
            source=str(record.get("source", "")),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise DatasetError(f"malformed record: {exc}") from exc


def read_records(path) -> list[dict]:
    """Raw JSON objects, one per non-blank line; parse errors cite the line."""
    records = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, 1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}:{line_no}: invalid JSON: {exc}") from exc
            if not isinstance(record, dict):
                raise DatasetError(f"{path}:{line_no}: record is not an object")
            records.append(record)
    return records


def write_records(records, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        for record in records:
            handle.write(json.dumps(record, ensure_ascii=False) + "\n")


def load_dataset(path) -> list[QAInstance]:
    """Load and validate a dataset file; order preserved, ids unique."""
    instances = []
    seen_ids = set()
    for line_no, record in enumerate(read_records(path), 1):
        try:
            instance = instance_from_record(record)
        except DatasetError as exc:
            raise DatasetError(f"{path}:{line_no}: {exc}") from exc
        problems = validate(instance)
        if problems:
            raise DatasetError(
                f"{path}: instance {instance.id!r} invalid: " + "; ".join(problems)
            )
        if instance.id in seen_ids:
            raise DatasetError(f"{path}: duplicate instance id {instance.id!r}")
        seen_ids.add(instance.id)
        instances.append(instance)
    return instances


def save_dataset(instances, path) -> None:
    write_records((instance_to_record(i) for i in instances), path)
