"""Aggregation-aware value edits, checked by an executable oracle.

The oracle (``evaluate_aggregation``) computes the answer an aggregation
descriptor implies, so every generated edit can be re-checked mechanically:
answer-changing (AC) edits must flip the oracle's answer, answer-preserving
(NC) edits must not.  ``shorten`` projects a table down to the rows and
columns the descriptor actually reads, and ``import_annotated`` ingests
externally produced edit files under the same checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from decimal import Decimal
from pathlib import Path

from ..core import (
    ARGMAX,
    ARGMIN,
    AVG,
    COMPARE_TWO,
    COUNT,
    DIFF,
    SUM,
    AggregationDescriptor,
    CellCoord,
    QAInstance,
    Table,
    canonical_decimal,
    normalize_answer,
)
from ..errors import (
    CannotPerturb,
    DatasetError,
    MissingAnnotation,
    NonNumericCell,
    TieDetected,
    UnsupportedKind,
)
from ..ingest import instance_from_record
from ..rng import Rng
from .structure import PerturbationRecord

VALUE_AC = "VALUE_AC"
VALUE_NC = "VALUE_NC"
SHORTENED = "SHORTENED"

NUMERIC = "NUMERIC"
STRING = "STRING"
ROW_REMOVAL = "ROW_REMOVAL"

_MAX_ATTEMPTS = 10


@dataclass(frozen=True)
class ShortenedTable:
    """Projection of a table onto the cells an aggregation reads.

    row_map/col_map give, for each shortened index, the original index it
    came from.  ``descriptor`` is the instance's descriptor re-expressed in
    shortened coordinates.
    """

    table: Table
    row_map: tuple[int, ...]
    col_map: tuple[int, ...]
    descriptor: AggregationDescriptor


@dataclass(frozen=True)
class ValueEdit:
    coord: CellCoord
    old: str
    new: str
    edit_class: str  # NUMERIC | STRING | ROW_REMOVAL

    def to_json(self) -> dict:
        return {
            "row": self.coord.row,
            "col": self.coord.col,
            "old": self.old,
            "new": self.new,
            "class": self.edit_class,
        }

    @classmethod
    def from_json(cls, obj: dict) -> ValueEdit:
        return cls(
            coord=CellCoord(int(obj["row"]), int(obj["col"])),
            old=str(obj["old"]),
            new=str(obj["new"]),
            edit_class=str(obj["class"]),
        )


def _numeric(table: Table, row: int, col: int) -> Decimal:
    cell = table.rows[row][col]
    if cell.parsed_number is None:
        raise NonNumericCell(f"cell ({row}, {col}) is not numeric: {cell.raw!r}")
    return cell.parsed_number


def evaluate_aggregation(table: Table, descriptor: AggregationDescriptor) -> str:
    """Answer implied by the descriptor.

    ARGMAX/ARGMIN return the label cell of the unique extremal row; COUNT
    counts filter-column matches under answer normalization; SUM/AVG/DIFF
    return canonical decimals; COMPARE_TWO returns the label of the larger
    operand's row.  Ties among extremal values (or equal operands) raise
    TieDetected so callers can skip the instance.
    """
    kind = descriptor.kind
    if kind in (ARGMAX, ARGMIN):
        if descriptor.label_col is None:
            raise MissingAnnotation(f"{kind} needs a label column")
        if table.n_rows == 0:
            raise ValueError(f"{kind} over an empty table")
        values = [_numeric(table, r, descriptor.value_col) for r in range(table.n_rows)]
        best = max(values) if kind == ARGMAX else min(values)
        hits = [r for r, v in enumerate(values) if v == best]
        if len(hits) > 1:
            raise TieDetected(f"{kind}: value {best} appears in rows {hits}")
        return table.rows[hits[0]][descriptor.label_col].raw
    if kind == COUNT:
        if descriptor.filter is None:
            raise MissingAnnotation("COUNT needs a filter")
        col, needle = descriptor.filter
        target = normalize_answer(needle)
        return str(sum(1 for row in table.rows if normalize_answer(row[col].raw) == target))
    if kind in (SUM, AVG):
        if table.n_rows == 0:
            raise ValueError(f"{kind} over an empty table")
        total = sum(
            (_numeric(table, r, descriptor.value_col) for r in range(table.n_rows)),
            start=Decimal(0),
        )
        if kind == SUM:
            return canonical_decimal(total)
        return canonical_decimal(total / Decimal(table.n_rows))
    if kind == DIFF:
        if not descriptor.operands:
            raise MissingAnnotation("DIFF needs two operands")
        a, b = descriptor.operands
        return canonical_decimal(_numeric(table, a.row, a.col) - _numeric(table, b.row, b.col))
    if kind == COMPARE_TWO:
        if not descriptor.operands:
            raise MissingAnnotation("COMPARE_TWO needs two operands")
        if descriptor.label_col is None:
            raise MissingAnnotation("COMPARE_TWO needs a label column")
        a, b = descriptor.operands
        va = _numeric(table, a.row, a.col)
        vb = _numeric(table, b.row, b.col)
        if va == vb:
            raise TieDetected(f"COMPARE_TWO: operands both equal {va}")
        winner = a.row if va > vb else b.row
        return table.rows[winner][descriptor.label_col].raw
    raise UnsupportedKind(f"no oracle for aggregation kind {kind!r}")


def shorten(instance: QAInstance) -> tuple[ShortenedTable, PerturbationRecord]:
    """Project the table onto the rows/columns the descriptor reads.

    Column-wide aggregations keep every row; DIFF/COMPARE_TWO keep only the
    operand rows.  Kept columns are the value column plus any label, filter,
    and operand columns, in their original order.
    """
    agg = instance.aggregation
    if agg is None:
        raise MissingAnnotation(f"instance {instance.id}: no aggregation descriptor")
    if agg.kind in (DIFF, COMPARE_TWO):
        rows = sorted({o.row for o in (agg.operands or ())})
    else:
        rows = list(range(instance.table.n_rows))
    cols = {agg.value_col}
    if agg.label_col is not None:
        cols.add(agg.label_col)
    if agg.filter is not None:
        cols.add(agg.filter[0])
    for o in agg.operands or ():
        cols.add(o.col)
    col_list = sorted(cols)

    table = Table(
        headers=tuple(instance.table.headers[c] for c in col_list),
        rows=tuple(tuple(instance.table.rows[r][c] for c in col_list) for r in rows),
    )
    row_inv = {old: new for new, old in enumerate(rows)}
    col_inv = {old: new for new, old in enumerate(col_list)}
    descriptor = replace(
        agg,
        value_col=col_inv[agg.value_col],
        label_col=None if agg.label_col is None else col_inv[agg.label_col],
        filter=None if agg.filter is None else (col_inv[agg.filter[0]], agg.filter[1]),
        operands=None
        if agg.operands is None
        else tuple(CellCoord(row_inv[o.row], col_inv[o.col]) for o in agg.operands),
    )
    record = PerturbationRecord(
        SHORTENED, 0, {"rows": rows, "cols": col_list}, source_id=instance.id
    )
    return ShortenedTable(table, tuple(rows), tuple(col_list), descriptor), record


def apply_edits(table: Table, edits: list[ValueEdit]) -> Table:
    """Value edits first, then row removals from the bottom up."""
    grid = [[cell.raw for cell in row] for row in table.rows]
    for e in edits:
        if e.edit_class != ROW_REMOVAL:
            grid[e.coord.row][e.coord.col] = e.new
    for e in sorted(
        (e for e in edits if e.edit_class == ROW_REMOVAL),
        key=lambda e: e.coord.row,
        reverse=True,
    ):
        del grid[e.coord.row]
    return Table.from_values(table.headers, grid)


def _column_values(table: Table, col: int) -> list[Decimal]:
    return [_numeric(table, r, col) for r in range(table.n_rows)]


def _delta(rng: Rng, values: list[Decimal]) -> Decimal:
    """Integer step scaled to the column's spread (at least 1)."""
    if values:
        spread = max(values) - min(values)
        hi = max(10, int(10 * spread))
    else:
        hi = 10
    return Decimal(rng.randint(1, hi))


def _replacement_string(pool, avoid: str, rng: Rng) -> str:
    """A value from the pool that does not normalize-match ``avoid``."""
    target = normalize_answer(avoid)
    candidates = sorted({v for v in pool if v.strip() and normalize_answer(v) != target})
    if candidates:
        return rng.choice(candidates)
    return f"{avoid} alt" if avoid.strip() else "alt"


def _edit(table: Table, row: int, col: int, new: str, edit_class: str) -> ValueEdit:
    return ValueEdit(CellCoord(row, col), table.rows[row][col].raw, new, edit_class)


def _ac_candidate(table: Table, d: AggregationDescriptor, rng: Rng) -> list[ValueEdit]:
    kind = d.kind
    if kind in (ARGMAX, ARGMIN):
        if table.n_rows < 2:
            raise CannotPerturb(f"{kind} needs >= 2 rows to change the answer")
        values = _column_values(table, d.value_col)
        best = max(values) if kind == ARGMAX else min(values)
        extremal = values.index(best)
        others = [v for r, v in enumerate(values) if r != extremal]
        runner = max(others) if kind == ARGMAX else min(others)
        step = _delta(rng, values)
        new_value = runner - step if kind == ARGMAX else runner + step
        return [_edit(table, extremal, d.value_col, canonical_decimal(new_value), NUMERIC)]
    if kind == COUNT:
        col, needle = d.filter
        target = normalize_answer(needle)
        matching = [r for r in range(table.n_rows) if normalize_answer(table.rows[r][col].raw) == target]
        if not matching:
            if table.n_rows == 0:
                raise CannotPerturb("COUNT over an empty table cannot change")
            row = rng.randrange(0, table.n_rows)
            return [_edit(table, row, col, needle, STRING)]
        row = rng.choice(matching)
        if rng.random() < 0.5:
            return [ValueEdit(CellCoord(row, col), table.rows[row][col].raw, "", ROW_REMOVAL)]
        pool = [table.rows[r][col].raw for r in range(table.n_rows)]
        return [_edit(table, row, col, _replacement_string(pool, needle, rng), STRING)]
    if kind in (SUM, AVG):
        if table.n_rows == 0:
            raise CannotPerturb(f"{kind} over an empty table")
        values = _column_values(table, d.value_col)
        row = rng.randrange(0, table.n_rows)
        step = _delta(rng, values) * (1 if rng.random() < 0.5 else -1)
        return [_edit(table, row, d.value_col, canonical_decimal(values[row] + step), NUMERIC)]
    if kind == DIFF:
        a, b = d.operands
        pick = a if rng.random() < 0.5 else b
        value = _numeric(table, pick.row, pick.col)
        step = _delta(rng, [value]) * (1 if rng.random() < 0.5 else -1)
        return [_edit(table, pick.row, pick.col, canonical_decimal(value + step), NUMERIC)]
    if kind == COMPARE_TWO:
        a, b = d.operands
        va = _numeric(table, a.row, a.col)
        vb = _numeric(table, b.row, b.col)
        small, large = (b, va) if va > vb else (a, vb)
        new_value = large + _delta(rng, [va, vb])
        return [_edit(table, small.row, small.col, canonical_decimal(new_value), NUMERIC)]
    raise UnsupportedKind(f"no answer-changing strategy for {kind!r}")


def _nc_candidate(table: Table, d: AggregationDescriptor, rng: Rng) -> list[ValueEdit]:
    kind = d.kind
    if kind in (ARGMAX, ARGMIN):
        if table.n_rows < 2:
            raise CannotPerturb(f"{kind} has no non-extremal row to edit")
        values = _column_values(table, d.value_col)
        best = max(values) if kind == ARGMAX else min(values)
        extremal = values.index(best)
        row = rng.choice([r for r in range(table.n_rows) if r != extremal])
        old = values[row]
        factor = Decimal(rng.randint(10, 1000))
        if kind == ARGMIN:
            new_value = old * factor if old > 0 else old + factor
        else:
            new_value = old / factor if old > 0 else old - factor
        return [_edit(table, row, d.value_col, canonical_decimal(new_value), NUMERIC)]
    if kind == COUNT:
        col, needle = d.filter
        target = normalize_answer(needle)
        non_matching = [
            r for r in range(table.n_rows) if normalize_answer(table.rows[r][col].raw) != target
        ]
        other_cols = [c for c in range(table.n_cols) if c != col]
        options = []
        if other_cols and table.n_rows:
            options.append("attribute")
        if non_matching:
            options.append("filter_cell")
        if not options:
            raise CannotPerturb("COUNT table has no cell that can change safely")
        choice = rng.choice(options)
        if choice == "attribute":
            row = rng.randrange(0, table.n_rows)
            c = rng.choice(other_cols)
            pool = [table.rows[r][c].raw for r in range(table.n_rows)]
            return [_edit(table, row, c, _replacement_string(pool, table.rows[row][c].raw, rng), STRING)]
        row = rng.choice(non_matching)
        pool = [
            table.rows[r][col].raw
            for r in range(table.n_rows)
            if normalize_answer(table.rows[r][col].raw) != target
        ]
        new = _replacement_string(pool, table.rows[row][col].raw, rng)
        if normalize_answer(new) == target:
            raise CannotPerturb("no non-matching replacement available")
        return [_edit(table, row, col, new, STRING)]
    if kind in (SUM, AVG, DIFF):
        # Any numeric operand change moves the result, so only cells outside
        # the operand set — and not parseable as numbers — are fair game.
        if kind == DIFF:
            operand_cells = {(o.row, o.col) for o in d.operands}
        else:
            operand_cells = {(r, d.value_col) for r in range(table.n_rows)}
        candidates = [
            (r, c)
            for r in range(table.n_rows)
            for c in range(table.n_cols)
            if (r, c) not in operand_cells and table.rows[r][c].parsed_number is None
        ]
        if not candidates:
            raise CannotPerturb(f"{kind} table has no non-operand string cell")
        row, c = rng.choice(candidates)
        pool = [table.rows[r][c].raw for r in range(table.n_rows)]
        return [_edit(table, row, c, _replacement_string(pool, table.rows[row][c].raw, rng), STRING)]
    if kind == COMPARE_TWO:
        a, b = d.operands
        va = _numeric(table, a.row, a.col)
        vb = _numeric(table, b.row, b.col)
        larger, value = (a, va) if va > vb else (b, vb)
        new_value = value + _delta(rng, [va, vb])
        return [_edit(table, larger.row, larger.col, canonical_decimal(new_value), NUMERIC)]
    raise UnsupportedKind(f"no answer-preserving strategy for {kind!r}")


def modify_answer_change(
    table: Table, descriptor: AggregationDescriptor, rng: Rng
) -> tuple[Table, list[ValueEdit], str]:
    """Edit at most two cells so the oracle's answer changes; the new answer
    is re-derived by running the oracle on the edited table."""
    original = evaluate_aggregation(table, descriptor)
    for _ in range(_MAX_ATTEMPTS):
        edits = _ac_candidate(table, descriptor, rng)
        edited = apply_edits(table, edits)
        try:
            new = evaluate_aggregation(edited, descriptor)
        except TieDetected:
            continue
        if normalize_answer(new) != normalize_answer(original):
            return edited, edits, new
    raise CannotPerturb(
        f"could not change the {descriptor.kind} answer in {_MAX_ATTEMPTS} attempts"
    )


def modify_no_change(
    table: Table, descriptor: AggregationDescriptor, rng: Rng
) -> tuple[Table, list[ValueEdit]]:
    """Edit at most two cells while provably keeping the oracle's answer."""
    original = evaluate_aggregation(table, descriptor)
    for _ in range(_MAX_ATTEMPTS):
        edits = _nc_candidate(table, descriptor, rng)
        edited = apply_edits(table, edits)
        try:
            new = evaluate_aggregation(edited, descriptor)
        except TieDetected:
            continue
        if normalize_answer(new) == normalize_answer(original):
            return edited, edits
    raise CannotPerturb(
        f"could not keep the {descriptor.kind} answer stable in {_MAX_ATTEMPTS} attempts"
    )


@dataclass(frozen=True)
class ImportedRecord:
    """One externally annotated value perturbation, oracle-checked on load."""

    instance: QAInstance
    edits: tuple[ValueEdit, ...]
    expected_answer: str
    kind: str  # VALUE_AC | VALUE_NC
    status: str  # ok | inconsistent | unchecked
    detail: str = ""


def import_annotated(path: str | Path) -> list[ImportedRecord]:
    """Load instance-plus-edits records, checking each against the oracle.

    Records whose edits contradict their declared kind (an AC edit that does
    not change the oracle answer, or an NC edit that does) come back with
    status "inconsistent"; records without a descriptor are "unchecked".
    """
    path = Path(path)
    imported = []
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DatasetError(f"{path}: line {lineno}: invalid JSON: {exc}") from exc
            try:
                kind = obj["kind"]
                expected = str(obj["expected_answer"])
                edits = tuple(ValueEdit.from_json(e) for e in obj["edits"])
                instance = instance_from_record(obj)
            except (KeyError, TypeError, ValueError) as exc:
                raise DatasetError(f"{path}: line {lineno}: bad record: {exc}") from exc
            if kind not in (VALUE_AC, VALUE_NC):
                raise DatasetError(f"{path}: line {lineno}: unknown kind {kind!r}")
            if not 1 <= len(edits) <= 2:
                raise DatasetError(
                    f"{path}: line {lineno}: expected 1-2 edits, got {len(edits)}"
                )
            status, detail = _check_imported(instance, edits, expected, kind)
            imported.append(ImportedRecord(instance, edits, expected, kind, status, detail))
    return imported


def _check_imported(
    instance: QAInstance, edits: tuple[ValueEdit, ...], expected: str, kind: str
) -> tuple[str, str]:
    if instance.aggregation is None:
        return "unchecked", "no aggregation descriptor"
    try:
        before = evaluate_aggregation(instance.table, instance.aggregation)
        after = evaluate_aggregation(apply_edits(instance.table, list(edits)), instance.aggregation)
    except (NonNumericCell, TieDetected, MissingAnnotation) as exc:
        return "inconsistent", f"oracle failed: {exc}"
    changed = normalize_answer(after) != normalize_answer(before)
    if kind == VALUE_AC and not changed:
        return "inconsistent", "edits did not change the oracle answer"
    if kind == VALUE_NC and changed:
        return "inconsistent", f"edits changed the oracle answer to {after!r}"
    if normalize_answer(after) != normalize_answer(expected):
        return "inconsistent", f"oracle answer {after!r} != expected {expected!r}"
    return "ok", ""
