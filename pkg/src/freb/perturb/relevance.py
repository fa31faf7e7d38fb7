"""Evidence-attention probes: blank the relevant cells, drop the table, or
displace the relevant rows.

These operations target reasoning questions annotated with the cells the
answer depends on.  Blanking and table removal make instances unanswerable
on purpose — a model that still answers "correctly" is not reading the
table.  Row displacement keeps the instance answerable but moves the
evidence, exposing positional shortcuts.
"""

from __future__ import annotations

from dataclasses import replace

from ..core import Cell, CellCoord, QAInstance, Table
from ..errors import MissingAnnotation
from ..rng import Rng
from .structure import PerturbationRecord

REMOVE_RELEVANT = "REMOVE_RELEVANT"
REMOVE_TABLE = "REMOVE_TABLE"
SHIFT_RELEVANT_ROWS = "SHIFT_RELEVANT_ROWS"

DUMMY_VALUE = "None"


def remove_relevant_cells(instance: QAInstance) -> tuple[QAInstance, PerturbationRecord]:
    """Blank every annotated relevant cell; the grid keeps its shape."""
    if not instance.relevant_cells:
        raise MissingAnnotation(f"instance {instance.id}: no relevant cells")
    blanked = {(c.row, c.col) for c in instance.relevant_cells}
    rows = tuple(
        tuple(Cell("") if (r, c) in blanked else cell for c, cell in enumerate(row))
        for r, row in enumerate(instance.table.rows)
    )
    table = Table(headers=instance.table.headers, rows=rows)
    record = PerturbationRecord(
        REMOVE_RELEVANT,
        0,
        {"blanked": sorted(blanked)},
        source_id=instance.id,
    )
    return instance.with_table(table), record


def remove_table(instance: QAInstance) -> tuple[QAInstance, PerturbationRecord]:
    """Replace the table with a 1x1 placeholder; question and answers stay."""
    dummy = Table.from_values([DUMMY_VALUE], [[DUMMY_VALUE]])
    record = PerturbationRecord(
        REMOVE_TABLE,
        0,
        {"original_shape": [instance.table.n_rows, instance.table.n_cols]},
        source_id=instance.id,
    )
    # Cell annotations would dangle on the placeholder, so they are dropped.
    stripped = replace(instance, relevant_cells=None, aggregation=None)
    return stripped.with_table(dummy), record


def shift_relevant_rows(
    instance: QAInstance, rng: Rng
) -> tuple[QAInstance, PerturbationRecord]:
    """Pull out the rows holding relevant cells and re-insert them, still in
    order and contiguous, at a uniformly random offset among the rest.

    When every row is relevant there is nowhere to move; the table is
    returned unchanged with a no-op marker in the record.
    """
    if not instance.relevant_cells:
        raise MissingAnnotation(f"instance {instance.id}: no relevant cells")
    relevant = sorted({c.row for c in instance.relevant_cells})
    others = [r for r in range(instance.table.n_rows) if r not in set(relevant)]
    if not others:
        record = PerturbationRecord(
            SHIFT_RELEVANT_ROWS,
            rng.seed,
            {"relevant_rows": relevant, "insert_at": None, "noop": True},
            source_id=instance.id,
        )
        return instance, record
    insert_at = rng.randrange(0, len(others) + 1)
    order = others[:insert_at] + relevant + others[insert_at:]
    rows = tuple(instance.table.rows[r] for r in order)
    table = Table(headers=instance.table.headers, rows=rows)

    row_map = {old: new for new, old in enumerate(order)}
    cells = tuple(CellCoord(row_map[c.row], c.col) for c in instance.relevant_cells)
    agg = instance.aggregation
    if agg is not None and agg.operands is not None:
        agg = replace(
            agg, operands=tuple(CellCoord(row_map[o.row], o.col) for o in agg.operands)
        )
    shifted = replace(instance, relevant_cells=cells, aggregation=agg).with_table(table)
    record = PerturbationRecord(
        SHIFT_RELEVANT_ROWS,
        rng.seed,
        {"relevant_rows": relevant, "insert_at": insert_at, "noop": False},
        source_id=instance.id,
    )
    return shifted, record
