"""Single entry point for applying any perturbation kind to an instance.

Dispatches by kind name, derives the per-instance random stream, enforces
which question types each family applies to, and re-expresses cell
annotations in the perturbed table's coordinates so downstream consumers
(most importantly the faithful reference model) keep working.
"""

from __future__ import annotations

from dataclasses import replace

from ..core import EQ, RQ, QAInstance
from ..errors import MissingAnnotation, NotEligible, UnsupportedKind
from ..rng import Rng, derive_rng
from .relevance import (
    REMOVE_RELEVANT,
    REMOVE_TABLE,
    SHIFT_RELEVANT_ROWS,
    remove_relevant_cells,
    remove_table,
    shift_relevant_rows,
)
from .structure import (
    SHUFFLE_COLS,
    SHUFFLE_ROWS,
    TARGET_COL_BACK,
    TARGET_COL_FRONT,
    TARGET_ROW_BOTTOM,
    TARGET_ROW_MIDDLE,
    TARGET_ROW_TOP,
    TRANSPOSE,
    PerturbationRecord,
    remap_annotations,
    shift_target_col,
    shift_target_row,
    shuffle_cols,
    shuffle_rows,
    transpose,
)
from .value import (
    SHORTENED,
    VALUE_AC,
    VALUE_NC,
    ValueEdit,
    apply_edits,
    modify_answer_change,
    modify_no_change,
    shorten,
)

STRUCTURE_KINDS = (
    SHUFFLE_ROWS,
    SHUFFLE_COLS,
    TARGET_ROW_TOP,
    TARGET_ROW_MIDDLE,
    TARGET_ROW_BOTTOM,
    TARGET_COL_FRONT,
    TARGET_COL_BACK,
    TRANSPOSE,
)
RELEVANCE_KINDS = (REMOVE_RELEVANT, REMOVE_TABLE, SHIFT_RELEVANT_ROWS)
VALUE_KINDS = (VALUE_AC, VALUE_NC, SHORTENED)
ALL_KINDS = STRUCTURE_KINDS + RELEVANCE_KINDS + VALUE_KINDS

_ROW_PART_BY_KIND = {
    TARGET_ROW_TOP: "TOP",
    TARGET_ROW_MIDDLE: "MIDDLE",
    TARGET_ROW_BOTTOM: "BOTTOM",
}
_COL_PART_BY_KIND = {TARGET_COL_FRONT: "FRONT", TARGET_COL_BACK: "BACK"}


def kind_from_name(name: str) -> str:
    """Resolve a case-insensitive kind name; raises ValueError on unknowns."""
    kind = name.strip().upper()
    if kind not in ALL_KINDS:
        known = ", ".join(k.lower() for k in ALL_KINDS)
        raise ValueError(f"unknown perturbation kind {name!r}; expected one of: {known}")
    return kind


def check_eligibility(instance: QAInstance, kind: str) -> None:
    """Structure perturbations rearrange lookup evidence, so they apply to
    extraction questions; cell-removal probes and value edits only make
    sense for reasoning questions and annotated instances respectively."""
    if kind in STRUCTURE_KINDS and instance.question_type != EQ:
        raise NotEligible(f"{kind.lower()} applies to extraction questions only")
    if kind in (REMOVE_RELEVANT, REMOVE_TABLE) and instance.question_type != RQ:
        raise NotEligible(f"{kind.lower()} applies to reasoning questions only")
    if kind == SHIFT_RELEVANT_ROWS and not instance.relevant_cells:
        raise MissingAnnotation(f"{kind.lower()} needs relevant-cell annotations")
    if kind in VALUE_KINDS and instance.aggregation is None:
        raise MissingAnnotation(f"{kind.lower()} needs an aggregation descriptor")


def apply_perturbation(
    instance: QAInstance, kind: str, global_seed: int
) -> tuple[QAInstance, PerturbationRecord]:
    """Perturb one instance; raises a PerturbSkip subclass when it cannot."""
    if kind not in ALL_KINDS:
        raise UnsupportedKind(f"unknown perturbation kind {kind!r}")
    check_eligibility(instance, kind)
    rng = derive_rng(global_seed, instance.id, kind)
    if kind in STRUCTURE_KINDS:
        return _apply_structure(instance, kind, rng)
    if kind in RELEVANCE_KINDS:
        return _apply_relevance(instance, kind, rng)
    return _apply_value(instance, kind, rng)


def _apply_structure(
    instance: QAInstance, kind: str, rng: Rng
) -> tuple[QAInstance, PerturbationRecord]:
    if kind == SHUFFLE_ROWS:
        table, record = shuffle_rows(instance.table, rng)
        row_map = _map_from_permutation(record.params["permutation"])
        perturbed = remap_annotations(instance, row_map=row_map).with_table(table)
        return perturbed, record.for_instance(instance.id)
    if kind == SHUFFLE_COLS:
        table, record = shuffle_cols(instance.table, rng)
        col_map = _map_from_permutation(record.params["permutation"])
        perturbed = remap_annotations(instance, col_map=col_map).with_table(table)
        return perturbed, record.for_instance(instance.id)
    if kind in _ROW_PART_BY_KIND:
        return shift_target_row(instance, _ROW_PART_BY_KIND[kind], rng)
    if kind in _COL_PART_BY_KIND:
        return shift_target_col(instance, _COL_PART_BY_KIND[kind], rng)
    # TRANSPOSE: rows and columns swap roles, so cell annotations no longer
    # describe a grid this schema can express; they are dropped and noted.
    table, record = transpose(instance.table)
    params = dict(record.params)
    params["annotations_dropped"] = bool(instance.relevant_cells or instance.aggregation)
    perturbed = replace(instance, relevant_cells=None, aggregation=None).with_table(table)
    return perturbed, replace(record, params=params, source_id=instance.id)


def _map_from_permutation(perm: list[int]) -> list[int]:
    mapping = [0] * len(perm)
    for new, old in enumerate(perm):
        mapping[old] = new
    return mapping


def _apply_relevance(
    instance: QAInstance, kind: str, rng: Rng
) -> tuple[QAInstance, PerturbationRecord]:
    if kind == REMOVE_RELEVANT:
        return remove_relevant_cells(instance)
    if kind == REMOVE_TABLE:
        return remove_table(instance)
    return shift_relevant_rows(instance, rng)


def _apply_value(
    instance: QAInstance, kind: str, rng: Rng
) -> tuple[QAInstance, PerturbationRecord]:
    shortened, _ = shorten(instance)
    if kind == SHORTENED:
        perturbed = replace(
            instance, relevant_cells=None, aggregation=shortened.descriptor
        ).with_table(shortened.table)
        record = PerturbationRecord(
            SHORTENED,
            rng.seed,
            {"rows": list(shortened.row_map), "cols": list(shortened.col_map)},
            source_id=instance.id,
        )
        return perturbed, record

    if kind == VALUE_AC:
        _, short_edits, new_answer = modify_answer_change(
            shortened.table, shortened.descriptor, rng
        )
    else:
        _, short_edits = modify_no_change(shortened.table, shortened.descriptor, rng)
        new_answer = None

    # Edits were chosen in shortened coordinates; map them back onto the
    # full table, which contains the same cells at their original spots.
    edits = [
        ValueEdit(
            coord=type(e.coord)(shortened.row_map[e.coord.row], shortened.col_map[e.coord.col]),
            old=e.old,
            new=e.new,
            edit_class=e.edit_class,
        )
        for e in short_edits
    ]
    table = apply_edits(instance.table, edits)
    removed = {e.coord.row for e in edits if e.edit_class == "ROW_REMOVAL"}
    perturbed = _drop_removed_rows(instance, removed).with_table(table)
    params = {
        "edits": [e.to_json() for e in edits],
        "original_answers": list(instance.answers),
    }
    if kind == VALUE_AC:
        params["new_answer"] = new_answer
        perturbed = replace(perturbed, answers=(new_answer,))
    record = PerturbationRecord(kind, rng.seed, params, source_id=instance.id)
    return perturbed, record


def _drop_removed_rows(instance: QAInstance, removed: set[int]) -> QAInstance:
    if not removed:
        return instance

    def shift(row: int) -> int:
        return row - sum(1 for r in removed if r < row)

    changes = {}
    if instance.relevant_cells is not None:
        changes["relevant_cells"] = tuple(
            type(c)(shift(c.row), c.col) for c in instance.relevant_cells if c.row not in removed
        )
    agg = instance.aggregation
    if agg is not None and agg.operands is not None:
        if any(o.row in removed for o in agg.operands):
            changes["aggregation"] = None  # operands gone; descriptor unusable
        else:
            changes["aggregation"] = replace(
                agg, operands=tuple(type(o)(shift(o.row), o.col) for o in agg.operands)
            )
    return replace(instance, **changes) if changes else instance
