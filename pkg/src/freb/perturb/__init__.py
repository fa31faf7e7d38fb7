"""Perturbation families: structure rearrangement, relevance probes, and
oracle-checked value edits."""

from .apply import (
    ALL_KINDS,
    RELEVANCE_KINDS,
    STRUCTURE_KINDS,
    VALUE_KINDS,
    apply_perturbation,
    check_eligibility,
    kind_from_name,
)
from .relevance import (
    DUMMY_VALUE,
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
    Partition,
    PerturbationRecord,
    TargetLocation,
    locate_target,
    partition_indices,
    remap_annotations,
    replay_table,
    shift_target_col,
    shift_target_row,
    shuffle_cols,
    shuffle_rows,
    transpose,
)
from .value import (
    NUMERIC,
    ROW_REMOVAL,
    SHORTENED,
    STRING,
    VALUE_AC,
    VALUE_NC,
    ImportedRecord,
    ShortenedTable,
    ValueEdit,
    apply_edits,
    evaluate_aggregation,
    import_annotated,
    modify_answer_change,
    modify_no_change,
    shorten,
)

__all__ = [
    "ALL_KINDS",
    "RELEVANCE_KINDS",
    "STRUCTURE_KINDS",
    "VALUE_KINDS",
    "SHUFFLE_ROWS",
    "SHUFFLE_COLS",
    "TARGET_ROW_TOP",
    "TARGET_ROW_MIDDLE",
    "TARGET_ROW_BOTTOM",
    "TARGET_COL_FRONT",
    "TARGET_COL_BACK",
    "TRANSPOSE",
    "REMOVE_RELEVANT",
    "REMOVE_TABLE",
    "SHIFT_RELEVANT_ROWS",
    "VALUE_AC",
    "VALUE_NC",
    "SHORTENED",
    "DUMMY_VALUE",
    "NUMERIC",
    "STRING",
    "ROW_REMOVAL",
    "Partition",
    "PerturbationRecord",
    "TargetLocation",
    "ShortenedTable",
    "ValueEdit",
    "ImportedRecord",
    "apply_perturbation",
    "apply_edits",
    "check_eligibility",
    "evaluate_aggregation",
    "import_annotated",
    "kind_from_name",
    "locate_target",
    "modify_answer_change",
    "modify_no_change",
    "partition_indices",
    "remap_annotations",
    "remove_relevant_cells",
    "remove_table",
    "replay_table",
    "shift_relevant_rows",
    "shift_target_col",
    "shift_target_row",
    "shorten",
    "shuffle_cols",
    "shuffle_rows",
    "transpose",
]
