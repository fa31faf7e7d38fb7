"""Config parsing and the perturb-predict-score pipeline."""

import pytest

from freb.errors import ConfigError, DatasetError
from freb.pipeline import (
    DEFAULT_SEEDS,
    KIND_GROUPS,
    RunConfig,
    parse_config_file,
    parse_kinds,
    parse_seeds,
    render_report_text,
    report_to_json,
    run_pipeline,
)


# --- kind/seed parsing ---------------------------------------------------------


def test_parse_kinds_names_and_case():
    assert parse_kinds("shuffle_rows, TRANSPOSE") == ("SHUFFLE_ROWS", "TRANSPOSE")


def test_parse_kinds_group_aliases():
    assert parse_kinds("structure") == KIND_GROUPS["structure"]
    assert parse_kinds("relevance,value") == (
        KIND_GROUPS["relevance"] + KIND_GROUPS["value"]
    )
    assert parse_kinds("all") == KIND_GROUPS["all"]


def test_parse_kinds_dedupes_preserving_order():
    assert parse_kinds("transpose,structure")[0] == "TRANSPOSE"
    assert len(parse_kinds("transpose,structure")) == len(KIND_GROUPS["structure"])


def test_parse_kinds_rejects_unknown():
    with pytest.raises(ConfigError, match="unknown perturbation kind"):
        parse_kinds("shuffle_rows,rotate")
    with pytest.raises(ConfigError, match="no perturbation kinds"):
        parse_kinds(" , ")


def test_parse_seeds():
    assert parse_seeds("0, 1,2") == (0, 1, 2)
    assert parse_seeds("5,5,3") == (5, 3)
    with pytest.raises(ConfigError, match="must be integers"):
        parse_seeds("0,x")
    with pytest.raises(ConfigError, match="no seeds"):
        parse_seeds("")


# --- config files ----------------------------------------------------------------


def _write_config(tmp_path, body):
    path = tmp_path / "run.cfg"
    path.write_text(body, encoding="utf-8")
    return path


def test_parse_config_file_full(tmp_path, toy_path):
    path = _write_config(
        tmp_path,
        f"""
        # evaluation run
        dataset = {toy_path}
        kinds = shuffle_rows, remove_table   # trailing comment
        seeds = 0,1
        backend = reference:faithful_oracle
        max_tokens = 900
        timeout = 12.5
        retries = 2
        workers = 3
        """,
    )
    config = parse_config_file(path)
    assert config.dataset == toy_path
    assert config.kinds == ("SHUFFLE_ROWS", "REMOVE_TABLE")
    assert config.seeds == (0, 1)
    assert config.max_tokens == 900
    assert config.timeout == 12.5
    assert config.retries == 2
    assert config.workers == 3


def test_parse_config_file_defaults(tmp_path, toy_path):
    path = _write_config(tmp_path, f"dataset = {toy_path}\nkinds = transpose\n")
    config = parse_config_file(path)
    assert config.seeds == DEFAULT_SEEDS
    assert config.backend == "reference:faithful_oracle"
    assert config.max_tokens is None


def test_parse_config_file_unknown_key(tmp_path, toy_path):
    path = _write_config(
        tmp_path, f"dataset = {toy_path}\nkinds = transpose\ntemperature = 1\n"
    )
    with pytest.raises(ConfigError, match="unknown key 'temperature'"):
        parse_config_file(path)


def test_parse_config_file_missing_required(tmp_path):
    path = _write_config(tmp_path, "kinds = transpose\n")
    with pytest.raises(ConfigError, match="missing required key 'dataset'"):
        parse_config_file(path)
    path = _write_config(tmp_path, "dataset = x.jsonl\n")
    with pytest.raises(ConfigError, match="missing required key 'kinds'"):
        parse_config_file(path)


def test_parse_config_file_bad_number(tmp_path, toy_path):
    path = _write_config(
        tmp_path, f"dataset = {toy_path}\nkinds = transpose\nmax_tokens = many\n"
    )
    with pytest.raises(ConfigError, match="bad value for max_tokens"):
        parse_config_file(path)


def test_parse_config_file_not_found(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        parse_config_file(tmp_path / "nope.cfg")


def test_parse_config_file_bad_line(tmp_path):
    path = _write_config(tmp_path, "just some words\n")
    with pytest.raises(ConfigError, match="line 1: expected 'key = value'"):
        parse_config_file(path)


# --- the pipeline ------------------------------------------------------------------


@pytest.fixture(scope="module")
def faithful_report(toy_path):
    config = RunConfig(
        dataset=toy_path,
        kinds=("SHUFFLE_ROWS", "REMOVE_TABLE", "VALUE_NC"),
        seeds=(0, 1),
    )
    return run_pipeline(config)


def test_pipeline_original_block(faithful_report, toy_instances):
    assert faithful_report["original"]["em"] == 1.0
    assert faithful_report["original"]["n"] == len(toy_instances)
    assert faithful_report["original"]["failures"] == {}
    assert faithful_report["n_loaded"] == len(toy_instances)
    assert faithful_report["dropped_by_length"] == []


def test_pipeline_condition_grid(faithful_report):
    conditions = faithful_report["conditions"]
    assert [(c["kind"], c["seed"]) for c in conditions] == [
        ("shuffle_rows", 0),
        ("shuffle_rows", 1),
        ("remove_table", 0),
        ("remove_table", 1),
        ("value_nc", 0),
        ("value_nc", 1),
    ]


def test_pipeline_eligibility_split(faithful_report, toy_instances):
    n_eq = sum(1 for i in toy_instances if i.question_type == "EQ")
    n_rq = sum(1 for i in toy_instances if i.question_type == "RQ")
    by_kind = {(c["kind"], c["seed"]): c for c in faithful_report["conditions"]}
    shuffle = by_kind[("shuffle_rows", 0)]
    assert shuffle["n"] == n_eq
    assert len(shuffle["skipped"]) == n_rq
    assert {s["reason"] for s in shuffle["skipped"]} == {"NotEligible"}
    removal = by_kind[("remove_table", 0)]
    assert removal["n"] == n_rq
    assert len(removal["skipped"]) == n_eq


def test_pipeline_faithful_is_structure_invariant(faithful_report):
    for c in faithful_report["conditions"]:
        if c["kind"] == "shuffle_rows":
            assert c["em"] == 1.0
            assert c["emd"] == 0.0
            assert c["vp"] == 0.0 and c["c2w"] == 0 and c["w2c"] == 0


def test_pipeline_faithful_fails_without_table(faithful_report):
    for c in faithful_report["conditions"]:
        if c["kind"] == "remove_table":
            assert c["em"] == 0.0
            assert c["emd"] == -1.0
            assert c["vp"] == 1.0
            assert len(c["failures"]) == c["n"]


def test_pipeline_value_nc_scored_against_original_answers(faithful_report):
    for c in faithful_report["conditions"]:
        if c["kind"] == "value_nc":
            assert c["n"] > 0
            assert c["em"] == 1.0
            assert c["emd"] == 0.0


def test_pipeline_summaries(faithful_report):
    summaries = {s["kind"]: s for s in faithful_report["kind_summaries"]}
    assert summaries["shuffle_rows"]["em_mean"] == 1.0
    assert summaries["shuffle_rows"]["em_std"] == 0.0
    assert summaries["shuffle_rows"]["seeds_used"] == [0, 1]
    assert summaries["remove_table"]["vp_mean"] == 1.0
    assert summaries["remove_table"]["vp_pct_mean"] == 100.0


def test_pipeline_findings_not_flagged_for_faithful(faithful_report):
    finding = faithful_report["findings"]["table_independence"]
    assert finding["flagged"] is False
    assert finding["kinds"] == ["remove_table"]


def test_pipeline_flags_constant_model(toy_path):
    config = RunConfig(
        dataset=toy_path,
        kinds=("REMOVE_RELEVANT", "REMOVE_TABLE"),
        seeds=(0,),
        backend="reference:majority_answer:2019",
    )
    report = run_pipeline(config)
    finding = report["findings"]["table_independence"]
    assert finding["flagged"] is True
    assert finding["kinds"] == ["remove_relevant", "remove_table"]


def test_pipeline_max_tokens_filters(toy_path, toy_instances):
    config = RunConfig(
        dataset=toy_path, kinds=("TRANSPOSE",), seeds=(0,), max_tokens=60
    )
    report = run_pipeline(config)
    assert report["n_scored"] + len(report["dropped_by_length"]) == len(toy_instances)
    assert report["n_scored"] < len(toy_instances)


def test_pipeline_max_tokens_can_empty_dataset(toy_path):
    config = RunConfig(dataset=toy_path, kinds=("TRANSPOSE",), seeds=(0,), max_tokens=1)
    with pytest.raises(DatasetError, match="no instances left"):
        run_pipeline(config)


def test_pipeline_file_backend_round_trip(tmp_path, toy_path):
    # Score the faithful model, save its predictions, then re-evaluate them
    # through the file backend: metrics must agree exactly.
    import json

    from freb.backends import ReferenceBackend
    from freb.ingest import load_dataset
    from freb.metrics import ORIGINAL
    from freb.perturb import apply_perturbation
    from freb.errors import PerturbSkip

    instances = load_dataset(toy_path)
    backend = ReferenceBackend("FAITHFUL_ORACLE")
    preds_dir = tmp_path / "preds"
    preds_dir.mkdir()

    entries, _ = backend.predictions_for((ORIGINAL, 0), instances)
    with open(preds_dir / "original.jsonl", "w", encoding="utf-8") as fh:
        for iid, answer in entries.items():
            fh.write(json.dumps({"instance_id": iid, "prediction": answer}) + "\n")

    perturbed = []
    for inst in instances:
        try:
            out, _ = apply_perturbation(inst, "SHUFFLE_COLS", 0)
            perturbed.append(out)
        except PerturbSkip:
            continue
    entries, _ = backend.predictions_for(("SHUFFLE_COLS", 0), perturbed)
    with open(preds_dir / "shuffle_cols.seed0.jsonl", "w", encoding="utf-8") as fh:
        for iid, answer in entries.items():
            fh.write(json.dumps({"instance_id": iid, "prediction": answer}) + "\n")

    direct = run_pipeline(
        RunConfig(dataset=toy_path, kinds=("SHUFFLE_COLS",), seeds=(0,))
    )
    from_files = run_pipeline(
        RunConfig(
            dataset=toy_path,
            kinds=("SHUFFLE_COLS",),
            seeds=(0,),
            backend=f"file:{preds_dir}",
        )
    )
    for key in ("em", "emd", "vp", "n"):
        assert from_files["conditions"][0][key] == direct["conditions"][0][key]
    assert from_files["original"]["em"] == direct["original"]["em"]


# --- rendering ----------------------------------------------------------------------


def test_report_to_json_is_stable(faithful_report):
    a = report_to_json(faithful_report)
    b = report_to_json(faithful_report)
    assert a == b
    assert a.endswith("\n")
    import json

    assert json.loads(a) == faithful_report


def test_render_report_text(faithful_report):
    text = render_report_text(faithful_report)
    assert "original Em 1.0000" in text
    assert "shuffle_rows" in text
    assert "remove_table" in text
    assert "FLAG" not in text  # faithful model is not table-independent


def test_render_report_text_includes_flag(toy_path):
    report = run_pipeline(
        RunConfig(
            dataset=toy_path,
            kinds=("REMOVE_TABLE",),
            seeds=(0,),
            backend="reference:majority_answer:2019",
        )
    )
    assert "FLAG" in render_report_text(report)
