"""Reference models and the file/subprocess/HTTP prediction backends."""

import json
import threading
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from freb.backends import (
    FAITHFUL_ORACLE,
    FIRST_ROW_BIASED,
    HTTP_TOKEN_ENV,
    LAST_ROW_BIASED,
    MAJORITY_ANSWER,
    FileBackend,
    HttpBackend,
    ReferenceBackend,
    SubprocessBackend,
    parse_backend,
    run_reference_model,
)
from freb.core import ARGMAX, EQ, RQ, AggregationDescriptor, QAInstance, Table
from freb.errors import BackendError, ConfigError, DatasetError
from freb.metrics import ORIGINAL
from freb.perturb import REMOVE_TABLE, apply_perturbation

LOOKUP = QAInstance(
    id="eq-1",
    question="How many votes did Olsson get?",
    answers=("4",),
    table=Table.from_values(["Name", "Votes"], [["Leslie", "15"], ["Olsson", "4"]]),
    question_type=EQ,
)

EXTREMAL = QAInstance(
    id="rq-1",
    question="Who got the most votes?",
    answers=("Leslie",),
    table=Table.from_values(["Name", "Votes"], [["Leslie", "15"], ["Olsson", "4"]]),
    question_type=RQ,
    aggregation=AggregationDescriptor(kind=ARGMAX, value_col=1, label_col=0),
)


# --- reference models ---------------------------------------------------------


def test_faithful_oracle_reads_cell():
    assert run_reference_model(FAITHFUL_ORACLE, LOOKUP) == "4"


def test_faithful_oracle_runs_descriptor():
    assert run_reference_model(FAITHFUL_ORACLE, EXTREMAL) == "Leslie"


def test_faithful_oracle_fails_loudly_when_blind():
    gone, _ = apply_perturbation(EXTREMAL, REMOVE_TABLE, global_seed=0)
    with pytest.raises(BackendError):
        run_reference_model(FAITHFUL_ORACLE, gone)


def test_majority_answer_constant():
    assert run_reference_model(MAJORITY_ANSWER, LOOKUP) == "2019"
    assert run_reference_model(MAJORITY_ANSWER, LOOKUP, param="42") == "42"


def test_biased_readers_fire_on_cue_questions():
    assert run_reference_model(LAST_ROW_BIASED, EXTREMAL) == "Olsson"
    assert run_reference_model(FIRST_ROW_BIASED, EXTREMAL) == "Leslie"


def test_biased_readers_defer_without_cue():
    assert run_reference_model(LAST_ROW_BIASED, LOOKUP) == "4"
    assert run_reference_model(FIRST_ROW_BIASED, LOOKUP) == "4"


def test_unknown_reference_model():
    with pytest.raises(BackendError, match="unknown reference model"):
        run_reference_model("COIN_FLIP", LOOKUP)


def test_reference_backend_collects_failures():
    gone, _ = apply_perturbation(EXTREMAL, REMOVE_TABLE, global_seed=0)
    backend = ReferenceBackend(FAITHFUL_ORACLE)
    entries, failures = backend.predictions_for((REMOVE_TABLE, 0), [gone])
    assert entries == {"rq-1": None}
    assert "rq-1" in failures


def test_reference_backend_model_id():
    assert ReferenceBackend(FAITHFUL_ORACLE).model_id == "reference:faithful_oracle"
    assert (
        ReferenceBackend(MAJORITY_ANSWER, param="42").model_id
        == "reference:majority_answer:42"
    )


def test_reference_backend_rejects_unknown():
    with pytest.raises(ConfigError):
        ReferenceBackend("COIN_FLIP")


# --- file backend ---------------------------------------------------------------


def _write_predictions(path, rows):
    path.write_text(
        "".join(json.dumps(r) + "\n" for r in rows), encoding="utf-8"
    )


def test_file_backend_reads_conditions(tmp_path):
    _write_predictions(
        tmp_path / "original.jsonl", [{"instance_id": "eq-1", "prediction": "4"}]
    )
    _write_predictions(
        tmp_path / "shuffle_rows.seed2.jsonl",
        [{"instance_id": "eq-1", "prediction": "15"}],
    )
    backend = FileBackend(tmp_path)
    entries, failures = backend.predictions_for((ORIGINAL, 0), [LOOKUP])
    assert entries == {"eq-1": "4"} and failures == {}
    entries, _ = backend.predictions_for(("SHUFFLE_ROWS", 2), [LOOKUP])
    assert entries == {"eq-1": "15"}


def test_file_backend_missing_file_is_fatal(tmp_path):
    with pytest.raises(DatasetError, match="not found"):
        FileBackend(tmp_path).predictions_for(("SHUFFLE_ROWS", 0), [LOOKUP])


def test_file_backend_missing_instance_is_recorded(tmp_path):
    _write_predictions(
        tmp_path / "original.jsonl", [{"instance_id": "other", "prediction": "x"}]
    )
    entries, failures = FileBackend(tmp_path).predictions_for((ORIGINAL, 0), [LOOKUP])
    assert entries == {"eq-1": None}
    assert failures == {"eq-1": "no prediction in original.jsonl"}


def test_file_backend_bad_record_cites_line(tmp_path):
    (tmp_path / "original.jsonl").write_text(
        '{"instance_id": "a", "prediction": "x"}\n{"instance_id": "b"}\n',
        encoding="utf-8",
    )
    with pytest.raises(DatasetError, match="line 2"):
        FileBackend(tmp_path).predictions_for((ORIGINAL, 0), [LOOKUP])


# --- subprocess backend -----------------------------------------------------------


def test_subprocess_backend_first_line_wins():
    backend = SubprocessBackend("head -1")
    entries, failures = backend.predictions_for((ORIGINAL, 0), [LOOKUP])
    assert failures == {}
    assert entries == {"eq-1": LOOKUP.question}


def test_subprocess_backend_failure_recorded_not_raised():
    backend = SubprocessBackend("exit 7")
    entries, failures = backend.predictions_for((ORIGINAL, 0), [LOOKUP])
    assert entries == {"eq-1": None}
    assert "exit code 7" in failures["eq-1"]


def test_subprocess_backend_parallel_workers():
    backend = SubprocessBackend("head -1", workers=4)
    many = [
        QAInstance(
            id=f"q{i}",
            question=f"question {i}",
            answers=("x",),
            table=LOOKUP.table,
        )
        for i in range(8)
    ]
    entries, failures = backend.predictions_for((ORIGINAL, 0), many)
    assert failures == {}
    assert entries == {f"q{i}": f"question {i}" for i in range(8)}


# --- http backend -------------------------------------------------------------------


class _Handler(BaseHTTPRequestHandler):
    seen = []

    def do_POST(self):
        body = json.loads(self.rfile.read(int(self.headers["Content-Length"])))
        type(self).seen.append(
            {"body": body, "auth": self.headers.get("Authorization")}
        )
        reply = json.dumps({"answer": body["question"].upper()}).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(reply)))
        self.end_headers()
        self.wfile.write(reply)

    def log_message(self, *args):
        pass


@pytest.fixture()
def http_server():
    server = HTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _Handler.seen = []
    yield f"http://127.0.0.1:{server.server_port}/predict"
    server.shutdown()
    thread.join(timeout=5)


def test_http_backend_round_trip(http_server):
    backend = HttpBackend(http_server)
    entries, failures = backend.predictions_for((ORIGINAL, 0), [LOOKUP])
    assert failures == {}
    assert entries == {"eq-1": LOOKUP.question.upper()}
    sent = _Handler.seen[0]["body"]
    assert sent["question"] == LOOKUP.question
    assert sent["table_serialized"].startswith("col : Name | Votes")


def test_http_backend_forwards_token(http_server, monkeypatch):
    monkeypatch.setenv(HTTP_TOKEN_ENV, "sesame")
    HttpBackend(http_server).predictions_for((ORIGINAL, 0), [LOOKUP])
    assert _Handler.seen[0]["auth"] == "Bearer sesame"


def test_http_backend_no_token_header_by_default(http_server, monkeypatch):
    monkeypatch.delenv(HTTP_TOKEN_ENV, raising=False)
    HttpBackend(http_server).predictions_for((ORIGINAL, 0), [LOOKUP])
    assert _Handler.seen[0]["auth"] is None


def test_http_backend_unreachable_records_failure():
    backend = HttpBackend("http://127.0.0.1:9/nothing", timeout=0.5)
    entries, failures = backend.predictions_for((ORIGINAL, 0), [LOOKUP])
    assert entries == {"eq-1": None}
    assert "eq-1" in failures


# --- spec parsing ----------------------------------------------------------------------


def test_parse_backend_reference():
    backend = parse_backend("reference:faithful_oracle")
    assert isinstance(backend, ReferenceBackend)
    assert backend.name == FAITHFUL_ORACLE
    backend = parse_backend("reference:majority_answer:7")
    assert backend.param == "7"


def test_parse_backend_file():
    backend = parse_backend("file:/tmp/preds")
    assert isinstance(backend, FileBackend)
    assert str(backend.root) == "/tmp/preds"


def test_parse_backend_subprocess():
    backend = parse_backend("subprocess:mymodel --flag", timeout=3.0, retries=2)
    assert isinstance(backend, SubprocessBackend)
    assert backend.command == "mymodel --flag"
    assert backend.timeout == 3.0
    assert backend.retries == 2


def test_parse_backend_http_keeps_full_url():
    backend = parse_backend("http://host:8080/v1/answer")
    assert isinstance(backend, HttpBackend)
    assert backend.url == "http://host:8080/v1/answer"
    backend = parse_backend("https://host/answer")
    assert backend.url == "https://host/answer"


def test_parse_backend_rejects_garbage():
    with pytest.raises(ConfigError, match="unknown backend scheme"):
        parse_backend("carrier_pigeon:coop")
    with pytest.raises(ConfigError, match="missing a target"):
        parse_backend("file:")
