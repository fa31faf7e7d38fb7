"""Model backends: where predictions come from.

Four flavors — pre-computed prediction files, a subprocess invoked per
instance, an HTTP endpoint, and built-in reference models.  The reference
models are deliberately simple probes: a faithful oracle that actually reads
the table, positionally biased readers, and a constant-answer model.  A
harness that cannot distinguish these has no business judging real systems.
"""

from __future__ import annotations

import json
import os
import subprocess
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

from .classify import ComparativeLexicon
from .core import QAInstance
from .errors import BackendError, ConfigError, DatasetError, FrebError
from .metrics import ORIGINAL
from .perturb import evaluate_aggregation, locate_target
from .serialize import serialize

FAITHFUL_ORACLE = "FAITHFUL_ORACLE"
LAST_ROW_BIASED = "LAST_ROW_BIASED"
FIRST_ROW_BIASED = "FIRST_ROW_BIASED"
MAJORITY_ANSWER = "MAJORITY_ANSWER"
REFERENCE_MODELS = (FAITHFUL_ORACLE, LAST_ROW_BIASED, FIRST_ROW_BIASED, MAJORITY_ANSWER)

HTTP_TOKEN_ENV = "FREB_HTTP_TOKEN"


def run_reference_model(
    name: str,
    instance: QAInstance,
    param: str | None = None,
    lexicon: ComparativeLexicon | None = None,
) -> str:
    """Deterministic answer of a built-in reference model.

    FAITHFUL_ORACLE executes the aggregation descriptor when present and
    otherwise retrieves the cell matching a gold answer; the *_ROW_BIASED
    models answer comparative-cue questions with a fixed row's label and
    defer to the oracle elsewhere; MAJORITY_ANSWER ignores the input.
    """
    if name == MAJORITY_ANSWER:
        return param if param is not None else "2019"
    if name == FAITHFUL_ORACLE:
        return _faithful(instance)
    if name in (LAST_ROW_BIASED, FIRST_ROW_BIASED):
        lexicon = lexicon or ComparativeLexicon()
        if not lexicon.question_has_cue(instance.question):
            return _faithful(instance)
        if instance.table.n_rows == 0:
            raise BackendError("biased reader: table has no rows")
        agg = instance.aggregation
        label_col = agg.label_col if agg is not None and agg.label_col is not None else 0
        row = -1 if name == LAST_ROW_BIASED else 0
        return instance.table.rows[row][label_col].raw
    raise BackendError(f"unknown reference model {name!r}")


def _faithful(instance: QAInstance) -> str:
    try:
        if instance.aggregation is not None:
            return evaluate_aggregation(instance.table, instance.aggregation)
        location = locate_target(instance)
        return instance.table.rows[location.row][location.col].raw
    except (FrebError, ValueError) as exc:
        raise BackendError(f"oracle cannot answer {instance.id}: {exc}") from exc


class ReferenceBackend:
    def __init__(
        self,
        name: str,
        param: str | None = None,
        lexicon: ComparativeLexicon | None = None,
    ):
        if name not in REFERENCE_MODELS:
            known = ", ".join(m.lower() for m in REFERENCE_MODELS)
            raise ConfigError(f"unknown reference model {name!r}; expected one of: {known}")
        self.name = name
        self.param = param
        self.lexicon = lexicon or ComparativeLexicon()

    @property
    def model_id(self) -> str:
        suffix = f":{self.param}" if self.param is not None else ""
        return f"reference:{self.name.lower()}{suffix}"

    def predictions_for(
        self, condition: tuple[str, int], instances: Sequence[QAInstance]
    ) -> tuple[dict[str, str | None], dict[str, str]]:
        entries: dict[str, str | None] = {}
        failures: dict[str, str] = {}
        for inst in instances:
            try:
                entries[inst.id] = run_reference_model(
                    self.name, inst, param=self.param, lexicon=self.lexicon
                )
            except BackendError as exc:
                entries[inst.id] = None
                failures[inst.id] = str(exc)
        return entries, failures


class FileBackend:
    """Reads pre-computed predictions: one JSONL file per condition, named
    original.jsonl or <kind>.seed<k>.jsonl, lines {"instance_id", "prediction"}."""

    def __init__(self, root: str | Path):
        self.root = Path(root)

    @property
    def model_id(self) -> str:
        return f"file:{self.root}"

    def _path_for(self, condition: tuple[str, int]) -> Path:
        kind, seed = condition
        if kind == ORIGINAL:
            return self.root / "original.jsonl"
        return self.root / f"{kind.lower()}.seed{seed}.jsonl"

    def predictions_for(
        self, condition: tuple[str, int], instances: Sequence[QAInstance]
    ) -> tuple[dict[str, str | None], dict[str, str]]:
        path = self._path_for(condition)
        if not path.exists():
            raise DatasetError(f"predictions file not found: {path}")
        loaded: dict[str, str] = {}
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                    loaded[str(obj["instance_id"])] = str(obj["prediction"])
                except (json.JSONDecodeError, KeyError, TypeError) as exc:
                    raise DatasetError(f"{path}: line {lineno}: bad prediction record: {exc}")
        entries: dict[str, str | None] = {}
        failures: dict[str, str] = {}
        for inst in instances:
            if inst.id in loaded:
                entries[inst.id] = loaded[inst.id]
            else:
                entries[inst.id] = None
                failures[inst.id] = f"no prediction in {path.name}"
        return entries, failures


class SubprocessBackend:
    """Pipes "question\\nserialized table\\n" to a shell command per instance
    and takes the first stdout line as the answer."""

    def __init__(self, command: str, timeout: float = 30.0, retries: int = 0, workers: int = 1):
        self.command = command
        self.timeout = timeout
        self.retries = retries
        self.workers = max(1, workers)

    @property
    def model_id(self) -> str:
        return f"subprocess:{self.command}"

    def _predict_one(self, inst: QAInstance) -> tuple[str, str | None, str | None]:
        payload = f"{inst.question}\n{serialize(inst.table)}\n"
        last_error = "no attempts made"
        for _ in range(self.retries + 1):
            try:
                proc = subprocess.run(
                    self.command,
                    shell=True,
                    input=payload,
                    capture_output=True,
                    text=True,
                    timeout=self.timeout,
                )
            except subprocess.TimeoutExpired:
                last_error = f"timed out after {self.timeout}s"
                continue
            if proc.returncode != 0:
                last_error = f"exit code {proc.returncode}: {proc.stderr.strip()[:200]}"
                continue
            return inst.id, proc.stdout.splitlines()[0].strip() if proc.stdout else "", None
        return inst.id, None, last_error

    def predictions_for(
        self, condition: tuple[str, int], instances: Sequence[QAInstance]
    ) -> tuple[dict[str, str | None], dict[str, str]]:
        return _collect(self._predict_one, instances, self.workers)


class HttpBackend:
    """POSTs {"question", "table_serialized"} as JSON and expects {"answer"}.
    A bearer token is forwarded from the FREB_HTTP_TOKEN environment variable."""

    def __init__(self, url: str, timeout: float = 30.0, retries: int = 0, workers: int = 1):
        self.url = url
        self.timeout = timeout
        self.retries = retries
        self.workers = max(1, workers)

    @property
    def model_id(self) -> str:
        return f"http:{self.url}"

    def _predict_one(self, inst: QAInstance) -> tuple[str, str | None, str | None]:
        body = json.dumps(
            {"question": inst.question, "table_serialized": serialize(inst.table)}
        ).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(HTTP_TOKEN_ENV)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        last_error = "no attempts made"
        for _ in range(self.retries + 1):
            request = urllib.request.Request(self.url, data=body, headers=headers)
            try:
                with urllib.request.urlopen(request, timeout=self.timeout) as response:
                    answer = json.loads(response.read().decode("utf-8"))["answer"]
                return inst.id, str(answer), None
            except (urllib.error.URLError, json.JSONDecodeError, KeyError, TimeoutError) as exc:
                last_error = str(exc)
        return inst.id, None, last_error

    def predictions_for(
        self, condition: tuple[str, int], instances: Sequence[QAInstance]
    ) -> tuple[dict[str, str | None], dict[str, str]]:
        return _collect(self._predict_one, instances, self.workers)


def _collect(predict_one, instances, workers):
    entries: dict[str, str | None] = {}
    failures: dict[str, str] = {}
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(predict_one, instances))
    else:
        results = [predict_one(inst) for inst in instances]
    for iid, answer, error in results:
        entries[iid] = answer
        if error is not None:
            failures[iid] = error
    return entries, failures


def parse_backend(
    spec: str,
    lexicon: ComparativeLexicon | None = None,
    timeout: float = 30.0,
    retries: int = 0,
    workers: int = 1,
):
    """Build a backend from its config string.

    Forms: reference:<model>[:<param>], file:<dir>, subprocess:<command>,
    http:<url>.
    """
    scheme, _, rest = spec.partition(":")
    scheme = scheme.strip().lower()
    if not rest:
        raise ConfigError(f"backend spec {spec!r} is missing a target after the colon")
    if scheme == "reference":
        name, _, param = rest.partition(":")
        return ReferenceBackend(name.strip().upper(), param or None, lexicon=lexicon)
    if scheme == "file":
        return FileBackend(rest)
    if scheme == "subprocess":
        return SubprocessBackend(rest, timeout=timeout, retries=retries, workers=workers)
    if scheme in ("http", "https"):
        # "http://host/path" is the URL itself; "http:host/path" names one.
        url = spec.strip() if rest.startswith("//") else rest
        return HttpBackend(url, timeout=timeout, retries=retries, workers=workers)
    raise ConfigError(
        f"unknown backend scheme {scheme!r}; expected reference, file, subprocess, or http"
    )
