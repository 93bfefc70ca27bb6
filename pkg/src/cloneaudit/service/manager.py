"""The coordinating service: apprentice registry, query sets, fan-out, reports.

Endpoints (all under /v1):

    POST /v1/apprentices          {"base_url": ...}   register (probes first)
    GET  /v1/apprentices          list registered apprentices
    POST /v1/querysets            JSON-lines corpus body
    POST /v1/reports              {"query_set_id": ..., "config": {...}}
    GET  /v1/reports/{id}?format=html|json
    POST /v1/reports/{id}/sample  {"n": ..., "size_class": ..., "seed": ...}
    POST /v1/attribution          {"corpus_id": ..., "patterns": [...]}

Reports and registries persist as JSON files under the data directory.
"""

from __future__ import annotations

import json
import logging
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import requests

from .._util import now
from ..engine import DetectionConfig
from ..model import (
    ClonePair,
    CorpusFormatError,
    blocks_to_jsonl,
    corpus_from_jsonl,
)
from ..report import (
    CloneReport,
    build_report,
    render_report,
    sample_pairs,
    scan_attribution,
)
from .http import HttpError, JsonHttpService, Request, route

logger = logging.getLogger(__name__)

DEFAULT_CHUNK_SIZE = 10_000
PROBE_TIMEOUT = 5.0
QUERY_TIMEOUT = 600.0


@dataclass
class ApprenticeRecord:
    apprentice_id: str
    base_url: str
    registered_at: float
    last_status: dict

    def to_dict(self) -> dict:
        return {
            "apprentice_id": self.apprentice_id,
            "base_url": self.base_url,
            "registered_at": self.registered_at,
            "last_status": self.last_status,
        }


class ManagerService:
    def __init__(
        self,
        data_dir: str | Path,
        host: str = "127.0.0.1",
        port: int = 0,
        chunk_size: int = DEFAULT_CHUNK_SIZE,
    ):
        self.data_dir = Path(data_dir)
        (self.data_dir / "querysets").mkdir(parents=True, exist_ok=True)
        (self.data_dir / "reports").mkdir(parents=True, exist_ok=True)
        self.chunk_size = chunk_size
        self._lock = threading.Lock()
        self._apprentices: dict[str, ApprenticeRecord] = {}  # keyed by base_url
        self._load_registry()
        self.http = JsonHttpService(
            [
                route("POST", r"/v1/apprentices", self._handle_register),
                route("GET", r"/v1/apprentices", self._handle_list),
                route("POST", r"/v1/querysets", self._handle_queryset),
                route("POST", r"/v1/reports", self._handle_report),
                route("GET", r"/v1/reports/([^/]+)", self._handle_get_report),
                route("POST", r"/v1/reports/([^/]+)/sample", self._handle_sample),
                route("POST", r"/v1/attribution", self._handle_attribution),
            ],
            host=host,
            port=port,
        )

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> "ManagerService":
        self.http.start()
        logger.info("manager listening on %s", self.base_url)
        return self

    def stop(self) -> None:
        self.http.stop()

    @property
    def base_url(self) -> str:
        return self.http.base_url

    # -- registry ----------------------------------------------------------

    def _registry_path(self) -> Path:
        return self.data_dir / "registry.json"

    def _load_registry(self) -> None:
        path = self._registry_path()
        if not path.exists():
            return
        for rec in json.loads(path.read_text(encoding="utf-8")):
            self._apprentices[rec["base_url"]] = ApprenticeRecord(**rec)

    def _save_registry(self) -> None:
        recs = [r.to_dict() for r in self._apprentices.values()]
        self._registry_path().write_text(
            json.dumps(recs, indent=2, sort_keys=True), encoding="utf-8"
        )

    def probe(self, base_url: str) -> dict:
        response = requests.get(f"{base_url}/v1/status", timeout=PROBE_TIMEOUT)
        response.raise_for_status()
        return response.json()

    def register_apprentice(self, base_url: str) -> ApprenticeRecord:
        """Probe the apprentice and store (or refresh) its record."""
        base_url = base_url.rstrip("/")
        try:
            status = self.probe(base_url)
        except requests.RequestException as exc:
            raise HttpError(400, f"apprentice unreachable at {base_url}: {exc}") from exc
        record = ApprenticeRecord(
            apprentice_id=status.get("apprentice_id", base_url),
            base_url=base_url,
            registered_at=now(),
            last_status=status,
        )
        with self._lock:
            self._apprentices[base_url] = record
            self._save_registry()
        return record

    def list_apprentices(self) -> list[ApprenticeRecord]:
        with self._lock:
            return list(self._apprentices.values())

    # -- query sets ----------------------------------------------------------

    def store_query_set(self, jsonl_text: str) -> dict:
        corpus = corpus_from_jsonl(jsonl_text)
        query_set_id = f"qs-{corpus.content_hash[:16]}"
        path = self.data_dir / "querysets" / f"{query_set_id}.jsonl"
        path.write_text(blocks_to_jsonl(corpus.blocks), encoding="utf-8")
        return {
            "query_set_id": query_set_id,
            "corpus_id": corpus.corpus_id,
            "content_hash": corpus.content_hash,
            "block_count": len(corpus.blocks),
        }

    def _load_query_set(self, query_set_id: str):
        path = self.data_dir / "querysets" / f"{query_set_id}.jsonl"
        if not path.exists():
            raise HttpError(404, f"unknown query set {query_set_id}")
        return corpus_from_jsonl(path.read_text(encoding="utf-8"))

    # -- dispatch ------------------------------------------------------------

    def _ready_apprentices(self) -> list[tuple[ApprenticeRecord, dict]]:
        ready = []
        for record in self.list_apprentices():
            try:
                status = self.probe(record.base_url)
            except requests.RequestException as exc:
                logger.warning("apprentice %s unreachable: %s", record.base_url, exc)
                continue
            record.last_status = status
            if status.get("state") in ("ready", "querying"):
                ready.append((record, status))
        return ready

    def dispatch_query(self, query_set_id: str, config: DetectionConfig) -> CloneReport:
        """Fan the query set out to every ready apprentice and merge results."""
        corpus = self._load_query_set(query_set_id)
        ready = self._ready_apprentices()
        if not ready:
            raise HttpError(503, "no ready apprentices registered")

        chunks = [
            corpus.blocks[i : i + self.chunk_size]
            for i in range(0, len(corpus.blocks), self.chunk_size)
        ] or [[]]

        failures: list[str] = []
        all_pairs: list[ClonePair] = []

        def query_one(item) -> list[ClonePair]:
            record, _ = item
            pairs: list[ClonePair] = []
            for chunk in chunks:
                body = {
                    "config": config.to_dict(),
                    "blocks": [
                        json.loads(line)
                        for line in blocks_to_jsonl(chunk).splitlines()
                    ],
                }
                response = requests.post(
                    f"{record.base_url}/v1/query", json=body, timeout=QUERY_TIMEOUT
                )
                response.raise_for_status()
                pairs.extend(
                    ClonePair.from_dict(rec) for rec in response.json()["pairs"]
                )
            return pairs

        with ThreadPoolExecutor(max_workers=max(1, len(ready))) as pool:
            futures = {pool.submit(query_one, item): item for item in ready}
            for future, item in futures.items():
                record, _ = item
                try:
                    all_pairs.extend(future.result())
                except Exception as exc:
                    failures.append(f"{record.base_url}: {exc}")
                    logger.warning("apprentice %s failed: %s", record.base_url, exc)

        report = build_report(
            query_set_id=query_set_id,
            pairs=all_pairs,
            config=config.to_dict(),
            apprentices=[
                {
                    "apprentice_id": status.get("apprentice_id"),
                    "base_url": record.base_url,
                    "corpus_id": status.get("corpus_id"),
                    "corpus_hash": status.get("corpus_hash"),
                }
                for record, status in ready
            ],
            partial=bool(failures),
            failures=failures,
        )
        self._save_report(report)
        return report

    # -- reports -------------------------------------------------------------

    def _report_path(self, report_id: str) -> Path:
        return self.data_dir / "reports" / f"{report_id}.json"

    def _save_report(self, report: CloneReport) -> None:
        self._report_path(report.report_id).write_text(
            render_report(report, "json"), encoding="utf-8"
        )

    def load_report(self, report_id: str) -> CloneReport:
        path = self._report_path(report_id)
        if not path.exists():
            raise HttpError(404, f"unknown report {report_id}")
        return CloneReport.from_dict(json.loads(path.read_text(encoding="utf-8")))

    # -- HTTP handlers ---------------------------------------------------------

    def _handle_register(self, request: Request, match):
        payload = request.json()
        base_url = payload.get("base_url")
        if not base_url:
            raise HttpError(400, "body must carry base_url")
        record = self.register_apprentice(base_url)
        return 200, record.to_dict()

    def _handle_list(self, request: Request, match):
        return 200, {"apprentices": [r.to_dict() for r in self.list_apprentices()]}

    def _handle_queryset(self, request: Request, match):
        try:
            return 200, self.store_query_set(request.text())
        except CorpusFormatError as exc:
            raise HttpError(400, f"malformed corpus: {exc}") from exc

    def _handle_report(self, request: Request, match):
        payload = request.json()
        query_set_id = payload.get("query_set_id")
        if not query_set_id:
            raise HttpError(400, "body must carry query_set_id")
        try:
            config = DetectionConfig.from_dict(payload.get("config", {}))
        except ValueError as exc:
            raise HttpError(400, f"bad detection config: {exc}") from exc
        report = self.dispatch_query(query_set_id, config)
        return 200, report.to_dict()

    def _handle_get_report(self, request: Request, match):
        report = self.load_report(match.group(1))
        format = request.query_param("format", "json")
        if format == "html":
            return 200, (render_report(report, "html"), "text/html; charset=utf-8")
        if format == "json":
            return 200, report.to_dict()
        raise HttpError(400, f"unknown format {format!r}")

    def _handle_sample(self, request: Request, match):
        report = self.load_report(match.group(1))
        payload = request.json()
        n = payload.get("n")
        if not isinstance(n, int) or n < 1:
            raise HttpError(400, "n must be a positive integer")
        sampled, short = sample_pairs(
            report.pairs,
            n,
            size_class=payload.get("size_class"),
            seed=int(payload.get("seed", 0)),
        )
        return 200, {"pairs": [p.to_dict() for p in sampled], "short": short}

    def _handle_attribution(self, request: Request, match):
        payload = request.json()
        patterns = payload.get("patterns")
        corpus_ref = payload.get("corpus_id")
        if not patterns or not corpus_ref:
            raise HttpError(400, "body must carry corpus_id and patterns[]")
        corpus = self._load_query_set(corpus_ref)
        matches = scan_attribution(corpus.blocks, patterns)
        return 200, {"matches": [m.to_dict() for m in matches]}
