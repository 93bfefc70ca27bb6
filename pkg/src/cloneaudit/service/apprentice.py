"""The shard worker: loads one corpus, answers clone queries against it.

Endpoints (all under /v1):

    PUT  /v1/corpus   JSON-lines blocks (gzip accepted) or {"store_ref": ...};
                      detection config via query params theta / min_tokens
    GET  /v1/status   state snapshot with cache metrics
    POST /v1/query    {"config": {...}, "blocks": [...]} -> {"pairs": [...]}

Corpus load is exclusive; queries run concurrently against the immutable
ready index.
"""

from __future__ import annotations

import logging
import threading
import uuid
from dataclasses import dataclass
from pathlib import Path

from ..cache import CacheStore, get_or_build, load_entry
from ..engine import DetectionConfig, InvertedIndex, detect_clones
from ..licensing.matrix import CompatibilityMatrix, default_matrix
from ..model import (
    ConfigMismatchError,
    CorpusFormatError,
    Corpus,
    corpus_from_jsonl,
    parse_block_record,
)
from .http import HttpError, JsonHttpService, Request, route

logger = logging.getLogger(__name__)

STATE_IDLE = "idle"
STATE_LOADING = "loading"
STATE_READY = "ready"
STATE_QUERYING = "querying"


@dataclass
class ApprenticeStatus:
    apprentice_id: str
    state: str
    corpus_id: str | None
    corpus_hash: str | None
    block_count: int
    cache: dict

    def to_dict(self) -> dict:
        return {
            "apprentice_id": self.apprentice_id,
            "state": self.state,
            "corpus_id": self.corpus_id,
            "corpus_hash": self.corpus_hash,
            "block_count": self.block_count,
            "cache": self.cache,
        }


class ApprenticeService:
    def __init__(
        self,
        store_dir: str | Path,
        matrix: CompatibilityMatrix | None = None,
        host: str = "127.0.0.1",
        port: int = 0,
        apprentice_id: str | None = None,
    ):
        self.apprentice_id = apprentice_id or f"ap-{uuid.uuid4().hex[:8]}"
        self.store = CacheStore(Path(store_dir))
        self.matrix = matrix if matrix is not None else default_matrix()
        self._lock = threading.Lock()
        self._state = STATE_IDLE
        self._corpus: Corpus | None = None
        self._index: InvertedIndex | None = None
        self._active_queries = 0
        self.http = JsonHttpService(
            [
                route("PUT", r"/v1/corpus", self._handle_load),
                route("GET", r"/v1/status", self._handle_status),
                route("POST", r"/v1/query", self._handle_query),
            ],
            host=host,
            port=port,
        )

    # -- lifecycle ---------------------------------------------------------

    def start(self) -> "ApprenticeService":
        self.http.start()
        logger.info("apprentice %s listening on %s", self.apprentice_id, self.base_url)
        return self

    def stop(self) -> None:
        self.http.stop()

    @property
    def base_url(self) -> str:
        return self.http.base_url

    # -- operations --------------------------------------------------------

    def status(self) -> ApprenticeStatus:
        with self._lock:
            state = self._state
            if state == STATE_READY and self._active_queries > 0:
                state = STATE_QUERYING
            return ApprenticeStatus(
                apprentice_id=self.apprentice_id,
                state=state,
                corpus_id=self._corpus.corpus_id if self._corpus else None,
                corpus_hash=self._corpus.content_hash if self._corpus else None,
                block_count=len(self._corpus.blocks) if self._corpus else 0,
                cache=self.store.metrics.to_dict(),
            )

    def load_corpus(self, corpus: Corpus, config: DetectionConfig) -> ApprenticeStatus:
        with self._lock:
            if self._state == STATE_LOADING:
                raise HttpError(409, "corpus load already in progress")
            self._state = STATE_LOADING
        try:
            index = get_or_build(corpus, config, self.store)
        except Exception:
            with self._lock:
                self._state = STATE_READY if self._corpus is not None else STATE_IDLE
            raise
        with self._lock:
            self._corpus = corpus
            self._index = index
            self._state = STATE_READY
        logger.info(
            "apprentice %s loaded corpus %s (%d blocks)",
            self.apprentice_id, corpus.corpus_id, len(corpus.blocks),
        )
        return self.status()

    def query(self, blocks, config: DetectionConfig):
        with self._lock:
            if self._state not in (STATE_READY, STATE_QUERYING):
                raise HttpError(503, f"apprentice not ready (state: {self._state})")
            index = self._index
            self._active_queries += 1
        try:
            return detect_clones(blocks, index, config, matrix=self.matrix)
        finally:
            with self._lock:
                self._active_queries -= 1

    # -- HTTP handlers -----------------------------------------------------

    def _config_from_params(self, request: Request) -> DetectionConfig:
        try:
            return DetectionConfig(
                theta=float(request.query_param("theta", "0.8")),
                min_tokens=int(request.query_param("min_tokens", "23")),
            )
        except ValueError as exc:
            raise HttpError(400, f"bad detection config: {exc}") from exc

    def _handle_load(self, request: Request, match):
        config = self._config_from_params(request)
        content_type = (request.headers.get("Content-Type") or "").split(";")[0].strip()
        try:
            if content_type == "application/json":
                payload = request.json()
                ref = payload.get("store_ref")
                if not isinstance(ref, dict):
                    raise HttpError(400, "JSON body must carry a store_ref object")
                store = CacheStore(Path(ref.get("store", self.store.root)))
                entry = load_entry(store, ref["corpus_hash"], config)
                if entry is None:
                    raise HttpError(404, f"no cache entry for {ref['corpus_hash']}")
                corpus, _ = entry
            else:
                corpus = corpus_from_jsonl(request.text())
        except CorpusFormatError as exc:
            raise HttpError(400, f"malformed corpus: {exc}") from exc
        except KeyError as exc:
            raise HttpError(400, f"store_ref missing field: {exc}") from exc
        status = self.load_corpus(corpus, config)
        return 200, status.to_dict()

    def _handle_status(self, request: Request, match):
        return 200, self.status().to_dict()

    def _handle_query(self, request: Request, match):
        payload = request.json()
        if not isinstance(payload, dict) or "blocks" not in payload:
            raise HttpError(400, "body must be {config, blocks[]}")
        try:
            config = DetectionConfig.from_dict(payload.get("config", {}))
        except ValueError as exc:
            raise HttpError(400, f"bad detection config: {exc}") from exc
        try:
            blocks = [parse_block_record(rec) for rec in payload["blocks"]]
        except CorpusFormatError as exc:
            raise HttpError(400, f"malformed query block: {exc}") from exc
        try:
            pairs = self.query(blocks, config)
        except ConfigMismatchError as exc:
            raise HttpError(409, str(exc)) from exc
        return 200, {"pairs": [p.to_dict() for p in pairs]}
