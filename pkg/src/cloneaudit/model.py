"""Core data model: token bags, code blocks, corpora, clone pairs.

Corpus files are JSON-lines, one block record per line. Field names are part
of the on-disk contract and must not change:

    block_id, corpus_id, kind, path, start_line, end_line, url, granularity,
    tokens, total_tokens, line_count, last_modified, license,
    license_provenance, raw_text

`context_text` (the surrounding post body for StackExchange blocks) is an
optional extra key, emitted only when present.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from ._util import canonical_json, now

GRANULARITIES = ("file", "module", "function")
LOCATOR_KINDS = ("filesystem", "stackexchange-post", "doc-file")
LICENSE_PROVENANCES = ("header", "package-file", "inherited", "corpus-default")

NONE_ID = "NONE"
UNKNOWN_ID = "UNKNOWN"


class CloneAuditError(Exception):
    """Base class for errors raised by this package."""


class IngestError(CloneAuditError):
    """Fatal problem while ingesting a source (unreadable path, bad format)."""


class CorpusFormatError(CloneAuditError):
    """A corpus record violates the JSON-lines schema or its invariants."""


class ConfigMismatchError(CloneAuditError):
    """Detection config does not match the config an index was built with."""


class TruncatedDumpError(IngestError):
    """A StackExchange dump ended mid-stream.

    Rows completed before the truncation point are preserved on
    ``partial_corpus`` so callers can flush them before failing.
    """

    def __init__(self, message: str, partial_corpus: "Corpus"):
        super().__init__(message)
        self.partial_corpus = partial_corpus


@dataclass(frozen=True)
class TokenBag:
    """Multiset of normalized tokens; the unit of similarity."""

    entries: Mapping[str, int]
    total: int

    @classmethod
    def from_entries(cls, entries: Mapping[str, int]) -> "TokenBag":
        entries = {tok: int(freq) for tok, freq in entries.items() if freq > 0}
        return cls(entries, sum(entries.values()))

    @property
    def distinct(self) -> int:
        return len(self.entries)

    def __contains__(self, token: str) -> bool:
        return token in self.entries


EMPTY_BAG = TokenBag({}, 0)


@dataclass(frozen=True)
class LicenseTag:
    """A normalized license id (or NONE/UNKNOWN) plus where it came from."""

    id: str
    provenance: str = "header"

    def __post_init__(self):
        if self.provenance not in LICENSE_PROVENANCES:
            raise ValueError(f"bad license provenance: {self.provenance!r}")

    @property
    def is_concrete(self) -> bool:
        return self.id not in (NONE_ID, UNKNOWN_ID)


LICENSE_NONE = LicenseTag(NONE_ID, "header")


@dataclass(frozen=True)
class SourceLocator:
    """Where a block came from: a file span or a StackExchange post."""

    kind: str
    path: str  # filesystem path or decimal post id
    start_line: int
    end_line: int
    url: str | None = None

    def __post_init__(self):
        if self.kind not in LOCATOR_KINDS:
            raise ValueError(f"bad locator kind: {self.kind!r}")
        if self.start_line < 1 or self.end_line < self.start_line:
            raise ValueError(
                f"bad line span {self.start_line}..{self.end_line} for {self.path!r}"
            )
        if self.kind == "stackexchange-post":
            if not self.path.isdigit():
                raise ValueError(f"post id must be decimal, got {self.path!r}")
            if not self.url:
                raise ValueError("stackexchange-post locator requires a url")

    @property
    def line_count(self) -> int:
        return self.end_line - self.start_line + 1


@dataclass
class CodeBlock:
    """A tokenized code segment with provenance, granularity, and a license."""

    block_id: str
    corpus_id: str
    locator: SourceLocator
    granularity: str
    raw_text: str
    tokens: TokenBag
    line_count: int
    last_modified: float | None = None
    license: LicenseTag = LICENSE_NONE
    context_text: str | None = None

    @property
    def total_tokens(self) -> int:
        return self.tokens.total


@dataclass(frozen=True)
class BlockSummary:
    """The per-side slice of a block that travels inside a clone pair."""

    block_id: str
    corpus_id: str
    kind: str
    path: str
    start_line: int
    end_line: int
    url: str | None
    granularity: str
    license: LicenseTag
    line_count: int
    total_tokens: int
    last_modified: float | None
    raw_text: str

    @classmethod
    def of(cls, block: CodeBlock) -> "BlockSummary":
        loc = block.locator
        return cls(
            block_id=block.block_id,
            corpus_id=block.corpus_id,
            kind=loc.kind,
            path=loc.path,
            start_line=loc.start_line,
            end_line=loc.end_line,
            url=loc.url,
            granularity=block.granularity,
            license=block.license,
            line_count=block.line_count,
            total_tokens=block.total_tokens,
            last_modified=block.last_modified,
            raw_text=block.raw_text,
        )

    def to_dict(self) -> dict:
        return {
            "block_id": self.block_id,
            "corpus_id": self.corpus_id,
            "kind": self.kind,
            "path": self.path,
            "start_line": self.start_line,
            "end_line": self.end_line,
            "url": self.url,
            "granularity": self.granularity,
            "license": self.license.id,
            "license_provenance": self.license.provenance,
            "line_count": self.line_count,
            "total_tokens": self.total_tokens,
            "last_modified": self.last_modified,
            "raw_text": self.raw_text,
        }

    @classmethod
    def from_dict(cls, rec: Mapping) -> "BlockSummary":
        return cls(
            block_id=rec["block_id"],
            corpus_id=rec["corpus_id"],
            kind=rec["kind"],
            path=rec["path"],
            start_line=int(rec["start_line"]),
            end_line=int(rec["end_line"]),
            url=rec.get("url"),
            granularity=rec["granularity"],
            license=LicenseTag(rec["license"], rec["license_provenance"]),
            line_count=int(rec["line_count"]),
            total_tokens=int(rec["total_tokens"]),
            last_modified=rec.get("last_modified"),
            raw_text=rec["raw_text"],
        )


@dataclass(frozen=True)
class ClonePair:
    """A detected (query block, corpus block) match."""

    query: BlockSummary
    corpus: BlockSummary
    overlap: int
    required: int
    similarity: float
    size_class: str
    verdict: str | None = None

    @property
    def key(self) -> tuple[str, str]:
        return (self.query.block_id, self.corpus.block_id)

    def to_record(self) -> dict:
        """Minimal JSON-lines record (the clone-pair output contract)."""
        return {
            "query_block_id": self.query.block_id,
            "corpus_block_id": self.corpus.block_id,
            "overlap": self.overlap,
            "required": self.required,
            "similarity": self.similarity,
            "size_class": self.size_class,
            "verdict": self.verdict,
        }

    def to_dict(self) -> dict:
        return {
            "query": self.query.to_dict(),
            "corpus": self.corpus.to_dict(),
            "overlap": self.overlap,
            "required": self.required,
            "similarity": self.similarity,
            "size_class": self.size_class,
            "verdict": self.verdict,
        }

    @classmethod
    def from_dict(cls, rec: Mapping) -> "ClonePair":
        return cls(
            query=BlockSummary.from_dict(rec["query"]),
            corpus=BlockSummary.from_dict(rec["corpus"]),
            overlap=int(rec["overlap"]),
            required=int(rec["required"]),
            similarity=float(rec["similarity"]),
            size_class=rec["size_class"],
            verdict=rec.get("verdict"),
        )


@dataclass
class Corpus:
    """An immutable set of code blocks plus a deterministic content hash."""

    corpus_id: str
    blocks: list[CodeBlock]
    content_hash: str
    created_at: float
    ingest_log: "IngestLog | None" = field(default=None, compare=False, repr=False)

    @classmethod
    def from_blocks(
        cls,
        corpus_id: str,
        blocks: list[CodeBlock],
        created_at: float | None = None,
        ingest_log: "IngestLog | None" = None,
    ) -> "Corpus":
        return cls(
            corpus_id=corpus_id,
            blocks=list(blocks),
            content_hash=content_hash(blocks),
            created_at=created_at if created_at is not None else now(),
            ingest_log=ingest_log,
        )


@dataclass
class IngestLog:
    """Counters and notes collected while building a corpus."""

    files_seen: int = 0
    files_skipped: list[tuple[str, str]] = field(default_factory=list)  # (path, reason)
    rows_seen: int = 0
    rows_skipped: int = 0
    degraded: list[str] = field(default_factory=list)  # sources parsed file-level only

    def skip(self, path: str, reason: str) -> None:
        self.files_skipped.append((path, reason))

    def to_dict(self) -> dict:
        return {
            "files_seen": self.files_seen,
            "files_skipped": [list(t) for t in self.files_skipped],
            "rows_seen": self.rows_seen,
            "rows_skipped": self.rows_skipped,
            "degraded": list(self.degraded),
        }


def _hashable_record(block: CodeBlock) -> dict:
    # Structural content only: no ids, timestamps, or corpus name, so the
    # same tree ingested from a directory or an archive hashes identically.
    loc = block.locator
    rec = {
        "kind": loc.kind,
        "path": loc.path,
        "start_line": loc.start_line,
        "end_line": loc.end_line,
        "url": loc.url,
        "granularity": block.granularity,
        "tokens": dict(block.tokens.entries),
        "total_tokens": block.total_tokens,
        "line_count": block.line_count,
        "license": block.license.id,
        "license_provenance": block.license.provenance,
        "raw_text": block.raw_text,
    }
    if block.context_text is not None:
        rec["context_text"] = block.context_text
    return rec


def content_hash(blocks: Iterable[CodeBlock]) -> str:
    h = hashlib.sha256()
    for block in blocks:
        h.update(canonical_json(_hashable_record(block)).encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def block_record(block: CodeBlock) -> dict:
    loc = block.locator
    rec = {
        "block_id": block.block_id,
        "corpus_id": block.corpus_id,
        "kind": loc.kind,
        "path": loc.path,
        "start_line": loc.start_line,
        "end_line": loc.end_line,
        "url": loc.url,
        "granularity": block.granularity,
        "tokens": dict(block.tokens.entries),
        "total_tokens": block.total_tokens,
        "line_count": block.line_count,
        "last_modified": block.last_modified,
        "license": block.license.id,
        "license_provenance": block.license.provenance,
        "raw_text": block.raw_text,
    }
    if block.context_text is not None:
        rec["context_text"] = block.context_text
    return rec


def parse_block_record(rec: Mapping) -> CodeBlock:
    try:
        tokens = TokenBag.from_entries(rec["tokens"])
        total = int(rec["total_tokens"])
        if tokens.total != total:
            raise CorpusFormatError(
                f"block {rec.get('block_id')!r}: total_tokens={total} "
                f"but token frequencies sum to {tokens.total}"
            )
        locator = SourceLocator(
            kind=rec["kind"],
            path=rec["path"],
            start_line=int(rec["start_line"]),
            end_line=int(rec["end_line"]),
            url=rec.get("url"),
        )
        return CodeBlock(
            block_id=rec["block_id"],
            corpus_id=rec["corpus_id"],
            locator=locator,
            granularity=rec["granularity"],
            raw_text=rec["raw_text"],
            tokens=tokens,
            line_count=int(rec["line_count"]),
            last_modified=rec.get("last_modified"),
            license=LicenseTag(rec["license"], rec["license_provenance"]),
            context_text=rec.get("context_text"),
        )
    except CorpusFormatError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise CorpusFormatError(f"bad block record: {exc}") from exc


def blocks_to_jsonl(blocks: Iterable[CodeBlock]) -> str:
    return "".join(
        json.dumps(block_record(b), ensure_ascii=False) + "\n" for b in blocks
    )


def blocks_from_jsonl(text: str) -> list[CodeBlock]:
    blocks = []
    seen: set[tuple[str, str]] = set()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusFormatError(f"line {lineno}: invalid JSON: {exc}") from exc
        block = parse_block_record(rec)
        ident = (block.corpus_id, block.block_id)
        if ident in seen:
            raise CorpusFormatError(f"line {lineno}: duplicate block id {ident}")
        seen.add(ident)
        blocks.append(block)
    return blocks


def write_corpus(corpus: Corpus, path: str | Path) -> None:
    Path(path).write_text(blocks_to_jsonl(corpus.blocks), encoding="utf-8")


def read_corpus(path: str | Path, corpus_id: str | None = None) -> Corpus:
    text = Path(path).read_text(encoding="utf-8")
    return corpus_from_jsonl(text, corpus_id=corpus_id)


def corpus_from_jsonl(text: str, corpus_id: str | None = None) -> Corpus:
    blocks = blocks_from_jsonl(text)
    if corpus_id is None:
        corpus_id = blocks[0].corpus_id if blocks else "empty"
    return Corpus.from_blocks(corpus_id, blocks)
