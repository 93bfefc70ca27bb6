"""Persistent index store: amortizes parsing and index builds across queries.

Entries are keyed by (corpus content hash, config fingerprint) and laid out
as one directory per corpus hash with one binary file per fingerprint. Files
are written to a temp name and atomically renamed, so a partially written
entry is never served; anything unreadable is treated as a miss and evicted.
"""

from __future__ import annotations

import gzip
import json
import logging
import shutil
import struct
from dataclasses import dataclass, field
from pathlib import Path

from filelock import FileLock

from ._util import now, sha256_hex
from .engine import DetectionConfig, InvertedIndex, build_index
from .model import Corpus, blocks_from_jsonl, blocks_to_jsonl
from .tokenizer import TOKENIZER_VERSION

logger = logging.getLogger(__name__)

_MAGIC = b"CAIDX1\n"
_LEN = struct.Struct(">Q")
_POST = struct.Struct(">II")


def config_fingerprint(config: DetectionConfig) -> str:
    key = f"theta={config.theta};min_tokens={config.min_tokens};tok={TOKENIZER_VERSION}"
    return sha256_hex(key)[:24]


@dataclass
class CacheMetrics:
    hits: int = 0
    misses: int = 0
    builds: int = 0
    evictions: int = 0
    corrupt_entries: int = 0

    def to_dict(self) -> dict:
        return {
            "hits": self.hits,
            "misses": self.misses,
            "builds": self.builds,
            "evictions": self.evictions,
            "corrupt_entries": self.corrupt_entries,
        }


@dataclass
class CacheStore:
    """A directory of cached (corpus, index) entries with LRU bounding."""

    root: Path
    max_entries: int = 8
    metrics: CacheMetrics = field(default_factory=CacheMetrics)

    def __post_init__(self):
        self.root = Path(self.root)
        self.root.mkdir(parents=True, exist_ok=True)

    def entry_path(self, corpus_hash: str, fingerprint: str) -> Path:
        return self.root / corpus_hash / f"{fingerprint}.bin"

    def _lock(self, corpus_hash: str) -> FileLock:
        lock_dir = self.root / ".locks"
        lock_dir.mkdir(exist_ok=True)
        return FileLock(str(lock_dir / f"{corpus_hash}.lock"))

    def entry_count(self) -> int:
        return sum(1 for _ in self.root.glob("*/*.bin"))

    def _prune_lru(self) -> None:
        entries = sorted(self.root.glob("*/*.bin"), key=lambda p: p.stat().st_mtime)
        while len(entries) > self.max_entries:
            victim = entries.pop(0)
            victim.unlink(missing_ok=True)
            if not any(victim.parent.iterdir()):
                victim.parent.rmdir()
            self.metrics.evictions += 1
            logger.info("evicted LRU cache entry %s", victim)


def _pack_entry(corpus: Corpus, index: InvertedIndex, fingerprint: str,
                config: DetectionConfig) -> bytes:
    token_list = sorted(index.token_order, key=index.token_order.get)
    block_ids = list(index.block_sizes)
    block_pos = {bid: i for i, bid in enumerate(block_ids)}

    header = {
        "format_version": 1,
        "corpus_id": corpus.corpus_id,
        "corpus_hash": corpus.content_hash,
        "fingerprint": fingerprint,
        "created_at": now(),
        "config": {
            "theta": config.theta,
            "min_tokens": config.min_tokens,
            "tokenizer_version": TOKENIZER_VERSION,
        },
        "tokens": token_list,
        "block_ids": block_ids,
        "block_sizes": [index.block_sizes[bid] for bid in block_ids],
    }
    header_bytes = json.dumps(header, ensure_ascii=False).encode("utf-8")
    corpus_bytes = gzip.compress(blocks_to_jsonl(corpus.blocks).encode("utf-8"), 5)

    postings_parts = []
    for token in token_list:
        plist = index.postings.get(token, [])
        postings_parts.append(_LEN.pack(len(plist)))
        for block_id, freq in plist:
            postings_parts.append(_POST.pack(block_pos[block_id], freq))
    postings_bytes = b"".join(postings_parts)

    out = [_MAGIC]
    for section in (header_bytes, corpus_bytes, postings_bytes):
        out.append(_LEN.pack(len(section)))
        out.append(section)
    return b"".join(out)


def _unpack_entry(data: bytes) -> tuple[Corpus, InvertedIndex, dict]:
    if not data.startswith(_MAGIC):
        raise ValueError("bad magic")
    pos = len(_MAGIC)
    sections = []
    for _ in range(3):
        (length,) = _LEN.unpack_from(data, pos)
        pos += _LEN.size
        sections.append(data[pos : pos + length])
        if len(sections[-1]) != length:
            raise ValueError("short section")
        pos += length

    header = json.loads(sections[0].decode("utf-8"))
    blocks = blocks_from_jsonl(gzip.decompress(sections[1]).decode("utf-8"))
    # The hash was computed from these same blocks at pack time; re-parsing
    # already validates structure, so trust it instead of rehashing on load.
    corpus = Corpus(
        corpus_id=header["corpus_id"],
        blocks=blocks,
        content_hash=header["corpus_hash"],
        created_at=header["created_at"],
    )

    token_list = header["tokens"]
    block_ids = header["block_ids"]
    postings: dict[str, list[tuple[str, int]]] = {}
    raw = sections[2]
    pos = 0
    for token in token_list:
        (count,) = _LEN.unpack_from(raw, pos)
        pos += _LEN.size
        plist = []
        for _ in range(count):
            block_pos, freq = _POST.unpack_from(raw, pos)
            pos += _POST.size
            plist.append((block_ids[block_pos], freq))
        if plist:
            postings[token] = plist

    blocks_by_id = {b.block_id: b for b in corpus.blocks}
    index = InvertedIndex(
        corpus_id=header["corpus_id"],
        corpus_hash=header["corpus_hash"],
        theta=header["config"]["theta"],
        min_tokens=header["config"]["min_tokens"],
        token_order={t: i for i, t in enumerate(token_list)},
        postings=postings,
        block_sizes=dict(zip(block_ids, header["block_sizes"])),
        blocks={bid: blocks_by_id[bid] for bid in block_ids},
    )
    return corpus, index, header


def load_entry(
    store: CacheStore, corpus_hash: str, config: DetectionConfig
) -> tuple[Corpus, InvertedIndex] | None:
    """Load a committed entry, or None. Corrupt entries are evicted."""
    fingerprint = config_fingerprint(config)
    path = store.entry_path(corpus_hash, fingerprint)
    if not path.exists():
        return None
    try:
        corpus, index, header = _unpack_entry(path.read_bytes())
        if header["fingerprint"] != fingerprint:
            raise ValueError("fingerprint mismatch")
    except Exception as exc:  # any unreadable entry is a miss
        store.metrics.corrupt_entries += 1
        logger.warning("corrupt cache entry %s (%s); evicting", path, exc)
        path.unlink(missing_ok=True)
        return None
    path.touch()  # LRU recency
    return corpus, index


def get_or_build(
    corpus: Corpus, config: DetectionConfig, store: CacheStore
) -> InvertedIndex:
    """Return the cached index for (corpus, config), building at most once."""
    fingerprint = config_fingerprint(config)
    with store._lock(corpus.content_hash):
        cached = load_entry(store, corpus.content_hash, config)
        if cached is not None:
            store.metrics.hits += 1
            return cached[1]

        store.metrics.misses += 1
        index = build_index(corpus, config)
        store.metrics.builds += 1

        path = store.entry_path(corpus.content_hash, fingerprint)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        tmp.write_bytes(_pack_entry(corpus, index, fingerprint, config))
        tmp.replace(path)
        store._prune_lru()
        return index


def evict(store: CacheStore, corpus_hash: str) -> None:
    """Remove every entry for *corpus_hash*; no-op when absent."""
    entry_dir = store.root / corpus_hash
    if entry_dir.exists():
        shutil.rmtree(entry_dir)
        store.metrics.evictions += 1
