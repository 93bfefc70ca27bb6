"""Clone detection: multiset token overlap over a prefix-filtered inverted index.

Two blocks are clones when their bags share at least ``ceil(theta * max(|A|,
|B|))`` token occurrences (per-token minimum frequencies). The index stores,
for each corpus block of size t, only its first ``t - ceil(theta*t) + 1``
token occurrences in global rarity order; any pair meeting the threshold is
guaranteed to collide on at least one indexed token, so prefix lookups prune
candidates without changing the result set. Candidates are always verified
exactly.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .licensing.matrix import CompatibilityMatrix, classify_pair
from .model import (
    BlockSummary,
    ClonePair,
    CodeBlock,
    ConfigMismatchError,
    Corpus,
    TokenBag,
)

SIZE_SMALL = "small"
SIZE_MEDIUM = "medium"
SIZE_LARGE = "large"


@dataclass(frozen=True)
class DetectionConfig:
    theta: float = 0.8
    min_tokens: int = 23
    exclude_self_pairs: bool = True
    # "max" is the strict symmetric reading of the threshold; "query" divides
    # by the query block's size only (escape hatch; disables prefix pruning).
    denominator: str = "max"
    workers: int = 1

    def __post_init__(self):
        if not (0 < self.theta <= 1):
            raise ValueError(f"theta must be in (0, 1], got {self.theta}")
        if self.min_tokens < 1:
            raise ValueError("min_tokens must be >= 1")
        if self.denominator not in ("max", "query"):
            raise ValueError(f"bad denominator {self.denominator!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "min_tokens": self.min_tokens,
            "exclude_self_pairs": self.exclude_self_pairs,
            "denominator": self.denominator,
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "DetectionConfig":
        return cls(
            theta=float(rec.get("theta", 0.8)),
            min_tokens=int(rec.get("min_tokens", 23)),
            exclude_self_pairs=bool(rec.get("exclude_self_pairs", True)),
            denominator=rec.get("denominator", "max"),
            workers=int(rec.get("workers", 1)),
        )


def scaled_ceil(theta: float, size: int) -> int:
    """ceil(theta * size) in exact decimal arithmetic (0.7*10 is 7, never 8)."""
    return math.ceil(Fraction(str(theta)) * size)


def prefix_length(theta: float, size: int) -> int:
    return size - scaled_ceil(theta, size) + 1


def overlap(a: TokenBag, b: TokenBag) -> int:
    """Sum over shared tokens of the smaller frequency."""
    if len(b.entries) < len(a.entries):
        a, b = b, a
    return sum(
        min(freq, b.entries[tok]) for tok, freq in a.entries.items() if tok in b.entries
    )


def required_overlap(a_total: int, b_total: int, theta: float, denominator: str = "max") -> int:
    base = a_total if denominator == "query" else max(a_total, b_total)
    return scaled_ceil(theta, base)


def is_clone(a: TokenBag, b: TokenBag, theta: float) -> bool:
    return overlap(a, b) >= required_overlap(a.total, b.total, theta)


def size_class(line_count: int) -> str:
    """1-10 lines: small; 11-20: medium; above 20: large."""
    if line_count < 1:
        raise ValueError("line_count must be >= 1")
    if line_count <= 10:
        return SIZE_SMALL
    if line_count <= 20:
        return SIZE_MEDIUM
    return SIZE_LARGE


@dataclass
class InvertedIndex:
    """Token postings over a corpus plus the global token rarity order."""

    corpus_id: str
    corpus_hash: str
    theta: float
    min_tokens: int
    token_order: dict[str, int]  # token -> rank, rarest first
    postings: dict[str, list[tuple[str, int]]]  # token -> [(block_id, freq)]
    block_sizes: dict[str, int]
    blocks: dict[str, CodeBlock] = field(repr=False)

    @property
    def block_count(self) -> int:
        return len(self.block_sizes)


def _ordered_occurrences(bag: TokenBag, order: dict[str, int]) -> list[tuple[str, int]]:
    """Distinct tokens with frequencies, sorted rarest-first; tokens missing
    from the order sort after all known ones."""
    unknown = len(order)
    return sorted(
        bag.entries.items(),
        key=lambda item: (order.get(item[0], unknown), item[0]),
    )


def build_index(corpus: Corpus, config: DetectionConfig) -> InvertedIndex:
    """Index the first ``t - ceil(theta*t) + 1`` occurrences of each block."""
    eligible = [b for b in corpus.blocks if b.total_tokens >= config.min_tokens]

    document_freq: dict[str, int] = {}
    for block in eligible:
        for token in block.tokens.entries:
            document_freq[token] = document_freq.get(token, 0) + 1
    token_order = {
        token: rank
        for rank, token in enumerate(
            sorted(document_freq, key=lambda t: (document_freq[t], t))
        )
    }

    postings: dict[str, list[tuple[str, int]]] = {}
    block_sizes: dict[str, int] = {}
    blocks: dict[str, CodeBlock] = {}
    for block in eligible:
        total = block.total_tokens
        block_sizes[block.block_id] = total
        blocks[block.block_id] = block
        remaining = prefix_length(config.theta, total)
        for token, freq in _ordered_occurrences(block.tokens, token_order):
            postings.setdefault(token, []).append((block.block_id, freq))
            remaining -= freq
            if remaining <= 0:
                break

    return InvertedIndex(
        corpus_id=corpus.corpus_id,
        corpus_hash=corpus.content_hash,
        theta=config.theta,
        min_tokens=config.min_tokens,
        token_order=token_order,
        postings=postings,
        block_sizes=block_sizes,
        blocks=blocks,
    )


def _candidate_ids(query: CodeBlock, index: InvertedIndex, config: DetectionConfig) -> list[str]:
    if config.denominator != "max":
        # Corpus-side prefixes no longer bound the query-relative threshold,
        # so pruning would be unsound; verify everything.
        return sorted(index.block_sizes)
    seen: set[str] = set()
    remaining = prefix_length(config.theta, query.total_tokens)
    for token, freq in _ordered_occurrences(query.tokens, index.token_order):
        for block_id, _ in index.postings.get(token, ()):
            seen.add(block_id)
        remaining -= freq
        if remaining <= 0:
            break
    return sorted(seen)


def _pair(query: CodeBlock, corpus_block: CodeBlock, ov: int, req: int,
          matrix: CompatibilityMatrix | None) -> ClonePair:
    verdict = None
    if matrix is not None:
        verdict = classify_pair(query.license, corpus_block.license, matrix)
    max_total = max(query.total_tokens, corpus_block.total_tokens)
    return ClonePair(
        query=BlockSummary.of(query),
        corpus=BlockSummary.of(corpus_block),
        overlap=ov,
        required=req,
        similarity=ov / max_total,
        size_class=size_class(max(query.line_count, corpus_block.line_count)),
        verdict=verdict,
    )


def detect_clones(
    query_blocks: Sequence[CodeBlock],
    index: InvertedIndex,
    config: DetectionConfig,
    matrix: CompatibilityMatrix | None = None,
) -> list[ClonePair]:
    """All (query, corpus) pairs meeting the overlap threshold.

    Results are ordered by query position, then ascending corpus block id.
    The outcome is defined by exhaustive pairwise comparison; the index only
    prunes candidates. Raises :class:`ConfigMismatchError` when the config
    does not match what the index was built with.
    """
    if config.theta != index.theta:
        raise ConfigMismatchError(
            f"index built with theta={index.theta}, query uses theta={config.theta}"
        )
    if config.min_tokens != index.min_tokens:
        raise ConfigMismatchError(
            f"index built with min_tokens={index.min_tokens}, "
            f"query uses min_tokens={config.min_tokens}"
        )

    def detect_one(query: CodeBlock) -> list[ClonePair]:
        if query.total_tokens < config.min_tokens:
            return []
        out = []
        qt = query.total_tokens
        for block_id in _candidate_ids(query, index, config):
            corpus_block = index.blocks[block_id]
            if (
                config.exclude_self_pairs
                and query.block_id == corpus_block.block_id
                and query.corpus_id == corpus_block.corpus_id
            ):
                continue
            ct = corpus_block.total_tokens
            req = required_overlap(qt, ct, config.theta, config.denominator)
            if min(qt, ct) < req:
                continue
            ov = overlap(query.tokens, corpus_block.tokens)
            if ov >= req:
                out.append(_pair(query, corpus_block, ov, req, matrix))
        return out

    if config.workers > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            per_query = list(pool.map(detect_one, query_blocks))
    else:
        per_query = [detect_one(q) for q in query_blocks]

    return [pair for pairs in per_query for pair in pairs]
