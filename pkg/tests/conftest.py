from __future__ import annotations

import math
import random
import re
import sys
from collections import Counter
from fractions import Fraction

import pytest

from cloneaudit.model import CodeBlock, LicenseTag, SourceLocator, TokenBag


def make_block(
    block_id: str,
    entries: dict[str, int],
    corpus_id: str = "c",
    line_count: int = 5,
    path: str | None = None,
    license: LicenseTag | None = None,
    last_modified: float | None = None,
) -> CodeBlock:
    """Synthetic block with an explicit token bag (engine tests bypass the
    tokenizer on purpose)."""
    raw = " ".join(tok for tok, n in sorted(entries.items()) for _ in range(n))
    return CodeBlock(
        block_id=block_id,
        corpus_id=corpus_id,
        locator=SourceLocator(
            kind="filesystem",
            path=path or f"{block_id}.py",
            start_line=1,
            end_line=line_count,
        ),
        granularity="file",
        raw_text=raw,
        tokens=TokenBag.from_entries(entries),
        line_count=line_count,
        last_modified=last_modified,
        license=license or LicenseTag("NONE", "header"),
    )


def random_bag(rng: random.Random, total: int, vocab: list[str]) -> dict[str, int]:
    """Random multiset with the exact requested total."""
    distinct = rng.randint(1, min(len(vocab), max(1, total // 2)))
    chosen = rng.sample(vocab, distinct)
    counts = {tok: 1 for tok in chosen}
    for _ in range(total - distinct):
        counts[rng.choice(chosen)] += 1
    return counts


def mutate_bag(rng: random.Random, entries: dict[str, int], vocab: list[str],
               changes: int) -> dict[str, int]:
    """Shift a few occurrences to other tokens, preserving the total."""
    out = Counter(entries)
    for _ in range(changes):
        tok = rng.choice([t for t, n in out.items() if n > 0])
        out[tok] -= 1
        if out[tok] == 0:
            del out[tok]
        out[rng.choice(vocab)] += 1
    return dict(out)


def random_corpus(
    rng: random.Random,
    n_blocks: int,
    corpus_id: str = "c",
    vocab_size: int = 40,
    total_range: tuple[int, int] = (23, 200),
    clone_fraction: float = 0.4,
) -> list[CodeBlock]:
    """Blocks with planted near-duplicates so clone pairs actually occur."""
    vocab = [f"tok{i:03d}" for i in range(vocab_size)]
    blocks: list[CodeBlock] = []
    for i in range(n_blocks):
        if blocks and rng.random() < clone_fraction:
            base = rng.choice(blocks)
            entries = mutate_bag(rng, dict(base.tokens.entries), vocab,
                                 rng.randint(0, 4))
        else:
            entries = random_bag(rng, rng.randint(*total_range), vocab)
        blocks.append(
            make_block(f"{corpus_id}-b{i:04d}", entries, corpus_id=corpus_id,
                       line_count=rng.randint(1, 30))
        )
    return blocks


# --- independent oracle: exhaustive pairwise comparison -----------------------

def oracle_overlap(a: dict[str, int], b: dict[str, int]) -> int:
    return sum((Counter(a) & Counter(b)).values())


def oracle_required(theta: float, size: int) -> int:
    return math.ceil(Fraction(str(theta)) * size)


def brute_force_pairs(
    query_blocks: list[CodeBlock],
    corpus_blocks: list[CodeBlock],
    theta: float,
    min_tokens: int,
    exclude_self_pairs: bool = True,
) -> set[tuple[str, str]]:
    found = set()
    for q in query_blocks:
        if q.total_tokens < min_tokens:
            continue
        for c in corpus_blocks:
            if c.total_tokens < min_tokens:
                continue
            if (
                exclude_self_pairs
                and q.block_id == c.block_id
                and q.corpus_id == c.corpus_id
            ):
                continue
            needed = oracle_required(theta, max(q.total_tokens, c.total_tokens))
            if oracle_overlap(dict(q.tokens.entries), dict(c.tokens.entries)) >= needed:
                found.add((q.block_id, c.block_id))
    return found


@pytest.fixture
def fixed_now(monkeypatch):
    monkeypatch.setenv("CLONEAUDIT_FIXED_NOW", "1700000000")
    return 1700000000.0


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    """Guarantee one FAIL line per failed acceptance criterion (passing
    criteria print their own detailed PASS line)."""
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or not report.failed:
        return
    match = re.match(r"test_criterion_(\d+)_(\w+)", item.name)
    if match and "test_acceptance" in item.nodeid:
        number, slug = match.groups()
        print(
            f"ACCEPTANCE {number} FAIL: {slug.replace('_', ' ')}",
            file=sys.stderr,
        )
