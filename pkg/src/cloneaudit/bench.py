"""Cold/warm timing harness for the ingest -> index -> query pipeline.

Cold runs pay for everything (parse or ingest, index build, query) against an
empty store; warm runs reuse the committed cache entry and only pay for load
plus query. Times are wall-clock, averaged over N runs.
"""

from __future__ import annotations

import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path

from .cache import CacheStore, get_or_build, load_entry
from .engine import DetectionConfig, detect_clones
from .ingest.directory import IngestConfig, ingest_directory
from .model import Corpus, read_corpus


def load_source(path: str | Path, ingest_config: IngestConfig) -> Corpus:
    """A corpus file parses directly; anything else goes through ingest."""
    path = Path(path)
    if path.is_file() and path.suffix in (".jsonl", ".json"):
        return read_corpus(path)
    return ingest_directory(path, ingest_config)


@dataclass
class BenchResult:
    runs: int
    cold_times: list[float] = field(default_factory=list)
    warm_times: list[float] = field(default_factory=list)
    pair_count: int = 0
    cache_hits: int = 0

    @property
    def cold_mean(self) -> float:
        return sum(self.cold_times) / len(self.cold_times)

    @property
    def warm_mean(self) -> float:
        return sum(self.warm_times) / len(self.warm_times)

    @property
    def speedup(self) -> float:
        return self.cold_mean / self.warm_mean if self.warm_mean > 0 else float("inf")

    def summary_lines(self) -> list[str]:
        return [
            f"runs:        {self.runs}",
            f"cold mean:   {self.cold_mean:.4f} s  {[f'{t:.4f}' for t in self.cold_times]}",
            f"warm mean:   {self.warm_mean:.4f} s  {[f'{t:.4f}' for t in self.warm_times]}",
            f"speedup:     {self.speedup:.2f}x (warm vs cold)",
            f"cache hits:  {self.cache_hits}",
            f"pairs:       {self.pair_count}",
        ]


def run_bench(
    source: str | Path,
    query_path: str | Path,
    detection: DetectionConfig,
    ingest_config: IngestConfig,
    store_root: str | Path,
    runs: int = 5,
) -> BenchResult:
    if runs < 1:
        raise ValueError("runs must be >= 1")
    store_root = Path(store_root)
    query_corpus = read_corpus(query_path)
    result = BenchResult(runs=runs)

    # Cold: a fresh store every run, so ingest + build are always paid.
    for i in range(runs):
        cold_dir = store_root / f"cold-{i}"
        if cold_dir.exists():
            shutil.rmtree(cold_dir)
        store = CacheStore(cold_dir)
        start = time.perf_counter()
        corpus = load_source(source, ingest_config)
        index = get_or_build(corpus, detection, store)
        pairs = detect_clones(query_corpus.blocks, index, detection)
        result.cold_times.append(time.perf_counter() - start)
        result.pair_count = len(pairs)
    corpus_hash = corpus.content_hash

    # Warm: one shared store primed by a build outside the timed region.
    warm_store = CacheStore(store_root / "warm")
    get_or_build(load_source(source, ingest_config), detection, warm_store)
    for _ in range(runs):
        start = time.perf_counter()
        entry = load_entry(warm_store, corpus_hash, detection)
        if entry is None:
            raise RuntimeError("warm cache entry vanished mid-benchmark")
        _, index = entry
        detect_clones(query_corpus.blocks, index, detection)
        result.warm_times.append(time.perf_counter() - start)
        result.cache_hits += 1

    return result
