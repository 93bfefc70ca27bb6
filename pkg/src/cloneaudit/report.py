"""Clone reports: license statistics, sampling, attribution scan, rendering.

The stats table follows the classic license-distribution layout: a total row,
one row per conflicting license id, then lack-of-licensing, unknown, and
compatible rows, each with a count and a percentage of all pairs.
"""

from __future__ import annotations

import html
import json
import random
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Sequence

from ._util import now, short_id
from .licensing.matrix import (
    VERDICT_COMPATIBLE,
    VERDICT_CONFLICT,
    VERDICT_LACK,
    VERDICT_UNKNOWN,
)
from .model import ClonePair, CloneAuditError, CodeBlock

SO_LICENSE_ID = "CC-BY-SA-3.0"


class ReportNotFoundError(CloneAuditError):
    pass


@dataclass(frozen=True)
class LicenseStats:
    total_pairs: int
    compatible: int
    lack_of_licensing: int
    unknown: int
    conflicts: dict[str, int]  # conflicting license id -> pair count

    def percent(self, count: int) -> float:
        if self.total_pairs == 0:
            return 0.0
        return round(100.0 * count / self.total_pairs, 2)

    @property
    def conflict_total(self) -> int:
        return sum(self.conflicts.values())

    def to_dict(self) -> dict:
        return {
            "total_pairs": self.total_pairs,
            "compatible": {"count": self.compatible, "percent": self.percent(self.compatible)},
            "lack_of_licensing": {
                "count": self.lack_of_licensing,
                "percent": self.percent(self.lack_of_licensing),
            },
            "unknown": {"count": self.unknown, "percent": self.percent(self.unknown)},
            "conflicts": {
                lid: {"count": n, "percent": self.percent(n)}
                for lid, n in sorted(self.conflicts.items())
            },
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "LicenseStats":
        return cls(
            total_pairs=int(rec["total_pairs"]),
            compatible=int(rec["compatible"]["count"]),
            lack_of_licensing=int(rec["lack_of_licensing"]["count"]),
            unknown=int(rec["unknown"]["count"]),
            conflicts={k: int(v["count"]) for k, v in rec["conflicts"].items()},
        )

    def rows(self) -> list[tuple[str, str, str]]:
        """(label, pairs, percent) rows mirroring the license table layout."""
        out = [("Total clones", str(self.total_pairs), "-")]
        for lid, n in sorted(self.conflicts.items()):
            out.append((f"{lid} conflicts", str(n), f"{self.percent(n):.2f}%"))
        out.append(
            ("Lack of licensing", str(self.lack_of_licensing),
             f"{self.percent(self.lack_of_licensing):.2f}%")
        )
        out.append(("Unknown license", str(self.unknown), f"{self.percent(self.unknown):.2f}%"))
        out.append(("Compatible", str(self.compatible), f"{self.percent(self.compatible):.2f}%"))
        return out


def conflict_license_id(pair: ClonePair) -> str:
    """Which side's license a conflict is attributed to.

    Prefer the side that is not covered by a corpus-wide default; failing
    that, the side that is not the StackOverflow license; failing that, the
    corpus side.
    """
    q, c = pair.query.license, pair.corpus.license
    q_default = q.provenance == "corpus-default"
    c_default = c.provenance == "corpus-default"
    if q_default != c_default:
        return q.id if c_default else c.id
    if (q.id == SO_LICENSE_ID) != (c.id == SO_LICENSE_ID):
        return c.id if q.id == SO_LICENSE_ID else q.id
    return c.id


def aggregate_license_stats(pairs: Sequence[ClonePair]) -> LicenseStats:
    compatible = lack = unknown = 0
    conflicts: dict[str, int] = {}
    for pair in pairs:
        verdict = pair.verdict or VERDICT_UNKNOWN
        if verdict == VERDICT_COMPATIBLE:
            compatible += 1
        elif verdict == VERDICT_LACK:
            lack += 1
        elif verdict == VERDICT_CONFLICT:
            lid = conflict_license_id(pair)
            conflicts[lid] = conflicts.get(lid, 0) + 1
        else:
            unknown += 1
    return LicenseStats(
        total_pairs=len(pairs),
        compatible=compatible,
        lack_of_licensing=lack,
        unknown=unknown,
        conflicts=conflicts,
    )


def sample_pairs(
    pairs: Sequence[ClonePair],
    n: int,
    size_class: str | None = None,
    seed: int = 0,
) -> tuple[list[ClonePair], bool]:
    """Uniform sample without replacement from the (filtered) pairs.

    Deterministic for a fixed seed. When the filtered population is smaller
    than *n* the entire population is returned, flagged short.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    population = [p for p in pairs if size_class is None or p.size_class == size_class]
    if len(population) < n:
        return list(population), True
    rng = random.Random(seed)
    return rng.sample(population, n), False


@dataclass(frozen=True)
class AttributionMatch:
    block_id: str
    pattern: str
    snippet: str

    def to_dict(self) -> dict:
        return {"block_id": self.block_id, "pattern": self.pattern, "snippet": self.snippet}


def scan_attribution(
    blocks: Iterable[CodeBlock], patterns: Sequence[str], context_chars: int = 80
) -> list[AttributionMatch]:
    """Case-insensitive regex scan over post/raw text, with +-80 chars context."""
    if not patterns:
        raise ValueError("patterns must be non-empty")
    compiled = []
    for pattern in patterns:
        try:
            compiled.append((pattern, re.compile(pattern, re.IGNORECASE)))
        except re.error:
            compiled.append((pattern, re.compile(re.escape(pattern), re.IGNORECASE)))

    matches = []
    for block in blocks:
        text = block.context_text if block.context_text is not None else block.raw_text
        for pattern, regex in compiled:
            for m in regex.finditer(text):
                start = max(0, m.start() - context_chars)
                end = min(len(text), m.end() + context_chars)
                matches.append(AttributionMatch(block.block_id, pattern, text[start:end]))
    return matches


@dataclass
class CloneReport:
    report_id: str
    query_set_id: str
    created_at: float
    config: dict
    apprentices: list[dict]
    pairs: list[ClonePair]
    stats: LicenseStats
    partial: bool = False
    failures: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "report_id": self.report_id,
            "query_set_id": self.query_set_id,
            "created_at": self.created_at,
            "config": self.config,
            "apprentices": self.apprentices,
            "partial": self.partial,
            "failures": self.failures,
            "pairs": [p.to_dict() for p in self.pairs],
            "stats": self.stats.to_dict(),
        }

    @classmethod
    def from_dict(cls, rec: dict) -> "CloneReport":
        return cls(
            report_id=rec["report_id"],
            query_set_id=rec["query_set_id"],
            created_at=rec["created_at"],
            config=rec["config"],
            apprentices=rec["apprentices"],
            pairs=[ClonePair.from_dict(p) for p in rec["pairs"]],
            stats=LicenseStats.from_dict(rec["stats"]),
            partial=rec.get("partial", False),
            failures=rec.get("failures", []),
        )


def build_report(
    query_set_id: str,
    pairs: Sequence[ClonePair],
    config: dict,
    apprentices: list[dict],
    partial: bool = False,
    failures: list[str] | None = None,
    created_at: float | None = None,
) -> CloneReport:
    """Merge pairs into a report: dedup on (query, corpus) ids, sort, aggregate."""
    deduped: dict[tuple[str, str], ClonePair] = {}
    for pair in pairs:
        deduped.setdefault(pair.key, pair)
    ordered = [deduped[k] for k in sorted(deduped)]
    report_id = "r" + short_id(
        query_set_id,
        json.dumps(config, sort_keys=True),
        *(f"{q}:{c}" for q, c in sorted(deduped)),
        *(a.get("corpus_hash", "") for a in apprentices),
    )
    return CloneReport(
        report_id=report_id,
        query_set_id=query_set_id,
        created_at=created_at if created_at is not None else now(),
        config=dict(config),
        apprentices=list(apprentices),
        pairs=ordered,
        stats=aggregate_license_stats(ordered),
        partial=partial,
        failures=list(failures or []),
    )


def render_report(report: CloneReport, format: str = "html") -> str:
    if format == "json":
        return json.dumps(report.to_dict(), indent=2, sort_keys=True, ensure_ascii=False)
    if format == "html":
        return render_html(report)
    raise ValueError(f"unknown report format {format!r}")


def _ts(value: float | None) -> str:
    if value is None:
        return "-"
    return datetime.fromtimestamp(value, timezone.utc).strftime("%Y-%m-%d %H:%M:%SZ")


def _esc(value) -> str:
    return html.escape(str(value), quote=True)


def _locator_cell(side) -> str:
    label = f"{side.path}:{side.start_line}-{side.end_line}"
    if side.url:
        return f'<a href="{_esc(side.url)}">{_esc(label)}</a>'
    return _esc(label)


_CSS = """
body { font-family: sans-serif; margin: 1.5em; }
table.stats { border-collapse: collapse; margin-bottom: 1.5em; }
table.stats th, table.stats td { border: 1px solid #999; padding: 4px 10px; }
table.pair { border-collapse: collapse; width: 100%; margin-bottom: 2em; }
table.pair th, table.pair td { border: 1px solid #bbb; padding: 6px; vertical-align: top; }
table.pair pre { margin: 0; white-space: pre-wrap; font-size: 12px; }
.verdict-conflict { color: #a00; font-weight: bold; }
.verdict-compatible { color: #080; }
.meta { color: #555; font-size: 12px; }
"""


def render_html(report: CloneReport) -> str:
    parts = [
        "<!DOCTYPE html>",
        "<html><head><meta charset='utf-8'>",
        f"<title>Clone report {_esc(report.report_id)}</title>",
        f"<style>{_CSS}</style>",
        "</head><body>",
        f"<h1>Clone report {_esc(report.report_id)}</h1>",
        "<p class='meta'>"
        f"query set {_esc(report.query_set_id)} &middot; "
        f"created {_esc(_ts(report.created_at))} &middot; "
        f"{len(report.pairs)} pair(s)"
        + (" &middot; <b>PARTIAL</b>" if report.partial else "")
        + "</p>",
    ]

    parts.append("<table class='stats'><tr><th>License</th><th>Clone Pairs</th>"
                 "<th>Percent of Clones</th></tr>")
    for label, pairs_count, percent in report.stats.rows():
        parts.append(
            f"<tr><td>{_esc(label)}</td><td>{_esc(pairs_count)}</td>"
            f"<td>{_esc(percent)}</td></tr>"
        )
    parts.append("</table>")

    for i, pair in enumerate(report.pairs, start=1):
        verdict = pair.verdict or "unclassified"
        parts.append(f"<h2>Pair {i}</h2>")
        parts.append("<table class='pair'>")
        parts.append(
            "<tr><th>Query block</th><th>Corpus block</th></tr>"
            "<tr>"
            f"<td>{_locator_cell(pair.query)}</td>"
            f"<td>{_locator_cell(pair.corpus)}</td>"
            "</tr><tr>"
            f"<td>license: {_esc(pair.query.license.id)} "
            f"({_esc(pair.query.license.provenance)})<br>"
            f"last modified: {_esc(_ts(pair.query.last_modified))}</td>"
            f"<td>license: {_esc(pair.corpus.license.id)} "
            f"({_esc(pair.corpus.license.provenance)})<br>"
            f"last modified: {_esc(_ts(pair.corpus.last_modified))}</td>"
            "</tr><tr>"
            f"<td><pre>{_esc(pair.query.raw_text)}</pre></td>"
            f"<td><pre>{_esc(pair.corpus.raw_text)}</pre></td>"
            "</tr>"
        )
        parts.append(
            "<tr><td colspan='2'>"
            f"verdict: <span class='verdict-{_esc(verdict)}'>{_esc(verdict)}</span>"
            f" &middot; similarity {pair.similarity:.4f}"
            f" &middot; overlap {pair.overlap}/{pair.required} required"
            f" &middot; size {_esc(pair.size_class)}"
            "</td></tr></table>"
        )

    parts.append(
        "<p class='meta'>config: "
        f"{_esc(json.dumps(report.config, sort_keys=True))}</p>"
    )
    parts.append("</body></html>")
    return "\n".join(parts)
