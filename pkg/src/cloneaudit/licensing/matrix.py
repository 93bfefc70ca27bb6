"""License compatibility matrix and clone-pair verdict classification.

The shipped default is conservative: identical ids are compatible, every
other known-id pair conflicts, and ids the matrix has never heard of resolve
to ``unknown``. Anything more nuanced belongs in a matrix config file, not in
code.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..model import NONE_ID, UNKNOWN_ID, LicenseTag
from .rules import DEFAULT_RULES

VERDICT_COMPATIBLE = "compatible"
VERDICT_CONFLICT = "conflict"
VERDICT_LACK = "lack-of-licensing"
VERDICT_UNKNOWN = "unknown"

VERDICTS = (VERDICT_COMPATIBLE, VERDICT_CONFLICT, VERDICT_LACK, VERDICT_UNKNOWN)


@dataclass(frozen=True)
class CompatibilityMatrix:
    """Pairwise license verdicts; symmetric unless a pair is marked directed."""

    pairs: dict[tuple[str, str], str] = field(default_factory=dict)
    default_verdict: str = VERDICT_CONFLICT
    known_ids: frozenset[str] = frozenset()

    def lookup(self, a: str, b: str) -> str:
        explicit = self.pairs.get((a, b))
        if explicit is not None:
            return explicit
        if a == b:
            return VERDICT_COMPATIBLE
        if a not in self.known_ids or b not in self.known_ids:
            return VERDICT_UNKNOWN
        return self.default_verdict


def default_matrix() -> CompatibilityMatrix:
    known = frozenset(rule.license_id for rule in DEFAULT_RULES)
    return CompatibilityMatrix(pairs={}, known_ids=known)


def classify_pair(a: LicenseTag, b: LicenseTag, matrix: CompatibilityMatrix) -> str:
    """Verdict for a clone pair's two license tags.

    Sentinels absorb: NONE on either side means lack-of-licensing, UNKNOWN
    means unknown, regardless of the other operand.
    """
    if a.id == NONE_ID or b.id == NONE_ID:
        return VERDICT_LACK
    if a.id == UNKNOWN_ID or b.id == UNKNOWN_ID:
        return VERDICT_UNKNOWN
    return matrix.lookup(a.id, b.id)


def load_matrix(
    path: str | Path, extra_known_ids: frozenset[str] | None = None
) -> CompatibilityMatrix:
    """Load ``{"pairs": [{a, b, verdict, directed?}], "default_verdict": ...}``."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    pairs: dict[tuple[str, str], str] = {}
    known: set[str] = set(extra_known_ids or ())
    for item in data.get("pairs", []):
        a, b, verdict = item["a"], item["b"], item["verdict"]
        if verdict not in (VERDICT_COMPATIBLE, VERDICT_CONFLICT):
            raise ValueError(f"matrix pair ({a}, {b}): bad verdict {verdict!r}")
        pairs[(a, b)] = verdict
        if not item.get("directed", False):
            pairs.setdefault((b, a), verdict)
        known.update((a, b))
    known.update(data.get("ids", []))
    default_verdict = data.get("default_verdict", VERDICT_CONFLICT)
    if default_verdict not in (VERDICT_COMPATIBLE, VERDICT_CONFLICT, VERDICT_UNKNOWN):
        raise ValueError(f"bad default_verdict {default_verdict!r}")
    return CompatibilityMatrix(
        pairs=pairs, default_verdict=default_verdict, known_ids=frozenset(known)
    )
