"""License rule sets: ordered regex rules matched against license-bearing text.

The shipped default set is deliberately small; a full SPDX-scale corpus is a
configuration concern. Rule files are JSON lists of
``{"license_id": ..., "patterns": [...]}`` and are applied in order, first
match wins.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class LicenseRule:
    license_id: str
    patterns: tuple[re.Pattern, ...]

    @classmethod
    def compile(cls, license_id: str, patterns: list[str]) -> "LicenseRule":
        if not patterns:
            raise ValueError(f"rule {license_id!r} has no patterns")
        return cls(license_id, tuple(re.compile(p, re.IGNORECASE) for p in patterns))

    def matches(self, text: str) -> bool:
        return any(p.search(text) for p in self.patterns)


# Patterns use \s+ between words so phrases survive comment re-wrapping.
_DEFAULT_RULE_SPECS: list[tuple[str, list[str]]] = [
    (
        "GPL-3.0",
        [
            r"GNU\s+(?:GENERAL\s+PUBLIC\s+LICENSE|GPL)[\s\S]{0,400}?version\s+3",
            r"\bGPL[-\s]?v?3(?:\.0)?\b",
            r"SPDX-License-Identifier:\s*GPL-3\.0",
        ],
    ),
    (
        "GPL-2.0",
        [
            r"GNU\s+(?:GENERAL\s+PUBLIC\s+LICENSE|GPL)[\s\S]{0,400}?version\s+2",
            r"\bGPL[-\s]?v?2(?:\.0)?\b",
            r"SPDX-License-Identifier:\s*GPL-2\.0",
        ],
    ),
    (
        "Apache-2.0",
        [
            r"Apache\s+License,?\s+Version\s+2\.0",
            r"\bApache[-\s]2(?:\.0)?\s+licen[cs]e",
            r"\bApache-2\.0\b",
        ],
    ),
    (
        "CC-BY-SA-3.0",
        [
            r"Creative\s+Commons\s+Attribution[-\s]Share\s?Alike\s+3\.0",
            r"\bCC[-\s]BY[-\s]SA[-\s]?3\.0\b",
        ],
    ),
    (
        "BSD-3-Clause",
        [
            r"BSD\s+3-Clause",
            r"\bBSD-3-Clause\b",
            r"Redistribution\s+and\s+use\s+in\s+source\s+and\s+binary\s+forms"
            r"[\s\S]{0,800}?neither\s+the\s+name",
        ],
    ),
    (
        "MIT",
        [
            r"\bMIT\s+Licen[cs]e\b",
            r"Permission\s+is\s+hereby\s+granted,\s+free\s+of\s+charge",
            r"SPDX-License-Identifier:\s*MIT\b",
        ],
    ),
    (
        "PSF-2.0",
        [
            r"Python\s+Software\s+Foundation\s+Licen[cs]e",
            r"\bPSF\s+Licen[cs]e\b",
            r"\bPSF-2\.0\b",
        ],
    ),
]

DEFAULT_RULES: list[LicenseRule] = [
    LicenseRule.compile(lid, pats) for lid, pats in _DEFAULT_RULE_SPECS
]


def match_rules(text: str, rules: list[LicenseRule]) -> str | None:
    """Return the first matching rule's license id, or None."""
    for rule in rules:
        if rule.matches(text):
            return rule.license_id
    return None


def load_rules(path: str | Path) -> list[LicenseRule]:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if not isinstance(data, list):
        raise ValueError(f"rule file {path}: expected a JSON list")
    return [LicenseRule.compile(item["license_id"], item["patterns"]) for item in data]


def dump_rules(rules: list[LicenseRule]) -> str:
    return json.dumps(
        [
            {"license_id": r.license_id, "patterns": [p.pattern for p in r.patterns]}
            for r in rules
        ],
        indent=2,
    )
