"""License inference: header comment scan plus recursive package-file fallback.

Resolution order for a filesystem block: a concrete id in the leading comment
run wins; otherwise LICENSE/COPYING files found walking up to the package
root; otherwise the corpus-wide default, if one is configured. UNKNOWN marks
license-bearing text that matched no rule; NONE means the search found
nothing at all.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable

from ..model import NONE_ID, UNKNOWN_ID, LicenseTag
from .rules import LicenseRule, match_rules

logger = logging.getLogger(__name__)

HEADER_WINDOW_LINES = 50

_LICENSE_BASENAMES = ("license", "copying")


def _strip_markers(line: str, markers: tuple[str, ...]) -> str:
    s = line.strip()
    for marker in markers:
        while s.startswith(marker):
            s = s[len(marker):].lstrip()
    return s


def leading_comment_text(text: str, window: int = HEADER_WINDOW_LINES) -> str | None:
    """Extract the first contiguous comment run within the first *window* lines.

    Recognizes ``#`` and ``//`` line-comment runs, ``/* ... */`` blocks, and a
    leading triple-quoted string. Returns the run's text with comment markers
    stripped, or None when no comment starts in the window.
    """
    lines = text.splitlines()
    start = 0
    if lines and lines[0].startswith("#!"):
        start = 1  # shebang is not a license-bearing comment

    for i in range(start, min(len(lines), window)):
        stripped = lines[i].strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            return _collect_line_run(lines, i, "#")
        if stripped.startswith("//"):
            return _collect_line_run(lines, i, "//")
        if stripped.startswith("/*"):
            return _collect_c_block(lines, i)
        head = stripped.lstrip("rRuUbB")
        for quote in ('"""', "'''"):
            if head.startswith(quote):
                return _collect_triple_quoted(lines, i, quote)
    return None


def _collect_line_run(lines: list[str], start: int, marker: str) -> str:
    out = []
    i = start
    while i < len(lines) and lines[i].strip().startswith(marker):
        out.append(_strip_markers(lines[i], (marker,)))
        i += 1
    return "\n".join(out)


def _collect_c_block(lines: list[str], start: int) -> str:
    out = []
    for i in range(start, len(lines)):
        line = lines[i].strip()
        done = "*/" in line
        line = line.replace("/*", " ").replace("*/", " ")
        out.append(_strip_markers(line, ("*",)))
        if done:
            break
    return "\n".join(out)


def _collect_triple_quoted(lines: list[str], start: int, quote: str) -> str:
    out = []
    first = lines[start].strip()
    opened = first.index(quote) + len(quote)
    rest = first[opened:]
    if quote in rest:  # single-line docstring
        return rest[: rest.index(quote)]
    out.append(rest)
    for i in range(start + 1, len(lines)):
        line = lines[i]
        if quote in line:
            out.append(line[: line.index(quote)])
            break
        out.append(line)
    return "\n".join(out)


def detect_header_license(block_text: str, rules: list[LicenseRule]) -> LicenseTag:
    """Scan the leading comment run; first matching rule wins.

    A comment run that matches no rule yields UNKNOWN; no comment at all
    yields NONE.
    """
    comment = leading_comment_text(block_text)
    if comment is None or not comment.strip():
        return LicenseTag(NONE_ID, "header")
    matched = match_rules(comment, rules)
    if matched is not None:
        return LicenseTag(matched, "header")
    return LicenseTag(UNKNOWN_ID, "header")


def is_license_filename(name: str) -> bool:
    lower = name.lower()
    return lower in _LICENSE_BASENAMES or any(
        lower.startswith(base + ".") for base in _LICENSE_BASENAMES
    )


def resolve_with_lookup(
    block_text: str,
    license_texts: Iterable[str],
    rules: list[LicenseRule],
    corpus_default: str | None = None,
) -> LicenseTag:
    """Core precedence chain over pre-fetched LICENSE texts (nearest first)."""
    header = detect_header_license(block_text, rules)
    if header.is_concrete:
        return header

    saw_license_file = False
    for text in license_texts:
        saw_license_file = True
        matched = match_rules(text, rules)
        if matched is not None:
            return LicenseTag(matched, "package-file")

    if corpus_default is not None:
        return LicenseTag(corpus_default, "corpus-default")
    if saw_license_file:
        return LicenseTag(UNKNOWN_ID, "package-file")
    if header.id == UNKNOWN_ID:
        return header
    return LicenseTag(NONE_ID, "package-file")


def iter_license_files(
    file_dir: Path, package_root: Path
) -> Iterable[Path]:
    """LICENSE/LICENSE.*/COPYING files from file_dir up to package_root."""
    file_dir = file_dir.resolve()
    package_root = package_root.resolve()
    current = file_dir
    while True:
        try:
            entries = sorted(p for p in current.iterdir() if p.is_file())
        except OSError:
            entries = []
        for p in entries:
            if is_license_filename(p.name):
                yield p
        if current == package_root or current.parent == current:
            break
        current = current.parent


def resolve_license(
    file_path: str | Path,
    package_root: str | Path,
    rules: list[LicenseRule],
    block_text: str | None = None,
    corpus_default: str | None = None,
) -> LicenseTag:
    """Resolve a filesystem block's license.

    Header detection on the block text first; otherwise LICENSE files walking
    ancestor directories up to *package_root*; otherwise the corpus default.
    Unreadable LICENSE files are treated as absent and logged.
    """
    file_path = Path(file_path)
    if block_text is None:
        block_text = file_path.read_text(encoding="utf-8", errors="replace")

    def license_texts():
        for p in iter_license_files(file_path.parent, Path(package_root)):
            try:
                yield p.read_text(encoding="utf-8", errors="replace")
            except OSError as exc:
                logger.warning("unreadable license file %s: %s", p, exc)

    return resolve_with_lookup(block_text, license_texts(), rules, corpus_default)


def inherit_tag(file_tag: LicenseTag) -> LicenseTag:
    """Tag for a sub-file block taking its license from the enclosing file."""
    if file_tag.is_concrete and file_tag.provenance in ("header", "package-file"):
        return LicenseTag(file_tag.id, "inherited")
    return file_tag
