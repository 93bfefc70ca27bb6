"""Corpus ingestion from directories and compressed archives (zip, tar.gz).

Archives are read in place, member by member, so a directory and a zip of
that directory produce the same blocks (and therefore the same content hash;
only last-modified timestamps can differ between the two). License files are
looked up inside the same tree, walking from each source file's directory up
to the ingest root.
"""

from __future__ import annotations

import calendar
import logging
import tarfile
import zipfile
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath
from typing import Callable, Iterator

from ..licensing.detect import (
    detect_header_license,
    inherit_tag,
    is_license_filename,
    resolve_with_lookup,
)
from ..licensing.rules import DEFAULT_RULES, LicenseRule
from ..model import (
    GRANULARITIES,
    LOCATOR_KINDS,
    Corpus,
    IngestError,
    IngestLog,
    SourceLocator,
)
from .blocks import extract_blocks

logger = logging.getLogger(__name__)

TAR_SUFFIXES = (".tar", ".tar.gz", ".tgz", ".tar.bz2")


@dataclass
class IngestConfig:
    """Knobs for turning a raw source into a corpus."""

    corpus_id: str | None = None
    extensions: tuple[str, ...] = (".py",)
    granularities: tuple[str, ...] = ("file",)
    min_tokens: int = 1
    default_license: str | None = None
    locator_kind: str = "filesystem"  # or "doc-file" for documentation trees
    rules: list[LicenseRule] = field(default_factory=lambda: list(DEFAULT_RULES))
    url_template_question: str = "https://stackoverflow.com/q/{id}"
    url_template_answer: str = "https://stackoverflow.com/a/{id}"
    keep_context_text: bool = True

    def __post_init__(self):
        if self.min_tokens < 0:
            raise ValueError("min_tokens must be >= 0")
        unknown = set(self.granularities) - set(GRANULARITIES)
        if unknown or not self.granularities:
            raise ValueError(f"bad granularities: {sorted(self.granularities)}")
        if self.locator_kind not in LOCATOR_KINDS:
            raise ValueError(f"bad locator kind: {self.locator_kind!r}")


@dataclass(frozen=True)
class _TreeFile:
    relpath: str  # posix-style, relative to the tree root
    read: Callable[[], bytes]
    mtime: float | None


def _iter_directory(root: Path) -> Iterator[_TreeFile]:
    for path in sorted(p for p in root.rglob("*") if p.is_file()):
        rel = path.relative_to(root).as_posix()
        yield _TreeFile(rel, path.read_bytes, path.stat().st_mtime)


def _iter_zip(path: Path) -> Iterator[_TreeFile]:
    with zipfile.ZipFile(path) as zf:
        for info in sorted(zf.infolist(), key=lambda i: i.filename):
            if info.is_dir():
                continue
            # Zip timestamps are naive; interpret as UTC for determinism.
            mtime = float(calendar.timegm((*info.date_time, 0, 0, -1)))
            yield _TreeFile(
                info.filename,
                lambda name=info.filename: zf.read(name),
                mtime,
            )


def _iter_tar(path: Path) -> Iterator[_TreeFile]:
    with tarfile.open(path) as tf:
        for member in sorted(tf.getmembers(), key=lambda m: m.name):
            if not member.isfile():
                continue

            def read(name=member.name):
                fh = tf.extractfile(name)
                if fh is None:
                    raise OSError(f"cannot extract {name}")
                return fh.read()

            yield _TreeFile(member.name, read, float(member.mtime))


def _open_tree(path: Path) -> Iterator[_TreeFile]:
    if path.is_dir():
        return _iter_directory(path)
    name = path.name.lower()
    if name.endswith(".zip"):
        return _iter_zip(path)
    if name.endswith(TAR_SUFFIXES):
        return _iter_tar(path)
    raise IngestError(f"unsupported source: {path} (expected directory, zip, or tar)")


def _ancestor_dirs(relpath: str) -> list[str]:
    """Directories containing relpath, nearest first, ending at the root ''."""
    parts = PurePosixPath(relpath).parent
    out = []
    current = parts
    while True:
        out.append(current.as_posix() if current.as_posix() != "." else "")
        if current.as_posix() in (".", "/", ""):
            break
        current = current.parent
    return out


def ingest_directory(path: str | Path, config: IngestConfig) -> Corpus:
    """Ingest a directory or archive into a corpus of tokenized blocks.

    Files matching ``config.extensions`` become blocks at the configured
    granularities; each file's last-modified timestamp is copied onto its
    blocks. Binary or unreadable files are skipped and recorded in the
    ingest log. A missing source path is fatal.
    """
    path = Path(path)
    if not path.exists():
        raise IngestError(f"source path does not exist: {path}")

    log = IngestLog()
    corpus_id = config.corpus_id or path.name.partition(".")[0] or "corpus"

    # First pass: load the tree once, keeping license files for the
    # ancestor walk and source files for extraction.
    sources: list[tuple[_TreeFile, str]] = []  # (entry, decoded text)
    license_texts: dict[str, list[str]] = {}  # dir relpath -> texts (name order)
    for entry in _open_tree(path):
        basename = PurePosixPath(entry.relpath).name
        is_source = any(basename.endswith(ext) for ext in config.extensions)
        is_license = is_license_filename(basename)
        if not (is_source or is_license):
            continue
        try:
            data = entry.read()
        except OSError as exc:
            log.skip(entry.relpath, f"unreadable: {exc}")
            logger.warning("skipping unreadable file %s: %s", entry.relpath, exc)
            continue
        if is_source:
            log.files_seen += 1
            if b"\x00" in data:
                log.skip(entry.relpath, "binary")
                logger.info("skipping binary file %s", entry.relpath)
                continue
            sources.append((entry, data.decode("utf-8", errors="replace")))
        else:
            parent = PurePosixPath(entry.relpath).parent.as_posix()
            parent = "" if parent == "." else parent
            license_texts.setdefault(parent, []).append(
                data.decode("utf-8", errors="replace")
            )

    blocks = []
    for file_ordinal, (entry, text) in enumerate(sources):
        line_total = max(len(text.splitlines()), 1)
        locator_base = SourceLocator(
            kind=config.locator_kind,
            path=entry.relpath,
            start_line=1,
            end_line=line_total,
        )
        file_tag = resolve_with_lookup(
            text,
            (
                t
                for d in _ancestor_dirs(entry.relpath)
                for t in license_texts.get(d, [])
            ),
            config.rules,
            config.default_license,
        )
        file_blocks = extract_blocks(
            text,
            locator_base,
            config.granularities,
            config.min_tokens,
            corpus_id=corpus_id,
            last_modified=entry.mtime,
            id_salt=str(file_ordinal),
            log=log,
        )
        for block in file_blocks:
            if block.granularity == "file":
                block.license = file_tag
            else:
                own = detect_header_license(block.raw_text, config.rules)
                block.license = own if own.is_concrete else inherit_tag(file_tag)
        blocks.extend(file_blocks)

    return Corpus.from_blocks(corpus_id, blocks, ingest_log=log)
