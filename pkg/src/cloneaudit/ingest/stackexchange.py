"""Streaming ingest of StackExchange Posts.xml dumps.

Rows are consumed with ``iterparse`` so arbitrarily large dumps fit in
memory, except for one map of matching question ids that lets answers inherit
their question's tags (answer rows carry no Tags attribute). Each ``<code>``
element inside a post body becomes one candidate block source.
"""

from __future__ import annotations

import logging
import re
import xml.etree.ElementTree as ET
from datetime import datetime, timezone
from html.parser import HTMLParser
from pathlib import Path
from typing import IO, Iterator

from ..model import (
    Corpus,
    IngestLog,
    LicenseTag,
    SourceLocator,
    TruncatedDumpError,
)
from .blocks import extract_blocks
from .directory import IngestConfig

logger = logging.getLogger(__name__)

QUESTION_TYPE = "1"
ANSWER_TYPE = "2"

_TAG_RE = re.compile(r"<([^<>]+)>")


class _CodeExtractor(HTMLParser):
    """Collect the text of each <code> element in a post body."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.snippets: list[str] = []
        self._depth = 0
        self._buf: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag == "code":
            if self._depth == 0:
                self._buf = []
            self._depth += 1

    def handle_endtag(self, tag):
        if tag == "code" and self._depth > 0:
            self._depth -= 1
            if self._depth == 0:
                self.snippets.append("".join(self._buf))

    def handle_data(self, data):
        if self._depth > 0:
            self._buf.append(data)


def extract_code_snippets(body_html: str) -> list[str]:
    parser = _CodeExtractor()
    parser.feed(body_html)
    parser.close()
    return [s for s in parser.snippets if s.strip()]


def parse_tags(tags_attr: str) -> list[str]:
    """Parse ``<python><xml>`` (or ``|python|xml|``) tag attributes."""
    found = _TAG_RE.findall(tags_attr)
    if found:
        return [t.lower() for t in found]
    return [t.lower() for t in tags_attr.split("|") if t]


def _parse_creation_date(value: str | None) -> float | None:
    if not value:
        return None
    try:
        dt = datetime.fromisoformat(value)
    except ValueError:
        return None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.timestamp()


def ingest_stackexchange_dump(
    xml_source: str | Path | IO[bytes],
    tag_filter: str,
    config: IngestConfig,
) -> Corpus:
    """Build a corpus from a Posts.xml stream, keeping rows matching *tag_filter*.

    Questions match when their Tags contain the filter; answers inherit their
    question's match. An empty filter admits every row. Malformed rows are
    skipped and counted; a truncated stream raises
    :class:`TruncatedDumpError` carrying the corpus built so far.
    """
    tag_filter = tag_filter.strip().lower()
    log = IngestLog()
    corpus_id = config.corpus_id or "stackexchange"
    license = (
        LicenseTag(config.default_license, "corpus-default")
        if config.default_license
        else LicenseTag("NONE", "header")
    )

    blocks = []
    matched_questions: set[str] = set()

    def handle_row(attrib: dict) -> None:
        log.rows_seen += 1
        post_id = attrib.get("Id")
        post_type = attrib.get("PostTypeId")
        body = attrib.get("Body")
        if not post_id or not post_id.isdigit() or post_type is None or body is None:
            log.rows_skipped += 1
            return

        if post_type == QUESTION_TYPE:
            tags = parse_tags(attrib.get("Tags", ""))
            include = not tag_filter or tag_filter in tags
            if include:
                matched_questions.add(post_id)
            url_template = config.url_template_question
        elif post_type == ANSWER_TYPE:
            parent = attrib.get("ParentId")
            include = not tag_filter or (
                parent is not None and parent in matched_questions
            )
            url_template = config.url_template_answer
        else:
            return
        if not include:
            return

        created = _parse_creation_date(attrib.get("CreationDate"))
        snippets = extract_code_snippets(body)
        context = body if config.keep_context_text else None
        for element_index, snippet in enumerate(snippets):
            line_total = max(len(snippet.splitlines()), 1)
            locator_base = SourceLocator(
                kind="stackexchange-post",
                path=post_id,
                start_line=1,
                end_line=line_total,
                url=url_template.format(id=post_id),
            )
            blocks.extend(
                extract_blocks(
                    snippet,
                    locator_base,
                    config.granularities,
                    config.min_tokens,
                    corpus_id=corpus_id,
                    last_modified=created,
                    license=license,
                    context_text=context,
                    id_salt=f"{post_id}:{element_index}",
                    log=log,
                )
            )

    try:
        for attrib in _iter_rows(xml_source):
            handle_row(attrib)
    except ET.ParseError as exc:
        partial = Corpus.from_blocks(corpus_id, blocks, ingest_log=log)
        raise TruncatedDumpError(
            f"dump stream truncated or malformed: {exc}", partial
        ) from exc

    return Corpus.from_blocks(corpus_id, blocks, ingest_log=log)


def _iter_rows(xml_source: str | Path | IO[bytes]) -> Iterator[dict]:
    if isinstance(xml_source, (str, Path)):
        stream: IO[bytes] = open(xml_source, "rb")
        owned = True
    else:
        stream = xml_source
        owned = False
    try:
        for _, elem in ET.iterparse(stream, events=("end",)):
            if elem.tag == "row":
                yield dict(elem.attrib)
                elem.clear()
    finally:
        if owned:
            stream.close()
