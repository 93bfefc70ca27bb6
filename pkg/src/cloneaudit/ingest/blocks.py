"""Code block extraction at file, module, and function granularity.

Function and module boundaries come from the Python AST: every function or
method definition (decorators included) is a function block, and the module
block is whatever lines remain once function spans are removed, so module and
function blocks partition a file. Unparseable sources degrade to a single
file-level block.
"""

from __future__ import annotations

import ast
from dataclasses import dataclass
from typing import Iterable

from .._util import short_id
from ..model import (
    GRANULARITIES,
    LICENSE_NONE,
    CodeBlock,
    IngestLog,
    LicenseTag,
    SourceLocator,
)
from ..tokenizer import tokenize


@dataclass(frozen=True)
class _Span:
    start: int  # 1-based, inclusive
    end: int


def _function_spans(tree: ast.AST) -> list[_Span]:
    spans = []
    for node in ast.walk(tree):
        if isinstance(node, (ast.FunctionDef, ast.AsyncFunctionDef)):
            start = node.lineno
            for deco in node.decorator_list:
                start = min(start, deco.lineno)
            spans.append(_Span(start, node.end_lineno or node.lineno))
    spans.sort(key=lambda s: (s.start, s.end))
    return spans


def _top_level_spans(spans: list[_Span]) -> list[_Span]:
    """Drop spans nested inside earlier spans (methods keep their own blocks,
    but coverage only needs the outermost ranges)."""
    out: list[_Span] = []
    for span in spans:
        if out and span.end <= out[-1].end:
            continue
        out.append(span)
    return out


def extract_blocks(
    file_text: str,
    locator_base: SourceLocator,
    granularities: Iterable[str],
    min_tokens: int = 1,
    *,
    corpus_id: str = "",
    last_modified: float | None = None,
    license: LicenseTag = LICENSE_NONE,
    context_text: str | None = None,
    id_salt: str = "",
    log: IngestLog | None = None,
) -> list[CodeBlock]:
    """Split *file_text* into blocks at the requested granularities.

    Blocks whose bags have fewer than *min_tokens* tokens (or none at all)
    are dropped. When function or module granularity is requested but the
    source fails to parse, only a file-level block is emitted and the source
    is flagged degraded in *log*.
    """
    wanted = set(granularities)
    unknown = wanted - set(GRANULARITIES)
    if unknown:
        raise ValueError(f"unknown granularities: {sorted(unknown)}")
    if not wanted:
        raise ValueError("granularities must be non-empty")

    lines = file_text.splitlines()
    if not lines:
        return []

    degraded = False
    tree = None
    if wanted & {"module", "function"}:
        try:
            tree = ast.parse(file_text)
        except (SyntaxError, ValueError, RecursionError):
            degraded = True
            if log is not None:
                log.degraded.append(locator_base.path)

    pieces: list[tuple[str, int, int, str]] = []  # (granularity, start, end, text)
    if "file" in wanted or degraded:
        pieces.append(("file", 1, len(lines), file_text))

    if tree is not None and not degraded:
        spans = _function_spans(tree)
        if "module" in wanted:
            covered = _top_level_spans(spans)
            kept = [
                (i + 1, line)
                for i, line in enumerate(lines)
                if not any(s.start <= i + 1 <= s.end for s in covered)
            ]
            while kept and not kept[0][1].strip():
                kept.pop(0)
            while kept and not kept[-1][1].strip():
                kept.pop()
            if kept:
                text = "\n".join(line for _, line in kept)
                pieces.append(("module", kept[0][0], kept[-1][0], text))
        if "function" in wanted:
            for span in spans:
                text = "\n".join(lines[span.start - 1 : span.end])
                pieces.append(("function", span.start, span.end, text))

    blocks = []
    base_offset = locator_base.start_line - 1
    for ordinal, (granularity, start, end, text) in enumerate(pieces):
        bag = tokenize(text)
        if bag.total == 0 or bag.total < min_tokens:
            continue
        locator = SourceLocator(
            kind=locator_base.kind,
            path=locator_base.path,
            start_line=base_offset + start,
            end_line=base_offset + end,
            url=locator_base.url,
        )
        block_id = short_id(
            corpus_id, locator.kind, locator.path, id_salt,
            granularity, locator.start_line, locator.end_line, ordinal,
        )
        blocks.append(
            CodeBlock(
                block_id=block_id,
                corpus_id=corpus_id,
                locator=locator,
                granularity=granularity,
                raw_text=text,
                tokens=bag,
                line_count=locator.line_count,
                last_modified=last_modified,
                license=license,
                context_text=context_text,
            )
        )
    return blocks
