from __future__ import annotations

import io
from html import escape

import pytest

from cloneaudit.ingest.directory import IngestConfig
from cloneaudit.ingest.stackexchange import (
    extract_code_snippets,
    ingest_stackexchange_dump,
    parse_tags,
)
from cloneaudit.model import TruncatedDumpError

CODE_SNIPPET = "def answer(x):\n    total = x + 1\n    return total\n"


def row(post_id, post_type, body_html, tags=None, parent=None,
        created="2017-12-01T08:30:00.000"):
    # Real dumps escape newlines as character references; literal newlines in
    # attributes would be normalized to spaces by the XML parser.
    body_attr = escape(body_html, quote=True).replace("\n", "&#xA;")
    attrs = [
        f'Id="{post_id}"',
        f'PostTypeId="{post_type}"',
        f'Body="{body_attr}"',
        f'CreationDate="{created}"',
    ]
    if tags is not None:
        attrs.append(f'Tags="{escape(tags, quote=True)}"')
    if parent is not None:
        attrs.append(f'ParentId="{parent}"')
    return f"  <row {' '.join(attrs)} />"


def dump(rows):
    return "\n".join(
        ['<?xml version="1.0" encoding="utf-8"?>', "<posts>", *rows, "</posts>"]
    ).encode("utf-8")


def se_config(**kwargs):
    defaults = dict(corpus_id="so", default_license="CC-BY-SA-3.0")
    defaults.update(kwargs)
    return IngestConfig(**defaults)


def body_with_code(code, prefix="<p>Try this:</p>"):
    return f"{prefix}<pre><code>{escape(code)}</code></pre>"


def test_single_question_row_yields_block():
    xml = dump([row(42, 1, body_with_code(CODE_SNIPPET), tags="<python><xml>")])
    corpus = ingest_stackexchange_dump(io.BytesIO(xml), "python", se_config())
    assert len(corpus.blocks) == 1
    block = corpus.blocks[0]
    assert block.locator.kind == "stackexchange-post"
    assert block.locator.path == "42"
    assert block.locator.url == "https://stackoverflow.com/q/42"
    assert block.raw_text == CODE_SNIPPET
    assert block.license.id == "CC-BY-SA-3.0"
    assert block.license.provenance == "corpus-default"


def test_row_without_code_yields_nothing():
    xml = dump([row(7, 1, "<p>no code here</p>", tags="<python>")])
    corpus = ingest_stackexchange_dump(io.BytesIO(xml), "python", se_config())
    assert corpus.blocks == []


def test_answer_url_shape():
    xml = dump(
        [
            row(100, 1, "<p>q</p>", tags="<python>"),
            row(3271650, 2, body_with_code(CODE_SNIPPET), parent=100),
        ]
    )
    corpus = ingest_stackexchange_dump(io.BytesIO(xml), "python", se_config())
    (block,) = corpus.blocks
    assert block.locator.url == "https://stackoverflow.com/a/3271650"


def test_tag_filter_keeps_matching_questions_only():
    xml = dump(
        [
            row(1, 1, body_with_code(CODE_SNIPPET), tags="<python><list>"),
            row(2, 1, body_with_code(CODE_SNIPPET), tags="<java>"),
        ]
    )
    corpus = ingest_stackexchange_dump(io.BytesIO(xml), "python", se_config())
    assert [b.locator.path for b in corpus.blocks] == ["1"]


def test_answers_inherit_question_tags():
    xml = dump(
        [
            row(1, 1, "<p>python question</p>", tags="<python>"),
            row(2, 1, "<p>java question</p>", tags="<java>"),
            row(10, 2, body_with_code(CODE_SNIPPET), parent=1),
            row(11, 2, body_with_code(CODE_SNIPPET), parent=2),
            row(12, 2, body_with_code(CODE_SNIPPET), parent=999),  # unseen parent
        ]
    )
    corpus = ingest_stackexchange_dump(io.BytesIO(xml), "python", se_config())
    assert [b.locator.path for b in corpus.blocks] == ["10"]


def test_empty_tag_filter_admits_everything():
    xml = dump(
        [
            row(1, 1, body_with_code(CODE_SNIPPET), tags="<java>"),
            row(12, 2, body_with_code(CODE_SNIPPET), parent=999),
        ]
    )
    corpus = ingest_stackexchange_dump(io.BytesIO(xml), "", se_config())
    assert sorted(b.locator.path for b in corpus.blocks) == ["1", "12"]


def test_creation_date_becomes_last_modified():
    xml = dump([row(5, 1, body_with_code(CODE_SNIPPET), tags="<python>",
                    created="2017-12-01T00:00:00.000")])
    corpus = ingest_stackexchange_dump(io.BytesIO(xml), "python", se_config())
    (block,) = corpus.blocks
    assert block.last_modified == 1512086400.0  # 2017-12-01 UTC


def test_each_code_element_is_separate_candidate():
    body = (
        body_with_code(CODE_SNIPPET)
        + "<p>or</p>"
        + body_with_code("def other(y):\n    return y - 1\n")
    )
    xml = dump([row(8, 1, body, tags="<python>")])
    corpus = ingest_stackexchange_dump(io.BytesIO(xml), "python", se_config())
    assert len(corpus.blocks) == 2
    assert len({b.block_id for b in corpus.blocks}) == 2


def test_html_entities_unescaped_in_code():
    code = "if a &lt; b:\n    print(a &amp; b)\n"
    xml = dump([row(9, 1, f"<pre><code>{code}</code></pre>", tags="<python>")])
    corpus = ingest_stackexchange_dump(io.BytesIO(xml), "python", se_config())
    (block,) = corpus.blocks
    assert "a < b" in block.raw_text
    assert "a & b" in block.raw_text


def test_context_text_carries_post_body():
    body = "<p>Thanks to the Python Software Foundation.</p>" + body_with_code(CODE_SNIPPET)
    xml = dump([row(11, 1, body, tags="<python>")])
    corpus = ingest_stackexchange_dump(io.BytesIO(xml), "python", se_config())
    (block,) = corpus.blocks
    assert "Python Software Foundation" in block.context_text


def test_malformed_row_skipped_and_counted():
    xml = dump(
        [
            '  <row Id="notanumber" PostTypeId="1" Body="x" />',
            row(3, 1, body_with_code(CODE_SNIPPET), tags="<python>"),
        ]
    )
    corpus = ingest_stackexchange_dump(io.BytesIO(xml), "python", se_config())
    assert len(corpus.blocks) == 1
    assert corpus.ingest_log.rows_skipped == 1


def test_truncated_stream_fatal_with_partial_corpus():
    complete = dump([row(1, 1, body_with_code(CODE_SNIPPET), tags="<python>"),
                     row(2, 1, body_with_code(CODE_SNIPPET), tags="<python>")])
    truncated = complete[: complete.rindex(b"<row")]
    with pytest.raises(TruncatedDumpError) as exc_info:
        ingest_stackexchange_dump(io.BytesIO(truncated), "python", se_config())
    partial = exc_info.value.partial_corpus
    assert [b.locator.path for b in partial.blocks] == ["1"]


def test_parse_tags_formats():
    assert parse_tags("<python><xml>") == ["python", "xml"]
    assert parse_tags("|python|xml|") == ["python", "xml"]
    assert parse_tags("") == []


def test_extract_code_snippets_nested_markup():
    html_body = "<pre><code>x = <b>1</b> + 2\n</code></pre>"
    assert extract_code_snippets(html_body) == ["x = 1 + 2\n"]


def test_min_tokens_applies_to_snippets():
    xml = dump([row(4, 1, body_with_code("x\n"), tags="<python>")])
    corpus = ingest_stackexchange_dump(
        io.BytesIO(xml), "python", se_config(min_tokens=23)
    )
    assert corpus.blocks == []
