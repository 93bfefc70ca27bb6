from __future__ import annotations

import json
from pathlib import Path

import pytest

from cloneaudit.model import BlockSummary, ClonePair, LicenseTag
from cloneaudit.report import (
    CloneReport,
    aggregate_license_stats,
    build_report,
    render_report,
    sample_pairs,
    scan_attribution,
)

from conftest import make_block


def summary(block_id, license_id="MIT", provenance="header", corpus_id="c",
            url=None, lines=12, kind="filesystem", path=None):
    return BlockSummary(
        block_id=block_id,
        corpus_id=corpus_id,
        kind=kind,
        path=path or (f"{block_id}.py" if kind == "filesystem" else "1234"),
        start_line=1,
        end_line=lines,
        url=url,
        granularity="file",
        license=LicenseTag(license_id, provenance),
        line_count=lines,
        total_tokens=40,
        last_modified=1512086400.0,
        raw_text=f"code of {block_id}\n",
    )


def pair(qid, cid, verdict, q_license="MIT", c_license="CC-BY-SA-3.0",
         c_provenance="corpus-default", size="medium", url=None):
    lines = {"small": 5, "medium": 15, "large": 30}[size]
    return ClonePair(
        query=summary(qid, q_license, "header", corpus_id="pip", lines=lines),
        corpus=summary(cid, c_license, c_provenance, corpus_id="so",
                       kind="stackexchange-post", url=url or "https://stackoverflow.com/a/1234",
                       lines=lines),
        overlap=36,
        required=32,
        similarity=0.9,
        size_class=size,
        verdict=verdict,
    )


# --- stats ---------------------------------------------------------------


def test_hand_counted_stats():
    pairs = [
        pair("q1", "c1", "conflict"),
        pair("q2", "c2", "conflict"),
        pair("q3", "c3", "conflict"),
        pair("q4", "c4", "lack-of-licensing", q_license="NONE"),
    ]
    stats = aggregate_license_stats(pairs)
    assert stats.total_pairs == 4
    assert stats.conflicts == {"MIT": 3}
    assert stats.percent(stats.conflicts["MIT"]) == 75.0
    assert stats.lack_of_licensing == 1
    assert stats.percent(stats.lack_of_licensing) == 25.0


def test_zero_pairs_all_zeros():
    stats = aggregate_license_stats([])
    assert stats.total_pairs == 0
    assert stats.compatible == 0
    assert stats.conflicts == {}
    assert stats.percent(0) == 0.0


def test_category_counts_sum_to_total():
    pairs = [
        pair("q1", "c1", "conflict"),
        pair("q2", "c2", "compatible", q_license="CC-BY-SA-3.0"),
        pair("q3", "c3", "unknown", q_license="UNKNOWN"),
        pair("q4", "c4", "lack-of-licensing", q_license="NONE"),
        pair("q5", "c5", "conflict", q_license="GPL-3.0"),
    ]
    stats = aggregate_license_stats(pairs)
    assert (
        stats.conflict_total + stats.compatible + stats.lack_of_licensing + stats.unknown
        == stats.total_pairs
    )


def test_table_rows_mirror_license_table_layout():
    pairs = [pair("q1", "c1", "conflict"), pair("q2", "c2", "conflict", q_license="GPL-3.0")]
    rows = aggregate_license_stats(pairs).rows()
    labels = [r[0] for r in rows]
    assert labels[0] == "Total clones"
    assert "GPL-3.0 conflicts" in labels
    assert "MIT conflicts" in labels
    assert "Lack of licensing" in labels
    assert "Unknown license" in labels
    assert rows[0][2] == "-"
    mit_row = next(r for r in rows if r[0] == "MIT conflicts")
    assert mit_row[1] == "1" and mit_row[2] == "50.00%"


def test_conflict_attributed_to_non_default_side():
    p = pair("q1", "c1", "conflict", q_license="Apache-2.0")
    stats = aggregate_license_stats([p])
    assert stats.conflicts == {"Apache-2.0": 1}


def test_percentages_two_decimals():
    pairs = [pair(f"q{i}", f"c{i}", "conflict") for i in range(3)]
    pairs.append(pair("qx", "cx", "compatible", q_license="CC-BY-SA-3.0"))
    stats = aggregate_license_stats(pairs)
    assert stats.percent(3) == 75.0
    assert stats.percent(1) == 25.0
    seven = [pair(f"q{i}", f"c{i}", "conflict") for i in range(7)]
    stats7 = aggregate_license_stats(seven[:3] + seven[3:])
    assert stats7.percent(2) == round(200 / 7, 2)


# --- sampling ---------------------------------------------------------------


def _population(n, size="medium"):
    return [pair(f"q{i}", f"c{i}", "conflict", size=size) for i in range(n)]


def test_sample_63_from_1000():
    pairs = _population(1000)
    sampled, short = sample_pairs(pairs, 63, size_class="medium", seed=1)
    assert len(sampled) == 63
    assert not short
    assert len({p.key for p in sampled}) == 63


def test_sample_deterministic_for_seed():
    pairs = _population(200)
    a, _ = sample_pairs(pairs, 63, seed=7)
    b, _ = sample_pairs(pairs, 63, seed=7)
    assert [p.key for p in a] == [p.key for p in b]
    c, _ = sample_pairs(pairs, 63, seed=8)
    assert [p.key for p in a] != [p.key for p in c]


def test_sample_short_population_returns_all_flagged():
    pairs = _population(10)
    sampled, short = sample_pairs(pairs, 63, seed=1)
    assert len(sampled) == 10
    assert short


def test_sample_filters_by_size_class():
    pairs = _population(20, size="medium") + _population(5, size="large")
    sampled, short = sample_pairs(pairs, 10, size_class="large", seed=1)
    assert short and len(sampled) == 5
    assert all(p.size_class == "large" for p in sampled)


def test_sample_rejects_bad_n():
    with pytest.raises(ValueError):
        sample_pairs(_population(5), 0)


# --- attribution ---------------------------------------------------------------


def test_attribution_scan_matches_post_body():
    block = make_block("b0", {"x": 30})
    block.context_text = (
        "<p>This helper comes from the Python Software Foundation reference "
        "implementation, lightly edited.</p><pre><code>x = 1</code></pre>"
    )
    matches = scan_attribution([block], ["Python Software Foundation"])
    assert len(matches) == 1
    assert matches[0].block_id == "b0"
    assert "Python Software Foundation" in matches[0].snippet


def test_attribution_scan_case_insensitive_and_psf():
    block = make_block("b0", {"x": 30})
    block.context_text = "posted under the psf license by someone"
    assert len(scan_attribution([block], ["PSF"])) == 1


def test_attribution_empty_body_no_matches():
    block = make_block("b0", {"x": 30})
    block.context_text = ""
    assert scan_attribution([block], ["PSF"]) == []


def test_attribution_requires_patterns():
    with pytest.raises(ValueError):
        scan_attribution([], [])


def test_attribution_context_window():
    block = make_block("b0", {"x": 30})
    block.context_text = "a" * 200 + "PSF" + "b" * 200
    (match,) = scan_attribution([block], ["PSF"])
    assert match.snippet == "a" * 80 + "PSF" + "b" * 80


def test_attribution_falls_back_to_raw_text():
    block = make_block("b0", {"x": 30})
    block.raw_text = "# thanks to the Python Software Foundation\nx = 1\n"
    assert len(scan_attribution([block], ["Python Software Foundation"])) == 1


# --- reports ---------------------------------------------------------------


def fixture_report(created_at=1700000000.0):
    pairs = [
        pair("q2", "c2", "lack-of-licensing", q_license="NONE",
             url="https://stackoverflow.com/a/3271650"),
        pair("q1", "c1", "conflict", url="https://stackoverflow.com/a/3271650"),
        pair("q1", "c1", "conflict"),  # duplicate: must be dropped
    ]
    return build_report(
        query_set_id="qs-test",
        pairs=pairs,
        config={"theta": 0.8, "min_tokens": 23},
        apprentices=[{"apprentice_id": "ap-1", "base_url": "http://x", "corpus_hash": "h"}],
        created_at=created_at,
    )


def test_report_dedups_and_sorts_pairs():
    report = fixture_report()
    assert [p.key for p in report.pairs] == [("q1", "c1"), ("q2", "c2")]


def test_report_stats_recomputable_from_pairs():
    report = fixture_report()
    assert aggregate_license_stats(report.pairs) == report.stats


def test_report_json_round_trip():
    report = fixture_report()
    rendered = render_report(report, "json")
    parsed = CloneReport.from_dict(json.loads(rendered))
    assert parsed == report


def test_report_id_deterministic():
    assert fixture_report().report_id == fixture_report().report_id


def test_html_contains_anchor_for_so_answer():
    html_doc = render_report(fixture_report(), "html")
    assert 'href="https://stackoverflow.com/a/3271650"' in html_doc


def test_html_shows_licenses_verdicts_snippets():
    html_doc = render_report(fixture_report(), "html")
    assert "MIT" in html_doc
    assert "conflict" in html_doc
    assert "code of q1" in html_doc
    assert "code of c1" in html_doc
    assert "corpus-default" in html_doc
    assert "2017-12-01" in html_doc  # timestamps displayed


def test_empty_report_renders_valid_page():
    report = build_report("qs-empty", [], {"theta": 0.8}, [], created_at=0.0)
    html_doc = render_report(report, "html")
    assert "Total clones" in html_doc
    assert "0 pair(s)" in html_doc
    assert report.stats.total_pairs == 0


def test_html_escapes_code():
    from dataclasses import replace

    p = pair("q1", "c1", "conflict")
    evil = replace(p, corpus=replace(p.corpus, raw_text="<script>alert(1)</script>"))
    report = build_report("qs", [evil], {}, [], created_at=0.0)
    html_doc = render_report(report, "html")
    assert "<script>" not in html_doc
    assert "&lt;script&gt;" in html_doc


def test_golden_html_equality():
    golden = (Path(__file__).parent / "data" / "golden_report.html").read_text()
    assert render_report(fixture_report(), "html") == golden
