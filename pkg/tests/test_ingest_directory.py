from __future__ import annotations

import tarfile
import zipfile
from pathlib import Path

import pytest

from cloneaudit.ingest.directory import IngestConfig, ingest_directory
from cloneaudit.model import IngestError

MIT_TEXT = "MIT License\n\nPermission is hereby granted, free of charge...\n"

FILES = {
    "alpha.py": "def alpha(a, b):\n    return a + b\n",
    "beta.py": "def beta(x):\n    return x * x\n",
    "sub/gamma.py": "VALUE = 3\nprint(VALUE)\n",
}


def write_tree(root: Path, files: dict[str, str] | None = None) -> Path:
    for rel, text in (files or FILES).items():
        path = root / rel
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    return root


def test_directory_of_three_files_yields_three_file_blocks(tmp_path):
    write_tree(tmp_path)
    corpus = ingest_directory(tmp_path, IngestConfig(granularities=("file",)))
    assert len(corpus.blocks) == 3
    assert all(b.granularity == "file" for b in corpus.blocks)
    assert corpus.ingest_log.files_seen == 3


def test_blocks_carry_file_mtime(tmp_path):
    write_tree(tmp_path)
    import os

    os.utime(tmp_path / "alpha.py", (1500000000, 1500000000))
    corpus = ingest_directory(tmp_path, IngestConfig())
    alpha = next(b for b in corpus.blocks if b.locator.path == "alpha.py")
    assert alpha.last_modified == 1500000000.0


def test_zip_archive_matches_directory_content_hash(tmp_path):
    src = write_tree(tmp_path / "proj")
    zip_path = tmp_path / "proj.zip"
    with zipfile.ZipFile(zip_path, "w") as zf:
        for rel in sorted(FILES):
            zf.write(src / rel, rel)
    config = IngestConfig(corpus_id="proj")
    from_dir = ingest_directory(src, config)
    from_zip = ingest_directory(zip_path, config)
    assert from_dir.content_hash == from_zip.content_hash
    assert len(from_zip.blocks) == 3


def test_tar_gz_archive_matches_directory_content_hash(tmp_path):
    src = write_tree(tmp_path / "proj")
    tar_path = tmp_path / "proj.tar.gz"
    with tarfile.open(tar_path, "w:gz") as tf:
        for rel in sorted(FILES):
            tf.add(src / rel, rel)
    config = IngestConfig(corpus_id="proj")
    assert (
        ingest_directory(src, config).content_hash
        == ingest_directory(tar_path, config).content_hash
    )


def test_binary_file_skipped_and_logged(tmp_path):
    write_tree(tmp_path)
    (tmp_path / "blob.py").write_bytes(b"\x00\x01\x02binary")
    corpus = ingest_directory(tmp_path, IngestConfig())
    assert len(corpus.blocks) == 3
    assert ("blob.py", "binary") in corpus.ingest_log.files_skipped


def test_missing_path_is_fatal(tmp_path):
    with pytest.raises(IngestError):
        ingest_directory(tmp_path / "nope", IngestConfig())


def test_extension_filter(tmp_path):
    write_tree(tmp_path)
    (tmp_path / "notes.txt").write_text("not code")
    corpus = ingest_directory(tmp_path, IngestConfig(extensions=(".py",)))
    assert len(corpus.blocks) == 3


def test_ingest_determinism(tmp_path):
    write_tree(tmp_path)
    config = IngestConfig(corpus_id="fixed")
    a = ingest_directory(tmp_path, config)
    b = ingest_directory(tmp_path, config)
    assert a.content_hash == b.content_hash
    assert [blk.block_id for blk in a.blocks] == [blk.block_id for blk in b.blocks]


def test_min_tokens_drops_blocks(tmp_path):
    write_tree(tmp_path, {"tiny.py": "x=1\n", "big.py": " ".join(["a"] * 40) + "\n"})
    corpus = ingest_directory(tmp_path, IngestConfig(min_tokens=23))
    assert [b.locator.path for b in corpus.blocks] == ["big.py"]
    for b in corpus.blocks:
        assert b.total_tokens >= 23


def test_license_resolution_three_layers(tmp_path):
    gpl_header = (
        "# This file is covered by the GNU General Public License,\n"
        "# version 3 or later.\n"
        "def f():\n    return 1\n"
    )
    write_tree(
        tmp_path,
        {
            "pkg/LICENSE": MIT_TEXT,
            "pkg/headered.py": gpl_header,
            "pkg/plain.py": "def g():\n    return 2\n",
            "bare.py": "def h():\n    return 3\n",
        },
    )
    corpus = ingest_directory(tmp_path, IngestConfig())
    by_path = {b.locator.path: b for b in corpus.blocks}
    assert by_path["pkg/headered.py"].license.id == "GPL-3.0"
    assert by_path["pkg/headered.py"].license.provenance == "header"
    assert by_path["pkg/plain.py"].license.id == "MIT"
    assert by_path["pkg/plain.py"].license.provenance == "package-file"
    assert by_path["bare.py"].license.id == "NONE"


def test_sub_blocks_inherit_file_license(tmp_path):
    write_tree(
        tmp_path,
        {
            "LICENSE": MIT_TEXT,
            "mod.py": "def f(a):\n    return a + 1\n\ndef g(b):\n    return b - 1\n",
        },
    )
    corpus = ingest_directory(
        tmp_path, IngestConfig(granularities=("file", "function"))
    )
    functions = [b for b in corpus.blocks if b.granularity == "function"]
    assert len(functions) == 2
    for b in functions:
        assert b.license.id == "MIT"
        assert b.license.provenance == "inherited"
    file_block = next(b for b in corpus.blocks if b.granularity == "file")
    assert file_block.license.provenance == "package-file"


def test_corpus_default_applies_to_unlicensed(tmp_path):
    write_tree(tmp_path, {"plain.py": "x = 1\n"})
    corpus = ingest_directory(
        tmp_path, IngestConfig(default_license="CC-BY-SA-3.0")
    )
    (block,) = corpus.blocks
    assert block.license.id == "CC-BY-SA-3.0"
    assert block.license.provenance == "corpus-default"


def test_unsupported_archive_format_fatal(tmp_path):
    bad = tmp_path / "archive.rar"
    bad.write_bytes(b"Rar!")
    with pytest.raises(IngestError):
        ingest_directory(bad, IngestConfig())
