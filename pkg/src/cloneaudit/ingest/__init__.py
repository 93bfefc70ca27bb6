from .blocks import extract_blocks
from .directory import IngestConfig, ingest_directory
from .stackexchange import extract_code_snippets, ingest_stackexchange_dump, parse_tags

__all__ = [
    "IngestConfig",
    "extract_blocks",
    "extract_code_snippets",
    "ingest_directory",
    "ingest_stackexchange_dump",
    "parse_tags",
]
