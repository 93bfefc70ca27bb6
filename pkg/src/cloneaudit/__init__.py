"""cloneaudit: token-overlap clone detection with license compliance checks."""

from .engine import (
    DetectionConfig,
    InvertedIndex,
    build_index,
    detect_clones,
    is_clone,
    overlap,
    size_class,
)
from .ingest import (
    IngestConfig,
    extract_blocks,
    ingest_directory,
    ingest_stackexchange_dump,
)
from .licensing import (
    classify_pair,
    default_matrix,
    detect_header_license,
    resolve_license,
)
from .model import (
    ClonePair,
    CloneAuditError,
    CodeBlock,
    Corpus,
    LicenseTag,
    SourceLocator,
    TokenBag,
    read_corpus,
    write_corpus,
)
from .report import (
    CloneReport,
    aggregate_license_stats,
    build_report,
    render_report,
    sample_pairs,
    scan_attribution,
)
from .tokenizer import tokenize

__version__ = "0.1.0"

__all__ = [
    "ClonePair",
    "CloneAuditError",
    "CloneReport",
    "CodeBlock",
    "Corpus",
    "DetectionConfig",
    "IngestConfig",
    "InvertedIndex",
    "LicenseTag",
    "SourceLocator",
    "TokenBag",
    "aggregate_license_stats",
    "build_index",
    "build_report",
    "classify_pair",
    "default_matrix",
    "detect_clones",
    "detect_header_license",
    "extract_blocks",
    "ingest_directory",
    "ingest_stackexchange_dump",
    "is_clone",
    "overlap",
    "read_corpus",
    "render_report",
    "resolve_license",
    "sample_pairs",
    "scan_attribution",
    "size_class",
    "tokenize",
    "write_corpus",
]
