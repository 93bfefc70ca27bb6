from .detect import (
    detect_header_license,
    inherit_tag,
    leading_comment_text,
    resolve_license,
    resolve_with_lookup,
)
from .matrix import (
    VERDICT_COMPATIBLE,
    VERDICT_CONFLICT,
    VERDICT_LACK,
    VERDICT_UNKNOWN,
    CompatibilityMatrix,
    classify_pair,
    default_matrix,
    load_matrix,
)
from .rules import DEFAULT_RULES, LicenseRule, dump_rules, load_rules, match_rules

__all__ = [
    "DEFAULT_RULES",
    "CompatibilityMatrix",
    "LicenseRule",
    "VERDICT_COMPATIBLE",
    "VERDICT_CONFLICT",
    "VERDICT_LACK",
    "VERDICT_UNKNOWN",
    "classify_pair",
    "default_matrix",
    "detect_header_license",
    "dump_rules",
    "inherit_tag",
    "leading_comment_text",
    "load_matrix",
    "load_rules",
    "match_rules",
    "resolve_license",
    "resolve_with_lookup",
]
