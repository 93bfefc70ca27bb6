"""Lexical scanner turning source text into a bag of tokens.

The scan keeps identifiers, keywords, numeric and string literals, and
operators. Comments, whitespace, and pure delimiters (parentheses, brackets,
braces, colons, commas, semicolons) are dropped, so token bags are invariant
under reformatting and commenting. A string literal is a single token
including its quotes. The scanner is Python-flavored but never fails: any
text yields a (possibly empty) bag.
"""

from __future__ import annotations

import re
from collections import Counter

from .model import EMPTY_BAG, TokenBag

# Bump whenever token output changes; part of the index cache fingerprint.
TOKENIZER_VERSION = "1"

_TOKEN_RE = re.compile(
    r"""
      (?P<comment> \#[^\n]* )
    | (?P<string>
          [rRbBuUfF]{0,3}
          (?: '''[\s\S]*?'''
            | \"\"\"[\s\S]*?\"\"\"
            | '(?:[^'\\\n]|\\.)*'
            | "(?:[^"\\\n]|\\.)*"
          )
      )
    | (?P<number>
          0[xX][0-9a-fA-F_]+
        | 0[oO][0-7_]+
        | 0[bB][01_]+
        | (?:\d[\d_]*\.?[\d_]*|\.\d[\d_]*)(?:[eE][+-]?\d+)?[jJ]?
      )
    | (?P<name> [^\W\d]\w* )
    | (?P<op>
          \*\*=? | //=? | >>=? | <<=? | <= | >= | == | != | -> | := | \.\.\.
        | [-+*/%@&|^]=? | [~<>=.!?$`\\]
      )
    | (?P<skip> [\s()\[\]{}:,;] )
    | (?P<other> . )
    """,
    re.VERBOSE,
)

_DROPPED = ("comment", "skip")


def iter_tokens(text: str):
    """Yield kept token strings in source order."""
    for match in _TOKEN_RE.finditer(text):
        kind = match.lastgroup
        if kind in _DROPPED:
            continue
        yield match.group()


def tokenize(text: str) -> TokenBag:
    counts = Counter(iter_tokens(text))
    if not counts:
        return EMPTY_BAG
    return TokenBag.from_entries(counts)
