"""Transcript normalization applied before scoring.

Order is fixed: Unicode NFC composition, lowercasing, punctuation stripping,
whitespace collapse. Manifests store transcripts raw; this runs at eval time.
"""

from __future__ import annotations

import unicodedata
from dataclasses import dataclass


@dataclass(frozen=True)
class NormalizePolicy:
    lowercase: bool = True
    strip_punctuation: bool = True
    # None means every character in a Unicode punctuation category (P*).
    punctuation: frozenset[str] | None = None


DEFAULT_POLICY = NormalizePolicy()
RAW_POLICY = NormalizePolicy(lowercase=False, strip_punctuation=False)


def _is_punct(ch: str, policy: NormalizePolicy) -> bool:
    if policy.punctuation is not None:
        return ch in policy.punctuation
    return unicodedata.category(ch).startswith("P")


def normalize_text(text: str, policy: NormalizePolicy = DEFAULT_POLICY) -> list[str]:
    """Tokenize text for scoring under the given policy."""
    text = unicodedata.normalize("NFC", text)
    if policy.lowercase:
        text = text.lower()
    if policy.strip_punctuation:
        text = "".join(ch for ch in text if not _is_punct(ch, policy))
    # str.split collapses every run of Unicode whitespace, NBSP included.
    return text.split()
