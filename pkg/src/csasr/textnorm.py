"""Transcript cleaning for mixed Arabic / Latin-script text.

Rules are applied in a fixed order so the result is deterministic and
idempotent:

1. delete punctuation and symbols (Unicode P* / S*) except a keep-list,
   by default ``%`` and ``@``;
2. delete Arabic diacritics (harakat, dagger alif, Quranic marks, tatweel);
3. map Arabic-Indic and Eastern Arabic-Indic digits to ASCII;
4. lowercase Latin letters;
5. collapse whitespace.
"""

from __future__ import annotations

import enum
import unicodedata
from dataclasses import dataclass
from functools import lru_cache

ARABIC_DIACRITICS = frozenset(
    [chr(c) for c in range(0x064B, 0x0660)]
    + ["\u0670"]
    + [chr(c) for c in range(0x06D6, 0x06EE)]
    + ["\u0640"]  # tatweel
)

_DIGIT_MAP = {0x0660 + i: str(i) for i in range(10)}
_DIGIT_MAP.update({0x06F0 + i: str(i) for i in range(10)})

_ARABIC_RANGES = (
    (0x0600, 0x06FF),
    (0x0750, 0x077F),
    (0x08A0, 0x08FF),
    (0xFB50, 0xFDFF),
    (0xFE70, 0xFEFF),
)


def is_punct_or_symbol(ch: str) -> bool:
    return unicodedata.category(ch)[0] in "PS"


@dataclass(frozen=True)
class NormalizationConfig:
    keep_punct: frozenset = frozenset("%@")
    strip_diacritics: bool = True
    map_digits: bool = True
    lowercase_latin: bool = True

    def __post_init__(self):
        keep = frozenset(self.keep_punct)
        object.__setattr__(self, "keep_punct", keep)
        bad = sorted(c for c in keep if len(c) != 1 or not is_punct_or_symbol(c))
        if bad:
            raise ValueError(f"keep_punct may only hold punctuation/symbol characters, got {bad}")


DEFAULT_CONFIG = NormalizationConfig()


@lru_cache(maxsize=4096)
def is_latin(ch: str) -> bool:
    return ch.isalpha() and "LATIN" in unicodedata.name(ch, "")


def is_arabic(ch: str) -> bool:
    cp = ord(ch)
    return any(lo <= cp <= hi for lo, hi in _ARABIC_RANGES)


def strip_punct(text: str, keep=DEFAULT_CONFIG.keep_punct) -> str:
    return "".join(c for c in text if c in keep or not is_punct_or_symbol(c))


def strip_diacritics(text: str) -> str:
    return "".join(c for c in text if c not in ARABIC_DIACRITICS)


def map_digits(text: str) -> str:
    return text.translate(_DIGIT_MAP)


def lowercase_latin(text: str) -> str:
    return "".join(c.lower() if is_latin(c) else c for c in text)


def normalize_text(text: str, config: NormalizationConfig = DEFAULT_CONFIG) -> str:
    text = strip_punct(text, config.keep_punct)
    if config.strip_diacritics:
        text = strip_diacritics(text)
    if config.map_digits:
        text = map_digits(text)
    if config.lowercase_latin:
        text = lowercase_latin(text)
    return " ".join(text.split())


class Script(str, enum.Enum):
    ARABIC = "Arabic"
    LATIN = "Latin"
    DIGIT = "Digit"
    MIXED = "Mixed"
    OTHER = "Other"


def classify_token_script(token: str) -> Script:
    """Classify a token by the scripts of its letters.

    Non-letters (digits, marks, punctuation) are ignored once at least one
    letter is present. A token with letters from both Arabic and Latin
    script is ``MIXED``, e.g. a partially transliterated word.
    """
    if not token:
        raise ValueError("cannot classify an empty token")
    has_ar = has_lat = has_other = False
    for c in token:
        if not c.isalpha():
            continue
        if is_arabic(c):
            has_ar = True
        elif is_latin(c):
            has_lat = True
        else:
            has_other = True
    if has_ar and has_lat:
        return Script.MIXED
    if has_other:
        return Script.OTHER
    if has_ar:
        return Script.ARABIC
    if has_lat:
        return Script.LATIN
    if all(c.isdigit() for c in token):
        return Script.DIGIT
    return Script.OTHER
