"""Character-space strategies for Latin-script languages.

``DEFAULT``
    natural shared characters, the identity map.
``DISTINCT``
    every Latin letter gets a per-language symbol, so English ``a`` and
    French ``a`` become different output units. Symbols live in the
    supplementary private-use planes: English in plane 15, French in
    plane 16, at ``plane_base + ord(char)``.
``FORCED``
    nearby Latin characters are folded onto one representation
    (accents stripped, ``œ`` -> ``oe``, ``æ`` -> ``ae``).

Arabic characters, digits, punctuation and whitespace are never remapped.

Distinct-mode text is written to files with the escape syntax
``⟨lang:char⟩`` (for example ``⟨fr:l⟩⟨fr:e⟩``); a literal ``⟨`` is
doubled.
"""

from __future__ import annotations

import enum
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from types import MappingProxyType
from typing import Mapping, Optional

from csasr.textnorm import is_latin

LANG_PLANES = {"en": 0xF0000, "fr": 0x100000}
_PLANE_SIZE = 0x10000

# folded by hand; NFD takes care of accented letters (é -> e, ç -> c)
_LIGATURES = {"œ": "oe", "Œ": "OE", "æ": "ae", "Æ": "AE"}

OPEN, CLOSE = "⟨", "⟩"


class CharSpaceMode(str, enum.Enum):
    DEFAULT = "default"
    DISTINCT = "distinct"
    FORCED = "forced"


class CharMapError(ValueError):
    pass


@dataclass(frozen=True)
class CharMapTable:
    mode: CharSpaceMode
    # (char, lang) -> symbol; characters without an entry map to themselves
    forward: Mapping[tuple[str, Optional[str]], str]
    reverse: Mapping[str, tuple[str, str]]

    def lookup(self, ch: str, lang: Optional[str] = None) -> str:
        return self.forward.get((ch, lang), ch)


@lru_cache(maxsize=None)
def latin_inventory() -> tuple[str, ...]:
    """All Latin-script letters in the Basic Multilingual Plane."""
    return tuple(chr(cp) for cp in range(_PLANE_SIZE) if is_latin(chr(cp)))


def fold_latin(ch: str) -> str:
    base = "".join(
        c for c in unicodedata.normalize("NFD", ch) if unicodedata.category(c) != "Mn"
    ) or ch
    # ǣ decomposes to æ, which is folded further
    return "".join(_LIGATURES.get(c, c) for c in base)


def _is_tagged_symbol(ch: str) -> bool:
    return any(base <= ord(ch) < base + _PLANE_SIZE for base in LANG_PLANES.values())


@lru_cache(maxsize=None)
def build_charmap(mode: CharSpaceMode | str) -> CharMapTable:
    mode = CharSpaceMode(mode)
    forward: dict = {}
    reverse: dict = {}
    if mode is CharSpaceMode.DISTINCT:
        for lang, base in LANG_PLANES.items():
            for ch in latin_inventory():
                sym = chr(base + ord(ch))
                forward[(ch, lang)] = sym
                reverse[sym] = (ch, lang)
    elif mode is CharSpaceMode.FORCED:
        for ch in latin_inventory():
            folded = fold_latin(ch)
            if folded != ch:
                forward[(ch, None)] = folded
    return CharMapTable(mode, MappingProxyType(forward), MappingProxyType(reverse))


def apply_charmap(table: CharMapTable, text: str, lang: Optional[str] = None) -> str:
    if table.mode is CharSpaceMode.DEFAULT:
        return text
    out = []
    if table.mode is CharSpaceMode.FORCED:
        after_latin = False
        for ch in text:
            if after_latin and unicodedata.category(ch) == "Mn":
                continue
            after_latin = is_latin(ch)
            out.append(table.lookup(ch))
        return "".join(out)

    for ch in text:
        if not is_latin(ch):
            out.append(ch)
            continue
        if lang is None:
            raise CharMapError(f"distinct mode needs a language tag for Latin character {ch!r}")
        if lang not in LANG_PLANES:
            raise CharMapError(
                f"unsupported Latin language {lang!r} (expected one of {sorted(LANG_PLANES)})"
            )
        try:
            out.append(table.forward[(ch, lang)])
        except KeyError:
            raise CharMapError(f"no distinct symbol for {ch!r} (U+{ord(ch):04X})") from None
    return "".join(out)


def invert_charmap(table: CharMapTable, text: str) -> tuple[str, list[Optional[str]]]:
    """Recover surface characters and per-character language tags.

    Characters that were never remapped come back with tag ``None``. A bare
    Latin letter, or a private-use symbol outside the table, cannot occur in
    distinct-mode output and raises :class:`CharMapError`.
    """
    if table.mode is not CharSpaceMode.DISTINCT:
        raise CharMapError(f"only distinct-mode tables can be inverted, got {table.mode.value}")
    chars, tags = [], []
    for sym in text:
        hit = table.reverse.get(sym)
        if hit is not None:
            chars.append(hit[0])
            tags.append(hit[1])
        elif is_latin(sym) or _is_tagged_symbol(sym):
            raise CharMapError(f"unknown symbol {sym!r} (U+{ord(sym):04X})")
        else:
            chars.append(sym)
            tags.append(None)
    return "".join(chars), tags


def escape_symbols(table: CharMapTable, text: str) -> str:
    """Render distinct-mode text with ``⟨lang:char⟩`` escapes."""
    out = []
    for sym in text:
        hit = table.reverse.get(sym)
        if hit is not None:
            out.append(f"{OPEN}{hit[1]}:{hit[0]}{CLOSE}")
        elif sym == OPEN:
            out.append(OPEN + OPEN)
        else:
            out.append(sym)
    return "".join(out)


def unescape_symbols(table: CharMapTable, text: str) -> str:
    out = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch != OPEN:
            out.append(ch)
            i += 1
            continue
        if i + 1 < n and text[i + 1] == OPEN:
            out.append(OPEN)
            i += 2
            continue
        end = text.find(CLOSE, i + 1)
        body = text[i + 1 : end] if end != -1 else ""
        lang, sep, char = body.rpartition(":")
        if end == -1 or not sep or len(char) != 1:
            raise CharMapError(f"malformed escape at offset {i}: {text[i:i + 12]!r}")
        try:
            out.append(table.forward[(char, lang)])
        except KeyError:
            raise CharMapError(f"unknown symbol {OPEN}{body}{CLOSE}") from None
        i = end + 1
    return "".join(out)
