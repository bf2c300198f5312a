import pytest
from hypothesis import given, settings, strategies as st

from csasr.charspace import (
    CharMapError,
    CharSpaceMode,
    apply_charmap,
    build_charmap,
    escape_symbols,
    fold_latin,
    invert_charmap,
    latin_inventory,
    unescape_symbols,
)

DEFAULT = build_charmap(CharSpaceMode.DEFAULT)
DISTINCT = build_charmap(CharSpaceMode.DISTINCT)
FORCED = build_charmap(CharSpaceMode.FORCED)

french = st.text(alphabet="abcdefghijklmnopqrstuvwxyzàâæçéèêëîïôœùûüÿ '-", max_size=30)
any_text = st.text(max_size=30)


def test_default_is_identity_table():
    assert len(DEFAULT.forward) == 0
    assert DEFAULT.lookup("é") == "é"


@settings(max_examples=300)
@given(any_text)
def test_default_identity(text):
    assert apply_charmap(DEFAULT, text) == text


def test_distinct_separates_languages():
    en = apply_charmap(DISTINCT, "a", "en")
    fr = apply_charmap(DISTINCT, "a", "fr")
    assert en != fr and en != "a" and fr != "a"


def test_distinct_injective_per_language():
    for lang in ("en", "fr"):
        syms = [DISTINCT.forward[(c, lang)] for c in latin_inventory()]
        assert len(set(syms)) == len(syms)


def test_distinct_round_trip_le():
    text, tags = invert_charmap(DISTINCT, apply_charmap(DISTINCT, "le", "fr"))
    assert text == "le" and tags == ["fr", "fr"]


@settings(max_examples=300)
@given(french, st.sampled_from(["en", "fr"]))
def test_distinct_round_trip(text, lang):
    mapped = apply_charmap(DISTINCT, text, lang)
    back, tags = invert_charmap(DISTINCT, mapped)
    assert back == text
    assert tags == [lang if c.isalpha() else None for c in text]


def test_distinct_requires_language():
    with pytest.raises(CharMapError, match="language"):
        apply_charmap(DISTINCT, "abc")
    with pytest.raises(CharMapError, match="unsupported"):
        apply_charmap(DISTINCT, "abc", "de")
    # no Latin letters, no tag needed
    assert apply_charmap(DISTINCT, "مرحبا 12") == "مرحبا 12"


def test_invert_errors():
    with pytest.raises(CharMapError, match="distinct"):
        invert_charmap(DEFAULT, "abc")
    with pytest.raises(CharMapError, match="unknown symbol"):
        invert_charmap(DISTINCT, "a")
    with pytest.raises(CharMapError, match="unknown symbol"):
        invert_charmap(DISTINCT, chr(0xF0000 + 0x3A9))  # plane-15 slot of a non-Latin char


def test_forced_examples():
    assert apply_charmap(FORCED, "café") == "cafe"
    assert fold_latin("é") == "e"
    assert apply_charmap(FORCED, "cœur ça æ") == "coeur ca ae"
    # decomposed accents are dropped as well
    assert apply_charmap(FORCED, "café") == "cafe"


def test_forced_table_idempotent():
    for src, dst in FORCED.forward.items():
        assert apply_charmap(FORCED, dst) == dst, src


@settings(max_examples=300)
@given(any_text)
def test_forced_idempotent(text):
    once = apply_charmap(FORCED, text)
    assert apply_charmap(FORCED, once) == once


@settings(max_examples=300)
@given(st.text(alphabet=st.characters(blacklist_characters="œŒæÆ"), max_size=30))
def test_forced_alphabet_does_not_grow(text):
    # ligature expansion (œ -> oe) is the one way the alphabet can grow
    assert len(set(apply_charmap(FORCED, text))) <= len(set(text))


@settings(max_examples=200)
@given(st.text(alphabet=st.characters(min_codepoint=0x600, max_codepoint=0x6FF), max_size=20))
def test_arabic_fixed_points(text):
    for table in (DEFAULT, DISTINCT, FORCED):
        assert apply_charmap(table, text, "en") == text


def test_digits_punct_untouched():
    for table in (DEFAULT, DISTINCT, FORCED):
        assert apply_charmap(table, "12 % @ ,", "fr") == "12 % @ ,"


def test_escape_syntax():
    mapped = apply_charmap(DISTINCT, "le ⟨x", "fr")
    esc = escape_symbols(DISTINCT, mapped)
    assert esc == "⟨fr:l⟩⟨fr:e⟩ ⟨⟨⟨fr:x⟩"
    assert unescape_symbols(DISTINCT, esc) == mapped
    with pytest.raises(CharMapError):
        unescape_symbols(DISTINCT, "⟨de:x⟩")
    with pytest.raises(CharMapError):
        unescape_symbols(DISTINCT, "⟨fr:x")
