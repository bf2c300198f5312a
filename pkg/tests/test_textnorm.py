import unicodedata

import pytest
from hypothesis import given, settings, strategies as st

from csasr.textnorm import (
    ARABIC_DIACRITICS,
    NormalizationConfig,
    Script,
    classify_token_script,
    normalize_text,
    strip_diacritics,
)

mixed_text = st.text(
    alphabet=st.one_of(
        st.characters(min_codepoint=0x20, max_codepoint=0x24F),
        st.characters(min_codepoint=0x600, max_codepoint=0x6FF),
        st.sampled_from(" \t\n%@!?،؟٪"),
    ),
    max_size=40,
)


def test_arabic_indic_digit():
    assert normalize_text("١") == "1"
    assert normalize_text("٠١٢٣٤٥٦٧٨٩ ۰۱۲۳۴۵۶۷۸۹") == "0123456789 0123456789"


def test_lowercase():
    assert normalize_text("HELLO World") == "hello world"


def test_punctuation_rules():
    assert normalize_text("50% @user, ok!") == "50% @user ok"
    # Arabic comma and question mark are punctuation too
    assert normalize_text("كيف، حالك؟") == "كيف حالك"


def test_keep_set_is_configurable():
    cfg = NormalizationConfig(keep_punct=frozenset("!"))
    assert normalize_text("50% ok!", cfg) == "50 ok!"


def test_keep_set_rejects_letters():
    with pytest.raises(ValueError):
        NormalizationConfig(keep_punct=frozenset("a%"))


def test_rules_can_be_disabled():
    cfg = NormalizationConfig(strip_diacritics=False, map_digits=False, lowercase_latin=False)
    assert normalize_text("ذَهَبَ ١ ABC", cfg) == "ذَهَبَ ١ ABC"


def test_diacritics_and_tatweel():
    assert strip_diacritics("كتابٌ") == "كتاب"  # fathatan-like tanween U+064C
    assert strip_diacritics("ً") == ""
    assert strip_diacritics("بٰ") == "ب"
    assert normalize_text("جـــميل") == "جميل"
    assert strip_diacritics("plain text") == "plain text"


def test_diacritic_set_boundaries():
    expected = set(range(0x064B, 0x0660)) | {0x0670, 0x0640} | set(range(0x06D6, 0x06EE))
    assert {ord(c) for c in ARABIC_DIACRITICS} == expected


@settings(max_examples=300)
@given(mixed_text)
def test_normalize_idempotent(text):
    once = normalize_text(text)
    assert normalize_text(once) == once


@settings(max_examples=300)
@given(mixed_text)
def test_strip_diacritics_idempotent(text):
    assert strip_diacritics(strip_diacritics(text)) == strip_diacritics(text)


@settings(max_examples=300)
@given(mixed_text)
def test_normalized_output_properties(text):
    out = normalize_text(text)
    assert len(out.split()) <= len(text.split())
    assert out == out.strip() and "  " not in out
    for c in out:
        assert c not in ARABIC_DIACRITICS
        assert not 0x0660 <= ord(c) <= 0x0669 and not 0x06F0 <= ord(c) <= 0x06F9
        assert not (c.isupper() and "LATIN" in unicodedata.name(c, ""))
        if unicodedata.category(c)[0] in "PS":
            assert c in "%@"


@pytest.mark.parametrize("token,expected", [
    ("drones", Script.LATIN),
    ("café", Script.LATIN),
    ("الدرونز", Script.ARABIC),
    ("ارتificial", Script.MIXED),
    ("2019", Script.DIGIT),
    ("٢٠١٩", Script.DIGIT),
    ("50%", Script.OTHER),
    ("привет", Script.OTHER),
    ("covid19", Script.LATIN),
])
def test_classify(token, expected):
    assert classify_token_script(token) is expected


def test_classify_empty():
    with pytest.raises(ValueError):
        classify_token_script("")
