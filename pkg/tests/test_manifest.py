import json

import pytest
from hypothesis import given, settings, strategies as st

from csasr.manifest import (
    DatasetManifest,
    ManifestError,
    UtteranceRecord,
    load_manifest,
    save_manifest,
)


def write_lines(path, lines):
    path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
    return path


def test_load_two_records(tmp_path):
    p = write_lines(tmp_path / "m.jsonl", [
        '{"id": "u1", "text": "hello world"}',
        '{"id": "u2", "audio": "a/u2.wav", "text": "ذهب", "lang": ["ar"], "dur": 1.5}',
    ])
    m = load_manifest(p)
    assert len(m) == 2
    assert m.ids() == ["u1", "u2"]
    assert m[1].lang_tags == ("ar",)
    assert m[1].duration_s == 1.5
    assert m.audio_file(m[1]) == tmp_path / "a" / "u2.wav"


def test_empty_file(tmp_path):
    p = tmp_path / "empty.jsonl"
    p.write_text("")
    assert len(load_manifest(p)) == 0


def test_duplicate_id_names_it(tmp_path):
    p = write_lines(tmp_path / "m.jsonl", ['{"id": "u1", "text": "a"}', '{"id": "u1", "text": "b"}'])
    with pytest.raises(ManifestError, match="'u1'"):
        load_manifest(p)


def test_malformed_line_names_line_number(tmp_path):
    p = write_lines(tmp_path / "m.jsonl", ['{"id": "u1", "text": "a"}', '{"id": "u2", "text": '])
    with pytest.raises(ManifestError, match="line 2"):
        load_manifest(p)


@pytest.mark.parametrize("line", [
    '{"id": "", "text": "a"}',
    '{"text": "a"}',
    '{"id": "u", "text": "a b", "lang": ["en"]}',
    '{"id": "u", "text": "a", "dur": -1}',
    '{"id": "u", "text": "a", "speaker": "x"}',
    '["u", "a"]',
])
def test_invalid_records(tmp_path, line):
    p = write_lines(tmp_path / "m.jsonl", [line])
    with pytest.raises(ManifestError, match="line 1"):
        load_manifest(p)


def test_lang_tags_and_arabic_preserved(tmp_path):
    rec = UtteranceRecord("u1", "ذهبَ الى the meeting ١٢", lang_tags=("ar", "ar", "en", "en", "univ"))
    p = tmp_path / "m.jsonl"
    save_manifest(DatasetManifest((rec,)), p)
    back = load_manifest(p)[0]
    assert back.lang_tags == rec.lang_tags
    assert back.text.encode("utf-8") == rec.text.encode("utf-8")
    # stored as real UTF-8, not \u escapes
    assert "ذهبَ" in p.read_text(encoding="utf-8")


def test_unwritable_path_raises_oserror(tmp_path):
    with pytest.raises(OSError):
        save_manifest(DatasetManifest(), tmp_path / "missing-dir" / "m.jsonl")


token = st.text(alphabet=st.characters(blacklist_categories=("Cs", "Zs", "Zl", "Zp", "Cc")), min_size=1, max_size=6)


@st.composite
def records(draw, idx):
    words = draw(st.lists(token, max_size=5))
    text = " ".join(words)
    tags = draw(st.one_of(st.none(), st.just(tuple(draw(st.sampled_from(["ar", "en", "fr", "univ"])) for _ in words))))
    return UtteranceRecord(
        id=f"utt{idx:03d}",
        text=text,
        audio_path=draw(st.one_of(st.none(), st.just(f"wav/{idx}.wav"))),
        lang_tags=tags,
        duration_s=draw(st.one_of(st.none(), st.floats(0, 1e4, allow_nan=False))),
    )


@settings(max_examples=20, deadline=None)
@given(st.data())
def test_round_trip_identity(tmp_path_factory, data):
    recs = tuple(data.draw(records(i)) for i in range(100))
    m = DatasetManifest(recs)
    p = tmp_path_factory.mktemp("rt") / "m.jsonl"
    save_manifest(m, p)
    back = load_manifest(p)
    assert back == m
    assert [json.loads(line)["id"] for line in p.read_text(encoding="utf-8").splitlines()] == m.ids()
