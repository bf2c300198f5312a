"""JSON Lines dataset manifests.

Each line holds one utterance::

    {"id": "u1", "audio": "wav/u1.wav", "text": "ذهب الى the meeting",
     "lang": ["ar", "ar", "en", "en"], "dur": 2.4}

Only ``id`` and ``text`` are required. Relative audio paths are resolved
against the directory holding the manifest.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator, Optional, Sequence


class ManifestError(ValueError):
    pass


@dataclass(frozen=True)
class UtteranceRecord:
    id: str
    text: str
    audio_path: Optional[str] = None
    lang_tags: Optional[tuple[str, ...]] = None
    duration_s: Optional[float] = None

    def __post_init__(self):
        if not isinstance(self.id, str) or not self.id:
            raise ManifestError("utterance id must be a non-empty string")
        if not isinstance(self.text, str):
            raise ManifestError(f"{self.id}: text must be a string")
        if self.lang_tags is not None:
            tags = tuple(self.lang_tags)
            object.__setattr__(self, "lang_tags", tags)
            if not all(isinstance(t, str) for t in tags):
                raise ManifestError(f"{self.id}: language tags must be strings")
            n_tokens = len(self.text.split())
            if len(tags) != n_tokens:
                raise ManifestError(
                    f"{self.id}: {len(tags)} language tags for {n_tokens} tokens"
                )
        if self.duration_s is not None:
            if isinstance(self.duration_s, bool) or not isinstance(self.duration_s, (int, float)):
                raise ManifestError(f"{self.id}: duration must be a number")
            if not self.duration_s >= 0:
                raise ManifestError(f"{self.id}: duration must be >= 0")

    @property
    def tokens(self) -> list[str]:
        return self.text.split()

    def to_json(self) -> dict:
        obj = {"id": self.id}
        if self.audio_path is not None:
            obj["audio"] = self.audio_path
        obj["text"] = self.text
        if self.lang_tags is not None:
            obj["lang"] = list(self.lang_tags)
        if self.duration_s is not None:
            obj["dur"] = self.duration_s
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "UtteranceRecord":
        if not isinstance(obj, dict):
            raise ManifestError("expected a JSON object")
        unknown = set(obj) - {"id", "audio", "text", "lang", "dur"}
        if unknown:
            raise ManifestError(f"unknown field(s): {', '.join(sorted(unknown))}")
        if "id" not in obj or "text" not in obj:
            raise ManifestError("missing required field 'id' or 'text'")
        lang = obj.get("lang")
        if lang is not None and not isinstance(lang, list):
            raise ManifestError("'lang' must be a list of strings")
        audio = obj.get("audio")
        if audio is not None and not isinstance(audio, str):
            raise ManifestError("'audio' must be a string")
        return cls(
            id=obj["id"],
            text=obj["text"],
            audio_path=audio,
            lang_tags=tuple(lang) if lang is not None else None,
            duration_s=obj.get("dur"),
        )


@dataclass(frozen=True)
class DatasetManifest:
    records: tuple[UtteranceRecord, ...] = ()
    # directory used to resolve relative audio paths; not part of equality
    root: Optional[Path] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        seen = set()
        for rec in records:
            if rec.id in seen:
                raise ManifestError(f"duplicate utterance id {rec.id!r}")
            seen.add(rec.id)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[UtteranceRecord]:
        return iter(self.records)

    def __getitem__(self, i):
        return self.records[i]

    def by_id(self) -> dict[str, UtteranceRecord]:
        return {r.id: r for r in self.records}

    def ids(self) -> list[str]:
        return [r.id for r in self.records]

    def audio_file(self, record: UtteranceRecord) -> Path:
        if record.audio_path is None:
            raise ManifestError(f"{record.id}: record has no audio path")
        p = Path(record.audio_path)
        if not p.is_absolute() and self.root is not None:
            p = self.root / p
        return p

    def replace_records(self, records: Iterable[UtteranceRecord]) -> "DatasetManifest":
        return DatasetManifest(tuple(records), root=self.root)


def parse_manifest(lines: Iterable[str], root: Optional[Path] = None) -> DatasetManifest:
    records = []
    seen = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            raise ManifestError(f"line {lineno}: malformed JSON ({e.msg})") from None
        try:
            rec = UtteranceRecord.from_json(obj)
        except ManifestError as e:
            raise ManifestError(f"line {lineno}: {e}") from None
        if rec.id in seen:
            raise ManifestError(f"line {lineno}: duplicate utterance id {rec.id!r}")
        seen.add(rec.id)
        records.append(rec)
    return DatasetManifest(tuple(records), root=root)


def load_manifest(path) -> DatasetManifest:
    path = Path(path)
    with open(path, encoding="utf-8") as f:
        return parse_manifest(f, root=path.resolve().parent)


def format_manifest(manifest: DatasetManifest | Sequence[UtteranceRecord]) -> str:
    return "".join(
        json.dumps(r.to_json(), ensure_ascii=False) + "\n" for r in manifest
    )


def save_manifest(manifest: DatasetManifest, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(format_manifest(manifest))
