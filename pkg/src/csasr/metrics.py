"""Scoring: edit-distance alignment, WER, Code-Mixing Index, GLM
transliteration and transliteration WER (TW).
"""

from __future__ import annotations

import collections
import enum
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

from csasr.manifest import DatasetManifest
from csasr.textnorm import Script, classify_token_script, normalize_text

# tags that carry no language identity in CMI
INDEPENDENT_TAGS = frozenset({"univ", "other", "ne", "acro", "x"})


class ScoringError(ValueError):
    pass


class Op(str, enum.Enum):
    MATCH = "M"
    SUB = "S"
    DEL = "D"
    INS = "I"


@dataclass(frozen=True)
class AlignmentResult:
    ops: tuple[tuple[Op, Optional[str], Optional[str]], ...]
    n_ref: int
    sub: int
    dele: int
    ins: int

    @property
    def errors(self) -> int:
        return self.sub + self.dele + self.ins

    @property
    def matches(self) -> int:
        return self.n_ref - self.sub - self.dele


def edit_align(ref: Sequence[str], hyp: Sequence[str]) -> AlignmentResult:
    """Unit-cost Levenshtein alignment.

    Among minimal-cost alignments the backtrace (from the end) prefers
    match, then substitution, deletion, insertion.
    """
    ref, hyp = list(ref), list(hyp)
    n, m = len(ref), len(hyp)
    dist = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dist[i][0] = i
    for j in range(1, m + 1):
        dist[0][j] = j
    for i in range(1, n + 1):
        row, prev, r = dist[i], dist[i - 1], ref[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] + (0 if r == hyp[j - 1] else 1)
            row[j] = min(diag, prev[j] + 1, row[j - 1] + 1)

    ops = []
    s = d = ins = 0
    i, j = n, m
    while i > 0 or j > 0:
        here = dist[i][j]
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dist[i - 1][j - 1] == here:
            ops.append((Op.MATCH, ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dist[i - 1][j - 1] + 1 == here:
            ops.append((Op.SUB, ref[i - 1], hyp[j - 1]))
            s += 1
            i, j = i - 1, j - 1
        elif i > 0 and dist[i - 1][j] + 1 == here:
            ops.append((Op.DEL, ref[i - 1], None))
            d += 1
            i -= 1
        else:
            ops.append((Op.INS, None, hyp[j - 1]))
            ins += 1
            j -= 1
    ops.reverse()
    return AlignmentResult(tuple(ops), n, s, d, ins)


@dataclass(frozen=True)
class UtteranceScore:
    n_ref: int
    sub: int
    dele: int
    ins: int
    id: Optional[str] = None

    @property
    def errors(self) -> int:
        return self.sub + self.dele + self.ins

    @property
    def wer(self) -> Optional[float]:
        # undefined for an empty reference
        return 100.0 * self.errors / self.n_ref if self.n_ref else None

    def to_json(self) -> dict:
        obj = {} if self.id is None else {"id": self.id}
        obj.update({"n_ref": self.n_ref, "sub": self.sub, "del": self.dele,
                    "ins": self.ins, "wer": self.wer})
        return obj


@dataclass(frozen=True)
class WerReport:
    per_utterance: tuple[UtteranceScore, ...]
    n_ref: int
    sub: int
    dele: int
    ins: int

    @property
    def errors(self) -> int:
        return self.sub + self.dele + self.ins

    @property
    def wer(self) -> float:
        return 100.0 * self.errors / self.n_ref

    def to_json(self) -> dict:
        return {
            "wer": self.wer,
            "n_ref": self.n_ref,
            "sub": self.sub,
            "del": self.dele,
            "ins": self.ins,
            "per_utt": [u.to_json() for u in self.per_utterance],
        }


def wer(refs: Sequence[Sequence[str]], hyps: Sequence[Sequence[str]],
        ids: Optional[Sequence[str]] = None) -> WerReport:
    """Corpus WER from pooled error counts, 100 * (S + D + I) / N_ref."""
    if len(refs) != len(hyps):
        raise ScoringError(f"{len(refs)} references but {len(hyps)} hypotheses")
    if ids is not None and len(ids) != len(refs):
        raise ScoringError("ids must parallel the reference list")
    scores = []
    for k, (r, h) in enumerate(zip(refs, hyps)):
        a = edit_align(r, h)
        scores.append(UtteranceScore(a.n_ref, a.sub, a.dele, a.ins, None if ids is None else ids[k]))
    n_ref = sum(u.n_ref for u in scores)
    if n_ref == 0:
        raise ScoringError("corpus has no reference tokens; WER is undefined")
    return WerReport(
        tuple(scores),
        n_ref,
        sum(u.sub for u in scores),
        sum(u.dele for u in scores),
        sum(u.ins for u in scores),
    )


# --------------------------------------------------------------------- CMI

def cmi_utterance(tokens: Sequence[str], lang_of: Sequence[str],
                  independent: frozenset = INDEPENDENT_TAGS) -> float:
    """Code-Mixing Index of one utterance, in [0, 100].

    ``100 * (1 - max_i(w_i) / (n - u))`` where ``w_i`` counts tokens of
    language ``i`` and ``u`` the language-independent ones; 0 when every
    token is language-independent.
    """
    if not tokens:
        raise ScoringError("CMI of an empty utterance is undefined")
    if len(tokens) != len(lang_of):
        raise ScoringError(f"{len(lang_of)} language labels for {len(tokens)} tokens")
    n = len(tokens)
    counts = collections.Counter(t for t in lang_of if t not in independent)
    u = n - sum(counts.values())
    if n == u:
        return 0.0
    return 100.0 * (1.0 - max(counts.values()) / (n - u))


AUTO_TAGS = {Script.ARABIC: "ar", Script.LATIN: "latin"}


def auto_tag(tokens: Iterable[str]) -> list[str]:
    """Language labels from token script; anything not purely Arabic or
    Latin (digits, symbols, mixed-script tokens) is language-independent."""
    return [AUTO_TAGS.get(classify_token_script(t), "univ") for t in tokens]


@dataclass(frozen=True)
class CmiReport:
    per_utterance: tuple[float, ...]
    corpus_cmi: float
    ids: tuple[str, ...] = ()
    only_mixed: bool = False

    def to_json(self) -> dict:
        return {
            "corpus_cmi": self.corpus_cmi,
            "only_mixed": self.only_mixed,
            "per_utt": [{"id": i, "cmi": c} for i, c in zip(self.ids, self.per_utterance)],
        }


def corpus_mean(values: Sequence[float], only_mixed: bool = False) -> float:
    vals = [v for v in values if v > 0] if only_mixed else list(values)
    return sum(vals) / len(vals) if vals else 0.0


def cmi_corpus(manifest: DatasetManifest, auto_tagging: bool = False,
               only_mixed: bool = False) -> CmiReport:
    """Per-utterance CMI and their unweighted mean.

    With ``only_mixed`` the mean covers code-switched utterances (CMI > 0)
    only. Records without language tags are script-tagged when
    ``auto_tagging`` is on and rejected otherwise.
    """
    values, ids = [], []
    for rec in manifest:
        tokens = rec.tokens
        if rec.lang_tags is not None:
            tags = list(rec.lang_tags)
        elif auto_tagging:
            tags = auto_tag(tokens)
        else:
            raise ScoringError(f"record {rec.id!r} has no language tags (enable auto-tagging?)")
        try:
            values.append(cmi_utterance(tokens, tags))
        except ScoringError as e:
            raise ScoringError(f"record {rec.id!r}: {e}") from None
        ids.append(rec.id)
    return CmiReport(tuple(values), corpus_mean(values, only_mixed), tuple(ids), only_mixed)


# --------------------------------------------------------------------- GLM

def glm_key(token: str) -> str:
    return normalize_text(token).casefold()


@dataclass(frozen=True)
class GlmTable:
    entries: dict = field(default_factory=dict)

    def __post_init__(self):
        for src, tgt in self.entries.items():
            if not src or not tgt:
                raise ScoringError("GLM sources and targets must be non-empty")

    def __len__(self):
        return len(self.entries)

    def get(self, token: str) -> Optional[str]:
        return self.entries.get(glm_key(token))

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[str, str]]) -> "GlmTable":
        return cls(_collect_entries((None, s, t) for s, t in pairs))


def _collect_entries(rows) -> dict:
    entries: dict = {}
    for lineno, src, tgt in rows:
        where = f"line {lineno}: " if lineno is not None else ""
        key = glm_key(src)
        tgt = tgt.strip()
        if not key or not tgt:
            raise ScoringError(f"{where}empty source or target")
        if len(key.split()) != 1 or len(tgt.split()) != 1:
            raise ScoringError(f"{where}GLM entries map one token to one token")
        if key in entries and entries[key] != tgt:
            raise ScoringError(
                f"{where}conflicting targets for {key!r}: {entries[key]!r} vs {tgt!r}"
            )
        entries[key] = tgt
    return entries


def parse_glm(lines: Iterable[str]) -> GlmTable:
    def rows():
        for lineno, line in enumerate(lines, start=1):
            line = line.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ScoringError(f"line {lineno}: expected 2 tab-separated columns, got {len(parts)}")
            yield lineno, parts[0], parts[1]

    return GlmTable(_collect_entries(rows()))


def load_glm(path) -> GlmTable:
    with open(Path(path), encoding="utf-8") as f:
        return parse_glm(f)


def _apply_glm(tokens: Sequence[str], glm: GlmTable, script: Script) -> list[str]:
    out = []
    for tok in tokens:
        target = glm.get(tok) if tok and classify_token_script(tok) is script else None
        out.append(target if target is not None else tok)
    return out


def glm_transliterate(tokens: Sequence[str], glm: GlmTable) -> list[str]:
    """Rewrite Latin-script tokens through the GLM; all other tokens,
    including mixed-script ones, pass through."""
    return _apply_glm(tokens, glm, Script.LATIN)


def apply_dialect_glm(tokens: Sequence[str], glm: GlmTable) -> list[str]:
    """Fold Arabic-script orthographic variants through the GLM."""
    return _apply_glm(tokens, glm, Script.ARABIC)


def tw(refs: Sequence[Sequence[str]], hyps: Sequence[Sequence[str]], glm: GlmTable,
       ids: Optional[Sequence[str]] = None) -> WerReport:
    """WER after transliterating both references and hypotheses."""
    return wer(
        [glm_transliterate(r, glm) for r in refs],
        [glm_transliterate(h, glm) for h in hyps],
        ids,
    )
