"""Command-line entry point.

Every subcommand writes its report or data to stdout (or ``--out``) and logs
to stderr. Exit status: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from csasr import charspace, ctc, features, metrics, textnorm, tokenizer
from csasr.manifest import DatasetManifest, UtteranceRecord, format_manifest, load_manifest, parse_manifest

log = logging.getLogger("csasr")


class UsageError(ValueError):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


# ------------------------------------------------------------------ helpers

def _read_text(path) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    return Path(path).read_text(encoding="utf-8")


def _write_text(path, text: str) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
        sys.stdout.flush()
    else:
        Path(path).write_bytes(text.encode("utf-8"))


def _read_manifest(path) -> DatasetManifest:
    if path in (None, "-"):
        return parse_manifest(sys.stdin.read().splitlines())
    return load_manifest(path)


def _lines(text: str) -> list[str]:
    return text.splitlines()


def _json(obj) -> str:
    return json.dumps(obj, ensure_ascii=False) + "\n"


def _jsonl(rows) -> str:
    return "".join(_json(r) for r in rows)


def _map(jobs: int, fn, items):
    items = list(items)
    if jobs <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))


def _safe_name(utt_id: str) -> str:
    return utt_id.replace("/", "_").replace("\\", "_")


# -------------------------------------------------------------- subcommands

def cmd_normalize(args) -> None:
    config = textnorm.NormalizationConfig(
        keep_punct=frozenset(args.keep),
        strip_diacritics=not args.no_diacritics,
        map_digits=not args.no_digits,
        lowercase_latin=not args.no_lowercase,
    )
    if args.format == "text":
        out = [textnorm.normalize_text(line, config) for line in _lines(_read_text(args.input))]
        _write_text(args.out, "".join(line + "\n" for line in out))
        return

    records = []
    for rec in _read_manifest(args.input):
        # token by token so language tags stay aligned; tokens that vanish drop their tag
        tags = rec.lang_tags if rec.lang_tags is not None else [None] * len(rec.tokens)
        kept = [(textnorm.normalize_text(tok, config), tag) for tok, tag in zip(rec.tokens, tags)]
        kept = [(tok, tag) for tok, tag in kept if tok]
        records.append(UtteranceRecord(
            id=rec.id,
            text=" ".join(tok for tok, _ in kept),
            audio_path=rec.audio_path,
            lang_tags=None if rec.lang_tags is None else tuple(tag for _, tag in kept),
            duration_s=rec.duration_s,
        ))
    _write_text(args.out, format_manifest(records))


def _charmap_text(table, text, lang, invert):
    if invert:
        return charspace.invert_charmap(table, charspace.unescape_symbols(table, text))[0]
    mapped = charspace.apply_charmap(table, text, lang)
    if table.mode is charspace.CharSpaceMode.DISTINCT:
        return charspace.escape_symbols(table, mapped)
    return mapped


def cmd_charmap(args) -> None:
    table = charspace.build_charmap(args.mode)
    if args.invert and table.mode is not charspace.CharSpaceMode.DISTINCT:
        raise UsageError("--invert only applies to --mode distinct")
    if args.format == "text":
        out = [_charmap_text(table, line, args.lang, args.invert) for line in _lines(_read_text(args.input))]
        _write_text(args.out, "".join(line + "\n" for line in out))
        return

    records = []
    for rec in _read_manifest(args.input):
        if args.lang is not None or rec.lang_tags is None or args.invert:
            text = _charmap_text(table, rec.text, args.lang, args.invert)
        else:
            text = " ".join(
                _charmap_text(table, tok, tag, False) for tok, tag in zip(rec.tokens, rec.lang_tags)
            )
        records.append(UtteranceRecord(rec.id, text, rec.audio_path, rec.lang_tags, rec.duration_s))
    _write_text(args.out, format_manifest(records))


def _corpus_lines(args) -> list[str]:
    if args.format == "text":
        return _lines(_read_text(args.input))
    return [rec.text for rec in _read_manifest(args.input)]


def cmd_bpe_train(args) -> None:
    model = tokenizer.train_bpe(_corpus_lines(args), args.size)
    log.info("trained %d symbols, %d merges", len(model.vocab), len(model.merges))
    if args.out in (None, "-"):
        _write_text(None, model.dumps())
    else:
        model.save(args.out)


def cmd_bpe_encode(args) -> None:
    model = tokenizer.BpeModel.load(args.model)

    def render(seq):
        return " ".join(map(str, seq.ids)) if args.ids else " ".join(seq.pieces)

    if args.format == "text":
        out = [render(model.encode(line)) for line in _lines(_read_text(args.input))]
        _write_text(args.out, "".join(line + "\n" for line in out))
        return
    records = [
        UtteranceRecord(rec.id, render(model.encode(rec.text)), rec.audio_path, None, rec.duration_s)
        for rec in _read_manifest(args.input)
    ]
    _write_text(args.out, format_manifest(records))


def cmd_bpe_decode(args) -> None:
    model = tokenizer.BpeModel.load(args.model)
    out = []
    for lineno, line in enumerate(_lines(_read_text(args.input)), start=1):
        try:
            ids = [int(x) for x in line.split()]
        except ValueError:
            raise UsageError(f"line {lineno}: expected whitespace-separated token ids") from None
        out.append(model.decode(ids))
    _write_text(args.out, "".join(line + "\n" for line in out))


def _extract(audio, cmvn_mode):
    feats = features.compute_features(audio)
    if cmvn_mode == "utterance":
        feats = features.apply_cmvn(feats)
    return feats


def cmd_featurize(args) -> None:
    if (args.wav is None) == (args.manifest is None):
        raise UsageError("give exactly one of --wav or --manifest")
    stats = features.CmvnStats.load(args.cmvn_stats) if args.cmvn_stats else None
    per_utt = "utterance" if args.cmvn == "utterance" and stats is None else "none"

    if args.wav is not None:
        if not args.out:
            raise UsageError("--wav needs --out")
        feats = _extract(features.read_wav(args.wav), per_utt)
        if stats is not None:
            feats = features.apply_cmvn(feats, stats)
        features.write_features(args.out, feats)
        _write_text(None, _json({"feats": args.out, "frames": feats.num_frames, "dims": feats.dims}))
        return

    if not args.out_dir:
        raise UsageError("--manifest needs --out-dir")
    manifest = load_manifest(args.manifest)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    def work(rec):
        return _extract(features.read_wav(manifest.audio_file(rec)), per_utt)

    mats = _map(args.jobs, work, manifest)
    if args.cmvn == "corpus" and stats is None:
        stats = features.compute_cmvn_stats(mats)
        if args.save_cmvn_stats:
            stats.save(args.save_cmvn_stats)
    rows = []
    for rec, feats in zip(manifest, mats):
        if stats is not None:
            feats = features.apply_cmvn(feats, stats)
        path = out_dir / f"{_safe_name(rec.id)}.feats"
        features.write_features(path, feats)
        rows.append({"id": rec.id, "feats": str(path), "frames": feats.num_frames, "dims": feats.dims})
    _write_text(None, _jsonl(rows))


def _parse_speeds(value: str) -> list[float]:
    try:
        speeds = [float(s) for s in value.split(",") if s.strip()]
    except ValueError:
        raise UsageError(f"--speed expects comma-separated numbers, got {value!r}") from None
    if not speeds or any(s <= 0 for s in speeds):
        raise UsageError("--speed factors must be positive")
    return speeds


def cmd_augment(args) -> None:
    manifest = load_manifest(args.manifest)
    speeds = _parse_speeds(args.speed)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    jobs = [(i, rec, k, f) for i, rec in enumerate(manifest) for k, f in enumerate(speeds)]

    def work(job):
        i, rec, k, factor = job
        audio = features.speed_perturb(features.read_wav(manifest.audio_file(rec)), factor)
        feats = _extract(audio, args.cmvn)
        if args.specaug:
            # seed per (utterance, speed) so results do not depend on --jobs
            seed = int(np.random.SeedSequence([args.seed, i, k]).generate_state(1)[0])
            config = features.SpecAugmentConfig(
                args.freq_masks, args.freq_width, args.time_masks, args.time_width,
                seed=seed, random_width=not args.fixed_width,
            )
            feats = features.spec_augment(feats, config)
        return feats

    mats = _map(args.jobs, work, jobs)
    rows = []
    for (i, rec, k, factor), feats in zip(jobs, mats):
        utt = f"{rec.id}_sp{factor:g}"
        path = out_dir / f"{_safe_name(utt)}.feats"
        features.write_features(path, feats)
        rows.append({"id": utt, "source": rec.id, "speed": factor, "feats": str(path),
                     "frames": feats.num_frames, "dims": feats.dims})
    _write_text(None, _jsonl(rows))


def _read_labels(path) -> list[int]:
    try:
        return [int(x) for x in _read_text(path).split()]
    except ValueError:
        raise UsageError(f"{path}: labels must be whitespace-separated integers") from None


def cmd_ctc_score(args) -> None:
    logp = features.read_features(args.logp).frames
    if args.logits:
        logp = ctc.normalize_logits(logp)
    labels = _read_labels(args.labels)
    report = {"ctc_loss": ctc.ctc_loss(logp, labels), "ce_loss": None,
              "alpha": args.alpha, "combined": None}
    if args.ce_logp:
        ce_logp = features.read_features(args.ce_logp).frames
        if args.logits:
            ce_logp = ctc.normalize_logits(ce_logp)
        report = ctc.LossBreakdown.build(report["ctc_loss"], ctc.ce_loss(ce_logp, labels), args.alpha).to_json()
    elif not 0.0 <= args.alpha <= 1.0:
        raise UsageError(f"alpha must be in [0, 1], got {args.alpha}")
    report["decoded"] = ctc.greedy_decode(logp)
    _write_text(None, _json(report))


def _paired_tokens(ref: DatasetManifest, hyp: DatasetManifest, normalize: bool):
    hyp_by_id = hyp.by_id()
    missing = [r.id for r in ref if r.id not in hyp_by_id]
    if missing:
        raise metrics.ScoringError(f"hypothesis missing for id {missing[0]!r} ({len(missing)} total)")
    extra = set(hyp_by_id) - set(ref.ids())
    if extra:
        raise metrics.ScoringError(f"hypothesis id {sorted(extra)[0]!r} has no reference")

    def toks(text):
        return (textnorm.normalize_text(text) if normalize else text).split()

    refs = [toks(r.text) for r in ref]
    hyps = [toks(hyp_by_id[r.id].text) for r in ref]
    return ref.ids(), refs, hyps


def cmd_score(args) -> None:
    if args.tw and not args.glm:
        raise UsageError("--tw needs --glm")
    ids, refs, hyps = _paired_tokens(_read_manifest(args.ref), load_manifest(args.hyp), args.normalize)
    if args.dialect_glm:
        dglm = metrics.load_glm(args.dialect_glm)
        refs = [metrics.apply_dialect_glm(r, dglm) for r in refs]
        hyps = [metrics.apply_dialect_glm(h, dglm) for h in hyps]
    report = metrics.wer(refs, hyps, ids)
    out = report.to_json()
    if args.tw:
        tw_report = metrics.tw(refs, hyps, metrics.load_glm(args.glm), ids)
        out = {"wer": report.wer, "tw": tw_report.wer, **{k: v for k, v in out.items() if k != "wer"}}
        for row, t in zip(out["per_utt"], tw_report.per_utterance):
            row["tw"] = t.wer
    _write_text(None, _json(out))


def cmd_cmi(args) -> None:
    report = metrics.cmi_corpus(load_manifest(args.manifest), args.auto_tag, args.only_mixed)
    _write_text(None, _json(report.to_json()))


# ------------------------------------------------------------------ parser

def build_parser() -> Parser:
    common = Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="seed for all randomness (default 0)")
    common.add_argument("--jobs", type=_positive_int, default=1, help="parallel workers across utterances")
    common.add_argument("--quiet", action="store_true", help="only log warnings and errors")

    io = Parser(add_help=False)
    io.add_argument("--in", dest="input", default="-", help="input file (default stdin)")
    io.add_argument("--out", default="-", help="output file (default stdout)")
    io.add_argument("--format", choices=["text", "manifest"], default="text",
                    help="plain text (one utterance per line) or JSONL manifest")

    parser = Parser(prog="csasr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", parser_class=Parser)
    sub.required = True

    p = sub.add_parser("normalize", parents=[common, io], help="clean transcripts")
    p.add_argument("--keep", default="%@", help="punctuation to retain (default '%%@')")
    p.add_argument("--no-diacritics", action="store_true", help="do not strip Arabic diacritics")
    p.add_argument("--no-digits", action="store_true", help="do not map Arabic-Indic digits")
    p.add_argument("--no-lowercase", action="store_true", help="do not lowercase Latin letters")
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("charmap", parents=[common, io], help="apply a character-space strategy")
    p.add_argument("--mode", choices=[m.value for m in charspace.CharSpaceMode], default="default")
    p.add_argument("--lang", choices=sorted(charspace.LANG_PLANES), help="language of Latin text")
    p.add_argument("--invert", action="store_true", help="decode escaped distinct-mode text")
    p.set_defaults(func=cmd_charmap)

    p = sub.add_parser("bpe-train", parents=[common, io], help="train a BPE model")
    p.add_argument("--size", type=int, required=True, help="target vocabulary size")
    p.set_defaults(func=cmd_bpe_train)

    p = sub.add_parser("bpe-encode", parents=[common, io], help="encode text with a BPE model")
    p.add_argument("--model", required=True)
    p.add_argument("--ids", action="store_true", help="emit token ids instead of pieces")
    p.set_defaults(func=cmd_bpe_encode)

    p = sub.add_parser("bpe-decode", parents=[common, io], help="decode token id lines")
    p.add_argument("--model", required=True)
    p.set_defaults(func=cmd_bpe_decode)

    p = sub.add_parser("featurize", parents=[common], help="extract 83-dim log-mel + pitch features")
    p.add_argument("--manifest")
    p.add_argument("--out-dir")
    p.add_argument("--wav")
    p.add_argument("--out")
    p.add_argument("--cmvn", choices=["utterance", "corpus", "none"], default="utterance")
    p.add_argument("--cmvn-stats", help="apply precomputed CMVN stats (JSON)")
    p.add_argument("--save-cmvn-stats", help="write corpus CMVN stats (with --cmvn corpus)")
    p.set_defaults(func=cmd_featurize)

    p = sub.add_parser("augment", parents=[common], help="speed perturbation + SpecAugment")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--speed", default="0.9,1.0,1.1")
    p.add_argument("--specaug", action="store_true")
    p.add_argument("--freq-masks", type=int, default=2)
    p.add_argument("--freq-width", type=int, default=27)
    p.add_argument("--time-masks", type=int, default=2)
    p.add_argument("--time-width", type=int, default=40)
    p.add_argument("--fixed-width", action="store_true", help="masks always use the maximum width")
    p.add_argument("--cmvn", choices=["utterance", "none"], default="utterance")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("ctc-score", parents=[common], help="CTC / CE / combined loss of a log-prob matrix")
    p.add_argument("--logp", required=True, help="T x V matrix in feature-file format")
    p.add_argument("--labels", required=True, help="whitespace-separated label ids")
    p.add_argument("--ce-logp", help="decoder log-probs, one row per label")
    p.add_argument("--alpha", type=float, default=ctc.DEFAULT_ALPHA)
    p.add_argument("--logits", action="store_true", help="inputs are unnormalized logits")
    p.set_defaults(func=cmd_ctc_score)

    p = sub.add_parser("score", parents=[common], help="WER and transliteration WER")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.add_argument("--glm", help="transliteration GLM (TSV)")
    p.add_argument("--tw", action="store_true", help="also report transliteration WER")
    p.add_argument("--dialect-glm", help="orthographic-variant GLM applied to both sides first")
    p.add_argument("--normalize", action="store_true", help="normalize texts before scoring")
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("cmi", parents=[common], help="Code-Mixing Index of a manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--auto-tag", action="store_true", help="tag untagged records by script")
    p.add_argument("--only-mixed", action="store_true", help="average over code-switched utterances only")
    p.set_defaults(func=cmd_cmi)
    return parser


def _positive_int(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


def run(argv) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return 1
    logging.basicConfig(
        level=logging.WARNING if args.quiet else logging.INFO,
        format="%(name)s: %(levelname)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )
    try:
        args.func(args)
    except OSError as e:
        log.error("%s", e)
        return 2
    except ValueError as e:
        log.error("%s", e)
        return 1
    return 0


def main(argv=None) -> int:
    return run(sys.argv[1:] if argv is None else argv)
