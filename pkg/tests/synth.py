"""Deterministic synthetic data: mixed Arabic / English / French text and tones."""

import random

import numpy as np

from csasr.features import AudioBuffer, write_wav
from csasr.manifest import DatasetManifest, UtteranceRecord, save_manifest

AR = ["ذهب", "الى", "الاجتماع", "في", "الصباح", "نحن", "هذا", "الدرونز", "كتاب", "مدرسة", "جميل", "اليوم"]
EN = ["the", "meeting", "drones", "artificial", "intelligence", "is", "very", "good", "today", "we"]
FR = ["le", "café", "est", "très", "bon", "cœur", "nous", "à", "la", "réunion", "ça"]
POOLS = {"ar": AR, "en": EN, "fr": FR}


def mixed_line(rng: random.Random):
    base = rng.choice(["ar", "ar", "en", "fr"])
    words, tags = [], []
    for _ in range(rng.randint(2, 9)):
        lang = base if rng.random() < 0.7 else rng.choice(["ar", "en", "fr"])
        words.append(rng.choice(POOLS[lang]))
        tags.append(lang)
    return " ".join(words), tuple(tags)


def mixed_corpus(n, seed=0):
    rng = random.Random(seed)
    return [mixed_line(rng)[0] for _ in range(n)]


def tone_audio(freq, seconds, fs=16000, seed=0):
    t = np.arange(int(seconds * fs)) / fs
    noise = np.random.default_rng(seed).normal(0, 0.01, len(t))
    return AudioBuffer(0.4 * np.sin(2 * np.pi * freq * t) + noise, fs)


def write_dataset(root, n=10, seed=0):
    """Write n wav files plus a reference manifest (raw, un-normalized text)
    and a hypothesis manifest with a few errors. Returns (ref_path, hyp_path)."""
    rng = random.Random(seed)
    (root / "wav").mkdir(parents=True, exist_ok=True)
    refs, hyps = [], []
    for i in range(n):
        text, tags = mixed_line(rng)
        words = text.split()
        if i == 0:
            words[0] = words[0].upper() + ","
        utt = f"utt{i:02d}"
        dur = 0.6 + 0.1 * (i % 5)
        write_wav(root / "wav" / f"{utt}.wav", tone_audio(120 + 15 * i, dur, seed=i))
        refs.append(UtteranceRecord(utt, " ".join(words), f"wav/{utt}.wav", tags, dur))
        hyp_words = text.split()
        if i % 3 == 1:
            hyp_words[-1] = "drones"
        hyps.append(UtteranceRecord(utt, " ".join(hyp_words)))
    save_manifest(DatasetManifest(tuple(refs)), root / "ref.jsonl")
    save_manifest(DatasetManifest(tuple(hyps)), root / "hyp.jsonl")
    return root / "ref.jsonl", root / "hyp.jsonl"
