"""Parsing and cleaning for Crubadan-style statistic files and raw text.

Statistic files are plain UTF-8: unigram files carry `word count` lines,
bigram files `w1 w2 count` lines.  The count is the last whitespace field
so words containing digits survive.  Malformed lines are skipped and
counted, never fatal, but a file with no well-formed line at all is an
error.
"""

import unicodedata
from dataclasses import dataclass, field

import numpy as np


@dataclass
class UnigramStats:
    entries: dict = field(default_factory=dict)  # word -> count
    skipped: int = 0


@dataclass
class BigramStats:
    entries: dict = field(default_factory=dict)  # (w1, w2) -> count
    skipped: int = 0


@dataclass
class Corpus:
    utterances: list = field(default_factory=list)  # list of token lists


def _parse_counted_lines(lines, num_words):
    entries = {}
    skipped = 0
    for line in lines:
        fields = line.split()
        if len(fields) != num_words + 1:
            if line.strip():
                skipped += 1
            continue
        try:
            count = int(fields[-1])
        except ValueError:
            skipped += 1
            continue
        if count < 1:
            skipped += 1
            continue
        key = fields[0] if num_words == 1 else tuple(fields[:-1])
        entries[key] = entries.get(key, 0) + count
    return entries, skipped


def parse_unigrams(lines) -> UnigramStats:
    """Parse `word count` lines; duplicate words have their counts summed."""
    entries, skipped = _parse_counted_lines(lines, 1)
    if not entries:
        raise ValueError("empty statistics: no well-formed unigram lines")
    return UnigramStats(entries, skipped)


def parse_bigrams(lines) -> BigramStats:
    """Parse `w1 w2 count` lines; duplicates summed, malformed skipped."""
    entries, skipped = _parse_counted_lines(lines, 2)
    if not entries:
        raise ValueError("empty statistics: no well-formed bigram lines")
    return BigramStats(entries, skipped)


def serialize_unigrams(stats: UnigramStats) -> str:
    return "".join(f"{w} {c}\n" for w, c in sorted(stats.entries.items()))


def serialize_bigrams(stats: BigramStats) -> str:
    return "".join(f"{w1} {w2} {c}\n"
                   for (w1, w2), c in sorted(stats.entries.items()))


def _strip_punct(token: str, punctuation) -> str:
    if punctuation is None:
        def is_punct(ch):
            return unicodedata.category(ch).startswith("P")
    else:
        def is_punct(ch):
            return ch in punctuation
    start, end = 0, len(token)
    while start < end and is_punct(token[start]):
        start += 1
    while end > start and is_punct(token[end - 1]):
        end -= 1
    return token[start:end]


def normalize_token(token: str, punctuation=None) -> str:
    """NFC-normalize, lowercase, and strip edge punctuation from one token."""
    token = unicodedata.normalize("NFC", token).lower()
    return _strip_punct(token, punctuation)


def normalize_corpus(lines, punctuation=None) -> Corpus:
    """Clean raw text lines into whitespace-tokenized utterances.

    Each line is NFC-normalized and lowercased; leading/trailing
    punctuation is stripped from every token (Unicode P* categories by
    default, or an explicit character set).  Tokens emptied by stripping
    and lines with no tokens left are dropped.
    """
    utterances = []
    for line in lines:
        tokens = [normalize_token(tok, punctuation) for tok in line.split()]
        tokens = [tok for tok in tokens if tok]
        if tokens:
            utterances.append(tokens)
    return Corpus(utterances)


def descriptive_stats(per_language):
    """Summarize per-language (distinct unigrams, distinct bigrams) pairs.

    Returns {"unigram": ..., "bigram": ...} where each value holds mean,
    population std, and linearly interpolated 25/50/75% quantiles.
    """
    if not per_language:
        raise ValueError("descriptive_stats: empty language list")
    rows = np.asarray(per_language, dtype=np.float64)
    if rows.ndim != 2 or rows.shape[1] != 2:
        raise ValueError("descriptive_stats: expected (unigram, bigram) pairs")
    # Columns are sorted so the summary is exactly permutation-invariant.
    rows = np.sort(rows, axis=0)
    summary = {}
    for name, col in (("unigram", rows[:, 0]), ("bigram", rows[:, 1])):
        summary[name] = {
            "mean": float(np.mean(col)),
            "std": float(np.std(col)),
            "25%": float(np.percentile(col, 25)),
            "median": float(np.percentile(col, 50)),
            "75%": float(np.percentile(col, 75)),
        }
    return summary


def format_stats_table(summary) -> str:
    """Aligned text table with mean/std/quartile columns per n-gram kind."""
    cols = ["mean", "std", "25%", "median", "75%"]
    header = f"{'':<8}" + "".join(f"{c:>12}" for c in cols)
    lines = [header]
    for name in ("unigram", "bigram"):
        row = summary[name]
        lines.append(f"{name:<8}" + "".join(f"{row[c]:>12.1f}" for c in cols))
    return "\n".join(lines) + "\n"
