"""Error-rate scoring and the language-model error decomposition.

Observed error rates mix language-model mistakes with acoustic and
pronunciation-model ones.  Scoring a second run whose logits are built
from the reference pronunciations (the oracle construction) isolates the
language-model share: whatever still goes wrong there is the LM's fault,
and the remainder of the observed rate is charged to the acoustic and
pronunciation models.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .allophone import LogitMatrix
from .fst import SymbolTable

DEFAULT_HI = 0.0
DEFAULT_LO = -1e4


@dataclass
class ErrorReport:
    unit: str
    ref_len: int
    ins: int
    dels: int
    subs: int

    @property
    def errors(self) -> int:
        return self.ins + self.dels + self.subs

    @property
    def rate(self) -> float:
        if self.ref_len == 0:
            return 0.0 if self.errors == 0 else math.inf
        return self.errors / self.ref_len

    def __add__(self, other: "ErrorReport") -> "ErrorReport":
        if self.unit != other.unit:
            raise ValueError(f"cannot add {self.unit} and {other.unit} reports")
        return ErrorReport(self.unit, self.ref_len + other.ref_len,
                           self.ins + other.ins, self.dels + other.dels,
                           self.subs + other.subs)


def edit_align(ref, hyp, unit: str = "word"):
    """Minimal-cost alignment of hypothesis against reference.

    Unit costs; ties prefer substitution over insertion over deletion.
    Returns (ErrorReport, alignment) where the alignment pairs reference
    and hypothesis tokens, None marking the missing side of insertions
    and deletions.
    """
    ref = list(ref)
    hyp = list(hyp)
    n, m = len(ref), len(hyp)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dp[i][0] = i
    for j in range(1, m + 1):
        dp[0][j] = j
    for i in range(1, n + 1):
        row = dp[i]
        prev = dp[i - 1]
        ref_tok = ref[i - 1]
        for j in range(1, m + 1):
            row[j] = min(prev[j - 1] + (0 if ref_tok == hyp[j - 1] else 1),
                         row[j - 1] + 1,
                         prev[j] + 1)
    alignment = []
    ins = dels = subs = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and dp[i][j] == dp[i - 1][j - 1] + (
                0 if ref[i - 1] == hyp[j - 1] else 1):
            if ref[i - 1] != hyp[j - 1]:
                subs += 1
            alignment.append((ref[i - 1], hyp[j - 1]))
            i, j = i - 1, j - 1
        elif j > 0 and dp[i][j] == dp[i][j - 1] + 1:
            ins += 1
            alignment.append((None, hyp[j - 1]))
            j -= 1
        else:
            dels += 1
            alignment.append((ref[i - 1], None))
            i -= 1
    alignment.reverse()
    return ErrorReport(unit, n, ins, dels, subs), alignment


def edit_report(ref, hyp, unit: str = "word") -> ErrorReport:
    """Counts only, via the fast kernel (no alignment materialized)."""
    table = {}
    ref_ids = [table.setdefault(tok, len(table)) for tok in ref]
    hyp_ids = [table.setdefault(tok, len(table)) for tok in hyp]
    _, ins, dels, subs = kernels.edit_counts(ref_ids, hyp_ids)
    return ErrorReport(unit, len(ref_ids), ins, dels, subs)


def score_corpus(pairs, unit: str = "word") -> ErrorReport:
    """Micro-averaged corpus report: summed edits over summed ref length."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("cannot score an empty corpus")
    total = ErrorReport(unit, 0, 0, 0, 0)
    for ref, hyp in pairs:
        total = total + edit_report(ref, hyp, unit)
    return total


def macro_average(reports) -> float:
    """Mean of per-language rates, for multi-language summary rows."""
    reports = list(reports)
    if not reports:
        raise ValueError("no reports to average")
    return sum(r.rate for r in reports) / len(reports)


def oracle_logits(phonemes, table: SymbolTable, hi: float = DEFAULT_HI,
                  lo: float = DEFAULT_LO) -> LogitMatrix:
    """Perfect-model logits for a phoneme sequence.

    The sequence is interleaved with blanks (blk p1 blk p2 ... blk, one
    frame per symbol) and each frame gives its target symbol log-prob
    `hi` and everything else `lo`.  `lo` defaults low enough that the
    oracle path survives any reasonable pruning beam while staying
    finite.
    """
    targets = [0]
    for phoneme in phonemes:
        targets.append(table.id_of(phoneme))
        targets.append(0)
    values = np.full((len(targets), len(table)), lo, dtype=np.float64)
    for t, target in enumerate(targets):
        values[t, target] = hi
    return LogitMatrix(values, table)


@dataclass
class Decomposition:
    observed: ErrorReport
    lm: ErrorReport

    @property
    def am_pm_rate(self) -> float:
        return self.observed.rate - self.lm.rate


def decompose(observed_pairs, oracle_pairs, unit: str = "word") -> Decomposition:
    """Split the observed error rate into LM and acoustic/pronunciation parts.

    Both runs must score the same references; the oracle run's rate is
    the language-model error and the difference is charged to the
    acoustic and pronunciation models.
    """
    observed_pairs = list(observed_pairs)
    oracle_pairs = list(oracle_pairs)
    if [list(r) for r, _ in observed_pairs] != [list(r) for r, _ in oracle_pairs]:
        raise ValueError("observed and oracle runs score different references")
    return Decomposition(score_corpus(observed_pairs, unit),
                         score_corpus(oracle_pairs, unit))


def gap_length_correlation(rows) -> float:
    """Pearson correlation between (wer - cer) and average token length."""
    rows = list(rows)
    if len(rows) < 3:
        raise ValueError("need at least 3 rows for a correlation")
    gaps = [wer - cer for cer, wer, _ in rows]
    lengths = [length for _, _, length in rows]
    n = len(rows)
    mg = sum(gaps) / n
    ml = sum(lengths) / n
    cov = sum((g - mg) * (l - ml) for g, l in zip(gaps, lengths))
    vg = sum((g - mg) ** 2 for g in gaps)
    vl = sum((l - ml) ** 2 for l in lengths)
    if vg == 0 or vl == 0:
        raise ValueError("zero variance: correlation undefined")
    return cov / math.sqrt(vg * vl)


def format_alignment(alignment) -> str:
    """REF/HYP line pair, deletions bracketed on the reference side and
    insertions on the hypothesis side, columns padded to align."""
    ref_row = []
    hyp_row = []
    for ref_tok, hyp_tok in alignment:
        ref_cell = f"[{ref_tok}]" if hyp_tok is None else (ref_tok or "*")
        hyp_cell = f"[{hyp_tok}]" if ref_tok is None else (hyp_tok or "*")
        width = max(len(ref_cell), len(hyp_cell))
        ref_row.append(ref_cell.ljust(width))
        hyp_row.append(hyp_cell.ljust(width))
    return f"REF: {' '.join(ref_row)}\nHYP: {' '.join(hyp_row)}\n"


def format_score_table(reports: dict) -> str:
    """Per-language rows of rate and Ins/Del/Sub, macro-average footer.

    `reports` maps language -> ErrorReport (a single anonymous report
    may be passed as {"": report}).
    """
    if not reports:
        raise ValueError("no reports to format")
    unit = next(iter(reports.values())).unit
    rate_col = {"phoneme": "PER", "char": "CER", "word": "WER"}.get(unit, "ER")
    header = (f"{'lang':<10}{rate_col:>8}{'Ins':>8}{'Del':>8}{'Sub':>8}"
              f"{'RefLen':>8}")
    lines = [header]
    for lang in sorted(reports):
        r = reports[lang]
        lines.append(f"{lang or '-':<10}{100 * r.rate:>8.2f}{r.ins:>8}"
                     f"{r.dels:>8}{r.subs:>8}{r.ref_len:>8}")
    if len(reports) > 1:
        avg = 100 * macro_average(reports.values())
        lines.append(f"{'macro-avg':<10}{avg:>8.2f}")
    return "\n".join(lines) + "\n"
