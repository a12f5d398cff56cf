"""Map language-independent phone posteriors to language phonemes.

A language's allophone table claims, for each phoneme, the set of
physical phones that realize it.  Frame by frame, the phoneme's
probability is the sum (default) or max over its phones' probabilities;
the CTC blank passes through untouched.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .fst import SymbolTable

BLANK = "<blk>"

_MAGIC = b"LGT1"


@dataclass
class LogitMatrix:
    """T x S natural-log probabilities with column 0 the CTC blank.

    `table` maps column indices to symbols (blank first).  `normalized`
    declares that every row log-sum-exps to zero; it is checked, not
    assumed.
    """

    values: np.ndarray
    table: SymbolTable
    normalized: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ValueError("logit values must be a T x S matrix")
        if self.values.shape[1] != len(self.table):
            raise ValueError(
                f"matrix has {self.values.shape[1]} columns but the symbol "
                f"table has {len(self.table)} entries")
        if self.table.symbol_of(0) != BLANK:
            raise ValueError("logit symbol index 0 must be the blank <blk>")
        if self.normalized and self.frames:
            rowsums = np.logaddexp.reduce(self.values, axis=1)
            if np.max(np.abs(rowsums)) > 1e-4:
                raise ValueError("rows declared normalized but log-sum-exp != 0")

    @property
    def frames(self) -> int:
        return self.values.shape[0]

    @property
    def num_symbols(self) -> int:
        return self.values.shape[1]


def acoustic_table(phonemes) -> SymbolTable:
    """Blank-first symbol table over a phoneme inventory."""
    return SymbolTable.from_symbols(phonemes, first_symbol=BLANK)


@dataclass
class AllophoneMap:
    """One language's phoneme -> phones relation (1-n per phoneme)."""

    language: str
    mapping: dict = field(default_factory=dict)  # phoneme -> list of phones

    def add(self, phoneme: str, phones) -> None:
        phones = list(phones)
        if not phones:
            raise ValueError(f"phoneme {phoneme!r} maps to no phones")
        self.mapping.setdefault(phoneme, [])
        for phone in phones:
            if phone not in self.mapping[phoneme]:
                self.mapping[phoneme].append(phone)

    @classmethod
    def load(cls, path, language: str) -> "AllophoneMap":
        amap = cls(language)
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                fields = line.split("\t")
                if len(fields) != 2 or not fields[1].split():
                    raise ValueError(f"{path}:{lineno}: expected 'phoneme<TAB>phones'")
                amap.add(fields[0], fields[1].split())
        if not amap.mapping:
            raise ValueError(f"{path}: no allophone entries")
        return amap

    def is_partition(self, phone_table: SymbolTable) -> bool:
        """True when every non-blank phone is claimed by exactly one phoneme."""
        claimed = []
        for phones in self.mapping.values():
            claimed.extend(phones)
        all_phones = [phone_table.symbol_of(i)
                      for i in range(1, len(phone_table))]
        return sorted(claimed) == sorted(all_phones)


def map_logits(phones: LogitMatrix, amap: AllophoneMap,
               mode: str = "sum") -> LogitMatrix:
    """Pool phone posteriors into phoneme posteriors, frame by frame.

    mode="sum" log-sum-exps each phoneme's phones (the summation over
    phones); mode="max" takes the best phone instead.  The output table
    is blank followed by the map's phonemes in declaration order.
    Overlapping claims are allowed, but then a normalized input no
    longer implies a normalized output.
    """
    if mode not in ("sum", "max"):
        raise ValueError(f"mode must be 'sum' or 'max', got {mode!r}")
    phonemes = list(amap.mapping)
    for phoneme in phonemes:
        for phone in amap.mapping[phoneme]:
            if phone not in phones.table:
                raise KeyError(
                    f"phoneme {phoneme!r} claims unknown phone {phone!r}")
    out_table = acoustic_table(phonemes)
    out = np.empty((phones.frames, len(out_table)), dtype=np.float64)
    out[:, 0] = phones.values[:, 0]
    for j, phoneme in enumerate(phonemes, start=1):
        cols = [phones.table.id_of(p) for p in amap.mapping[phoneme]]
        block = phones.values[:, cols]
        if mode == "sum":
            out[:, j] = np.logaddexp.reduce(block, axis=1)
        else:
            out[:, j] = np.max(block, axis=1)
    normalized = (phones.normalized and mode == "sum"
                  and amap.is_partition(phones.table))
    return LogitMatrix(out, out_table, normalized=normalized)


def save_logits(matrix: LogitMatrix, path, fmt: str = "binary") -> None:
    """Write a logit matrix; the symbol table goes in a sidecar file.

    Binary layout: magic LGT1, little-endian u32 T and S, then T*S
    float32 values row-major.  Text layout: a "T S" header line, then
    one row of floats per frame.
    """
    path = str(path)
    if fmt == "binary":
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<II", matrix.frames, matrix.num_symbols))
            fh.write(matrix.values.astype("<f4").tobytes(order="C"))
    elif fmt == "text":
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{matrix.frames} {matrix.num_symbols}\n")
            for row in matrix.values:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")
    else:
        raise ValueError(f"fmt must be 'binary' or 'text', got {fmt!r}")
    matrix.table.save(path + ".syms")


def load_logits(path) -> LogitMatrix:
    """Read either logit format, sniffing the binary magic."""
    path = str(path)
    table = SymbolTable.load(path + ".syms")
    with open(path, "rb") as fh:
        head = fh.read(4)
        if head == _MAGIC:
            frames, syms = struct.unpack("<II", fh.read(8))
            payload = fh.read(frames * syms * 4)
            if len(payload) != frames * syms * 4:
                raise ValueError(f"{path}: truncated logit payload")
            values = np.frombuffer(payload, dtype="<f4").reshape(frames, syms)
            return LogitMatrix(values.astype(np.float64), table)
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValueError(f"{path}:1: expected 'T S' header")
        frames, syms = int(header[0]), int(header[1])
        values = np.empty((frames, syms), dtype=np.float64)
        for t in range(frames):
            row = fh.readline().split()
            if len(row) != syms:
                raise ValueError(f"{path}:{t + 2}: expected {syms} values")
            values[t] = [float(v) for v in row]
    return LogitMatrix(values, table)
