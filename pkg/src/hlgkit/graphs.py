"""Construction of the decoder graph: H (CTC topology), L (lexicon), G.

Graph-side token tables are the acoustic table shifted by one so that
id 0 stays epsilon: <eps>=0, <blk>=1, phonemes from 2.  The decoder maps
a graph input label i back to logit column i-1.  Lexicon disambiguation
symbols #1, #2, ... are appended to the token table while L and L.G are
built and erased to epsilon before H is composed in.
"""

import re
from dataclasses import dataclass, field
from pathlib import Path

from .allophone import BLANK
from .fst import EPS, EPS_ID, ONE, SymbolTable, Wfst, compose, connect
from .g2p import PronLexicon

_DISAMBIG_RE = re.compile(r"^#\d+$")


def token_table(phonemes: SymbolTable) -> SymbolTable:
    """Graph token table for an acoustic (blank-first) phoneme table."""
    if len(phonemes) == 0 or phonemes.symbol_of(0) != BLANK:
        raise ValueError("acoustic table must have <blk> at index 0")
    table = SymbolTable()
    for sym in phonemes.symbols():
        table.add(sym)
    return table


def build_ctc_topology(phonemes: SymbolTable) -> Wfst:
    """Standard CTC topology over blank + phonemes.

    One state per acoustic symbol, fully connected: entering a symbol's
    state emits it, staying emits nothing (repeats collapse), and the
    blank state emits nothing, so two identical phonemes in a row need a
    blank in between.  Every state accepts, the blank state starts.
    """
    tokens = token_table(phonemes)
    fst = Wfst(isyms=tokens, osyms=tokens)
    n = len(phonemes)
    fst.add_states(n)
    fst.set_start(0)
    for state in range(n):
        fst.set_final(state, ONE)
        for sym in range(n):
            olabel = EPS_ID if (sym == state or sym == 0) else sym + 1
            fst.add_arc(state, sym + 1, olabel, ONE, sym)
    return fst


def add_disambig(lexicon: PronLexicon):
    """Append #1, #2, ... to pronunciations that repeat or prefix others.

    Returns ({word: [pron with markers]}, highest marker index), keeping
    homophones distinguishable through composition.
    """
    count = {}
    prefixes = set()
    for word in lexicon.entries:
        for pron in lexicon.entries[word]:
            count[pron] = count.get(pron, 0) + 1
            for cut in range(1, len(pron)):
                prefixes.add(pron[:cut])
    last_used = {}
    max_disambig = 0
    out = {}
    for word in lexicon.entries:
        marked = []
        for pron in lexicon.entries[word]:
            if count[pron] == 1 and pron not in prefixes:
                marked.append(pron)
                continue
            mark = last_used.get(pron, 0) + 1
            last_used[pron] = mark
            max_disambig = max(max_disambig, mark)
            marked.append(pron + (f"#{mark}",))
        out[word] = marked
    return out, max_disambig


def build_lexicon_fst(lexicon: PronLexicon, phonemes: SymbolTable,
                      words: SymbolTable, blank_loop: bool = True) -> Wfst:
    """Word-loop lexicon transducer with disambiguation symbols.

    Each pronunciation is a path from the loop state back to itself that
    consumes the phonemes and emits the word on the first arc.
    blank_loop adds a blank self-loop at the loop state so silence can
    pass between words; with the standard CTC topology this is redundant
    (H already absorbs blanks) and survives only for other topologies.
    """
    if not lexicon.entries:
        raise ValueError("empty lexicon")
    tokens = token_table(phonemes)
    marked, max_disambig = add_disambig(lexicon)
    for i in range(1, max_disambig + 1):
        tokens.add(f"#{i}")
    fst = Wfst(isyms=tokens, osyms=words)
    loop = fst.add_state()
    fst.set_start(loop)
    fst.set_final(loop, ONE)
    if blank_loop:
        fst.add_arc(loop, tokens.id_of(BLANK), EPS_ID, ONE, loop)
    for word in marked:
        word_id = words.id_of(word)
        for pron in marked[word]:
            src = loop
            for i, phoneme in enumerate(pron):
                dst = loop if i == len(pron) - 1 else fst.add_state()
                fst.add_arc(src, tokens.id_of(phoneme),
                            word_id if i == 0 else EPS_ID, ONE, dst)
                src = dst
    return fst


def erase_disambig(fst: Wfst) -> Wfst:
    """Replace disambiguation input labels with epsilon.

    The markers sit at the end of the input table, so the result's table
    is the table with them stripped.
    """
    if fst.isyms is None:
        raise ValueError("machine has no input symbol table")
    symbols = list(fst.isyms.symbols())
    disambig = {i for i, sym in enumerate(symbols) if _DISAMBIG_RE.match(sym)}
    if disambig and disambig != set(range(len(symbols) - len(disambig),
                                          len(symbols))):
        raise ValueError("disambiguation symbols must be trailing table entries")
    base = SymbolTable.from_symbols(
        [s for i, s in enumerate(symbols) if i not in disambig][1:],
        first_symbol=symbols[0])
    out = Wfst(isyms=base, osyms=fst.osyms)
    out.add_states(fst.num_states)
    out.start = fst.start
    out.finals = dict(fst.finals)
    for src, arc in fst.all_arcs():
        ilabel = EPS_ID if arc.ilabel in disambig else arc.ilabel
        out.add_arc(src, ilabel, arc.olabel, arc.weight, arc.dst)
    return out


@dataclass
class DecoderGraph:
    """The composed decoder plus everything needed to use and audit it."""

    hlg: Wfst
    phonemes: SymbolTable  # acoustic table, <blk> at 0
    words: SymbolTable
    provenance: dict = field(default_factory=dict)

    def validate(self):
        n_tokens = len(self.phonemes) + 1  # graph side: eps + acoustic ids
        for src, arc in self.hlg.all_arcs():
            if not 0 <= arc.ilabel < n_tokens:
                raise ValueError(f"input label {arc.ilabel} is neither blank "
                                 f"nor a lexicon phoneme")
            if not 0 <= arc.olabel < len(self.words):
                raise ValueError(f"output label {arc.olabel} not in word table")
            if arc.ilabel == EPS_ID and arc.weight < 0:
                raise ValueError("negative-cost epsilon arc would break decoding")

    def save(self, out_dir) -> None:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        self.hlg.save(out_dir / "hlg.fst")
        self.phonemes.save(out_dir / "phonemes.txt")
        self.words.save(out_dir / "words.txt")
        with open(out_dir / "manifest.txt", "w", encoding="utf-8") as fh:
            for key in sorted(self.provenance):
                fh.write(f"{key}={self.provenance[key]}\n")

    @classmethod
    def load(cls, out_dir) -> "DecoderGraph":
        out_dir = Path(out_dir)
        phonemes = SymbolTable.load(out_dir / "phonemes.txt")
        if phonemes.symbol_of(0) != BLANK:
            raise ValueError("phonemes.txt must put <blk> at id 0")
        words = SymbolTable.load(out_dir / "words.txt")
        tokens = token_table(phonemes)
        hlg = Wfst.load(out_dir / "hlg.fst", isyms=tokens, osyms=words)
        provenance = {}
        with open(out_dir / "manifest.txt", encoding="utf-8") as fh:
            for line in fh:
                line = line.rstrip("\n")
                if line:
                    key, _, value = line.partition("=")
                    provenance[key] = value
        graph = cls(hlg, phonemes, words, provenance)
        graph.validate()
        return graph


def build_hlg(h: Wfst, l: Wfst, g: Wfst, phonemes: SymbolTable,
              words: SymbolTable, provenance=None) -> DecoderGraph:
    """connect(H . erase_disambig(connect(L . G))) with provenance attached.

    L.G is composed and trimmed first (the smaller intermediate at these
    vocabulary sizes), its disambiguation inputs are erased, and H is
    composed in last.
    """
    lg = connect(compose(l, g))
    hlg = connect(compose(h, erase_disambig(lg)))
    graph = DecoderGraph(hlg, phonemes, words, dict(provenance or {}))
    graph.validate()
    return graph


def build_decoder_graph(lexicon: PronLexicon, model, provenance=None,
                        blank_loop: bool = True) -> DecoderGraph:
    """One-call pipeline from lexicon + n-gram model to a DecoderGraph."""
    from .ngram import to_grammar_fst  # local import avoids a cycle

    phonemes = SymbolTable.from_symbols(lexicon.phoneme_inventory(),
                                        first_symbol=BLANK)
    words = SymbolTable()
    for word in model.vocab:
        words.add(word)
    for word in lexicon.entries:
        if word not in words:
            raise ValueError(f"lexicon word {word!r} missing from the model")
    h = build_ctc_topology(phonemes)
    l = build_lexicon_fst(lexicon, phonemes, words, blank_loop=blank_loop)
    g = to_grammar_fst(model, words)
    info = {"ngram_order": str(model.order),
            "vocabulary_size": str(len(model.vocab)),
            "blank_loop": str(blank_loop).lower()}
    info.update(provenance or {})
    return build_hlg(h, l, g, phonemes, words, info)
