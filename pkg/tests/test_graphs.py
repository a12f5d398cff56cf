import itertools
from random import Random

import pytest

from hlgkit.allophone import BLANK, acoustic_table
from hlgkit.fst import EPS_ID, SymbolTable, compose, connect, linear_acceptor, shortest_path
from hlgkit.g2p import PronLexicon
from hlgkit.graphs import (
    DecoderGraph,
    add_disambig,
    build_ctc_topology,
    build_decoder_graph,
    build_hlg,
    build_lexicon_fst,
    erase_disambig,
    token_table,
)
from hlgkit.ingest import Corpus
from hlgkit.ngram import count, estimate, to_grammar_fst


def ctc_collapse(frames):
    """Reference CTC collapse: merge repeats, then drop blanks (id 1)."""
    out = []
    prev = None
    for sym in frames:
        if sym != prev:
            if sym != 1:
                out.append(sym)
        prev = sym
    return tuple(out)


def decode_frames_through(h, frames):
    acceptor = linear_acceptor(frames, h.isyms)
    paths = shortest_path(compose(acceptor, h), 1)
    assert paths, f"H rejected frame sequence {frames}"
    return paths[0].olabels


class TestCtcTopology:
    def setup_method(self):
        self.phonemes = acoustic_table(["a", "b"])
        self.h = build_ctc_topology(self.phonemes)
        self.tokens = token_table(self.phonemes)

    def token(self, sym):
        return self.tokens.id_of(sym)

    def test_blank_frames_collapse(self):
        blk, a = self.token(BLANK), self.token("a")
        assert decode_frames_through(self.h, [blk, a, blk]) == (a,)

    def test_repeats_collapse(self):
        a, b = self.token("a"), self.token("b")
        assert decode_frames_through(self.h, [a, a, b]) == (a, b)

    def test_exhaustive_frame_sequences(self):
        # Every frame sequence of length <= 4 collapses exactly like the
        # reference function, and H offers exactly that single output.
        for length in range(0, 5):
            for frames in itertools.product([1, 2, 3], repeat=length):
                acceptor = linear_acceptor(frames, self.tokens)
                paths = shortest_path(compose(acceptor, self.h), 5)
                outputs = {p.olabels for p in paths}
                assert outputs == {ctc_collapse(frames)}

    def test_label_sequences_reachable(self):
        # Any target sequence with a blank between equal neighbors decodes
        # from its minimal frame realization.
        a, b, blk = self.token("a"), self.token("b"), self.token(BLANK)
        for target in [(a,), (a, b), (a, a), (b, a, b)]:
            frames = []
            prev = None
            for sym in target:
                if sym == prev:
                    frames.append(blk)
                frames.append(sym)
                prev = sym
            assert decode_frames_through(self.h, frames) == target

    def test_blank_required_at_index0(self):
        with pytest.raises(ValueError, match="blk"):
            build_ctc_topology(SymbolTable.from_symbols(["a"]))


class TestDisambig:
    def test_unique_prons_untouched(self):
        lex = PronLexicon({"go": [("g", "o")], "hi": [("h", "i")]})
        marked, top = add_disambig(lex)
        assert top == 0
        assert marked == {"go": [("g", "o")], "hi": [("h", "i")]}

    def test_homophones_get_markers(self):
        lex = PronLexicon({"to": [("t", "u")], "two": [("t", "u")]})
        marked, top = add_disambig(lex)
        assert top == 2
        assert marked["to"] == [("t", "u", "#1")]
        assert marked["two"] == [("t", "u", "#2")]

    def test_prefix_gets_marker(self):
        lex = PronLexicon({"a": [("x",)], "ab": [("x", "y")]})
        marked, top = add_disambig(lex)
        assert marked["a"] == [("x", "#1")]
        assert marked["ab"] == [("x", "y")]
        assert top == 1


class TestLexiconFst:
    def word_table(self, words):
        table = SymbolTable()
        for w in words:
            table.add(w)
        return table

    def test_single_word_path(self):
        lex = PronLexicon({"go": [("g", "o")]})
        phonemes = acoustic_table(["g", "o"])
        words = self.word_table(["go"])
        l = build_lexicon_fst(lex, phonemes, words)
        tokens = l.isyms
        acceptor = linear_acceptor(
            [tokens.id_of("g"), tokens.id_of("o")], tokens)
        paths = shortest_path(compose(acceptor, l), 1)
        assert paths and paths[0].olabels == (words.id_of("go"),)

    def test_homophones_both_recoverable(self):
        lex = PronLexicon({"to": [("t", "u")], "two": [("t", "u")]})
        phonemes = acoustic_table(["t", "u"])
        words = self.word_table(["to", "two"])
        l = build_lexicon_fst(lex, phonemes, words)
        tokens = l.isyms
        pron = [tokens.id_of("t"), tokens.id_of("u")]
        # With markers erased both words come out as alternative paths.
        erased = erase_disambig(l)
        paths = shortest_path(compose(linear_acceptor(pron, erased.isyms),
                                      erased), 5)
        outputs = {p.olabels for p in paths}
        assert outputs == {(words.id_of("to"),), (words.id_of("two"),)}

    def test_empty_lexicon_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            build_lexicon_fst(PronLexicon(), acoustic_table(["a"]),
                              SymbolTable())

    def test_every_entry_recoverable_random(self):
        rng = Random(131)
        phones = ["p", "t", "k", "a", "i"]
        for _ in range(20):
            entries = {}
            n_words = rng.randint(1, 8)
            for i in range(n_words):
                prons = []
                for _ in range(rng.randint(1, 2)):
                    pron = tuple(rng.choice(phones)
                                 for _ in range(rng.randint(1, 4)))
                    if pron not in prons:
                        prons.append(pron)
                entries[f"w{i}"] = prons
            lex = PronLexicon(entries)
            phonemes = acoustic_table(phones)
            words = self.word_table(sorted(entries))
            l = erase_disambig(build_lexicon_fst(lex, phonemes, words))
            for word, prons in entries.items():
                for pron in prons:
                    ids = [l.isyms.id_of(p) for p in pron]
                    paths = shortest_path(
                        compose(linear_acceptor(ids, l.isyms), l), 50)
                    assert (words.id_of(word),) in {p.olabels for p in paths}, \
                        f"{word} {pron} not recoverable"


def toy_decoder(sentences, order=2, vocab_prons=None):
    corpus = Corpus([s.split() for s in sentences])
    model = estimate(count(corpus, order))
    if vocab_prons is None:
        vocab_prons = {}
        for utt in corpus.utterances:
            for word in utt:
                vocab_prons.setdefault(word, [tuple(word)])
    lex = PronLexicon(vocab_prons)
    return build_decoder_graph(lex, model), model, lex


class TestBuildHlg:
    def test_single_word_roundtrip(self):
        graph, model, lex = toy_decoder(["go"], order=1)
        tokens = graph.hlg.isyms
        blk = tokens.id_of(BLANK)
        frames = [blk, tokens.id_of("g"), tokens.id_of("o"), blk]
        acceptor = linear_acceptor(frames, tokens)
        paths = shortest_path(compose(acceptor, graph.hlg), 1)
        assert paths
        assert paths[0].olabels == (graph.words.id_of("go"),)

    def test_empty_grammar_gives_empty_hlg(self):
        graph, model, lex = toy_decoder(["go"], order=1)
        phonemes = graph.phonemes
        words = graph.words
        h = build_ctc_topology(phonemes)
        l = build_lexicon_fst(lex, phonemes, words)
        g_empty = to_grammar_fst(model, words)
        g_empty.finals = {}  # no accepting state at all
        hlg = build_hlg(h, l, g_empty, phonemes, words)
        assert hlg.hlg.is_empty()

    def test_alphabet_mismatch_raises(self):
        graph, model, lex = toy_decoder(["go"], order=1)
        h = build_ctc_topology(graph.phonemes)
        g = to_grammar_fst(model, graph.words)
        with pytest.raises(ValueError, match="symbol table"):
            build_hlg(h, h, g, graph.phonemes, graph.words)

    def test_input_output_alphabets(self):
        graph, _, _ = toy_decoder(["aba cab", "cab aba"])
        n_tokens = len(graph.phonemes) + 1
        for _, arc in graph.hlg.all_arcs():
            assert 0 <= arc.ilabel < n_tokens
            assert 0 <= arc.olabel < len(graph.words)

    def test_decodable_sentences_match_lm_support(self):
        # Five words, bigram model; a length-<=2 sentence decodes iff the
        # model gives it mass (every sentence does, via backoff).
        sentences = ["va ne", "ko va", "ne ko mi", "ru"]
        graph, model, lex = toy_decoder(sentences)
        tokens = graph.hlg.isyms
        blk = tokens.id_of(BLANK)
        vocab = sorted(lex.entries)
        for n_words in (1, 2):
            for combo in itertools.product(vocab, repeat=n_words):
                frames = [blk]
                for word in combo:
                    for ch in word:
                        frames.append(tokens.id_of(ch))
                    frames.append(blk)
                acceptor = linear_acceptor(frames, tokens)
                paths = shortest_path(compose(acceptor, graph.hlg), 1)
                assert paths, f"{combo} should decode"
                want = tuple(graph.words.id_of(w) for w in combo)
                assert paths[0].olabels == want

    def test_composition_associativity_at_path_level(self):
        graph, model, lex = toy_decoder(["go on", "on go"])
        phonemes, words = graph.phonemes, graph.words
        h = build_ctc_topology(phonemes)
        l = build_lexicon_fst(lex, phonemes, words)
        g = to_grammar_fst(model, words)
        lg_first = connect(compose(h, erase_disambig(connect(compose(l, g)))))
        hl_first = connect(compose(erase_disambig(connect(compose(h, l))), g))
        tokens = h.isyms
        blk = tokens.id_of(BLANK)
        for word in ("go", "on"):
            frames = [blk] + [tokens.id_of(c) for c in word] + [blk]
            acceptor = linear_acceptor(frames, tokens)
            a = shortest_path(compose(acceptor, lg_first), 1)
            b = shortest_path(compose(acceptor, hl_first), 1)
            assert a and b
            assert a[0].olabels == b[0].olabels
            assert a[0].weight == pytest.approx(b[0].weight, abs=1e-9)


class TestDecoderGraphIO:
    def test_save_load_roundtrip(self, tmp_path):
        graph, _, _ = toy_decoder(["va ne", "ne va"])
        graph.provenance["lm_source"] = "corpus:toy"
        out = tmp_path / "decoder"
        graph.save(out)
        files = sorted(p.name for p in out.iterdir())
        assert files == ["hlg.fst", "manifest.txt", "phonemes.txt", "words.txt"]
        again = DecoderGraph.load(out)
        assert again.provenance["lm_source"] == "corpus:toy"
        assert again.words == graph.words
        assert again.phonemes == graph.phonemes
        assert again.hlg.num_states == graph.hlg.num_states
        assert again.hlg.num_arcs == graph.hlg.num_arcs
