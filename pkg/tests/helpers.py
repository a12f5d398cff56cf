"""Shared fixtures: toy languages, toy decoders, random decoder machines."""

from random import Random

import numpy as np

from hlgkit.allophone import BLANK, LogitMatrix, acoustic_table
from hlgkit.fst import ONE, SymbolTable, Wfst
from hlgkit.g2p import PronLexicon
from hlgkit.graphs import DecoderGraph, build_decoder_graph
from hlgkit.ingest import Corpus
from hlgkit.ngram import count, estimate


def spelled_lexicon(words):
    """Pronunciation = the word's letters; the usual toy-language G2P."""
    return PronLexicon({w: [tuple(w)] for w in words})


def toy_language(rng: Random, n_words=20, n_sentences=60, order=2,
                 max_sentence_len=5, word_len=(2, 4)):
    """A corpus over made-up CV-pattern words plus its spelled lexicon."""
    consonants = "ptkmnsr"
    vowels = "aiou"
    words = set()
    while len(words) < n_words:
        length = rng.randint(*word_len)
        word = ""
        for i in range(length):
            word += rng.choice(consonants) if i % 2 == 0 else rng.choice(vowels)
        words.add(word)
    words = sorted(words)
    corpus = Corpus([[rng.choice(words)
                      for _ in range(rng.randint(1, max_sentence_len))]
                     for _ in range(n_sentences)])
    lexicon = spelled_lexicon(words)
    return corpus, lexicon, order


def toy_decoder(rng: Random = None, sentences=None, order=2, **kwargs):
    """DecoderGraph for a toy language (random or explicit sentences)."""
    if sentences is not None:
        corpus = Corpus([s.split() for s in sentences])
        lexicon = spelled_lexicon(sorted({w for u in corpus.utterances
                                          for w in u}))
    else:
        corpus, lexicon, order = toy_language(rng or Random(0), order=order,
                                              **kwargs)
    model = estimate(count(corpus, order))
    graph = build_decoder_graph(lexicon, model)
    return graph, model, lexicon, corpus


def sentence_phonemes(lexicon: PronLexicon, sentence) -> list:
    phonemes = []
    for word in sentence:
        phonemes.extend(lexicon.entries[word][0])
    return phonemes


def random_decoder_machine(rng: Random, max_states=50, n_phonemes=3):
    """A random valid DecoderGraph plus matching random logits.

    Arcs mix emitting labels (blank/phonemes) and nonnegative-weight
    epsilons; state n-1 accepts.  Useful for comparing the beam search
    against the exhaustive frames-by-states oracle.
    """
    phonemes = acoustic_table([f"p{i}" for i in range(n_phonemes)])
    words = SymbolTable.from_symbols(["w0", "w1"])
    n = rng.randint(2, max_states)
    fst = Wfst()
    fst.add_states(n)
    fst.set_start(0)
    n_arcs = rng.randint(n, 3 * n)
    for _ in range(n_arcs):
        src = rng.randrange(n)
        dst = rng.randrange(n)
        if rng.random() < 0.25:
            ilabel = 0
            if src == dst:
                continue  # skip epsilon self-loops
        else:
            ilabel = rng.randint(1, len(phonemes))
        olabel = rng.randint(0, len(words) - 1)
        weight = rng.randint(0, 30) / 10.0
        fst.add_arc(src, ilabel, olabel, weight, dst)
    fst.set_final(n - 1, rng.randint(0, 10) / 10.0)
    if rng.random() < 0.3:
        fst.set_final(0, rng.randint(0, 10) / 10.0)
    graph = DecoderGraph(fst, phonemes, words)
    graph.validate()
    frames = rng.randint(0, 12)
    values = -5.0 * np.random.RandomState(rng.randrange(2**31)).rand(
        frames, len(phonemes))
    logits = LogitMatrix(values, phonemes)
    return graph, logits


def flat_arcs(graph: DecoderGraph):
    """(src, ilabel, olabel, weight, dst) tuples for the grid oracle."""
    return [(src, a.ilabel, a.olabel, a.weight, a.dst)
            for src, a in graph.hlg.all_arcs()]


def blank_heavy_logits(table, frames=6, blank_logit=-0.01, other=-8.0):
    values = np.full((frames, len(table)), other)
    values[:, 0] = blank_logit
    return LogitMatrix(values, table)
