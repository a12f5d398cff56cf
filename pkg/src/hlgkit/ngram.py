"""Smoothed n-gram language models and the grammar graph G.

Models are estimated with interpolated Witten-Bell smoothing, which
needs no count-of-count statistics and therefore also works on the
truncated bigram lists that Crubadan-style downloads ship.  Conditional
probabilities and backoff weights are stored base-10, matching the
textual exchange (ARPA) format used for serialization.
"""

import math
from dataclasses import dataclass, field

from .fst import EPS_ID, SymbolTable, Wfst
from .ingest import BigramStats, Corpus, UnigramStats

BOS = "<s>"
EOS = "</s>"
UNK = "<unk>"

LN10 = math.log(10.0)

# Log10 probability assigned to entries that exist only to carry backoff
# weights or to keep <s> out of the predicted mass.
LOG_NEVER = -99.0


@dataclass
class NgramCounts:
    """Raw n-gram counts, one successor table per order.

    tables[k] maps a (k-1)-word context tuple to {successor: count}.
    Counts from a corpus include sentence boundaries: the order-k stream
    of an utterance is (k-1) leading <s> markers, the tokens, then </s>.
    """

    order: int
    tables: dict = field(default_factory=dict)

    def validate(self):
        for k in range(1, self.order + 1):
            for ctx, succ in self.tables.get(k, {}).items():
                total = sum(succ.values())
                for w, c in succ.items():
                    if c < 1:
                        raise ValueError(f"count below 1 for {ctx + (w,)}")
                    if c > total:
                        raise ValueError(f"count exceeds context total for {ctx + (w,)}")


def count(corpus: Corpus, order: int) -> NgramCounts:
    """Count 1..order grams with boundary padding."""
    if not 1 <= order <= 3:
        raise ValueError(f"order must be in 1..3, got {order}")
    if not corpus.utterances:
        raise ValueError("cannot count n-grams of an empty corpus")
    tables = {k: {} for k in range(1, order + 1)}
    for utt in corpus.utterances:
        for k in range(1, order + 1):
            seq = [BOS] * (k - 1) + list(utt) + [EOS]
            table = tables[k]
            for i in range(len(seq) - k + 1):
                ctx = tuple(seq[i:i + k - 1])
                w = seq[i + k - 1]
                succ = table.setdefault(ctx, {})
                succ[w] = succ.get(w, 0) + 1
    return NgramCounts(order, tables)


def from_stats(uni: UnigramStats, bi: BigramStats = None) -> NgramCounts:
    """Order-2 counts from external unigram/bigram statistics.

    No sentence boundaries are synthesized: the source files carry none,
    so boundary probabilities later fall back to unigram mass.  Bigram
    words missing from the unigram file enter the vocabulary with their
    bigram marginal as count.
    """
    if not uni.entries:
        raise ValueError("empty unigram statistics")
    unigrams = dict(uni.entries)
    bigrams = dict(bi.entries) if bi is not None else {}
    marginal = {}
    for (w1, w2), c in bigrams.items():
        marginal[w1] = marginal.get(w1, 0) + c
        marginal[w2] = marginal.get(w2, 0) + c
    for w, c in sorted(marginal.items()):
        if w not in unigrams:
            unigrams[w] = c
    tables = {1: {(): unigrams}, 2: {}}
    for (w1, w2), c in bigrams.items():
        succ = tables[2].setdefault((w1,), {})
        succ[w2] = succ.get(w2, 0) + c
    return NgramCounts(2, tables)


@dataclass
class NgramModel:
    """Backoff model: log10 conditional probs per n-gram, log10 backoff
    weight per context, and the full vocabulary including <s>, </s>, <unk>.
    """

    order: int
    probs: dict = field(default_factory=dict)  # ngram tuple -> log10 prob
    bows: dict = field(default_factory=dict)   # context tuple -> log10 bow
    vocab: list = field(default_factory=list)

    def cond_prob(self, word: str, context: tuple) -> float:
        """P(word | context) via backoff, linear domain."""
        ctx = tuple(context)[-(self.order - 1):] if self.order > 1 else ()
        prob = 1.0
        while True:
            lp = self.probs.get(ctx + (word,))
            if lp is not None:
                return prob * 10.0 ** lp
            if ctx in self.bows:
                prob *= 10.0 ** self.bows[ctx]
            if not ctx:
                raise KeyError(f"word missing from unigrams: {word!r}")
            ctx = ctx[1:]

    def _clip(self, history: tuple) -> tuple:
        if self.order > 1:
            history = history[-(self.order - 1):]
        else:
            history = ()
        while history and history not in self.bows:
            history = history[1:]
        return history

    def sequence_logprob(self, sentence) -> float:
        """Log10 probability of a sentence, </s> included.

        Out-of-vocabulary words (and stray boundary markers) are mapped
        to <unk>, so the value is always finite.  Scoring follows the
        epsilon-backoff semantics of the grammar graph: each word may be
        emitted from any context on the backoff chain, and the cheapest
        route wins.  This is the documented plain-epsilon approximation;
        it can overcount probability relative to strict backoff when an
        early backoff pays off later, but matches the graph exactly.
        """
        vocab = set(self.vocab)
        words = [w if w in vocab and w != BOS else UNK for w in sentence]
        # Viterbi over stored contexts: cost maps context -> min -log10 p.
        cost = {self._clip((BOS,) * (self.order - 1)): 0.0}
        best_final = math.inf
        for word in words + [EOS]:
            nxt = {}
            for ctx in sorted(cost):
                acc = cost[ctx]
                h = ctx
                while True:
                    lp = self.probs.get(h + (word,))
                    if lp is not None and lp > LOG_NEVER:
                        c = acc - lp
                        if word == EOS:
                            best_final = min(best_final, c)
                        else:
                            tgt = self._clip(h + (word,))
                            if c < nxt.get(tgt, math.inf):
                                nxt[tgt] = c
                    if not h:
                        break
                    acc -= self.bows[h]
                    h = self._clip(h[1:])
            cost = nxt
        return -best_final


def estimate(counts: NgramCounts) -> NgramModel:
    """Interpolated Witten-Bell estimation.

    For a context with N successor tokens over T distinct types, a seen
    successor gets c/(N+T) plus the backed-off share (T/(N+T)) * P_lower,
    and the context's backoff weight is T/(N+T).  At the unigram level
    the novel-event mass is split uniformly over the vocabulary words
    that were never observed (always including <unk>), which keeps every
    context's distribution summing to one.
    """
    counts.validate()
    order = counts.order
    vocab = {BOS, EOS, UNK}
    for k in range(1, order + 1):
        for ctx, succ in counts.tables.get(k, {}).items():
            vocab.update(ctx)
            vocab.update(succ)
    model = NgramModel(order=order, vocab=sorted(vocab))

    unigram = counts.tables[1].get((), {})
    total = sum(unigram.values())
    types = len(unigram)
    if types == 0:
        raise ValueError("no unigram counts")
    denom = total + types
    unseen = [w for w in model.vocab if w not in unigram and w != BOS]
    for w, c in unigram.items():
        model.probs[(w,)] = math.log10(c / denom)
    if unseen:
        share = (types / denom) / len(unseen)
        for w in unseen:
            model.probs[(w,)] = math.log10(share)
    model.probs[(BOS,)] = LOG_NEVER

    for k in range(2, order + 1):
        for ctx in sorted(counts.tables.get(k, {})):
            succ = counts.tables[k][ctx]
            n = sum(succ.values())
            t = len(succ)
            denom = n + t
            model.bows[ctx] = math.log10(t / denom)
            for w in sorted(succ):
                lower = model.cond_prob(w, ctx[1:])
                model.probs[ctx + (w,)] = math.log10(
                    succ[w] / denom + (t / denom) * lower)
    # Contexts that carry a backoff weight but were never predicted
    # themselves (e.g. the <s> <s> trigram context) still need a record.
    for ctx in model.bows:
        if ctx not in model.probs and len(ctx) > 1:
            model.probs[ctx] = LOG_NEVER
    return model


def to_grammar_fst(model: NgramModel, words: SymbolTable) -> Wfst:
    """Encode the model as a standard backoff acceptor over word labels.

    One state per observed context; word arcs carry -ln P, epsilon
    backoff arcs carry -ln bow, and -ln P(</s> | context) becomes the
    state's final weight.  With interpolated Witten-Bell the stored
    probability always dominates its own backoff route, so the shortest
    path through the graph reproduces sequence_logprob exactly even
    though backoff arcs are plain epsilons rather than failure arcs.
    """
    for word in model.vocab:
        if word not in words:
            raise KeyError(f"word missing from symbol table: {word!r}")
    contexts = [()] + sorted(model.bows)
    state_of = {}
    fst = Wfst(isyms=words, osyms=words)
    for ctx in sorted(contexts, key=lambda c: (len(c), c)):
        state_of[ctx] = fst.add_state()

    def target(history):
        history = history[-(model.order - 1):] if model.order > 1 else ()
        while history not in state_of:
            history = history[1:]
        return history

    start = (BOS,) * (model.order - 1)
    fst.set_start(state_of[target(start)])

    for ngram in sorted(model.probs):
        ctx, word = ngram[:-1], ngram[-1]
        if ctx not in state_of:
            continue  # only full contexts become states
        src = state_of[ctx]
        cost = -model.probs[ngram] * LN10
        if word == EOS:
            fst.set_final(src, cost)
        elif word == BOS or model.probs[ngram] <= LOG_NEVER:
            continue  # synthetic records never become arcs
        else:
            label = words.id_of(word)
            dst = state_of[target(ctx + (word,))]
            fst.add_arc(src, label, label, cost, dst)
    for ctx in sorted(model.bows):
        fst.add_arc(state_of[ctx], EPS_ID, EPS_ID,
                    -model.bows[ctx] * LN10, state_of[target(ctx[1:])])
    return fst


def save_arpa(model: NgramModel, fh) -> None:
    """Write the textual exchange format (log10, tab-separated)."""
    records = {k: {} for k in range(1, model.order + 1)}
    for ngram, lp in model.probs.items():
        records[len(ngram)][ngram] = [lp, None]
    for ctx, bow in model.bows.items():
        records[len(ctx)][ctx][1] = bow
    fh.write("\\data\\\n")
    for k in range(1, model.order + 1):
        fh.write(f"ngram {k}={len(records[k])}\n")
    for k in range(1, model.order + 1):
        fh.write(f"\n\\{k}-grams:\n")
        for ngram in sorted(records[k]):
            lp, bow = records[k][ngram]
            line = f"{lp!r}\t{' '.join(ngram)}"
            if bow is not None:
                line += f"\t{bow!r}"
            fh.write(line + "\n")
    fh.write("\n\\end\\\n")


def load_arpa(fh) -> NgramModel:
    order = 0
    probs = {}
    bows = {}
    section = None
    for lineno, raw in enumerate(fh, 1):
        line = raw.strip()
        if not line or line == "\\data\\":
            continue
        if line == "\\end\\":
            break
        if line.startswith("ngram "):
            order = max(order, int(line.split("=")[0].split()[1]))
            continue
        if line.startswith("\\") and line.endswith("-grams:"):
            section = int(line[1:].split("-")[0])
            continue
        if section is None:
            raise ValueError(f"line {lineno}: record outside any n-gram section")
        fields = line.split("\t")
        if len(fields) not in (2, 3):
            raise ValueError(f"line {lineno}: expected 'logprob<TAB>ngram[<TAB>backoff]'")
        ngram = tuple(fields[1].split())
        if len(ngram) != section:
            raise ValueError(f"line {lineno}: {len(ngram)}-gram in {section}-gram section")
        probs[ngram] = float(fields[0])
        if len(fields) == 3:
            bows[ngram] = float(fields[2])
    if order == 0:
        raise ValueError("no ngram counts in header")
    vocab = sorted({w for (w,) in (g for g in probs if len(g) == 1)})
    return NgramModel(order=order, probs=probs, bows=bows, vocab=vocab)
