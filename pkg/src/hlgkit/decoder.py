"""Frame-synchronous Viterbi beam search through a decoder graph.

Arc cost is graph weight plus the scaled negative log-probability of the
arc's input symbol at the current frame; label-0 (epsilon) arcs expand
for free within a frame.  Pruning keeps states within search_beam of the
frame's best, tightening the cutoff when more than max_active states
survive and relaxing it below min_active, kaldi-style.
"""

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .allophone import LogitMatrix
from .fst import EPS_ID
from .graphs import DecoderGraph

INF = math.inf


@dataclass
class BeamConfig:
    search_beam: float = 20.0
    output_beam: float = 8.0
    min_active: int = 30
    max_active: int = 10000
    acoustic_scale: float = 1.0

    def __post_init__(self):
        if min(self.search_beam, self.output_beam, self.min_active,
               self.max_active, self.acoustic_scale) <= 0:
            raise ValueError("beam parameters must be positive")
        if self.min_active > self.max_active:
            raise ValueError("min_active must not exceed max_active")


@dataclass
class DecodeResult:
    words: list
    phonemes: list
    total_cost: float
    frames: int

    @property
    def ok(self) -> bool:
        return math.isfinite(self.total_cost)


class _CompiledGraph:
    """CSR arc arrays split into emitting and epsilon arcs."""

    def __init__(self, graph: DecoderGraph):
        graph.validate()
        hlg = graph.hlg
        n = hlg.num_states
        emit = [[] for _ in range(n)]
        eps = [[] for _ in range(n)]
        for src in range(n):
            for arc in hlg.arcs(src):
                if arc.ilabel == EPS_ID:
                    eps[src].append(arc)
                else:
                    emit[src].append(arc)

        def pack(per_state, with_label):
            ptr = np.zeros(n + 1, dtype=np.int32)
            labs, ols, ws, dsts = [], [], [], []
            for s in range(n):
                for arc in per_state[s]:
                    if with_label:
                        labs.append(arc.ilabel)
                    ols.append(arc.olabel)
                    ws.append(arc.weight)
                    dsts.append(arc.dst)
                ptr[s + 1] = len(ols)
            return (ptr, np.asarray(labs, dtype=np.int32),
                    np.asarray(ols, dtype=np.int32),
                    np.asarray(ws, dtype=np.float64),
                    np.asarray(dsts, dtype=np.int32))

        self.num_states = n
        self.start = hlg.start
        (self.emit_ptr, self.emit_lab, self.emit_ol,
         self.emit_w, self.emit_dst) = pack(emit, True)
        ptr, _, ols, ws, dsts = pack(eps, False)
        self.eps_ptr, self.eps_ol, self.eps_w, self.eps_dst = ptr, ols, ws, dsts
        finals = sorted(hlg.finals.items())
        self.final_state = np.asarray([s for s, _ in finals], dtype=np.int32)
        self.final_w = np.asarray([w for _, w in finals], dtype=np.float64)
        # Graph input label i reads logit column i-1; blank is column 0.
        self.blank_label = 1


def _compiled(graph: DecoderGraph) -> _CompiledGraph:
    cached = getattr(graph, "_compiled", None)
    if cached is None:
        cached = _CompiledGraph(graph)
        graph._compiled = cached
    return cached


def _check_tables(graph: DecoderGraph, logits: LogitMatrix) -> None:
    if list(logits.table.symbols()) != list(graph.phonemes.symbols()):
        raise ValueError(
            "logit symbol table does not match the decoder phoneme table")


def decode(graph: DecoderGraph, logits: LogitMatrix,
           config: BeamConfig = None) -> DecodeResult:
    """Best-path decode of one utterance.

    Returns an empty-word result with infinite cost when no path within
    the beam reaches an accepting state (and a finite final weight when
    the empty path itself accepts, e.g. for zero frames).
    """
    config = config or BeamConfig()
    _check_tables(graph, logits)
    cg = _compiled(graph)
    if cg.start < 0:
        return DecodeResult([], [], INF, logits.frames)
    values = np.ascontiguousarray(logits.values, dtype=np.float64)
    (tok_state, tok_cost, tok_prev, tok_il, tok_ol, best_token,
     best_cost) = kernels.viterbi_decode(
        cg.num_states, cg.emit_ptr, cg.emit_lab, cg.emit_ol, cg.emit_w,
        cg.emit_dst, cg.eps_ptr, cg.eps_ol, cg.eps_w, cg.eps_dst,
        cg.final_state, cg.final_w, cg.start, values,
        config.acoustic_scale, config.search_beam,
        config.min_active, config.max_active)
    if best_token < 0:
        return DecodeResult([], [], INF, logits.frames)
    word_ids = []
    input_labels = []
    tok = best_token
    while tok >= 0:
        if tok_ol[tok] != EPS_ID:
            word_ids.append(tok_ol[tok])
        if tok_il[tok] != EPS_ID:
            input_labels.append(tok_il[tok])
        tok = tok_prev[tok]
    word_ids.reverse()
    input_labels.reverse()
    words = [graph.words.symbol_of(w) for w in word_ids]
    phonemes = [graph.phonemes.symbol_of(lab - 1) for lab in input_labels
                if lab != cg.blank_label]
    return DecodeResult(words, phonemes, float(best_cost), logits.frames)


class _Lattice:
    """Per-frame surviving states and the arcs between them."""

    def __init__(self):
        self.active = []      # block -> sorted state list
        self.costs = []       # block -> {state: forward cost}
        self.eps_edges = []   # block -> [(src, dst, w, olabel)]
        self.emit_edges = []  # block -> [(src, dst, cost, olabel)]


def _lattice_forward(cg: _CompiledGraph, values, config: BeamConfig):
    """The kernel's search, re-run in Python while recording the lattice.

    Pruning decisions replicate kernels.viterbi_decode exactly so the
    best lattice path coincides with decode()'s result.
    """
    T = values.shape[0]
    emit_ptr = cg.emit_ptr.tolist()
    emit_lab = cg.emit_lab.tolist()
    emit_ol = cg.emit_ol.tolist()
    emit_w = cg.emit_w.tolist()
    emit_dst = cg.emit_dst.tolist()
    eps_ptr = cg.eps_ptr.tolist()
    eps_ol = cg.eps_ol.tolist()
    eps_w = cg.eps_w.tolist()
    eps_dst = cg.eps_dst.tolist()
    rows = values.tolist()

    cost_by_state = [INF] * cg.num_states
    touched = []

    def improve(state, cost):
        if cost < cost_by_state[state]:
            if cost_by_state[state] == INF:
                touched.append(state)
            cost_by_state[state] = cost
            return True
        return False

    def eps_closure():
        pending = True
        while pending:
            pending = False
            for state in sorted(touched):
                cost = cost_by_state[state]
                for k in range(eps_ptr[state], eps_ptr[state + 1]):
                    if improve(eps_dst[k], cost + eps_w[k]):
                        pending = True

    def prune():
        finite = sorted(touched)
        if not finite:
            return []
        costs = [cost_by_state[s] for s in finite]
        best = min(costs)
        cutoff = best + config.search_beam
        inside = sum(1 for c in costs if c <= cutoff)
        if inside > config.max_active or inside < config.min_active:
            ordered = sorted(costs)
            keep = (config.max_active if inside > config.max_active
                    else min(config.min_active, len(ordered)))
            cutoff = ordered[keep - 1]
        return [s for s in finite if cost_by_state[s] <= cutoff]

    lattice = _Lattice()
    improve(cg.start, 0.0)
    eps_closure()
    active = prune()
    lattice.active.append(active)
    lattice.costs.append({s: cost_by_state[s] for s in active})
    for t in range(T):
        if not active:
            break
        current = [(s, cost_by_state[s]) for s in active]
        for state in touched:
            cost_by_state[state] = INF
        touched = []
        row = rows[t]
        edges = []
        for state, cost in current:
            for k in range(emit_ptr[state], emit_ptr[state + 1]):
                acoustic = config.acoustic_scale * (-row[emit_lab[k] - 1])
                arc_cost = emit_w[k] + acoustic
                improve(emit_dst[k], cost + arc_cost)
                edges.append((state, emit_dst[k], arc_cost, emit_ol[k]))
        eps_closure()
        active = prune()
        keep = set(active)
        lattice.emit_edges.append([e for e in edges if e[1] in keep])
        lattice.active.append(active)
        lattice.costs.append({s: cost_by_state[s] for s in active})
    # Epsilon edges between surviving states of the same block.
    for block, states in enumerate(lattice.active):
        keep = set(states)
        edges = []
        for state in states:
            for k in range(eps_ptr[state], eps_ptr[state + 1]):
                if eps_dst[k] in keep:
                    edges.append((state, eps_dst[k], eps_w[k], eps_ol[k]))
        lattice.eps_edges.append(edges)
    return lattice


def decode_nbest(graph: DecoderGraph, logits: LogitMatrix,
                 config: BeamConfig = None, n: int = 1,
                 max_pops: int = 200000) -> list:
    """Up to n distinct word sequences by ascending cost.

    Sequences are read off the pruned lattice; only hypotheses within
    output_beam of the best survive.
    """
    if n < 1:
        return []
    config = config or BeamConfig()
    _check_tables(graph, logits)
    cg = _compiled(graph)
    if cg.start < 0:
        return []
    values = np.ascontiguousarray(logits.values, dtype=np.float64)
    lattice = _lattice_forward(cg, values, config)
    T = values.shape[0]
    if len(lattice.active) < T + 1 or not lattice.active[-1]:
        return []
    final_w = {int(s): float(w)
               for s, w in zip(cg.final_state, cg.final_w)}

    # Exact cost-to-finish per node, blocks processed backwards.
    heur = [dict() for _ in range(T + 1)]
    for block in range(T, -1, -1):
        h = heur[block]
        if block == T:
            for state in lattice.active[block]:
                if state in final_w:
                    h[state] = final_w[state]
        else:
            nxt = heur[block + 1]
            for src, dst, cost, _ in lattice.emit_edges[block]:
                through = nxt.get(dst)
                if through is not None and cost + through < h.get(src, INF):
                    h[src] = cost + through
        pending = True
        while pending:
            pending = False
            for src, dst, cost, _ in lattice.eps_edges[block]:
                through = h.get(dst)
                if through is not None and cost + through < h.get(src, INF):
                    h[src] = cost + through
                    pending = True
    start_h = heur[0].get(cg.start)
    if start_h is None:
        return []

    eps_by_src = []
    emit_by_src = []
    for block in range(T + 1):
        grouped = {}
        for edge in lattice.eps_edges[block]:
            grouped.setdefault(edge[0], []).append(edge)
        eps_by_src.append(grouped)
        if block < T:
            grouped = {}
            for edge in lattice.emit_edges[block]:
                grouped.setdefault(edge[0], []).append(edge)
            emit_by_src.append(grouped)

    results = []
    seen = set()
    best_total = None
    counter = 0
    heap = [(start_h, 0, 0, cg.start, 0.0, ())]
    pops = 0
    while heap and len(results) < n:
        f, _, block, state, g, words = heapq.heappop(heap)
        pops += 1
        if pops > max_pops:
            raise RuntimeError(f"decode_nbest: exceeded {max_pops} expansions")
        if best_total is not None and f > best_total + config.output_beam + 1e-12:
            break
        if block == T and state == -1:
            # Completed hypothesis (state -1 marks acceptance taken).
            if words not in seen:
                seen.add(words)
                if best_total is None:
                    best_total = g
                results.append((g, words))
            continue
        if block == T and state in final_w:
            counter += 1
            heapq.heappush(heap, (g + final_w[state], counter, T, -1,
                                  g + final_w[state], words))
        for _, dst, cost, olabel in eps_by_src[block].get(state, ()):
            h = heur[block].get(dst)
            if h is None:
                continue
            nw = words + (olabel,) if olabel != EPS_ID else words
            counter += 1
            heapq.heappush(heap, (g + cost + h, counter, block, dst,
                                  g + cost, nw))
        if block < T:
            for _, dst, cost, olabel in emit_by_src[block].get(state, ()):
                h = heur[block + 1].get(dst)
                if h is None:
                    continue
                nw = words + (olabel,) if olabel != EPS_ID else words
                counter += 1
                heapq.heappush(heap, (g + cost + h, counter, block + 1, dst,
                                      g + cost, nw))
    out = []
    for cost, word_ids in results:
        words = [graph.words.symbol_of(w) for w in word_ids]
        out.append(DecodeResult(words, [], float(cost), T))
    return out
