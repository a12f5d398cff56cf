"""Pure-Python decoding and scoring kernels.

Reference implementations of the hot loops; hlgkit._kernels is the
compiled twin with identical semantics (same iteration order, same
floating-point operation order) so either backend yields bit-identical
results.  See hlgkit.kernels for the selection logic.
"""

import math

INF = math.inf


def viterbi_decode(num_states, emit_ptr, emit_lab, emit_ol, emit_w, emit_dst,
                   eps_ptr, eps_ol, eps_w, eps_dst, final_state, final_w,
                   start, logits, acoustic_scale, search_beam,
                   min_active, max_active):
    """Frame-synchronous token passing over a CSR-packed graph.

    emit_* arrays hold the emitting arcs (input label > 0) of each state,
    eps_* the label-0 arcs expanded for free within a frame.  Arc cost is
    graph weight plus acoustic_scale * -logits[t, label - 1].  Each frame
    keeps states within search_beam of the best, tightened to max_active
    survivors or relaxed to min_active as needed.

    Returns (tok_state, tok_cost, tok_prev, tok_ilabel, tok_olabel,
    best_token, best_cost): flat parallel token arrays whose prev indices
    form the traceback, the index of the best accepting token (-1 when no
    path), and its cost including the final weight.
    """
    T = logits.shape[0]
    tok_state = []
    tok_cost = []
    tok_prev = []
    tok_il = []
    tok_ol = []
    cost_by_state = [INF] * num_states
    tok_by_state = [-1] * num_states
    touched = []

    def improve(state, cost, prev, ilabel, olabel):
        if cost < cost_by_state[state]:
            if cost_by_state[state] == INF:
                touched.append(state)
            cost_by_state[state] = cost
            tok_state.append(state)
            tok_cost.append(cost)
            tok_prev.append(prev)
            tok_il.append(ilabel)
            tok_ol.append(olabel)
            tok_by_state[state] = len(tok_state) - 1
            return True
        return False

    def eps_closure():
        pending = True
        while pending:
            pending = False
            for state in sorted(touched):
                cost = cost_by_state[state]
                prev = tok_by_state[state]
                for k in range(eps_ptr[state], eps_ptr[state + 1]):
                    if improve(eps_dst[k], cost + eps_w[k], prev, 0, eps_ol[k]):
                        pending = True

    def prune():
        finite = sorted(touched)
        if not finite:
            return []
        costs = [cost_by_state[s] for s in finite]
        best = min(costs)
        cutoff = best + search_beam
        inside = 0
        for c in costs:
            if c <= cutoff:
                inside += 1
        if inside > max_active or inside < min_active:
            ordered = sorted(costs)
            keep = max_active if inside > max_active else min(min_active,
                                                              len(ordered))
            cutoff = ordered[keep - 1]
        return [s for s in finite if cost_by_state[s] <= cutoff]

    improve(start, 0.0, -1, 0, 0)
    eps_closure()
    active = prune()
    for t in range(T):
        if not active:
            break
        current = [(tok_by_state[s], cost_by_state[s], s) for s in active]
        for state in touched:
            cost_by_state[state] = INF
            tok_by_state[state] = -1
        touched = []
        for prev, cost, state in current:
            for k in range(emit_ptr[state], emit_ptr[state + 1]):
                acoustic = acoustic_scale * (-logits[t, emit_lab[k] - 1])
                improve(emit_dst[k], cost + emit_w[k] + acoustic,
                        prev, emit_lab[k], emit_ol[k])
        eps_closure()
        active = prune()

    active_set = set(active)
    best_token = -1
    best_cost = INF
    for i in range(len(final_state)):
        state = final_state[i]
        if state in active_set:
            cost = cost_by_state[state] + final_w[i]
            if cost < best_cost:
                best_cost = cost
                best_token = tok_by_state[state]
    return tok_state, tok_cost, tok_prev, tok_il, tok_ol, best_token, best_cost


def edit_counts(ref, hyp):
    """Levenshtein distance split into insertion/deletion/substitution.

    Unit costs; on cost ties the operation preference is substitution,
    then insertion, then deletion, matching the alignment backtrace.
    Returns (distance, ins, dels, subs).
    """
    n = len(ref)
    m = len(hyp)
    # Row-wise DP carrying (cost, ins, dels, subs) per cell.
    prev = [(j, j, 0, 0) for j in range(m + 1)]
    for i in range(1, n + 1):
        cur = [(i, 0, i, 0)] + [None] * m
        ref_tok = ref[i - 1]
        for j in range(1, m + 1):
            dc, di, dd, ds = prev[j - 1]
            if ref_tok == hyp[j - 1]:
                sub = (dc, di, dd, ds)
            else:
                sub = (dc + 1, di, dd, ds + 1)
            ic, ii, idd, isx = cur[j - 1]
            ins = (ic + 1, ii + 1, idd, isx)
            uc, ui, ud, us = prev[j]
            dele = (uc + 1, ui, ud + 1, us)
            best = sub
            if ins[0] < best[0]:
                best = ins
            if dele[0] < best[0]:
                best = dele
            cur[j] = best
        prev = cur
    cost, ins, dels, subs = prev[m]
    return cost, ins, dels, subs
