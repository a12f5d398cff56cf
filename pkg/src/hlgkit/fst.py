"""Weighted finite-state transducers over the tropical semiring.

Weights are plain floats holding costs (-log probabilities): path costs
add along a path and alternative paths combine by min.  This is the only
semiring used for graphs; H, L, G, HLG and decoding lattices all live here.
"""

import heapq
import math
from typing import NamedTuple, Optional

EPS = "<eps>"
EPS_ID = 0
NO_STATE = -1

# Tropical semiring constants and operations.  ZERO is the impossible
# event (cost +inf), ONE the free event (cost 0).
ZERO = math.inf
ONE = 0.0


def plus(a: float, b: float) -> float:
    """Tropical plus: pick the cheaper alternative."""
    return a if a <= b else b


def times(a: float, b: float) -> float:
    """Tropical times: concatenate costs."""
    return a + b


class SymbolTable:
    """Bijection between UTF-8 symbol strings and dense integer ids.

    Id 0 is reserved at construction time.  Graph tables reserve it for
    the epsilon symbol "<eps>"; acoustic tables reserve it for the CTC
    blank "<blk>" so that symbol ids index logit columns directly.
    """

    def __init__(self, first_symbol: str = EPS):
        self._symbols = [first_symbol]
        self._ids = {first_symbol: 0}

    @classmethod
    def from_symbols(cls, symbols, first_symbol: str = EPS) -> "SymbolTable":
        table = cls(first_symbol)
        for sym in symbols:
            table.add(sym)
        return table

    def add(self, symbol: str) -> int:
        """Register a symbol (idempotent) and return its id."""
        if not symbol:
            raise ValueError("empty symbol")
        sym_id = self._ids.get(symbol)
        if sym_id is None:
            sym_id = len(self._symbols)
            self._ids[symbol] = sym_id
            self._symbols.append(symbol)
        return sym_id

    def id_of(self, symbol: str) -> int:
        try:
            return self._ids[symbol]
        except KeyError:
            raise KeyError(f"symbol not in table: {symbol!r}") from None

    def symbol_of(self, sym_id: int) -> str:
        if not 0 <= sym_id < len(self._symbols):
            raise KeyError(f"id not in table: {sym_id}")
        return self._symbols[sym_id]

    def symbols(self):
        return iter(self._symbols)

    def __contains__(self, symbol: str) -> bool:
        return symbol in self._ids

    def __len__(self) -> int:
        return len(self._symbols)

    def __eq__(self, other) -> bool:
        return isinstance(other, SymbolTable) and self._symbols == other._symbols

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for i, sym in enumerate(self._symbols):
                fh.write(f"{sym}\t{i}\n")

    @classmethod
    def load(cls, path) -> "SymbolTable":
        pairs = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                fields = line.split("\t")
                if len(fields) != 2:
                    raise ValueError(f"{path}:{lineno}: expected 'symbol<TAB>id'")
                pairs.append((int(fields[1]), fields[0]))
        pairs.sort()
        if not pairs or pairs[0][0] != 0 or pairs[-1][0] != len(pairs) - 1:
            raise ValueError(f"{path}: ids must be dense and start at 0")
        table = cls(pairs[0][1])
        for _, sym in pairs[1:]:
            table.add(sym)
        if len(table) != len(pairs):
            raise ValueError(f"{path}: duplicate symbols")
        return table


class Arc(NamedTuple):
    ilabel: int
    olabel: int
    weight: float
    dst: int


class Path(NamedTuple):
    """A successful path: epsilon-free label sequences and total cost."""

    ilabels: tuple
    olabels: tuple
    weight: float


class Wfst:
    """A weighted transducer with dense integer states.

    States are created with add_state(); arcs and final weights may be
    added freely while building.  All algorithms in this module treat
    their inputs as read-only and return new machines, so a built Wfst
    can be shared across threads.
    """

    def __init__(self, isyms: Optional[SymbolTable] = None,
                 osyms: Optional[SymbolTable] = None):
        self.start = NO_STATE
        self.finals = {}
        self.isyms = isyms
        self.osyms = osyms
        self._arcs = []

    @property
    def num_states(self) -> int:
        return len(self._arcs)

    @property
    def num_arcs(self) -> int:
        return sum(len(a) for a in self._arcs)

    def add_state(self) -> int:
        self._arcs.append([])
        return len(self._arcs) - 1

    def add_states(self, n: int) -> None:
        for _ in range(n):
            self._arcs.append([])

    def set_start(self, state: int) -> None:
        self._check_state(state)
        self.start = state

    def set_final(self, state: int, weight: float = ONE) -> None:
        self._check_state(state)
        self.finals[state] = weight

    def add_arc(self, src: int, ilabel: int, olabel: int, weight: float,
                dst: int) -> None:
        self._check_state(src)
        self._check_state(dst)
        self._arcs[src].append(Arc(ilabel, olabel, weight, dst))

    def arcs(self, state: int):
        return iter(self._arcs[state])

    def all_arcs(self):
        """Yield (src, arc) over every arc in state order."""
        for src, arcs in enumerate(self._arcs):
            for arc in arcs:
                yield src, arc

    def final_weight(self, state: int) -> float:
        return self.finals.get(state, ZERO)

    def is_empty(self) -> bool:
        return self.start == NO_STATE or self.num_states == 0

    def _check_state(self, state: int) -> None:
        if not 0 <= state < len(self._arcs):
            raise ValueError(f"state {state} out of range (num_states={len(self._arcs)})")

    def __repr__(self):
        return (f"<Wfst states={self.num_states} arcs={self.num_arcs} "
                f"start={self.start} finals={len(self.finals)}>")

    # Text format: first line "#start<TAB>state"; arc lines
    # "src<TAB>dst<TAB>ilabel<TAB>olabel<TAB>weight"; final lines
    # "state<TAB>weight".
    def write_text(self, fh) -> None:
        fh.write(f"#start\t{self.start}\n")
        for src, arc in self.all_arcs():
            fh.write(f"{src}\t{arc.dst}\t{arc.ilabel}\t{arc.olabel}\t{arc.weight!r}\n")
        for state in sorted(self.finals):
            fh.write(f"{state}\t{self.finals[state]!r}\n")

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            self.write_text(fh)

    @classmethod
    def read_text(cls, fh, isyms=None, osyms=None) -> "Wfst":
        fst = cls(isyms=isyms, osyms=osyms)
        start = NO_STATE
        arcs = []
        finals = []
        max_state = -1
        for lineno, line in enumerate(fh, 1):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split("\t")
            if fields[0] == "#start":
                if len(fields) != 2:
                    raise ValueError(f"line {lineno}: bad #start line")
                start = int(fields[1])
                max_state = max(max_state, start)
            elif len(fields) == 5:
                src, dst = int(fields[0]), int(fields[1])
                arcs.append((src, int(fields[2]), int(fields[3]),
                             float(fields[4]), dst))
                max_state = max(max_state, src, dst)
            elif len(fields) == 2:
                state = int(fields[0])
                finals.append((state, float(fields[1])))
                max_state = max(max_state, state)
            else:
                raise ValueError(f"line {lineno}: expected 2 or 5 tab-separated fields")
        fst.add_states(max_state + 1)
        if start != NO_STATE:
            fst.set_start(start)
        for src, il, ol, w, dst in arcs:
            fst.add_arc(src, il, ol, w, dst)
        for state, w in finals:
            fst.set_final(state, w)
        return fst

    @classmethod
    def load(cls, path, isyms=None, osyms=None) -> "Wfst":
        with open(path, encoding="utf-8") as fh:
            return cls.read_text(fh, isyms=isyms, osyms=osyms)


def linear_acceptor(labels, table: Optional[SymbolTable] = None) -> Wfst:
    """Chain acceptor for one label sequence, all weights ONE."""
    fst = Wfst(isyms=table, osyms=table)
    state = fst.add_state()
    fst.set_start(state)
    for label in labels:
        nxt = fst.add_state()
        fst.add_arc(state, label, label, ONE, nxt)
        state = nxt
    fst.set_final(state, ONE)
    return fst


def identity_acceptor(table: SymbolTable) -> Wfst:
    """Single-state acceptor looping over every non-epsilon symbol."""
    fst = Wfst(isyms=table, osyms=table)
    state = fst.add_state()
    fst.set_start(state)
    fst.set_final(state, ONE)
    for sym_id in range(1, len(table)):
        fst.add_arc(state, sym_id, sym_id, ONE, state)
    return fst


def arcsort(fst: Wfst, by: str = "input") -> Wfst:
    """Return a copy with each state's arcs sorted by the chosen label.

    The sort is stable, so equal labels keep their original relative
    order and the accepted relation is unchanged.
    """
    if by not in ("input", "output"):
        raise ValueError(f"by must be 'input' or 'output', got {by!r}")
    key = (lambda a: a.ilabel) if by == "input" else (lambda a: a.olabel)
    out = Wfst(isyms=fst.isyms, osyms=fst.osyms)
    out.add_states(fst.num_states)
    out.start = fst.start
    out.finals = dict(fst.finals)
    for state in range(fst.num_states):
        out._arcs[state] = sorted(fst._arcs[state], key=key)
    return out


def connect(fst: Wfst) -> Wfst:
    """Trim states that are not on any successful (start-to-final) path.

    Surviving states are renumbered in ascending original order.  A
    machine with no successful path comes back empty.
    """
    out = Wfst(isyms=fst.isyms, osyms=fst.osyms)
    if fst.is_empty():
        return out
    # Forward reachability from the start state.
    reach_fwd = set()
    stack = [fst.start]
    while stack:
        state = stack.pop()
        if state in reach_fwd:
            continue
        reach_fwd.add(state)
        for arc in fst.arcs(state):
            if arc.dst not in reach_fwd:
                stack.append(arc.dst)
    # Backward reachability from final states.
    rev = [[] for _ in range(fst.num_states)]
    for src, arc in fst.all_arcs():
        rev[arc.dst].append(src)
    reach_bwd = set()
    stack = [s for s in fst.finals if fst.finals[s] != ZERO]
    while stack:
        state = stack.pop()
        if state in reach_bwd:
            continue
        reach_bwd.add(state)
        for src in rev[state]:
            if src not in reach_bwd:
                stack.append(src)
    keep = sorted(reach_fwd & reach_bwd)
    if fst.start not in reach_bwd:
        return out
    renum = {old: new for new, old in enumerate(keep)}
    out.add_states(len(keep))
    out.set_start(renum[fst.start])
    for old in keep:
        for arc in fst.arcs(old):
            if arc.dst in renum:
                out.add_arc(renum[old], arc.ilabel, arc.olabel, arc.weight,
                            renum[arc.dst])
        w = fst.finals.get(old)
        if w is not None and w != ZERO:
            out.set_final(renum[old], w)
    return out


def compose(a: Wfst, b: Wfst) -> Wfst:
    """Compose two transducers, matching a's output labels to b's inputs.

    Epsilon labels are handled with the three-state epsilon filter so
    that each pair of underlying paths yields exactly one composed path:
    from filter state 0 all moves are open, a simultaneous eps:eps step
    keeps state 0, and a one-sided epsilon step commits the filter to
    that side (state 1 for a-only, 2 for b-only) until the next true
    label match resets it.
    """
    if a.isyms is not None and b.isyms is not None and a.osyms is not None:
        if a.osyms != b.isyms:
            raise ValueError(
                "compose: output symbol table of the left machine does not "
                "match the input symbol table of the right machine")
    out = Wfst(isyms=a.isyms, osyms=b.osyms)
    if a.is_empty() or b.is_empty():
        return out

    # Group b's arcs by input label once per state.
    b_by_ilabel = {}

    def arcs_b(state):
        grouped = b_by_ilabel.get(state)
        if grouped is None:
            grouped = {}
            for arc in b.arcs(state):
                grouped.setdefault(arc.ilabel, []).append(arc)
            b_by_ilabel[state] = grouped
        return grouped

    state_map = {}
    order = []

    def get_state(key):
        sid = state_map.get(key)
        if sid is None:
            sid = out.add_state()
            state_map[key] = sid
            order.append(key)
        return sid

    start_key = (a.start, b.start, 0)
    out.set_start(get_state(start_key))
    idx = 0
    while idx < len(order):
        sa, sb, f = order[idx]
        src = state_map[(sa, sb, f)]
        idx += 1
        grouped = arcs_b(sb)
        for arc_a in a.arcs(sa):
            if arc_a.olabel != EPS_ID:
                for arc_b in grouped.get(arc_a.olabel, ()):
                    dst = get_state((arc_a.dst, arc_b.dst, 0))
                    out.add_arc(src, arc_a.ilabel, arc_b.olabel,
                                arc_a.weight + arc_b.weight, dst)
            else:
                if f != 2:
                    dst = get_state((arc_a.dst, sb, 1))
                    out.add_arc(src, arc_a.ilabel, EPS_ID, arc_a.weight, dst)
                if f == 0:
                    for arc_b in grouped.get(EPS_ID, ()):
                        dst = get_state((arc_a.dst, arc_b.dst, 0))
                        out.add_arc(src, arc_a.ilabel, arc_b.olabel,
                                    arc_a.weight + arc_b.weight, dst)
        if f != 1:
            for arc_b in grouped.get(EPS_ID, ()):
                dst = get_state((sa, arc_b.dst, 2))
                out.add_arc(src, EPS_ID, arc_b.olabel, arc_b.weight, dst)
        wa = a.finals.get(sa)
        wb = b.finals.get(sb)
        if wa is not None and wb is not None:
            out.set_final(src, wa + wb)
    return out


def _distances_to_final(fst: Wfst):
    """Exact min cost from every state to acceptance, or ZERO if none.

    Bellman-Ford over the reversed machine, so negative arc weights are
    fine as long as there is no negative cycle.
    """
    n = fst.num_states
    dist = [ZERO] * n
    rev = [[] for _ in range(n)]
    for src, arc in fst.all_arcs():
        rev[arc.dst].append((src, arc.weight))
    for state, w in fst.finals.items():
        if w < dist[state]:
            dist[state] = w
    for round_no in range(n + 1):
        changed = False
        for state in range(n):
            d = dist[state]
            if d == ZERO:
                continue
            for src, w in rev[state]:
                nd = d + w
                if nd < dist[src]:
                    dist[src] = nd
                    changed = True
        if not changed:
            return dist
    raise ValueError("shortest_path: negative-cost cycle detected")


def shortest_path(fst: Wfst, n: int = 1, max_pops: int = 1_000_000):
    """Return up to n cheapest successful paths in nondecreasing cost order.

    Best-first search guided by the exact distance-to-final heuristic, so
    partial paths pop in order of the best full cost they can reach.  A
    machine with no successful path yields an empty list.
    """
    if n < 1:
        return []
    if fst.is_empty():
        return []
    to_final = _distances_to_final(fst)
    if to_final[fst.start] == ZERO:
        return []
    results = []
    counter = 0
    # Heap entries: (best full cost, insertion order, state, cost so far,
    # ilabels, olabels).  None as state marks a completed path.
    heap = [(to_final[fst.start], counter, fst.start, 0.0, (), ())]
    pops = 0
    while heap and len(results) < n:
        f, _, state, g, ilabels, olabels = heapq.heappop(heap)
        pops += 1
        if pops > max_pops:
            raise RuntimeError(f"shortest_path: exceeded {max_pops} expansions")
        if state is None:
            results.append(Path(ilabels, olabels, g))
            continue
        final_w = fst.finals.get(state)
        if final_w is not None and final_w != ZERO:
            counter += 1
            heapq.heappush(heap, (g + final_w, counter, None, g + final_w,
                                  ilabels, olabels))
        for arc in fst.arcs(state):
            h = to_final[arc.dst]
            if h == ZERO or arc.weight == ZERO:
                continue
            ng = g + arc.weight
            nil = ilabels + (arc.ilabel,) if arc.ilabel != EPS_ID else ilabels
            nol = olabels + (arc.olabel,) if arc.olabel != EPS_ID else olabels
            counter += 1
            heapq.heappush(heap, (ng + h, counter, arc.dst, ng, nil, nol))
    return results
