"""Rule-table grapheme-to-phoneme conversion for languages without one.

A target language with no rules of its own borrows them: the k nearest
languages on a phylogenetic tree (hop distance) each propose a phoneme
hypothesis, and the hypotheses are merged into a confusion network whose
slots are decided by majority vote, closer languages breaking ties.
"""

import unicodedata
import warnings
from dataclasses import dataclass, field


@dataclass
class RuleTable:
    """Ordered grapheme -> phoneme-sequence rules for one language."""

    language: str
    rules: list = field(default_factory=list)  # (grapheme str, tuple of phonemes)

    def add(self, graphemes: str, phonemes) -> None:
        if not graphemes:
            raise ValueError("empty grapheme sequence in rule")
        self.rules.append((graphemes, tuple(phonemes)))

    def alphabet_coverage(self, alphabet) -> set:
        """Characters of `alphabet` that no rule can start to consume."""
        starts = {g[0] for g, _ in self.rules}
        return {ch for ch in alphabet if ch not in starts}

    @classmethod
    def load(cls, path, language: str) -> "RuleTable":
        """Read ordered `grapheme<TAB>phoneme phoneme ...` lines.

        Lines starting with '#' are comments.  An empty phoneme side is
        allowed and means the grapheme is silently consumed.
        """
        table = cls(language)
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                fields = line.split("\t")
                if len(fields) not in (1, 2):
                    raise ValueError(f"{path}:{lineno}: expected 'grapheme<TAB>phonemes'")
                phones = fields[1].split() if len(fields) == 2 else []
                table.add(fields[0], phones)
        if not table.rules:
            raise ValueError(f"{path}: no rules")
        return table


class PhyloTree:
    """A rooted tree of language-family nodes, leaves carrying ISO codes."""

    def __init__(self, edges):
        self.parent = {}
        nodes = set()
        for child, parent in edges:
            if child in self.parent:
                raise ValueError(f"node {child!r} has two parents")
            self.parent[child] = parent
            nodes.add(child)
            nodes.add(parent)
        roots = sorted(nodes - set(self.parent))
        if len(roots) != 1:
            raise ValueError(f"tree must have exactly one root, found {roots}")
        self.root = roots[0]
        self.nodes = nodes
        self._check_acyclic()

    def _check_acyclic(self):
        for node in self.nodes:
            seen = set()
            while node in self.parent:
                if node in seen:
                    raise ValueError("cycle in tree")
                seen.add(node)
                node = self.parent[node]

    @classmethod
    def load(cls, path) -> "PhyloTree":
        edges = []
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line or line.startswith("#"):
                    continue
                fields = line.split("\t")
                if len(fields) != 2:
                    raise ValueError(f"{path}:{lineno}: expected 'child<TAB>parent'")
                edges.append((fields[0], fields[1]))
        return cls(edges)

    def distances_from(self, node: str) -> dict:
        """Hop count from `node` to every node (tree edges, undirected)."""
        if node not in self.nodes:
            raise KeyError(f"language not in tree: {node!r}")
        children = {}
        for child, parent in self.parent.items():
            children.setdefault(parent, []).append(child)
        dist = {node: 0}
        frontier = [node]
        while frontier:
            nxt = []
            for cur in frontier:
                neighbors = children.get(cur, [])
                if cur in self.parent:
                    neighbors = neighbors + [self.parent[cur]]
                for other in neighbors:
                    if other not in dist:
                        dist[other] = dist[cur] + 1
                        nxt.append(other)
            frontier = nxt
        return dist


def knn_languages(tree: PhyloTree, target: str, k: int, available) -> list:
    """The k available languages nearest to target by tree path length.

    Ascending distance, ties broken lexicographically by code.  The
    target itself is eligible when it is in `available`.  If fewer than
    k candidates exist they are all returned, with a warning.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    dist = tree.distances_from(target)
    candidates = sorted((dist[lang], lang) for lang in available if lang in dist)
    if len(candidates) < k:
        warnings.warn(f"only {len(candidates)} of {k} requested languages "
                      f"are available near {target!r}")
    return [lang for _, lang in candidates[:k]]


def apply_rules(table: RuleTable, word: str):
    """Greedy longest-match left-to-right rule application.

    At each position the longest grapheme sequence with a rule wins;
    among rules of equal length the earlier table entry wins.  Characters
    no rule can consume are skipped and counted, never fatal.

    Returns (phonemes, skipped_chars).
    """
    by_prefix = {}
    for order, (graphemes, phonemes) in enumerate(table.rules):
        key = (-len(graphemes), order)
        cur = by_prefix.get(graphemes)
        if cur is None or key < cur[0]:
            by_prefix[graphemes] = (key, phonemes)
    max_len = max((len(g) for g, _ in table.rules), default=0)
    out = []
    skipped = 0
    pos = 0
    while pos < len(word):
        best = None
        for length in range(min(max_len, len(word) - pos), 0, -1):
            hit = by_prefix.get(word[pos:pos + length])
            if hit is not None:
                best = (length, hit[1])
                break
        if best is None:
            skipped += 1
            pos += 1
        else:
            out.extend(best[1])
            pos += best[0]
    return out, skipped


def ensemble(hypotheses) -> list:
    """Merge (phoneme sequence, language distance) hypotheses.

    Hypotheses are aligned into a confusion network one at a time in
    ascending distance order; each slot is then decided by majority
    vote, ties going to the candidate backed by the smallest language
    distance.  Epsilon votes (a hypothesis skipping a slot) may delete
    the slot entirely.
    """
    if not hypotheses:
        raise ValueError("ensemble of zero hypotheses")
    ordered = sorted(
        ((tuple(seq), dist) for seq, dist in hypotheses),
        key=lambda item: item[1])
    # Slots hold (symbol or None, distance) votes.
    first_seq, first_dist = ordered[0]
    slots = [[(sym, first_dist)] for sym in first_seq]
    merged_dists = [first_dist]
    for seq, dist in ordered[1:]:
        slots = _align_into_network(slots, seq, dist, merged_dists)
        merged_dists.append(dist)
    result = []
    for votes in slots:
        winner = _decide_slot(votes)
        if winner is not None:
            result.append(winner)
    return result


def _align_into_network(slots, seq, dist, merged_dists):
    """Edit-distance alignment of one hypothesis against the network.

    Matching a slot costs 0 when the symbol already has a vote there,
    else 1; skipping a slot or inserting a new one costs 1.  Tie order
    is match/substitute, then insert, then delete, same as the scorer.
    """
    n, m = len(slots), len(seq)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dp[i][0] = i
    for j in range(1, m + 1):
        dp[0][j] = j
    for i in range(1, n + 1):
        in_slot = {sym for sym, _ in slots[i - 1]}
        for j in range(1, m + 1):
            sub = dp[i - 1][j - 1] + (0 if seq[j - 1] in in_slot else 1)
            ins = dp[i][j - 1] + 1
            dele = dp[i - 1][j] + 1
            dp[i][j] = min(sub, ins, dele)
    # Backtrace building the new slot list back-to-front.
    out = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            in_slot = {sym for sym, _ in slots[i - 1]}
            cost = 0 if seq[j - 1] in in_slot else 1
            if dp[i][j] == dp[i - 1][j - 1] + cost:
                out.append(slots[i - 1] + [(seq[j - 1], dist)])
                i, j = i - 1, j - 1
                continue
        if j > 0 and dp[i][j] == dp[i][j - 1] + 1:
            # New slot: earlier hypotheses implicitly voted epsilon here.
            fresh = [(None, d) for d in merged_dists] + [(seq[j - 1], dist)]
            out.append(fresh)
            j -= 1
            continue
        out.append(slots[i - 1] + [(None, dist)])
        i -= 1
    out.reverse()
    return out


def _decide_slot(votes):
    tally = {}
    for sym, dist in votes:
        entry = tally.setdefault(sym, [0, dist])
        entry[0] += 1
        if dist < entry[1]:
            entry[1] = dist
    # Majority first; nearest language breaks count ties; the symbol
    # string is a final deterministic fallback (epsilon sorts last).
    def rank(item):
        sym, (count, best_dist) = item
        return (-count, best_dist, sym is None, sym or "")
    winner = min(tally.items(), key=rank)
    return winner[0]


@dataclass
class PronLexicon:
    """Word -> pronunciations (primary first), plus drop diagnostics."""

    entries: dict = field(default_factory=dict)
    dropped: list = field(default_factory=list)

    def phoneme_inventory(self) -> list:
        inventory = set()
        for prons in self.entries.values():
            for pron in prons:
                inventory.update(pron)
        return sorted(inventory)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for word in self.entries:
                for pron in self.entries[word]:
                    fh.write(f"{word}\t{' '.join(pron)}\n")

    @classmethod
    def load(cls, path) -> "PronLexicon":
        lex = cls()
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.rstrip("\n")
                if not line:
                    continue
                fields = line.split("\t")
                if len(fields) != 2 or not fields[1].strip():
                    raise ValueError(f"{path}:{lineno}: expected 'word<TAB>phonemes'")
                prons = lex.entries.setdefault(fields[0], [])
                pron = tuple(fields[1].split())
                if pron not in prons:
                    prons.append(pron)
        return lex


def phonemize_lexicon(vocab, tree: PhyloTree, tables: dict, target: str,
                      k: int) -> PronLexicon:
    """Build a pronunciation lexicon for `vocab` in the target language.

    Words are normalized to NFC lowercase (matching corpus cleaning),
    converted under each of the k nearest languages' rule tables, and the
    hypotheses ensembled.  Hypotheses that come out empty carry no
    phonetic information and are left out of the vote; words for which
    every hypothesis is empty are dropped and reported.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not tables:
        raise ValueError("no rule tables available")
    neighbors = knn_languages(tree, target, k, sorted(tables))
    dist = tree.distances_from(target)
    lex = PronLexicon()
    for word in vocab:
        word_nfc = unicodedata.normalize("NFC", word).lower()
        hypotheses = []
        for lang in neighbors:
            phones, _ = apply_rules(tables[lang], word_nfc)
            if phones:
                hypotheses.append((phones, dist[lang]))
        pron = tuple(ensemble(hypotheses)) if hypotheses else ()
        if pron:
            lex.entries.setdefault(word, [])
            if pron not in lex.entries[word]:
                lex.entries[word].append(pron)
        else:
            lex.dropped.append(word)
    return lex
