import io
import math
from random import Random

import pytest

from hlgkit.fst import (
    EPS_ID,
    ONE,
    ZERO,
    SymbolTable,
    Wfst,
    arcsort,
    compose,
    connect,
    identity_acceptor,
    linear_acceptor,
    plus,
    shortest_path,
    times,
)
from oracles import join_relations, random_acyclic_wfst, relation


class TestSemiring:
    def test_identities(self):
        assert plus(1.5, ZERO) == 1.5
        assert times(1.5, ZERO) == ZERO
        assert times(1.5, ONE) == 1.5
        assert plus(1.5, 0.7) == 0.7

    def test_axioms_random_triples(self):
        rng = Random(7)
        for _ in range(1000):
            a, b, c = (rng.uniform(0, 100) for _ in range(3))
            assert abs(plus(plus(a, b), c) - plus(a, plus(b, c))) < 1e-9
            assert abs(times(times(a, b), c) - times(a, times(b, c))) < 1e-9
            assert plus(a, b) == plus(b, a)
            # Distributivity: a*(b+c) = a*b + a*c.
            assert abs(times(a, plus(b, c)) - plus(times(a, b), times(a, c))) < 1e-9
            assert plus(a, ZERO) == a
            assert times(a, ONE) == a
            assert times(a, ZERO) == ZERO


class TestSymbolTable:
    def test_eps_reserved(self):
        table = SymbolTable()
        assert table.symbol_of(0) == "<eps>"
        assert table.id_of("<eps>") == 0

    def test_roundtrip_ids(self):
        table = SymbolTable.from_symbols(["a", "b", "ch"])
        for sym_id in range(len(table)):
            assert table.id_of(table.symbol_of(sym_id)) == sym_id

    def test_add_idempotent(self):
        table = SymbolTable()
        assert table.add("x") == table.add("x") == 1

    def test_unknown_symbol_raises(self):
        table = SymbolTable()
        with pytest.raises(KeyError, match="zzz"):
            table.id_of("zzz")

    def test_save_load(self, tmp_path):
        table = SymbolTable.from_symbols(["na", "ni", "ɔ"])
        path = tmp_path / "syms.txt"
        table.save(path)
        assert SymbolTable.load(path) == table


def two_path_machine():
    fst = Wfst()
    s0, s1, s2 = fst.add_state(), fst.add_state(), fst.add_state()
    fst.set_start(s0)
    fst.add_arc(s0, 1, 1, 1.0, s1)
    fst.add_arc(s0, 2, 2, 2.0, s2)
    fst.set_final(s1)
    fst.set_final(s2)
    return fst


class TestShortestPath:
    def test_single_best(self):
        paths = shortest_path(two_path_machine(), 1)
        assert len(paths) == 1
        assert paths[0].ilabels == (1,)
        assert paths[0].weight == pytest.approx(1.0)

    def test_n_larger_than_path_count(self):
        paths = shortest_path(two_path_machine(), 5)
        assert [p.weight for p in paths] == pytest.approx([1.0, 2.0])

    def test_no_path_returns_empty(self):
        fst = Wfst()
        fst.add_state()
        fst.set_start(0)
        assert shortest_path(fst, 3) == []

    def test_matches_enumeration_on_random_acyclic(self):
        rng = Random(11)
        for _ in range(100):
            fst = random_acyclic_wfst(rng, max_states=8)
            expect = sorted(w for _, _, w in set(
                (i, o, w) for i, o, w in _all_paths(fst)))
            got = shortest_path(fst, 3)
            assert [p.weight for p in got] == pytest.approx(expect[:3], abs=1e-6)
            assert all(g.weight <= h.weight + 1e-12
                       for g, h in zip(got, got[1:]))


def _all_paths(fst):
    from oracles import enumerate_paths
    return enumerate_paths(fst, fst.num_states + 2)


class TestArcsort:
    def test_sorted_machine_unchanged(self):
        fst = Wfst()
        fst.add_states(2)
        fst.set_start(0)
        fst.add_arc(0, 1, 1, 0.5, 1)
        fst.add_arc(0, 2, 2, 0.5, 1)
        fst.set_final(1)
        out = arcsort(fst, "input")
        assert list(out.arcs(0)) == list(fst.arcs(0))

    def test_out_of_order_arcs_swapped(self):
        fst = Wfst()
        fst.add_states(2)
        fst.set_start(0)
        fst.add_arc(0, 2, 2, 0.5, 1)
        fst.add_arc(0, 1, 1, 0.5, 1)
        fst.set_final(1)
        out = arcsort(fst, "input")
        assert [a.ilabel for a in out.arcs(0)] == [1, 2]

    def test_semantics_preserved(self):
        rng = Random(3)
        for _ in range(50):
            fst = random_acyclic_wfst(rng)
            assert relation(fst, 10) == relation(arcsort(fst, "output"), 10)

    def test_bad_key_rejected(self):
        with pytest.raises(ValueError):
            arcsort(Wfst(), "weight")


class TestConnect:
    def test_unreachable_state_removed(self):
        fst = Wfst()
        fst.add_states(3)
        fst.set_start(0)
        fst.add_arc(0, 1, 1, 0.0, 1)
        fst.set_final(1)
        # State 2 dangles.
        out = connect(fst)
        assert out.num_states == 2
        assert out.num_arcs == 1

    def test_no_final_state_gives_empty(self):
        fst = Wfst()
        fst.add_states(2)
        fst.set_start(0)
        fst.add_arc(0, 1, 1, 0.0, 1)
        out = connect(fst)
        assert out.is_empty()

    def test_language_unchanged(self):
        rng = Random(5)
        for _ in range(100):
            fst = random_acyclic_wfst(rng)
            assert relation(fst, 8) == relation(connect(fst), 8)


class TestCompose:
    def test_identity_on_output_alphabet(self):
        table = SymbolTable.from_symbols(["a", "b", "c"])
        rng = Random(9)
        for _ in range(30):
            fst = random_acyclic_wfst(rng)
            fst.isyms = fst.osyms = table
            out = compose(fst, identity_acceptor(table))
            assert relation(fst, 8) == pytest.approx(relation(out, 16))

    def test_single_arc_chain(self):
        a = Wfst()
        a.add_states(2)
        a.set_start(0)
        a.add_arc(0, 1, 2, 0.5, 1)
        a.set_final(1)
        b = Wfst()
        b.add_states(2)
        b.set_start(0)
        b.add_arc(0, 2, 3, 0.3, 1)
        b.set_final(1)
        out = compose(a, b)
        paths = shortest_path(out, 2)
        assert len(paths) == 1
        assert paths[0].ilabels == (1,)
        assert paths[0].olabels == (3,)
        assert paths[0].weight == pytest.approx(0.8)

    def test_symbol_table_mismatch_rejected(self):
        t1 = SymbolTable.from_symbols(["a"])
        t2 = SymbolTable.from_symbols(["b"])
        a = Wfst(isyms=t1, osyms=t1)
        b = Wfst(isyms=t2, osyms=t2)
        with pytest.raises(ValueError, match="symbol table"):
            compose(a, b)

    def test_matches_path_pair_enumeration(self):
        rng = Random(13)
        for _ in range(200):
            a = random_acyclic_wfst(rng)
            b = random_acyclic_wfst(rng)
            expect = join_relations(relation(a, 8), relation(b, 8))
            got = relation(compose(a, b), 16)
            assert got == pytest.approx(expect)

    def test_epsilon_paths_not_duplicated(self):
        # a emits an epsilon output, b consumes an epsilon input; exactly
        # one composed path may survive.
        a = Wfst()
        a.add_states(3)
        a.set_start(0)
        a.add_arc(0, 1, EPS_ID, 0.25, 1)
        a.add_arc(1, 2, 2, 0.25, 2)
        a.set_final(2)
        b = Wfst()
        b.add_states(3)
        b.set_start(0)
        b.add_arc(0, EPS_ID, 3, 0.5, 1)
        b.add_arc(1, 2, 4, 0.5, 2)
        b.set_final(2)
        out = compose(a, b)
        paths = shortest_path(out, 10)
        assert len(paths) == 1
        assert paths[0].ilabels == (1, 2)
        assert paths[0].olabels == (3, 4)
        assert paths[0].weight == pytest.approx(1.5)

    def test_associative_on_random_triples(self):
        rng = Random(17)
        for _ in range(40):
            a = random_acyclic_wfst(rng, max_states=4)
            b = random_acyclic_wfst(rng, max_states=4)
            c = random_acyclic_wfst(rng, max_states=4)
            left = relation(compose(compose(a, b), c), 18)
            right = relation(compose(a, compose(b, c)), 18)
            assert left == pytest.approx(right)


class TestTextFormat:
    def test_roundtrip(self):
        rng = Random(21)
        for _ in range(25):
            fst = random_acyclic_wfst(rng)
            buf = io.StringIO()
            fst.write_text(buf)
            buf.seek(0)
            loaded = Wfst.read_text(buf)
            assert loaded.start == fst.start
            assert loaded.finals == fst.finals
            assert relation(loaded, 8) == relation(fst, 8)

    def test_format_shape(self):
        fst = linear_acceptor([1, 2])
        buf = io.StringIO()
        fst.write_text(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "#start\t0"
        assert lines[1].split("\t") == ["0", "1", "1", "1", "0.0"]
        assert lines[-1] == "2\t0.0"

    def test_malformed_line_rejected(self):
        with pytest.raises(ValueError, match="line 2"):
            Wfst.read_text(io.StringIO("#start\t0\n0\t1\t2\n"))


class TestWfstInvariants:
    def test_arc_state_bounds_checked(self):
        fst = Wfst()
        fst.add_state()
        with pytest.raises(ValueError):
            fst.add_arc(0, 1, 1, 0.0, 5)
        with pytest.raises(ValueError):
            fst.set_start(3)

    def test_connect_leaves_only_useful_states(self):
        rng = Random(23)
        for _ in range(50):
            fst = random_acyclic_wfst(rng)
            out = connect(fst)
            if out.is_empty():
                assert relation(fst, 8) == {}
                continue
            useful = set()
            for ils, ols, w in _all_paths(out):
                useful.add(True)
            # Every state of the connected machine lies on some path:
            # check by re-connecting, which must be a no-op.
            again = connect(out)
            assert again.num_states == out.num_states
            assert again.num_arcs == out.num_arcs
