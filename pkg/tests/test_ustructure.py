import itertools
from fractions import Fraction

import pytest

from repforge.errors import CapExceeded, NotAnEmbedding, PreconditionError
from repforge.ustructure import (
    Embedding,
    PartialIso,
    RelationSymbol,
    USignature,
    UStructure,
    as_ultrametric,
    automorphism_group_order,
    automorphisms_fixing,
    check_extension_property,
    extend_partial_iso,
    find_isomorphism,
    graph_signature,
    graph_structure,
    induced_substructure,
    is_valid,
    one_point_extension_types,
    partitions_from_distance,
    relabel,
    saturate,
    symmetrize,
    validate,
)


def chain_sig(*labels):
    return USignature(tuple(labels), ())


def triangle():
    return graph_structure([1, 2, 3], [(1, 2), (2, 3), (1, 3)])


def path3():
    return graph_structure([1, 2, 3], [(1, 2), (2, 3)])


class TestSignature:
    def test_labels_increasing(self):
        with pytest.raises(ValueError):
            USignature((2, 1), ())

    def test_symmetry_perm_check(self):
        with pytest.raises(ValueError):
            RelationSymbol("R", 2, ((1, 1),))

    def test_group_expansion(self):
        sym = RelationSymbol("T", 3, ((2, 3, 1),))
        assert len(sym.group()) == 3
        full = RelationSymbol("T", 3, ((2, 1, 3), (2, 3, 1)))
        assert len(full.group()) == 6


class TestValidate:
    def test_single_point_ok(self):
        x = UStructure(chain_sig(1), [0], {}, {1: [[0]]})
        assert validate(x) == []

    def test_never_separated_pair(self):
        x = UStructure(chain_sig(1, 2), ["a", "b"],
                       {}, {1: [["a", "b"]], 2: [["a", "b"]]})
        bad = validate(x)
        assert any(v.axiom == 5 and set(v.witness) == {"a", "b"} for v in bad)

    def test_asymmetric_edge(self):
        sig = graph_signature()
        x = UStructure(sig, ["a", "b"], {"R": [("a", "b")]})
        bad = validate(x)
        assert any(v.axiom == 1 for v in bad)

    def test_repeated_entry(self):
        sig = USignature((), (RelationSymbol("R", 2),))
        x = UStructure(sig, ["a"], {"R": [("a", "a")]})
        assert any(v.axiom == 2 for v in validate(x))

    def test_nesting_violation(self):
        x = UStructure(chain_sig(1, 2), ["a", "b"],
                       {}, {1: [["a", "b"]], 2: [["a"], ["b"]]})
        assert any(v.axiom == 4 for v in validate(x))


class TestSymmetrize:
    def test_edge_closure(self):
        x = UStructure(graph_signature(), ["a", "b"], {"R": [("a", "b")]})
        y = symmetrize(x)
        assert y.relations["R"] == frozenset({("a", "b"), ("b", "a")})
        assert validate(y) == []

    def test_idempotent(self):
        y = symmetrize(triangle())
        assert y == triangle()

    def test_cyclic_ternary(self):
        sig = USignature((), (RelationSymbol("T", 3, ((2, 3, 1),)),))
        x = UStructure(sig, ["a", "b", "c"], {"T": [("a", "b", "c")]})
        y = symmetrize(x)
        assert y.relations["T"] == frozenset(
            {("a", "b", "c"), ("b", "c", "a"), ("c", "a", "b")})

    def test_automorphisms_survive(self):
        sig = USignature((), (RelationSymbol("T", 3, ((2, 1, 3),)),))
        x = UStructure(sig, [0, 1, 2, 3], {"T": [(0, 1, 2), (1, 0, 2)]})
        before = automorphism_group_order(x)
        after = automorphism_group_order(symmetrize(x))
        assert after >= before


class TestPartialIso:
    def test_empty_one_point(self):
        x = UStructure(graph_signature(), ["a"])
        p = PartialIso(x, x, {})
        assert len(extend_partial_iso(p, "a")) == 1

    def test_dead_end(self):
        src = graph_structure(["a", "x"], [("a", "x")])
        tgt = graph_structure(["a1", "y"], [])
        p = PartialIso(src, tgt, {"a": "a1"})
        assert extend_partial_iso(p, "x") == []

    def test_path_into_triangle(self):
        src = graph_structure(["a", "b", "c"], [("a", "b"), ("b", "c")])
        tgt = triangle()
        p = PartialIso(src, tgt, {"a": 1})
        exts = extend_partial_iso(p, "b")
        # both neighbours of 1 are legal images for b
        assert sorted(e.mapping["b"] for e in exts) == [2, 3]
        # oracle: count all injective maps a,b -> tgt preserving/reflecting
        count = 0
        for y in tgt.points:
            if y != 1 and ((1, y) in tgt.relations["R"]):
                count += 1
        assert len(exts) == count


class TestFindIsomorphism:
    def test_triangle_self(self):
        iso = find_isomorphism(triangle(), triangle())
        assert iso is not None

    def test_path_vs_triangle(self):
        assert find_isomorphism(path3(), triangle()) is None

    def test_matches_bruteforce_on_random_graphs(self):
        import random
        rng = random.Random(7)
        for trial in range(40):
            n = rng.randint(1, 5)
            pts = list(range(n))
            def rand_graph():
                edges = [(a, b) for a, b in itertools.combinations(pts, 2)
                         if rng.random() < 0.5]
                return graph_structure(pts, edges)
            x, y = rand_graph(), rand_graph()
            ours = find_isomorphism(x, y)
            brute = None
            for perm in itertools.permutations(pts):
                m = dict(zip(pts, perm))
                if all(((m[a], m[b]) in y.relations["R"]) ==
                       ((a, b) in x.relations["R"])
                       for a in pts for b in pts if a != b):
                    brute = m
                    break
            assert (ours is None) == (brute is None)
            if ours is not None:
                assert ours.is_consistent()


class TestAutomorphisms:
    def test_two_isolated_points(self):
        x = graph_structure(["a", "b"], [])
        gens = automorphisms_fixing(x, [])
        assert len(gens) == 1 and gens[0] == {"a": "b", "b": "a"}

    def test_edge_fixing_one_end(self):
        x = graph_structure(["a", "b"], [("a", "b")])
        assert automorphisms_fixing(x, ["a"]) == []

    def test_square_dihedral(self):
        square = graph_structure([0, 1, 2, 3],
                                 [(0, 1), (1, 2), (2, 3), (3, 0)])
        assert automorphism_group_order(square) == 8
        gens = automorphisms_fixing(square, [])
        from repforge.perms import generated_group
        assert len(generated_group(gens, square.points)) == 8


class TestExtensionProperty:
    def test_complete_graph_fails(self):
        k5 = graph_structure(range(5),
                             list(itertools.combinations(range(5), 2)))
        bad = check_extension_property(k5, 1, range(5))
        assert bad == (frozenset(), frozenset({0}))

    def test_empty_graph_fails_on_neighbour(self):
        e3 = graph_structure(range(3), [])
        bad = check_extension_property(e3, 1, range(3))
        assert bad is not None and bad[0] and not bad[1]

    def test_quadratic_residue_13(self):
        residues = {(x * x) % 13 for x in range(1, 13)}
        edges = [(a, b) for a, b in itertools.combinations(range(13), 2)
                 if (a - b) % 13 in residues]
        paley = graph_structure(range(13), edges)
        assert check_extension_property(paley, 2, range(13)) is None


class TestUltrametric:
    def test_single_point(self):
        x = UStructure(chain_sig(1), ["a"], {}, {1: [["a"]]})
        pts, mat = as_ultrametric(x)
        assert mat == [[0]]

    def test_separated_only_at_bottom(self):
        x = UStructure(chain_sig(1, 2), ["a", "b"], {},
                       {1: [["a"], ["b"]], 2: [["a", "b"]]})
        pts, mat = as_ultrametric(x)
        i, j = pts.index("a"), pts.index("b")
        assert mat[i][j] == 1

    def test_three_point_nested(self):
        x = UStructure(chain_sig(1, 2), ["a", "b", "c"], {},
                       {1: [["a", "b"], ["c"]], 2: [["a", "b", "c"]]})
        # a,b equivalent at both labels -> invalid; separate them at 1
        x = UStructure(chain_sig(1, 2), ["a", "b", "c"], {},
                       {1: [["a"], ["b"], ["c"]], 2: [["a", "b"], ["c"]]})
        pts, mat = as_ultrametric(x)
        d = {(p, q): mat[pts.index(p)][pts.index(q)]
             for p in pts for q in pts}
        assert d[("a", "b")] == 1
        assert d[("a", "c")] == 2 and d[("b", "c")] == 2
        for p, q, r in itertools.product(pts, repeat=3):
            assert d[(p, q)] <= max(d[(p, r)], d[(r, q)])

    def test_roundtrip(self):
        x = UStructure(chain_sig(1, 2, 3), list(range(5)), {}, {
            1: [[0], [1], [2], [3], [4]],
            2: [[0, 1], [2], [3, 4]],
            3: [[0, 1, 2], [3, 4]],
        })
        assert is_valid(x)
        pts, mat = as_ultrametric(x)
        rec = partitions_from_distance(pts, mat, x.signature.labels)
        for s in x.signature.labels[:-1]:
            assert sorted(map(sorted, rec[s])) == \
                sorted(map(sorted, x.partitions[s]))


class TestOnePointTypes:
    def test_counts_over_edge(self):
        base = graph_structure(["a", "b"], [("a", "b")])
        types = one_point_extension_types(base, "z")
        # adjacency to each of a, b chosen freely: 4 types
        assert len(types) == 4
        for t in types:
            assert is_valid(t)

    def test_partition_choices(self):
        base = UStructure(chain_sig(1, 2), ["a", "b"], {},
                          {1: [["a"], ["b"]], 2: [["a", "b"]]})
        types = one_point_extension_types(base, "z")
        # never-join, or join the single class at label 2
        assert len(types) == 2
        for t in types:
            assert is_valid(t)


class TestSaturate:
    def test_level_zero_identity(self):
        x = triangle()
        assert saturate(x, 0, 10) == x

    def test_singleton_gains_neighbour_and_non_neighbour(self):
        x = UStructure(graph_signature(), ["p"])
        y = saturate(x, 1, 10)
        assert len(y.points) >= 3
        adj = {b for (a, b) in y.relations["R"] if a == "p"}
        non = [q for q in y.points if q != "p" and q not in adj]
        assert adj and non

    def test_edge_level_two_realizes_all_patterns(self):
        x = graph_structure(["a", "b"], [("a", "b")])
        y = saturate(x, 2, 40)
        assert is_valid(y)
        adj = {p: {b for (a, b) in y.relations["R"] if a == p}
               for p in y.points}
        for pat_a in (True, False):
            for pat_b in (True, False):
                assert any(
                    q not in ("a", "b")
                    and (("a" in adj[q]) == pat_a)
                    and (("b" in adj[q]) == pat_b)
                    for q in y.points), (pat_a, pat_b)

    def test_every_small_embedding_extends(self):
        x = graph_structure([0, 1, 2], [(0, 1)])
        y = saturate(x, 2, 80)
        for size in (0, 1, 2):
            for subset in itertools.combinations(x.points, size):
                base = induced_substructure(x, subset)
                for ext in one_point_extension_types(base, "probe"):
                    p = PartialIso(ext, y, {q: q for q in subset})
                    assert extend_partial_iso(p, "probe"), (subset, ext)

    def test_cap(self):
        x = UStructure(graph_signature(), ["p"])
        with pytest.raises(CapExceeded):
            saturate(x, 1, 1)


class TestEmbedding:
    def test_inclusion_checks(self):
        x = triangle()
        sub = induced_substructure(x, [1, 2])
        emb = Embedding.inclusion(sub, x)
        assert emb.mapping == {1: 1, 2: 2}

    def test_rejects_non_embedding(self):
        src = graph_structure(["a", "b"], [("a", "b")])
        tgt = graph_structure(["x", "y"], [])
        with pytest.raises(NotAnEmbedding):
            Embedding(src, tgt, {"a": "x", "b": "y"})

    def test_relabel(self):
        x = triangle()
        y = relabel(x, {1: "u", 2: "v", 3: "w"})
        assert set(y.points) == {"u", "v", "w"}
        assert find_isomorphism(x, y) is not None
