import itertools
import random

import pytest

from repforge.abelian import Z, Zmod
from repforge.actions import (
    Action,
    BasicNbhd,
    apply,
    are_conjugate,
    element_permutation,
    in_basic_nbhd,
    is_subrepresentation,
    is_valid_action,
    orbits,
    pullback,
    pushforward,
    trivial_action,
    validate_action,
)
from repforge.errors import PreconditionError
from repforge.perms import generated_group, identity_perm
from repforge.ustructure import (
    Embedding,
    UStructure,
    graph_structure,
    graph_signature,
    induced_substructure,
)


def empty_graph(n):
    return graph_structure(list(range(n)), [])


class TestValidate:
    def test_swap_ok(self):
        a = Action(Zmod(2), empty_graph(2), ({0: 1, 1: 0},))
        assert validate_action(a) == []

    def test_three_cycle_in_zmod2(self):
        a = Action(Zmod(2), empty_graph(3), ({0: 1, 1: 2, 2: 0},))
        bad = validate_action(a)
        assert any(v.kind == "torsion-order" for v in bad)

    def test_noncommuting(self):
        g = Z(2)
        a = Action(g, empty_graph(3),
                   ({0: 1, 1: 0, 2: 2}, {0: 0, 1: 2, 2: 1}))
        bad = validate_action(a)
        assert any(v.kind == "commutator" for v in bad)

    def test_edge_breaking(self):
        x = graph_structure([0, 1, 2], [(0, 1)])
        a = Action(Z(), x, ({0: 0, 1: 2, 2: 1},))
        bad = validate_action(a)
        assert any(v.kind == "relation" for v in bad)

    def test_partition_breaking(self):
        from repforge.ustructure import USignature
        sig = USignature((1, 2), ())
        x = UStructure(sig, [0, 1, 2], {}, {
            1: [[0], [1], [2]], 2: [[0, 1], [2]]})
        a = Action(Z(), x, ({0: 0, 1: 2, 2: 1},))
        bad = validate_action(a)
        assert any(v.kind == "partition" for v in bad)


class TestApplyOrbits:
    def test_identity_element(self):
        x = empty_graph(3)
        a = Action(Z(), x, ({0: 1, 1: 2, 2: 0},))
        assert apply(a, Z().zero(), 1) == 1

    def test_power(self):
        a = Action(Z(), empty_graph(3), ({0: 1, 1: 2, 2: 0},))
        assert apply(a, Z().element((2,)), 0) == 2
        assert apply(a, Z().element((-1,)), 0) == 2

    def test_commuting_application(self):
        g = Z(2)
        p = {0: 1, 1: 0, 2: 3, 3: 2}
        q = {0: 2, 1: 3, 2: 0, 3: 1}
        a = Action(g, empty_graph(4), (p, q))
        assert is_valid_action(a)
        gamma = g.element((1, 1))
        for x in range(4):
            assert apply(a, gamma, x) == p[q[x]] == q[p[x]]

    def test_orbits(self):
        a = trivial_action(Z(), empty_graph(3))
        assert orbits(a) == [(0,), (1,), (2,)]
        b = Action(Z(), empty_graph(5), ({i: (i + 1) % 5 for i in range(5)},))
        assert orbits(b) == [(0, 1, 2, 3, 4)]
        g = Z(2)
        c = Action(g, empty_graph(4),
                   ({0: 1, 1: 0, 2: 3, 3: 2}, {0: 2, 1: 3, 2: 0, 3: 1}))
        assert orbits(c) == [(0, 1, 2, 3)]


class TestSubrepPullback:
    def test_restriction_is_subrep(self):
        x = empty_graph(4)
        a = Action(Z(), x, ({0: 1, 1: 0, 2: 3, 3: 2},))
        sub = induced_substructure(x, [0, 1])
        b = Action(Z(), sub, ({0: 1, 1: 0},))
        assert is_subrepresentation(b, a)

    def test_moving_out_fails(self):
        x = empty_graph(3)
        a = Action(Z(), x, ({0: 1, 1: 2, 2: 0},))
        sub = induced_substructure(x, [0])
        b = trivial_action(Z(), sub)
        assert not is_subrepresentation(b, a)

    def test_trivial_vs_swap(self):
        x = empty_graph(2)
        a = Action(Zmod(2), x, ({0: 1, 1: 0},))
        sub = induced_substructure(x, [0, 1])
        b = trivial_action(Zmod(2), sub)
        assert not is_subrepresentation(b, a)

    def test_pullback_identity(self):
        x = empty_graph(3)
        a = Action(Z(), x, ({0: 1, 1: 2, 2: 0},))
        emb = Embedding.inclusion(x, x)
        assert pullback(a, emb) == a

    def test_pullback_of_invariant_edge(self):
        y = graph_structure([0, 1, 2, 3], [(0, 1), (2, 3)])
        a = Action(Zmod(2), y, ({0: 1, 1: 0, 2: 3, 3: 2},))
        sub = induced_substructure(y, [0, 1])
        emb = Embedding.inclusion(sub, y)
        pb = pullback(a, emb)
        assert pb.images[0] == {0: 1, 1: 0}

    def test_pullback_requires_invariance(self):
        y = empty_graph(3)
        a = Action(Z(), y, ({0: 1, 1: 2, 2: 0},))
        sub = induced_substructure(y, [0])
        emb = Embedding.inclusion(sub, y)
        with pytest.raises(PreconditionError):
            pullback(a, emb)

    def test_pushforward_pullback_subrep(self):
        y = graph_structure([0, 1, 2, 3], [(0, 1), (2, 3)])
        a = Action(Zmod(2), y, ({0: 1, 1: 0, 2: 3, 3: 2},))
        sub = induced_substructure(y, [2, 3])
        emb = Embedding.inclusion(sub, y)
        pb = pullback(a, emb)
        pf = pushforward(pb, emb)
        assert is_subrepresentation(pf, a)


class TestBasicNbhd:
    def test_self_membership(self):
        a = Action(Z(), empty_graph(3), ({0: 1, 1: 2, 2: 0},))
        assert in_basic_nbhd(a, BasicNbhd(a, (0, 1)))

    def test_empty_anchor(self):
        a = Action(Z(), empty_graph(3), ({0: 1, 1: 2, 2: 0},))
        b = trivial_action(Z(), empty_graph(3))
        assert in_basic_nbhd(b, BasicNbhd(a, ()))

    def test_disagreement(self):
        a = Action(Z(), empty_graph(3), ({0: 1, 1: 2, 2: 0},))
        b = trivial_action(Z(), empty_graph(3))
        assert not in_basic_nbhd(b, BasicNbhd(a, (0,)))

    def test_stabilizer_conjugates_stay(self):
        # conjugating by automorphisms fixing the anchor keeps the action
        # inside the neighbourhood
        x = empty_graph(4)
        a = Action(Z(), x, ({0: 0, 1: 1, 2: 3, 3: 2},))
        nbhd = BasicNbhd(a, (0, 1))
        from repforge.perms import compose, inverse
        g = {0: 0, 1: 1, 2: 3, 3: 2}  # fixes anchor pointwise
        conj = Action(Z(), x, (compose(compose(inverse(g), a.images[0]), g),))
        assert in_basic_nbhd(conj, nbhd)


class TestConjugacy:
    def test_self_conjugate(self):
        a = Action(Z(), empty_graph(3), ({0: 1, 1: 2, 2: 0},))
        g = are_conjugate(a, a)
        assert g is not None

    def test_three_cycles_conjugate(self):
        x = empty_graph(3)
        a = Action(Z(), x, ({0: 1, 1: 2, 2: 0},))
        b = Action(Z(), x, ({0: 2, 2: 1, 1: 0},))
        assert are_conjugate(a, b) is not None

    def test_transposition_vs_trivial(self):
        x = empty_graph(2)
        a = Action(Z(), x, ({0: 1, 1: 0},))
        b = trivial_action(Z(), x)
        assert are_conjugate(a, b) is None

    def test_diagonal_conjugates(self):
        rng = random.Random(3)
        x = graph_structure([0, 1, 2, 3], [(0, 1), (2, 3)])
        a = Action(Zmod(2), x, ({0: 1, 1: 0, 2: 3, 3: 2},))
        from repforge.perms import compose, inverse
        from repforge.ustructure import automorphisms_fixing
        gens = automorphisms_fixing(x, [])
        for g in generated_group(gens, x.points):
            conj = Action(Zmod(2), x,
                          (compose(compose(inverse(g), a.images[0]), g),))
            assert are_conjugate(a, conj) is not None

    def test_equivalence_relation_on_random_triples(self):
        rng = random.Random(11)
        x = empty_graph(5)
        def rand_action():
            pts = list(range(5))
            rng.shuffle(pts)
            perm = dict(zip(range(5), pts))
            return Action(Z(), x, (perm,))
        for _ in range(10):
            a, b, c = rand_action(), rand_action(), rand_action()
            gab = are_conjugate(a, b)
            gbc = are_conjugate(b, c)
            assert are_conjugate(a, a) is not None
            if gab is not None:
                gba = are_conjugate(b, a)
                assert gba is not None
            if gab is not None and gbc is not None:
                assert are_conjugate(a, c) is not None

    def test_matches_bruteforce(self):
        rng = random.Random(5)
        x = empty_graph(4)
        for _ in range(30):
            pts = list(range(4))
            rng.shuffle(pts)
            a = Action(Z(), x, (dict(zip(range(4), pts)),))
            rng.shuffle(pts)
            b = Action(Z(), x, (dict(zip(range(4), pts)),))
            ours = are_conjugate(a, b)
            brute = None
            for perm in itertools.permutations(range(4)):
                g = dict(zip(range(4), perm))
                if all(g[a.images[0][p]] == b.images[0][g[p]] for p in range(4)):
                    brute = g
                    break
            assert (ours is None) == (brute is None)
