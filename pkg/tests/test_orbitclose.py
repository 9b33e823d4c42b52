import itertools
import math

import pytest

from repforge.abelian import (
    FgAbelianGroup,
    Subgroup,
    Z,
    Zmod,
    quotient,
    scaled_subgroup,
    subgroup_from_generators,
    trivial_subgroup,
    whole_group,
    index as subgroup_index,
)
from repforge.actions import Action, orbits, trivial_action, validate_action
from repforge.errors import BudgetExceeded
from repforge.orbitclose import (
    OrbitCloseProblem,
    SubgroupFamily,
    check_family,
    close_orbits,
    family_schedule,
    find_subgroup_family,
    minimal_invariant_partition,
    reduce_distance_labels,
    saturate_anchor,
)
from repforge.perms import generated_group
from repforge.ustructure import (
    USignature,
    UStructure,
    graph_structure,
    induced_substructure,
    is_valid,
    validate,
)


def zq(group, *gens):
    return quotient(group, subgroup_from_generators(
        group, [group.element(g) for g in gens]))


def anchor_elems(q, *coords):
    return tuple(q.group.element(c) for c in coords)


class TestCheckFamily:
    def test_finite_quotients_trivial_family_ok(self):
        g = Z()
        q = zq(g, (6,))  # Z/6
        problem = OrbitCloseProblem(g, (q,), (anchor_elems(q, (0,), (1,)),))
        fam = SubgroupFamily((trivial_subgroup(q.group),))
        assert check_family(problem, fam) is None

    def test_whole_group_fails_injectivity(self):
        g = Z()
        q = zq(g)  # Z itself
        problem = OrbitCloseProblem(g, (q,), (anchor_elems(q, (0,), (1,)),))
        fam = SubgroupFamily((whole_group(q.group),))
        bad = check_family(problem, fam)
        assert bad is not None and bad.condition == "injectivity"

    def test_two_z_fails_lifting(self):
        # gamma = 1 matches (0,1) and (1,0) modulo 2Z with inconsistent
        # exact translations
        g = Z()
        q = zq(g)
        problem = OrbitCloseProblem(g, (q,), (anchor_elems(q, (0,), (1,)),))
        fam = SubgroupFamily((scaled_subgroup(q.group, 2),))
        bad = check_family(problem, fam)
        assert bad is not None and bad.condition == "lifting"

    def test_three_z_passes(self):
        g = Z()
        q = zq(g)
        problem = OrbitCloseProblem(g, (q,), (anchor_elems(q, (0,), (1,)),))
        fam = SubgroupFamily((scaled_subgroup(q.group, 3),))
        assert check_family(problem, fam) is None

    def test_diagonal_pair_of_quotients(self):
        # two copies of Z with the diagonal action: coprime moduli fail
        # (gamma = 6 is +1 mod 5 but -1 mod 7, and no integer is both),
        # while equal moduli >= 3 keep the forced translations aligned
        g = Z()
        q1, q2 = zq(g), zq(g)
        problem = OrbitCloseProblem(
            g, (q1, q2),
            (anchor_elems(q1, (0,), (1,)), anchor_elems(q2, (0,), (1,))))
        bad = check_family(problem, SubgroupFamily(
            (scaled_subgroup(q1.group, 5), scaled_subgroup(q2.group, 7))))
        assert bad is not None and bad.condition == "lifting"
        assert check_family(problem, SubgroupFamily(
            (scaled_subgroup(q1.group, 3), scaled_subgroup(q2.group, 3)))) \
            is None

    def test_verdicts_match_bruteforce_on_finite_quotients(self):
        # independent oracle: enumerate the image of the group in the
        # product of the finite quotients by closure, then check the
        # lifting condition literally over all pair subsets
        g = Z()
        cases = [
            ((4,), ((0,), (1,)), 2),
            ((4,), ((0,), (1,)), 4),
            ((6,), ((0,), (2,)), 2),
            ((6,), ((0,), (2,)), 3),
            ((5,), ((0,), (1,), (2,)), 5),
        ]
        for mod, anchors, sub_scale in cases:
            q = zq(g, mod)
            problem = OrbitCloseProblem(
                g, (q,), (anchor_elems(q, *anchors),))
            fam = SubgroupFamily((scaled_subgroup(q.group, sub_scale),))
            ours = check_family(problem, fam)

            n = mod[0]
            anchor = [a[0] for a in anchors]
            fsub = {(sub_scale * k) % n for k in range(n)}
            ok = True
            # injectivity
            for a in anchor:
                for b in anchor:
                    if a != b and (a - b) % n in fsub:
                        ok = False
            # lifting: for every gamma and every subset of matching pairs,
            # some sigma matches exactly
            if ok:
                for gamma in range(n):
                    pairs = [(a, b) for a in anchor for b in anchor
                             if (gamma + a - b) % n in fsub]
                    for r in range(1, len(pairs) + 1):
                        for chosen in itertools.combinations(pairs, r):
                            if not any(
                                    all((sigma + a) % n == b
                                        for a, b in chosen)
                                    for sigma in range(n)):
                                ok = False
            assert (ours is None) == ok, (mod, anchors, sub_scale)


class TestFamilySearch:
    def test_single_z_quotient_first_family(self):
        g = Z()
        q = zq(g)
        problem = OrbitCloseProblem(g, (q,), (anchor_elems(q, (0,), (1,)),))
        fam = find_subgroup_family(problem, budget=50)
        # 1Z and 2Z fail, 3Z is the first to pass
        assert fam.subgroups[0] == scaled_subgroup(q.group, 3)

    def test_budget_error(self):
        g = Z()
        q = zq(g)
        problem = OrbitCloseProblem(g, (q,), (anchor_elems(q, (0,), (1,)),))
        with pytest.raises(BudgetExceeded):
            find_subgroup_family(problem, budget=2)

    def test_schedule_cost_monotone(self):
        g = Z()
        q1, q2 = zq(g), zq(g, (4,))
        problem = OrbitCloseProblem(
            g, (q1, q2),
            (anchor_elems(q1, (0,)), anchor_elems(q2, (0,))))
        costs = []
        for fam in itertools.islice(family_schedule(problem, 8), 25):
            costs.append(math.prod(subgroup_index(f) for f in fam.subgroups))
        assert costs == sorted(costs)

    def test_z2_free_case(self):
        g = Z(2)
        q = zq(g)
        problem = OrbitCloseProblem(
            g, (q,), (anchor_elems(q, (0, 0), (1, 0)),))
        fam = find_subgroup_family(problem, budget=100)
        assert check_family(problem, fam) is None
        assert subgroup_index(fam.subgroups[0]) <= 16


class TestReduceLabels:
    def _shift6(self):
        sig = USignature((1, 2, 3), ())
        pts = list(range(6))
        x = UStructure(sig, pts, {}, {
            1: [[p] for p in pts],
            2: [[0, 3], [1, 4], [2, 5]],
            3: [[0, 3], [1, 4], [2, 5]],
        })
        act = Action(Z(), x, ({i: (i + 1) % 6 for i in range(6)},))
        assert validate_action(act) == []
        return x, act

    def test_singleton_anchor_single_class(self):
        x, act = self._shift6()
        entries = reduce_distance_labels(x, [0], act)
        assert len(entries) == 1
        assert entries[0][0] == (1, 2, 3)

    def test_class_counting(self):
        x, act = self._shift6()
        entries = reduce_distance_labels(x, [0, 3], act)
        # labels 2 and 3 agree on the anchor and differ from label 1
        assert [e[0] for e in entries] == [(1,), (2, 3)]

    def test_invariant_closure_nested(self):
        x, act = self._shift6()
        entries = reduce_distance_labels(x, [0, 3], act)
        fine = {frozenset(c) for c in entries[0][1]}
        coarse = {frozenset(c) for c in entries[1][1]}
        for c in fine:
            assert any(c <= d for d in coarse)
        # closure of {0,3} under the shift glues i with i+3
        assert frozenset({0, 3}) in coarse

    def test_minimal_invariant_partition_is_minimal(self):
        x, act = self._shift6()
        part = minimal_invariant_partition(x, act, [(0, 3)])
        got = {frozenset(c) for c in part}
        assert got == {frozenset({0, 3}), frozenset({1, 4}),
                       frozenset({2, 5})}


class TestCloseOrbits:
    def test_cycle_compresses_to_smallest_passing_quotient(self):
        # the 12-cycle with anchor {0,1} closes into the quotient by the
        # first passing family: index 3, giving a triangle (index 1 breaks
        # injectivity, index 2 forces inconsistent translations)
        circ = graph_structure(list(range(12)),
                               [(i, (i + 1) % 12) for i in range(12)])
        act = Action(Z(), circ, ({i: (i + 1) % 12 for i in range(12)},))
        space, out, emb = close_orbits(circ, act, [0, 1])
        assert len(space.points) == 3
        assert len(space.relations["R"]) == 6
        assert validate(space) == []
        assert validate_action(out) == []
        # anchor agreement
        assert out.images[0][emb.mapping[0]] == emb.mapping[1]

    def test_empty_anchor(self):
        circ = graph_structure(list(range(4)),
                               [(i, (i + 1) % 4) for i in range(4)])
        act = Action(Z(), circ, ({i: (i + 1) % 4 for i in range(4)},))
        space, out, emb = close_orbits(circ, act, [])
        assert space.points == ()

    def test_torus_free_translation(self):
        # 4x4 torus grid with Z^2 acting by the two coordinate shifts
        pts = [(i, j) for i in range(4) for j in range(4)]
        names = {p: f"{p[0]},{p[1]}" for p in pts}
        edges = []
        for (i, j) in pts:
            edges.append((names[(i, j)], names[((i + 1) % 4, j)]))
            edges.append((names[(i, j)], names[(i, (j + 1) % 4)]))
        torus = graph_structure(list(names.values()), edges)
        shift1 = {names[(i, j)]: names[((i + 1) % 4, j)] for (i, j) in pts}
        shift2 = {names[(i, j)]: names[(i, (j + 1) % 4)] for (i, j) in pts}
        act = Action(Z(2), torus, (shift1, shift2))
        assert validate_action(act) == []
        anchor = [names[(0, 0)], names[(1, 0)]]
        space, out, emb = close_orbits(torus, act, anchor)
        assert validate(space) == []
        assert validate_action(out) == []
        # anchor agreement for both generators
        a, b = anchor
        assert out.images[0][emb.mapping[a]] == emb.mapping[b]
        # relations restrict exactly to the anchor
        sub = induced_substructure(space, [emb.mapping[p] for p in anchor])
        want = induced_substructure(torus, anchor)
        assert len(sub.relations["R"]) == len(want.relations["R"])

    def test_partition_pipeline(self):
        sig = USignature((1, 2), ())
        pts = list(range(6))
        x = UStructure(sig, pts, {}, {
            1: [[p] for p in pts],
            2: [[0, 3], [1, 4], [2, 5]],
        })
        act = Action(Z(), x, ({i: (i + 1) % 6 for i in range(6)},))
        space, out, emb = close_orbits(x, act, [0, 1])
        assert validate(space) == []
        assert validate_action(out) == []
        # anchor partition classes survive exactly
        m = emb.mapping
        assert not space.same_class(1, m[0], m[1])
        assert not space.same_class(2, m[0], m[1])

    def test_infinite_style_quotient_search(self):
        # a Z-action whose orbit identification is all of Z/8; anchor of
        # two adjacent points forces a nontrivial family
        circ = graph_structure(list(range(8)),
                               [(i, (i + 1) % 8) for i in range(8)])
        act = Action(Z(), circ, ({i: (i + 1) % 8 for i in range(8)},))
        space, out, emb = close_orbits(circ, act, [0, 1])
        assert validate(space) == []
        assert validate_action(out) == []
        assert out.images[0][emb.mapping[0]] == emb.mapping[1]

    def test_determinism(self):
        circ = graph_structure(list(range(6)),
                               [(i, (i + 1) % 6) for i in range(6)])
        act = Action(Z(), circ, ({i: (i + 1) % 6 for i in range(6)},))
        one = close_orbits(circ, act, [0, 1])
        two = close_orbits(circ, act, [0, 1])
        assert one[0] == two[0]
        assert one[1] == two[1]

    def test_monotone_budget(self):
        circ = graph_structure(list(range(6)),
                               [(i, (i + 1) % 6) for i in range(6)])
        act = Action(Z(), circ, ({i: (i + 1) % 6 for i in range(6)},))
        small = close_orbits(circ, act, [0, 1], budget=200)
        large = close_orbits(circ, act, [0, 1], budget=10_000)
        assert small[0] == large[0]
