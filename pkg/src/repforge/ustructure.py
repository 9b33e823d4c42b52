"""Finite relational structures carrying a nested chain of partitions.

A structure here is a finite point set with

* one tuple set per relation symbol, required to be closed under that
  symbol's symmetry group and to have pairwise-distinct entries, and
* one partition of the points per distance label, required to be nested
  (finer at smaller labels) and to separate every pair of distinct
  points at some label.

The partition chain encodes an ultrametric: the distance between two
points is the largest label at which they sit in different classes.
``validate`` checks the five structure axioms and reports violations
with witnesses instead of raising.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .errors import CapExceeded, NotAnEmbedding, PreconditionError
from .perms import point_key

Label = Fraction
PointTuple = Tuple[object, ...]


def as_label(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


@lru_cache(maxsize=None)
def _expand_symmetry(arity: int, gens: Tuple[Tuple[int, ...], ...]
                     ) -> Tuple[Tuple[int, ...], ...]:
    """Full subgroup of Sym(arity) generated by 1-indexed generators.

    Elements are returned 0-indexed, ready to act on tuples by
    ``t -> tuple(t[p[i]] for i in range(arity))``.
    """
    ident = tuple(range(arity))
    zero_gens = [tuple(g[i] - 1 for i in range(arity)) for g in gens]
    seen = {ident}
    frontier = [ident]
    while frontier:
        nxt = []
        for p in frontier:
            for g in zero_gens:
                q = tuple(p[g[i]] for i in range(arity))
                if q not in seen:
                    seen.add(q)
                    nxt.append(q)
        frontier = nxt
    return tuple(sorted(seen))


@dataclass(frozen=True)
class RelationSymbol:
    name: str
    arity: int
    symmetry: Tuple[Tuple[int, ...], ...] = ()

    def __post_init__(self):
        if self.arity < 1:
            raise ValueError("arity must be >= 1")
        gens = tuple(tuple(g) for g in self.symmetry)
        for g in gens:
            if sorted(g) != list(range(1, self.arity + 1)):
                raise ValueError(f"{g} is not a permutation of 1..{self.arity}")
        object.__setattr__(self, "symmetry", gens)

    def group(self) -> Tuple[Tuple[int, ...], ...]:
        return _expand_symmetry(self.arity, self.symmetry)


@dataclass(frozen=True)
class USignature:
    labels: Tuple[Label, ...] = ()
    relations: Tuple[RelationSymbol, ...] = ()

    def __post_init__(self):
        labels = tuple(as_label(x) for x in self.labels)
        if any(b <= a for a, b in zip(labels, labels[1:])):
            raise ValueError("distance labels must be strictly increasing")
        object.__setattr__(self, "labels", labels)
        names = [r.name for r in self.relations]
        if len(set(names)) != len(names):
            raise ValueError("duplicate relation names")

    def relation(self, name: str) -> RelationSymbol:
        for r in self.relations:
            if r.name == name:
                return r
        raise KeyError(name)


def orbit_of_tuple(t: PointTuple, group: Iterable[Tuple[int, ...]]
                   ) -> FrozenSet[PointTuple]:
    return frozenset(tuple(t[p[i]] for i in range(len(t))) for p in group)


@dataclass(frozen=True)
class Violation:
    axiom: int
    message: str
    witness: tuple = ()

    def __str__(self):
        return f"axiom ({self.axiom}): {self.message} witness={self.witness!r}"


class UStructure:
    """Immutable-by-convention finite structure.

    ``relations`` maps relation name to a frozenset of point tuples;
    ``partitions`` maps each signature label to a tuple of frozensets
    partitioning the points.  Construction canonicalizes ordering and
    checks shape (arity, membership, partition well-formedness); the
    five axioms are checked separately by :func:`validate` so invalid
    candidate structures can be represented and reported on.
    """

    __slots__ = ("signature", "points", "relations", "partitions",
                 "_class_of", "_point_set")

    def __init__(self, signature: USignature, points: Iterable,
                 relations: Optional[Dict[str, Iterable[PointTuple]]] = None,
                 partitions: Optional[Dict[object, Iterable[Iterable]]] = None):
        self.signature = signature
        pts = sorted(set(points), key=point_key)
        self.points = tuple(pts)
        self._point_set = frozenset(pts)

        rels: Dict[str, FrozenSet[PointTuple]] = {}
        relations = relations or {}
        for name in relations:
            signature.relation(name)  # raises KeyError for unknown names
        for sym in signature.relations:
            tuples = frozenset(tuple(t) for t in relations.get(sym.name, ()))
            for t in tuples:
                if len(t) != sym.arity:
                    raise ValueError(
                        f"tuple {t!r} has wrong arity for {sym.name}")
                for x in t:
                    if x not in self._point_set:
                        raise ValueError(f"tuple {t!r} mentions unknown point {x!r}")
            rels[sym.name] = tuples
        self.relations = rels

        parts: Dict[Label, Tuple[FrozenSet, ...]] = {}
        partitions = partitions or {}
        normalized = {as_label(k): v for k, v in partitions.items()}
        for extra in set(normalized) - set(signature.labels):
            raise ValueError(f"partition for unknown label {extra}")
        for s in signature.labels:
            if s in normalized:
                classes = [frozenset(c) for c in normalized[s]]
            else:
                classes = [frozenset([p]) for p in pts]
            covered = set()
            for c in classes:
                if not c:
                    raise ValueError("empty partition class")
                if c & covered:
                    raise ValueError(f"overlapping classes at label {s}")
                covered |= c
            if covered != self._point_set:
                raise ValueError(f"partition at label {s} does not cover points")
            parts[s] = tuple(sorted((c for c in classes),
                                    key=lambda c: point_key(min(c, key=point_key))))
        self.partitions = parts

        self._class_of = {
            s: {p: i for i, cls in enumerate(parts[s]) for p in cls}
            for s in signature.labels}

    # -- queries ----------------------------------------------------------

    def has_point(self, p) -> bool:
        return p in self._point_set

    def same_class(self, label, x, y) -> bool:
        cls = self._class_of[as_label(label)]
        return cls[x] == cls[y]

    def class_of(self, label, x) -> FrozenSet:
        s = as_label(label)
        return self.partitions[s][self._class_of[s][x]]

    def tuples(self, name: str) -> FrozenSet[PointTuple]:
        return self.relations[name]

    def __eq__(self, other):
        return (isinstance(other, UStructure)
                and self.signature == other.signature
                and self.points == other.points
                and self.relations == other.relations
                and self.partitions == other.partitions)

    def __repr__(self):
        return (f"UStructure({len(self.points)} points, "
                f"{sum(len(v) for v in self.relations.values())} tuples, "
                f"{len(self.signature.labels)} labels)")


# ---------------------------------------------------------------------------
# Axioms
# ---------------------------------------------------------------------------

def validate(x: UStructure) -> List[Violation]:
    """All axiom violations; empty list means the structure is sound."""
    out: List[Violation] = []
    for sym in x.signature.relations:
        group = sym.group()
        tuples = x.relations[sym.name]
        for t in tuples:
            if len(set(t)) != len(t):
                out.append(Violation(2, f"repeated entry in {sym.name} tuple", t))
            for p in group:
                image = tuple(t[p[i]] for i in range(sym.arity))
                if image not in tuples:
                    out.append(Violation(
                        1, f"{sym.name} not closed under its symmetry group",
                        (t, image)))
                    break
    labels = x.signature.labels
    for s in labels:
        covered = set()
        for cls in x.partitions[s]:
            if cls & covered:
                out.append(Violation(3, f"overlapping classes at {s}", ()))
            covered |= cls
        if covered != set(x.points):
            out.append(Violation(3, f"partition at {s} misses points", ()))
    for s, t in zip(labels, labels[1:]):
        for cls in x.partitions[s]:
            targets = {x._class_of[t][p] for p in cls}
            if len(targets) > 1:
                out.append(Violation(
                    4, f"classes at {s} not contained in classes at {t}",
                    (min(cls, key=point_key),)))
    if labels:
        for a, b in itertools.combinations(x.points, 2):
            if all(x.same_class(s, a, b) for s in labels):
                out.append(Violation(
                    5, "points never separated by any label", (a, b)))
    return out


def is_valid(x: UStructure) -> bool:
    return not validate(x)


def symmetrize(x: UStructure) -> UStructure:
    """Close every tuple set under its symmetry group.

    Automorphisms survive: a permutation preserving a tuple set also
    preserves each symmetry-image of it, hence their union.  Idempotent.
    """
    new_rels = {}
    for sym in x.signature.relations:
        group = sym.group()
        closed = set()
        for t in x.relations[sym.name]:
            closed |= orbit_of_tuple(t, group)
        new_rels[sym.name] = closed
    return UStructure(x.signature, x.points, new_rels, x.partitions)


# ---------------------------------------------------------------------------
# Substructures and relabelings
# ---------------------------------------------------------------------------

def induced_substructure(x: UStructure, subset: Iterable) -> UStructure:
    sub = set(subset)
    missing = sub - set(x.points)
    if missing:
        raise ValueError(f"points {missing!r} not in structure")
    rels = {name: [t for t in tuples if all(p in sub for p in t)]
            for name, tuples in x.relations.items()}
    parts = {s: [c & sub for c in x.partitions[s] if c & sub]
             for s in x.signature.labels}
    return UStructure(x.signature, sub, rels, parts)


def relabel(x: UStructure, mapping: Dict) -> UStructure:
    """Rename points through an injective total map."""
    if set(mapping) != set(x.points) or len(set(mapping.values())) != len(mapping):
        raise ValueError("relabeling must be a total injective map on points")
    rels = {name: [tuple(mapping[p] for p in t) for t in tuples]
            for name, tuples in x.relations.items()}
    parts = {s: [{mapping[p] for p in c} for c in x.partitions[s]]
             for s in x.signature.labels}
    return UStructure(x.signature, mapping.values(), rels, parts)


def fresh_name(base: str, taken) -> str:
    name = base
    while name in taken:
        name += "'"
    return name


def disjoint_union(a: UStructure, b: UStructure) -> UStructure:
    """Union of structures on disjoint point sets (labels must match)."""
    if a.signature != b.signature:
        raise ValueError("signatures differ")
    if set(a.points) & set(b.points):
        raise ValueError("point sets overlap")
    rels = {name: set(a.relations[name]) | set(b.relations[name])
            for name in a.relations}
    parts = {s: list(a.partitions[s]) + list(b.partitions[s])
             for s in a.signature.labels}
    return UStructure(a.signature, a.points + b.points, rels, parts)


# ---------------------------------------------------------------------------
# Partial isomorphisms, embeddings, back-and-forth
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PartialIso:
    """Finite injective partial map that preserves and reflects structure."""

    source: UStructure
    target: UStructure
    mapping: Dict[object, object] = field(default_factory=dict)

    def domain(self):
        return set(self.mapping)

    def image(self):
        return set(self.mapping.values())

    def apply(self, p):
        return self.mapping[p]

    def extended(self, x, y) -> "PartialIso":
        new = dict(self.mapping)
        new[x] = y
        return PartialIso(self.source, self.target, new)

    def is_consistent(self) -> bool:
        """Check injectivity plus preserve-and-reflect on the domain."""
        if len(set(self.mapping.values())) != len(self.mapping):
            return False
        dom = set(self.mapping)
        img = set(self.mapping.values())
        inv = {v: k for k, v in self.mapping.items()}
        src, tgt = self.source, self.target
        for sym in src.signature.relations:
            name = sym.name
            for t in src.relations[name]:
                if all(p in dom for p in t):
                    if tuple(self.mapping[p] for p in t) not in tgt.relations[name]:
                        return False
            for t in tgt.relations[name]:
                if all(p in img for p in t):
                    if tuple(inv[p] for p in t) not in src.relations[name]:
                        return False
        for s in src.signature.labels:
            for a, b in itertools.combinations(sorted(dom, key=point_key), 2):
                if src.same_class(s, a, b) != tgt.same_class(
                        s, self.mapping[a], self.mapping[b]):
                    return False
        return True


class Embedding(PartialIso):
    """Total injective structure-preserving-and-reflecting map."""

    def __init__(self, source: UStructure, target: UStructure, mapping: Dict):
        object.__setattr__(self, "source", source)
        object.__setattr__(self, "target", target)
        object.__setattr__(self, "mapping", dict(mapping))
        if set(self.mapping) != set(source.points):
            raise NotAnEmbedding("map is not total on the source")
        if not self.is_consistent():
            raise NotAnEmbedding("map does not preserve and reflect structure")

    @classmethod
    def inclusion(cls, sub: UStructure, sup: UStructure) -> "Embedding":
        return cls(sub, sup, {p: p for p in sub.points})

    @classmethod
    def compose(cls, first: "Embedding", second: "Embedding") -> "Embedding":
        return cls(first.source, second.target,
                   {p: second.mapping[q] for p, q in first.mapping.items()})

    def inverse_on_image(self) -> Dict:
        return {v: k for k, v in self.mapping.items()}


def _candidate_ok(p: PartialIso, x, y) -> bool:
    """Would extending p by x -> y stay a partial isomorphism?"""
    src, tgt = p.source, p.target
    if y in p.image():
        return False
    dom = list(p.mapping) + [x]
    lookup = dict(p.mapping)
    lookup[x] = y
    for sym in src.signature.relations:
        k = sym.arity
        if k > len(dom):
            continue
        for t in itertools.product(dom, repeat=k):
            if x not in t or len(set(t)) != k:
                continue
            mapped = tuple(lookup[q] for q in t)
            if (t in src.relations[sym.name]) != (mapped in tgt.relations[sym.name]):
                return False
    for s in src.signature.labels:
        for u in p.mapping:
            if src.same_class(s, x, u) != tgt.same_class(s, y, lookup[u]):
                return False
    return True


def extend_partial_iso(p: PartialIso, x) -> List[PartialIso]:
    """All one-point extensions of ``p`` at the source point ``x``.

    Targets are tried in the target structure's point order, so the
    result order is deterministic.  Empty list means a dead end.
    """
    if x in p.mapping:
        raise PreconditionError(f"{x!r} already in the domain")
    if not p.source.has_point(x):
        raise PreconditionError(f"{x!r} not a source point")
    return [p.extended(x, y) for y in p.target.points if _candidate_ok(p, x, y)]


def find_isomorphism(x: UStructure, y: UStructure) -> Optional[Embedding]:
    """Backtracking isomorphism search; None when no isomorphism exists."""
    if x.signature != y.signature:
        return None
    if len(x.points) != len(y.points):
        return None
    for sym in x.signature.relations:
        if len(x.relations[sym.name]) != len(y.relations[sym.name]):
            return None
    for s in x.signature.labels:
        if sorted(len(c) for c in x.partitions[s]) != \
                sorted(len(c) for c in y.partitions[s]):
            return None

    order = list(x.points)

    def search(p: PartialIso) -> Optional[PartialIso]:
        if len(p.mapping) == len(order):
            return p
        nxt = order[len(p.mapping)]
        for q in extend_partial_iso(p, nxt):
            found = search(q)
            if found is not None:
                return found
        return None

    hit = search(PartialIso(x, y, {}))
    if hit is None:
        return None
    return Embedding(x, y, hit.mapping)


def automorphisms_fixing(x: UStructure, anchor: Iterable) -> List[Dict]:
    """Generating set of the pointwise stabilizer of ``anchor`` in Aut(x).

    Enumerates the full stabilizer by backtracking, then greedily
    extracts a generating set by closure.  Intended for desk-scale
    structures.
    """
    anchor = set(anchor)
    if not anchor <= set(x.points):
        raise PreconditionError("anchor must be a subset of the points")
    base = PartialIso(x, x, {a: a for a in anchor})
    if not base.is_consistent():
        raise PreconditionError("anchor identity map inconsistent")
    rest = [p for p in x.points if p not in anchor]
    found: List[Dict] = []

    def search(p: PartialIso, i: int):
        if i == len(rest):
            found.append(dict(p.mapping))
            return
        for q in extend_partial_iso(p, rest[i]):
            search(q, i + 1)

    search(base, 0)

    from .perms import generated_group, identity_perm, perm_key

    gens: List[Dict] = []
    closure = {perm_key(identity_perm(x.points))}
    for g in found:
        if perm_key(g) in closure:
            continue
        gens.append(g)
        closure = {perm_key(e) for e in generated_group(gens, x.points)}
    return gens


def automorphism_group_order(x: UStructure, anchor=()) -> int:
    """Order of the pointwise stabilizer; exhaustive, for tests."""
    anchor = set(anchor)
    base = PartialIso(x, x, {a: a for a in anchor})
    rest = [p for p in x.points if p not in anchor]
    count = 0

    def search(p, i):
        nonlocal count
        if i == len(rest):
            count += 1
            return
        for q in extend_partial_iso(p, rest[i]):
            search(q, i + 1)

    search(base, 0)
    return count


# ---------------------------------------------------------------------------
# Graph specializations
# ---------------------------------------------------------------------------

def graph_signature() -> USignature:
    return USignature((), (RelationSymbol("R", 2, ((2, 1),)),))


def graph_structure(points, edges) -> UStructure:
    """Symmetric irreflexive graph from an edge list."""
    tuples = set()
    for a, b in edges:
        if a == b:
            raise ValueError("loops are not allowed")
        tuples.add((a, b))
        tuples.add((b, a))
    return UStructure(graph_signature(), points, {"R": tuples})


def check_extension_property(x: UStructure, k: int, window: Iterable
                             ) -> Optional[Tuple[FrozenSet, FrozenSet]]:
    """Graph extension property up to size ``k`` over a window.

    ``None`` when every pair of disjoint subsets A, B of the window with
    ``|A| + |B| <= k`` admits a point outside both adjacent to all of A
    and none of B; otherwise the first failing ``(A, B)``.
    """
    sig = x.signature
    if (len(sig.relations) != 1 or sig.relations[0].arity != 2
            or len(sig.labels) != 0
            or sig.relations[0].group() != ((0, 1), (1, 0))):
        raise PreconditionError("extension property needs a plain graph signature")
    name = sig.relations[0].name
    edges = x.relations[name]
    window = sorted(set(window), key=point_key)
    for p in window:
        if not x.has_point(p):
            raise PreconditionError(f"window point {p!r} not in structure")
    all_points = set(x.points)
    adj = {p: set() for p in x.points}
    for a, b in edges:
        adj[a].add(b)
    for total in range(0, k + 1):
        for asize in range(0, total + 1):
            bsize = total - asize
            for aset in itertools.combinations(window, asize):
                common = all_points
                for a in aset:
                    common = common & adj[a]
                common = common - set(aset)
                rest = [p for p in window if p not in aset]
                for bset in itertools.combinations(rest, bsize):
                    cands = common - set(bset)
                    for b in bset:
                        cands = cands - adj[b]
                    if not cands:
                        return frozenset(aset), frozenset(bset)
    return None


# ---------------------------------------------------------------------------
# Ultrametric view
# ---------------------------------------------------------------------------

def as_ultrametric(x: UStructure):
    """Distance matrix of the partition chain.

    ``d(a, b)`` is the largest label at which a and b are in different
    classes; 0 on the diagonal.  Requires a nonempty label set and a
    structure where every pair is separated somewhere.
    Returns ``(points, matrix)`` with exact Fraction entries.
    """
    labels = x.signature.labels
    if not labels:
        raise PreconditionError("structure has no distance labels")
    pts = list(x.points)
    n = len(pts)
    mat = [[Fraction(0)] * n for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            d = None
            for s in labels:
                if not x.same_class(s, pts[i], pts[j]):
                    d = s
            if d is None:
                raise PreconditionError(
                    f"points {pts[i]!r}, {pts[j]!r} never separated; "
                    "structure violates axiom (5)")
            mat[i][j] = mat[j][i] = d
    return pts, mat


def partitions_from_distance(points, mat, labels):
    """Partitions recovered from a distance matrix via d(x,y) < s."""
    idx = {p: i for i, p in enumerate(points)}
    out = {}
    for s in labels:
        # union-find over the strict-ball relation
        parent = {p: p for p in points}

        def find(p):
            while parent[p] != p:
                parent[p] = parent[parent[p]]
                p = parent[p]
            return p

        for a in points:
            for b in points:
                if a != b and mat[idx[a]][idx[b]] < s:
                    ra, rb = find(a), find(b)
                    if ra != rb:
                        parent[ra] = rb
        classes = {}
        for p in points:
            classes.setdefault(find(p), set()).add(p)
        out[s] = [frozenset(c) for c in classes.values()]
    return out


# ---------------------------------------------------------------------------
# One-point extension types and saturation
# ---------------------------------------------------------------------------

def one_point_extension_types(base: UStructure, new_point) -> List[UStructure]:
    """All structures extending ``base`` by one fresh point.

    Enumerates the legal relation content (subsets of symmetry orbits of
    tuples through the new point) and partition placements (either never
    joining an existing chain of classes, or joining at one label above
    the minimal one).  Every returned structure is valid whenever the
    base is.
    """
    if base.has_point(new_point):
        raise PreconditionError("new point already present")
    pts = list(base.points) + [new_point]
    sig = base.signature

    orbit_menu = []
    for sym in sig.relations:
        group = sym.group()
        orbits = set()
        for t in itertools.permutations(pts, sym.arity):
            if new_point in t:
                orbits.add(orbit_of_tuple(t, group))
        orbit_menu.append((sym.name, sorted(orbits, key=lambda o: sorted(map(repr, o)))))

    partition_choices = [None]  # never join: fresh class at every label
    for s in sig.labels[1:]:
        for ci in range(len(base.partitions[s])):
            partition_choices.append((s, ci))
    if not sig.labels:
        partition_choices = [None]

    out = []
    orbit_subsets = []
    for _, menu in orbit_menu:
        subsets = []
        for r in range(len(menu) + 1):
            subsets.extend(itertools.combinations(range(len(menu)), r))
        orbit_subsets.append(subsets)
    for chosen in itertools.product(*orbit_subsets):
        rels = {}
        for (name, menu), picks in zip(orbit_menu, chosen):
            extra = set()
            for i in picks:
                extra |= menu[i]
            rels[name] = set(base.relations[name]) | extra
        for choice in partition_choices:
            parts = {}
            for s in sig.labels:
                classes = [set(c) for c in base.partitions[s]]
                if choice is None:
                    classes.append({new_point})
                else:
                    js, ci = choice
                    if s < js:
                        classes.append({new_point})
                    elif s == js:
                        classes[ci].add(new_point)
                    else:
                        target = base.partitions[js][ci]
                        rep = next(iter(target))
                        for c in classes:
                            if rep in c:
                                c.add(new_point)
                                break
                parts[s] = classes
            out.append(UStructure(sig, pts, rels, parts))
    return out


def saturate(x: UStructure, level: int, cap: int) -> UStructure:
    """Superstructure of ``x`` realizing all one-point extension types
    over substructures of ``x`` with at most ``level`` points.

    Built by repeated free amalgamation of the abstract one-point
    extensions onto the growing structure; raises :class:`CapExceeded`
    when the result would outgrow ``cap`` points.
    """
    from .amalgam import free_amalgam  # deferred; amalgam imports this module

    if level < 0:
        raise PreconditionError("level must be >= 0")
    if cap < len(x.points):
        raise PreconditionError("cap smaller than the structure")
    current = x
    for size in range(0, level + 1):
        for subset in itertools.combinations(x.points, size):
            base = induced_substructure(x, subset)
            probe_name = fresh_name("*", set(current.points))
            for ext in one_point_extension_types(base, probe_name):
                witness = PartialIso(ext, current, {p: p for p in subset})
                if extend_partial_iso(witness, probe_name):
                    continue
                if len(current.points) + 1 > cap:
                    raise CapExceeded(
                        f"saturation would exceed {cap} points")
                result = free_amalgam(base, [
                    (current, Embedding.inclusion(base, current)),
                    (ext, Embedding.inclusion(base, ext)),
                ])
                back = result.part_embeddings[0].mapping  # current -> amalgam
                rename = {back[p]: p for p in current.points}
                new_name = fresh_name(probe_name,
                                      set(current.points) | set(rename.values()))
                rename[result.part_embeddings[1].mapping[probe_name]] = new_name
                current = relabel(result.amalgam, rename)
    return current
