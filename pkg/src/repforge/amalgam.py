"""Free amalgamation of structures over a common finite base.

The amalgam of parts B_1..B_p over A glues the parts along their
embedded copies of A, adds no relation tuples across distinct parts,
and mediates cross-part partition classes through A.  When A is empty,
cross-part points become equivalent only above the largest label at
which every part is still discrete.

Group actions compatible with the gluing amalgamate as well: an action
on A together with extensions on each part yields an action on the
amalgam that restricts to the given pieces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from .errors import NotAnEmbedding, PreconditionError
from .perms import point_key
from .ustructure import (
    Embedding,
    UStructure,
    fresh_name,
    validate,
)


@dataclass(frozen=True)
class AmalgamResult:
    amalgam: UStructure
    base_embedding: Embedding                 # A into the amalgam
    part_embeddings: Tuple[Embedding, ...]    # each B_j into the amalgam


class _UnionFind:
    def __init__(self, items):
        self.parent = {i: i for i in items}

    def find(self, a):
        while self.parent[a] != a:
            self.parent[a] = self.parent[self.parent[a]]
            a = self.parent[a]
        return a

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[ra] = rb

    def classes(self):
        out: Dict[object, set] = {}
        for i in self.parent:
            out.setdefault(self.find(i), set()).add(i)
        return list(out.values())


def free_amalgam(base: UStructure,
                 parts: Sequence[Tuple[UStructure, Embedding]]) -> AmalgamResult:
    """Free amalgam of the parts over ``base``.

    ``parts`` is a nonempty list of ``(B_j, iota_j)`` with each
    ``iota_j`` an embedding of ``base`` into ``B_j``.  Base points keep
    their identifiers; the remaining points of each part are renamed
    with a part tag.  Relations are copied part-by-part (nothing across
    parts); partitions glue through the base, or, over the empty base,
    through the largest label at which every part is discrete.
    """
    if not parts:
        raise PreconditionError("need at least one part")
    sig = base.signature
    for bj, iota in parts:
        if bj.signature != sig:
            raise PreconditionError("signatures differ across the amalgam")
        if iota.source is not base and iota.source != base:
            raise NotAnEmbedding("embedding source is not the base")
        if iota.target is not bj and iota.target != bj:
            raise NotAnEmbedding("embedding target is not its part")

    taken = set(base.points)
    to_amalgam: List[Dict] = []   # per part: B_j point -> amalgam point
    points = list(base.points)
    for j, (bj, iota) in enumerate(parts):
        image = set(iota.mapping.values())
        back = iota.inverse_on_image()
        ren: Dict = {}
        for p in bj.points:
            if p in image:
                ren[p] = back[p]
            else:
                name = fresh_name(f"{p}@{j}", taken)
                taken.add(name)
                ren[p] = name
                points.append(name)
        to_amalgam.append(ren)

    relations = {sym.name: set() for sym in sig.relations}
    for (bj, _), ren in zip(parts, to_amalgam):
        for name, tuples in bj.relations.items():
            for t in tuples:
                relations[name].add(tuple(ren[p] for p in t))

    partitions = {}
    if sig.labels:
        if base.points:
            for s in sig.labels:
                uf = _UnionFind(points)
                for (bj, _), ren in zip(parts, to_amalgam):
                    for cls in bj.partitions[s]:
                        members = [ren[p] for p in cls]
                        for a, b in zip(members, members[1:]):
                            uf.union(a, b)
                partitions[s] = uf.classes()
        else:
            # A part whose points are never separated is not a valid
            # structure; refuse rather than pick a silent default.
            for bj, _ in parts:
                for cls in bj.partitions[sig.labels[0]]:
                    if len(cls) > 1:
                        raise PreconditionError(
                            "part has two points equivalent at every label "
                            "(nesting makes the bottom label decisive); "
                            "the part is not a valid structure")
            # Cross-part pairs become equivalent only above the largest
            # label at which some part still distinguishes two of its own
            # points.  Below or at that threshold nothing is forced, so
            # the free choice is no cross equivalence; above it every
            # part is a single class, so a wholesale merge is the only
            # transitive extension.
            threshold = None
            for s in sig.labels:
                if any(len(bj.partitions[s]) > 1 for bj, _ in parts):
                    threshold = s
            if threshold is None:
                threshold = sig.labels[-1]
            for s in sig.labels:
                uf = _UnionFind(points)
                for (bj, _), ren in zip(parts, to_amalgam):
                    for cls in bj.partitions[s]:
                        members = [ren[p] for p in cls]
                        for a, b in zip(members, members[1:]):
                            uf.union(a, b)
                if s > threshold:
                    anchors = [next(iter(ren.values()))
                               for ren in to_amalgam if ren]
                    for a, b in zip(anchors, anchors[1:]):
                        uf.union(a, b)
                partitions[s] = uf.classes()

    amalgam = UStructure(sig, points, relations, partitions)
    base_embedding = Embedding(base, amalgam, {p: p for p in base.points})
    part_embeddings = tuple(
        Embedding(bj, amalgam, ren)
        for (bj, _), ren in zip(parts, to_amalgam))
    return AmalgamResult(amalgam, base_embedding, part_embeddings)


def amalgamated_action(base_action, part_actions, result: AmalgamResult):
    """Glue compatible actions along a free amalgam.

    ``base_action`` acts on the amalgam's base A, each of
    ``part_actions`` on the matching part B_j, and each part action must
    extend the base action through the part's base embedding (the
    pushforward of the base action is a subrepresentation of the part
    action).  The returned action agrees with the base on A and with
    each part action on that part's new points.
    """
    from .actions import Action, is_subrepresentation, pushforward

    base = result.base_embedding.source
    if base_action.space != base:
        raise PreconditionError("base action does not act on the amalgam's base")
    if len(part_actions) != len(result.part_embeddings):
        raise PreconditionError("one action per part required")
    group = base_action.group
    for act in part_actions:
        if act.group != group:
            raise PreconditionError("all actions must share the group")

    images = [dict() for _ in range(group.rank)]
    for i in range(group.rank):
        for p in base.points:
            images[i][p] = base_action.images[i][p]

    base_points = set(base.points)
    for act, phi in zip(part_actions, result.part_embeddings):
        bj = phi.source
        if act.space != bj:
            raise PreconditionError("part action does not act on its part")
        # phi(iota(a)) == a for base points, so iota is phi inverted on A
        iota = Embedding(base, bj, {a: p for p, a in phi.mapping.items()
                                    if a in base_points})
        pushed = pushforward(base_action, iota)
        if not is_subrepresentation(pushed, act):
            raise PreconditionError(
                "part action does not extend the base action through its "
                "embedding")
        ren = phi.mapping
        new_points = [p for p in bj.points if ren[p] not in base_points]
        for i in range(group.rank):
            img = act.images[i]
            for p in new_points:
                images[i][ren[p]] = ren[img[p]]

    return Action(group, result.amalgam, tuple(images))
