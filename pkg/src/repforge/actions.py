"""Actions of finitely generated abelian groups on finite structures.

An action stores one permutation of the points per group generator.
Validity means the images commute, torsion generators have the right
order, and every image is an automorphism of the structure.  The value
of an arbitrary group element on a point is computed on demand from the
generator images, which is well defined exactly because the images
commute and satisfy the relators.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .abelian import FgAbelianGroup, GroupElement
from .errors import DimensionMismatch, PreconditionError, RelatorViolation
from .perms import (
    Perm,
    commute,
    compose,
    cycle_type,
    identity_perm,
    inverse,
    is_perm,
    perm_order,
    perm_power,
    point_key,
)
from .ustructure import Embedding, UStructure, induced_substructure


@dataclass(frozen=True)
class ActionViolation:
    kind: str
    message: str

    def __str__(self):
        return f"{self.kind}: {self.message}"


@dataclass(frozen=True)
class Action:
    group: FgAbelianGroup
    space: UStructure
    images: Tuple[Perm, ...]

    def __post_init__(self):
        if len(self.images) != self.group.rank:
            raise DimensionMismatch(
                f"need {self.group.rank} generator images, got {len(self.images)}")
        object.__setattr__(self, "images", tuple(dict(p) for p in self.images))

    def image_of(self, i: int) -> Perm:
        return self.images[i]

    def __eq__(self, other):
        return (isinstance(other, Action) and self.group == other.group
                and self.space == other.space and self.images == other.images)

    def __repr__(self):
        return f"Action({self.group!r} on {len(self.space.points)} points)"


def trivial_action(group: FgAbelianGroup, space: UStructure) -> Action:
    ident = identity_perm(space.points)
    return Action(group, space, tuple(ident for _ in range(group.rank)))


def validate_action(a: Action) -> List[ActionViolation]:
    """Relator and automorphism checks; empty list when the action is sound."""
    out: List[ActionViolation] = []
    pts = a.space.points
    for i, img in enumerate(a.images):
        if not is_perm(img, pts):
            out.append(ActionViolation(
                "not-permutation", f"generator {i} image is not a permutation"))
    if out:
        return out
    for i in range(len(a.images)):
        for j in range(i + 1, len(a.images)):
            if not commute(a.images[i], a.images[j]):
                out.append(ActionViolation(
                    "commutator", f"generator images {i} and {j} do not commute"))
    fr = a.group.free_rank
    for j, d in enumerate(a.group.torsion):
        o = perm_order(a.images[fr + j])
        if d % o:
            out.append(ActionViolation(
                "torsion-order",
                f"torsion generator {j} image has order {o}, not dividing {d}"))
    for i, img in enumerate(a.images):
        for name, tuples in a.space.relations.items():
            for t in tuples:
                if tuple(img[p] for p in t) not in tuples:
                    out.append(ActionViolation(
                        "relation",
                        f"generator {i} breaks {name} on {t!r}"))
                    break
        for s in a.space.signature.labels:
            bad = None
            for cls in a.space.partitions[s]:
                members = sorted(cls, key=point_key)
                first = members[0]
                for other in members[1:]:
                    if not a.space.same_class(s, img[first], img[other]):
                        bad = (first, other)
                        break
                if bad:
                    break
            if bad:
                out.append(ActionViolation(
                    "partition",
                    f"generator {i} breaks the label-{s} partition on {bad!r}"))
    return out


def is_valid_action(a: Action) -> bool:
    return not validate_action(a)


def apply(a: Action, gamma: GroupElement, x):
    """Value of the group element on a point."""
    if gamma.group != a.group:
        raise DimensionMismatch("element of a different group")
    for c, img in zip(gamma.coords, a.images):
        if c >= 0:
            for _ in range(c):
                x = img[x]
        else:
            back = inverse(img)
            for _ in range(-c):
                x = back[x]
    return x


def element_permutation(a: Action, gamma: GroupElement) -> Perm:
    return {p: apply(a, gamma, p) for p in a.space.points}


def orbits(a: Action) -> List[Tuple]:
    """Orbit partition of the points, each orbit sorted, orbits by least point."""
    remaining = set(a.space.points)
    inv_images = [inverse(img) for img in a.images]
    out = []
    for start in a.space.points:
        if start not in remaining:
            continue
        orbit = {start}
        frontier = [start]
        while frontier:
            nxt = []
            for p in frontier:
                for img in itertools.chain(a.images, inv_images):
                    q = img[p]
                    if q not in orbit:
                        orbit.add(q)
                        nxt.append(q)
            frontier = nxt
        remaining -= orbit
        out.append(tuple(sorted(orbit, key=point_key)))
    return out


def is_subrepresentation(sub: Action, sup: Action) -> bool:
    """Whether ``sub`` is ``sup`` restricted to an invariant subset."""
    if sub.group != sup.group:
        raise DimensionMismatch("actions of different groups")
    inner = set(sub.space.points)
    if not inner <= set(sup.space.points):
        raise PreconditionError("sub-space points not contained in the superspace")
    if induced_substructure(sup.space, inner) != sub.space:
        raise PreconditionError("sub-space is not an induced substructure")
    for small, big in zip(sub.images, sup.images):
        for x in inner:
            if big[x] != small[x]:
                return False
    return True


def pullback(a: Action, emb: Embedding) -> Action:
    """Action transported backwards along an embedding with invariant image."""
    if emb.target != a.space:
        raise PreconditionError("embedding target is not the action's space")
    image = set(emb.mapping.values())
    back = emb.inverse_on_image()
    images = []
    for img in a.images:
        if any(img[y] not in image for y in image):
            raise PreconditionError("embedded image is not invariant")
        images.append({x: back[img[emb.mapping[x]]] for x in emb.source.points})
    return Action(a.group, emb.source, tuple(images))


def pushforward(a: Action, emb: Embedding) -> Action:
    """Action transported onto the embedded copy of its space."""
    if emb.source != a.space:
        raise PreconditionError("embedding source is not the action's space")
    sub = induced_substructure(emb.target, emb.mapping.values())
    images = []
    for img in a.images:
        images.append({emb.mapping[x]: emb.mapping[img[x]]
                       for x in a.space.points})
    return Action(a.group, sub, tuple(images))


@dataclass(frozen=True)
class BasicNbhd:
    """All actions agreeing with a base action on a finite anchor set."""

    base_action: Action
    anchor: Tuple

    def __post_init__(self):
        for p in self.anchor:
            if not self.base_action.space.has_point(p):
                raise PreconditionError(f"anchor point {p!r} not in the space")
        object.__setattr__(self, "anchor",
                           tuple(sorted(set(self.anchor), key=point_key)))


def in_basic_nbhd(theta: Action, nbhd: BasicNbhd) -> bool:
    base = nbhd.base_action
    if theta.group != base.group:
        raise DimensionMismatch("actions of different groups")
    if set(theta.space.points) != set(base.space.points):
        raise PreconditionError("actions do not share a space")
    for img_t, img_b in zip(theta.images, base.images):
        for p in nbhd.anchor:
            if img_t[p] != img_b[p]:
                return False
    return True


# ---------------------------------------------------------------------------
# Conjugacy
# ---------------------------------------------------------------------------

def _conjugator_search(pi: Action, theta: Action) -> Optional[Dict]:
    """Backtracking search for an equivariant isomorphism.

    Assignments propagate through the generator images in both
    directions, so each guessed pair usually forces a whole orbit.
    """
    src, tgt = pi.space, theta.space
    if len(src.points) != len(tgt.points):
        return None
    # cycle-type pruning per generator (pure optimization)
    for p_img, t_img in zip(pi.images, theta.images):
        if cycle_type(p_img) != cycle_type(t_img):
            return None

    inv_pi = [inverse(img) for img in pi.images]
    inv_theta = [inverse(img) for img in theta.images]

    def structurally_ok(mapping, x, y):
        for name, tuples in src.relations.items():
            arity = src.signature.relation(name).arity
            dom = [p for p in mapping] + [x]
            if arity > len(dom):
                continue
            look = dict(mapping)
            look[x] = y
            for t in itertools.product(dom, repeat=arity):
                if x not in t or len(set(t)) != arity:
                    continue
                if (t in tuples) != (tuple(look[q] for q in t)
                                     in tgt.relations[name]):
                    return False
        for s in src.signature.labels:
            for u, v in mapping.items():
                if src.same_class(s, x, u) != tgt.same_class(s, y, v):
                    return False
        return True

    def assign(mapping, used, x, y):
        """Extend mapping with x -> y and its equivariant consequences.

        Returns the list of newly assigned source points, or None after
        rolling back when the extension is inconsistent.
        """
        stack = [(x, y)]
        added = []
        ok = True
        while stack and ok:
            px, py = stack.pop()
            if px in mapping:
                if mapping[px] != py:
                    ok = False
            elif py in used or not structurally_ok(mapping, px, py):
                ok = False
            else:
                mapping[px] = py
                used.add(py)
                added.append(px)
                for i in range(len(pi.images)):
                    stack.append((pi.images[i][px], theta.images[i][py]))
                    stack.append((inv_pi[i][px], inv_theta[i][py]))
        if not ok:
            for px in added:
                used.discard(mapping[px])
                del mapping[px]
            return None
        return added

    order = list(src.points)

    def search(mapping, used):
        pending = [p for p in order if p not in mapping]
        if not pending:
            return dict(mapping)
        x = pending[0]
        for y in tgt.points:
            if y in used:
                continue
            added = assign(mapping, used, x, y)
            if added is None:
                continue
            found = search(mapping, used)
            if found is not None:
                return found
            for px in added:
                used.discard(mapping[px])
                del mapping[px]
        return None

    return search({}, set())


def are_conjugate(pi: Action, theta: Action) -> Optional[Dict]:
    """A conjugating isomorphism g with g . pi(gamma) = theta(gamma) . g
    for every generator, or None.

    The map is returned as a point dictionary from pi's space onto
    theta's space.  Spaces may be distinct but must be isomorphic for a
    conjugator to exist.
    """
    if pi.group != theta.group:
        raise DimensionMismatch("actions of different groups")
    if pi.space.signature != theta.space.signature:
        return None
    g = _conjugator_search(pi, theta)
    if g is None:
        return None
    # exactness audit on every generator and point
    for p_img, t_img in zip(pi.images, theta.images):
        for x in pi.space.points:
            assert g[p_img[x]] == t_img[g[x]]
    return g
