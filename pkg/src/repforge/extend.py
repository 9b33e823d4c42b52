"""Extending group actions to larger structures.

The basic step adjoins one new point to an acted-on structure by
materializing the finite coset space of the kernel of the action: the
new point becomes the identity coset, the group translates cosets, and
relations/partitions are spread over the cosets by the orbit of the
given data.  Iterating the step pushes an action through any finite
target.  The root construction builds an n-th root of a designated
automorphism by cyclically shifting n amalgamated copies, and the
two-sided amalgam of a pair of extensions witnesses the weak
amalgamation property combinatorially.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from .abelian import (
    FgAbelianGroup,
    GroupElement,
    QuotientGroup,
    express_in_generators,
    generator_relations,
    index as subgroup_index,
    kernel_of_permutation_images,
    quotient,
    subgroup_from_generators,
)
from .actions import (
    Action,
    apply,
    element_permutation,
    is_subrepresentation,
    validate_action,
)
from .amalgam import AmalgamResult, amalgamated_action, free_amalgam
from .errors import PreconditionError, RelatorViolation
from .perms import Perm, compose, inverse, perm_order, perm_power, point_key
from .ustructure import (
    Embedding,
    UStructure,
    fresh_name,
    induced_substructure,
    relabel,
)


@dataclass(frozen=True)
class ExtensionResult:
    extended_space: UStructure
    extended_action: Action
    inclusion: Embedding  # the input structure into the extended space


# ---------------------------------------------------------------------------
# One-point extension through a coset space
# ---------------------------------------------------------------------------

def one_point_extension(base: UStructure, extended: UStructure, new_point,
                        action: Action) -> ExtensionResult:
    """Extend an action over one new point via the kernel's coset space.

    ``extended`` must be ``base`` plus ``new_point``; ``action`` acts on
    ``base``.  The result adjoins one point per coset of the kernel of
    the action on ``base`` (the new point is the identity coset), lets
    the group translate cosets, spreads relations over the group orbit
    of the given ones, and extends each partition so that restricting
    everything back to ``extended`` returns exactly the input data.
    """
    if validate_action(action):
        raise PreconditionError("input action is not valid")
    if action.space != base:
        raise PreconditionError("action does not act on the base structure")
    if base.has_point(new_point) or not extended.has_point(new_point):
        raise PreconditionError("extended structure must add exactly the new point")
    if set(extended.points) != set(base.points) | {new_point}:
        raise PreconditionError("extended structure must add exactly the new point")
    if induced_substructure(extended, base.points) != base:
        raise PreconditionError("base is not induced in the extension")

    group = action.group
    kernel = kernel_of_permutation_images(group, action.images) \
        if base.points else kernel_of_permutation_images(
            group, tuple({} for _ in range(group.rank)))
    coset_space = quotient(group, kernel)
    cosets = list(coset_space.elements())  # finite: the image embeds in Sym(base)

    taken = set(extended.points)
    point_of: Dict[Tuple[int, ...], object] = {}
    for delta in cosets:
        if delta.is_zero():
            point_of[delta.coords] = new_point
        else:
            name = fresh_name(f"{new_point}.{','.join(map(str, delta.coords))}",
                              taken)
            taken.add(name)
            point_of[delta.coords] = name

    points = list(base.points) + [point_of[d.coords] for d in cosets]

    def coset_perm(delta: GroupElement) -> Perm:
        """The permutation of the new point set induced by a coset."""
        gamma = coset_space.section(delta)
        perm = {p: apply(action, gamma, p) for p in base.points}
        for c in cosets:
            perm[point_of[c.coords]] = point_of[(c + delta).coords]
        return perm

    images = []
    for i in range(group.rank):
        images.append(coset_perm(coset_space.project(group.generators()[i])))

    relations = {name: set() for name in extended.relations}
    for name, tuples in extended.relations.items():
        for delta in cosets:
            move = coset_perm(-delta)
            for t in tuples:
                relations[name].add(tuple(move[p] for p in t))

    partitions = {}
    for s in extended.signature.labels:
        partitions[s] = _extend_partition(base, extended, new_point, s,
                                          cosets, point_of, coset_space,
                                          action)

    space = UStructure(extended.signature, points, relations, partitions)
    extended_action = Action(group, space, tuple(images))
    inclusion = Embedding(extended, space, {p: p for p in extended.points})
    return ExtensionResult(space, extended_action, inclusion)


def _extend_partition(base, extended, new_point, label, cosets, point_of,
                      coset_space, action):
    """One partition of the coset extension.

    Two cases, keyed by whether the new point's class in the input meets
    the base.  If not, every new coset becomes a singleton class.  If it
    does, with anchor a, the class of the coset ``delta`` is the base
    class of ``delta.a`` together with the cosets ``delta + sigma`` for
    every ``sigma`` whose action keeps ``a`` inside its own class;
    untouched base classes are carried over unchanged.
    """
    new_class = next(c for c in extended.partitions[label] if new_point in c)
    anchors = sorted(new_class - {new_point}, key=point_key)

    if not anchors:
        classes = [set(c) for c in base.partitions[label]]
        for delta in cosets:
            classes.append({point_of[delta.coords]})
        return classes

    a = anchors[0]

    def act(delta, p):
        return apply(action, coset_space.section(delta), p)

    stab = [sigma for sigma in cosets if base.same_class(label, act(sigma, a), a)]

    classes = []
    covered_cosets = set()
    covered_base = set()
    for delta in cosets:
        if delta.coords in covered_cosets:
            continue
        cls = set(base.class_of(label, act(delta, a)))
        for sigma in stab:
            member = (delta + sigma).coords
            cls.add(point_of[member])
            covered_cosets.add(member)
        covered_base |= {p for p in cls if base.has_point(p)}
        classes.append(cls)
    for c in base.partitions[label]:
        if not (set(c) & covered_base):
            classes.append(set(c))
    # the class system must partition the extended point set exactly
    seen = set()
    for cls in classes:
        if cls & seen:
            raise RelatorViolation(
                "coset classes failed to partition the extension")
        seen |= cls
    allpts = set(base.points) | {point_of[d.coords] for d in cosets}
    if seen != allpts:
        raise RelatorViolation("coset classes failed to cover the extension")
    return classes


# ---------------------------------------------------------------------------
# Iterated extension through a finite target
# ---------------------------------------------------------------------------

def extend_action_through(target: UStructure, base_points,
                          action: Action) -> ExtensionResult:
    """Push an action through every point of a finite target structure.

    ``base_points`` picks the induced substructure of ``target`` on
    which ``action`` acts.  Remaining target points are processed in
    point order; each step re-embeds the processed fragment of the
    target into the grown structure with a free amalgam, then runs the
    one-point coset extension.  The returned inclusion embeds the whole
    target, acts like the input on the base, and the extended action
    restricts to the input action.
    """
    base_points = sorted(set(base_points), key=point_key)
    base = induced_substructure(target, base_points)
    if action.space != base:
        raise PreconditionError("action does not act on the chosen base")
    if validate_action(action):
        raise PreconditionError("input action is not valid")

    current_space = base
    current_action = action
    embed: Dict[object, object] = {p: p for p in base_points}

    for nxt in [p for p in target.points if p not in set(base_points)]:
        processed = [p for p in target.points if p in embed]
        fragment = induced_substructure(target, processed)
        fragment_next = induced_substructure(target, processed + [nxt])
        frag_embedding = Embedding(fragment, current_space,
                                   {p: embed[p] for p in processed})
        res = free_amalgam(fragment, [
            (current_space, frag_embedding),
            (fragment_next, Embedding.inclusion(fragment, fragment_next)),
        ])
        back = res.part_embeddings[0].mapping
        rename = {back[p]: p for p in current_space.points}
        new_name = fresh_name(str(nxt), set(current_space.points))
        rename[res.part_embeddings[1].mapping[nxt]] = new_name
        glued = relabel(res.amalgam, rename)

        step = one_point_extension(current_space, glued, new_name,
                                   current_action)
        current_space = step.extended_space
        current_action = step.extended_action
        embed[nxt] = new_name

    inclusion = Embedding(target, current_space, embed)
    for i in range(action.group.rank):
        for p in base_points:
            assert current_action.images[i][p] == action.images[i][p]
    return ExtensionResult(current_space, current_action, inclusion)


# ---------------------------------------------------------------------------
# Root construction
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RootResult:
    space: UStructure
    delta_action: Action          # action of the subgroup on the space
    delta_generators: Tuple[GroupElement, ...]  # aligned with delta_action
    root: Perm                    # the automorphism h
    shift_order: int              # n with h^n realizing the designated element
    copies: Tuple[Dict, ...]      # per copy: original point -> space point
    whole_action: Action          # assembled action of the full group
    target_embedding: Embedding   # the input superstructure into the space


def root_extension(base: UStructure, target: UStructure,
                   delta_gens: Sequence[GroupElement], g: GroupElement,
                   pi: Action, sigma_images: Sequence[Perm]) -> RootResult:
    """Root of the action of ``g`` over an extension acted on by a subgroup.

    The full group is generated by the subgroup spanned by
    ``delta_gens`` together with ``g``; ``pi`` is its action on
    ``base``, and ``sigma_images`` (one permutation of ``target`` per
    entry of ``delta_gens``) is a subgroup action on ``target``
    extending ``pi``.  The result is built from n tagged copies of the
    target amalgamated over the base, with the copy-shifting
    automorphism ``h`` extending g's action, commuting with the
    subgroup, and satisfying ``h^n = (g^n as a subgroup element)``.
    """
    group = pi.group
    if g.group != group or any(d.group != group for d in delta_gens):
        raise PreconditionError("generators must live in the action's group")
    if validate_action(pi):
        raise PreconditionError("full action on the base is not valid")
    if pi.space != base:
        raise PreconditionError("pi must act on the base structure")
    if not set(base.points) <= set(target.points):
        raise PreconditionError("base must sit inside the target")
    if induced_substructure(target, base.points) != base:
        raise PreconditionError("base is not induced in the target")

    delta_sub = subgroup_from_generators(group, list(delta_gens))
    combined = subgroup_from_generators(group, list(delta_gens) + [g])
    if subgroup_index(combined) != 1:
        raise PreconditionError("subgroup and g do not generate the group")

    # sigma must be a homomorphic family on the target
    for rel in generator_relations(group, list(delta_gens)):
        acc = {p: p for p in target.points}
        for c, img in zip(rel, sigma_images):
            acc = compose(acc, perm_power(img, c))
        if any(acc[p] != p for p in target.points):
            raise RelatorViolation(
                "sigma images violate the subgroup's relations")
    for i in range(len(delta_gens)):
        for j in range(i + 1, len(delta_gens)):
            if not compose(sigma_images[i], sigma_images[j]) == \
                    compose(sigma_images[j], sigma_images[i]):
                raise RelatorViolation("sigma images do not commute")

    def sigma_perm(elem: GroupElement) -> Perm:
        coeffs = express_in_generators(group, list(delta_gens), elem)
        if coeffs is None:
            raise PreconditionError(f"{elem!r} is not in the subgroup")
        acc = {p: p for p in target.points}
        for c, img in zip(coeffs, sigma_images):
            acc = compose(acc, perm_power(img, c))
        return acc

    # pi restricted to the subgroup must be a subrepresentation of sigma
    for d in delta_gens:
        want = element_permutation(pi, d)
        have = sigma_perm(d)
        for p in base.points:
            if have[p] != want[p]:
                raise PreconditionError(
                    "sigma does not extend pi on the subgroup")

    # n = min positive e with g^e in the subgroup; exact via the quotient
    gbar_group = quotient(group, delta_sub)
    n = gbar_group.group.element_order(gbar_group.project(g))
    if n is math.inf:
        # reduce to the finite case: the order of g's action on the base
        g_perm = element_permutation(pi, g)
        n = perm_order(g_perm)
        theta_perm_target = {p: p for p in target.points}
    else:
        n = int(n)
        theta_perm_target = sigma_perm(n * g)

    g_on_base = element_permutation(pi, g)

    # tagged copies of the target, embedded over the base with a twist:
    # copy j attaches a to (g^pi)^(-j) . a
    copy_names: List[Dict] = []
    taken = set(base.points)
    for j in range(n):
        names = {}
        for p in target.points:
            if p in set(base.points):
                continue
            nm = fresh_name(f"{p}#{j}", taken)
            taken.add(nm)
            names[p] = nm
        copy_names.append(names)

    g_inv = inverse(g_on_base)
    parts = []
    iotas = []
    copies: List[Dict] = []
    for j in range(n):
        ren = dict(copy_names[j])
        full = {}
        for p in target.points:
            if p in set(base.points):
                full[p] = p
            else:
                full[p] = ren[p]
        bj = relabel(target, full)
        iota_map = {a: perm_power(g_inv, j)[a] for a in base.points}
        iota = Embedding(base, bj, iota_map)
        parts.append((bj, iota))
        iotas.append(iota)
        copies.append(full)

    result = free_amalgam(base, parts)
    space = result.amalgam

    # the copy maps composed with the amalgam's part embeddings
    copy_to_space: List[Dict] = []
    for j in range(n):
        phi = result.part_embeddings[j].mapping
        copy_to_space.append({p: phi[copies[j][p]] for p in target.points})

    # subgroup action on each copy mirrors sigma
    part_actions = []
    delta_abstract, canon = _subgroup_presentation(group, delta_gens)
    for j in range(n):
        ren = copies[j]
        imgs = []
        for d in canon:
            perm = sigma_perm(d)
            imgs.append({ren[p]: ren[perm[p]] for p in target.points})
        part_actions.append(Action(delta_abstract, parts[j][0], tuple(imgs)))

    base_delta_images = tuple(element_permutation(pi, d) for d in canon)
    base_delta_action = Action(delta_abstract, base, base_delta_images)
    rho = amalgamated_action(base_delta_action, part_actions, result)

    # the shifting automorphism
    h: Perm = {}
    for a in base.points:
        h[a] = g_on_base[a]
    for j in range(n):
        src = copy_to_space[j]
        if j < n - 1:
            dst = copy_to_space[j + 1]
            for p in target.points:
                if p not in set(base.points):
                    h[src[p]] = dst[p]
        else:
            dst = copy_to_space[0]
            for p in target.points:
                if p not in set(base.points):
                    h[src[p]] = dst[theta_perm_target[p]]

    # assemble the full-group action from rho and h: decompose each
    # canonical generator as (subgroup part) + (multiple of g)
    whole_images = []
    for gen in group.generators():
        coeffs = express_in_generators(group, list(delta_gens) + [g], gen)
        assert coeffs is not None, "generators span the group by precondition"
        perm = {p: p for p in space.points}
        for c, d in zip(coeffs[:-1], delta_gens):
            perm = compose(perm, _rho_perm(rho, canon, group, d, c))
        perm = compose(perm, perm_power(h, coeffs[-1]))
        whole_images.append(perm)
    whole_action = Action(group, space, tuple(whole_images))

    # embed the target as copy 0 (the untwisted copy)
    target_embedding = Embedding(target, space, copy_to_space[0])

    delta_action = rho
    return RootResult(space, delta_action, tuple(canon), h, n,
                      tuple(copy_to_space), whole_action, target_embedding)


def _subgroup_presentation(group, delta_gens):
    """Abstract invariant-factor presentation of the spanned subgroup.

    Returns ``(abstract_group, canonical_gens)`` with the canonical
    generators given as elements of the ambient group.
    """
    from .abelian import subgroup_as_group
    sub = subgroup_from_generators(group, list(delta_gens))
    return subgroup_as_group(sub)


def _rho_perm(rho, canon, group, elem, power):
    """Permutation of rho at ``power * elem`` for an ambient element."""
    coeffs = express_in_generators(group, list(canon), power * elem)
    if coeffs is None:
        raise PreconditionError("element is not in the subgroup")
    perm = {p: p for p in rho.space.points}
    for c, img in zip(coeffs, rho.images):
        perm = compose(perm, perm_power(img, c))
    return perm


# ---------------------------------------------------------------------------
# Weak-amalgamation witness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WapWitness:
    space: UStructure
    action: Action
    left_embedding: Embedding    # first extension into the witness space
    right_embedding: Embedding   # second extension into the witness space


def wap_witness(anchor_action: Action, left: Action, right: Action
                ) -> WapWitness:
    """Glue two extensions of one anchored action over their common base.

    ``left`` and ``right`` act on superstructures of the anchor action's
    space and must both contain it as a subrepresentation.  The result
    is the free amalgam of the two spaces over the anchor with the
    amalgamated action; pulled back along either returned embedding it
    restricts to the corresponding input, so the two of them agree on
    the anchor.
    """
    base = anchor_action.space
    for ext in (left, right):
        if not set(base.points) <= set(ext.space.points):
            raise PreconditionError("extension does not contain the anchor space")
        if induced_substructure(ext.space, base.points) != base:
            raise PreconditionError("anchor is not induced in the extension")
        if not is_subrepresentation(anchor_action, ext):
            raise PreconditionError(
                "extension does not restrict to the anchored action")
    result = free_amalgam(base, [
        (left.space, Embedding.inclusion(base, left.space)),
        (right.space, Embedding.inclusion(base, right.space)),
    ])
    rho = amalgamated_action(anchor_action, [left, right], result)
    return WapWitness(result.amalgam, rho,
                      result.part_embeddings[0], result.part_embeddings[1])


# ---------------------------------------------------------------------------
# Close orbits, then report the finite approximating action
# ---------------------------------------------------------------------------

def close_then_extend(action: Action, window) -> Tuple[UStructure, Action,
                                                       Embedding]:
    """Finite action agreeing with the input on a chosen window.

    Collects the window together with every generator image of it, runs
    the orbit-closing pipeline on that anchor, and renames the closed
    structure so the anchor keeps its original identifiers.  Every
    generator then moves window points exactly as the input action
    does, so any total action extending the result lies in the basic
    neighbourhood of the input anchored at the window.
    """
    from .orbitclose import close_orbits

    window = sorted(set(window), key=point_key)
    for p in window:
        if not action.space.has_point(p):
            raise PreconditionError(f"window point {p!r} not in the space")
    anchor = set(window)
    for img in action.images:
        anchor |= {img[p] for p in window}
    closed_space, closed_action, emb = close_orbits(action.space, action,
                                                    sorted(anchor, key=point_key))
    rename = {}
    back = emb.inverse_on_image()
    for p in closed_space.points:
        rename[p] = back.get(p, p)
    renamed_space = relabel(closed_space, rename)
    renamed_images = tuple(
        {rename[p]: rename[img[p]] for p in closed_space.points}
        for img in closed_action.images)
    renamed_action = Action(closed_action.group, renamed_space, renamed_images)
    inclusion = Embedding(emb.source, renamed_space,
                          {p: p for p in emb.source.points})
    return renamed_space, renamed_action, inclusion
