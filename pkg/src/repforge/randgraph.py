"""Random-graph generators from symmetric subsets and staged prefixes.

A symmetric subset of an abelian group induces a translation-invariant
graph on any window of the group.  For the integers we build staged
truncations: blocks of seeded random bits alternate with forced gaps
covering ``[k+1, 3k]`` after a decided prefix of length ``k``.  The
gaps guarantee that any finite configuration admits a completely
unrelated translate; the random blocks make central windows rich
enough to satisfy small extension properties.  Everything is truncated
honestly: the unit shift carries an explicit validity range and
operations that would leave the decided prefix raise instead of
wrapping around.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Dict, FrozenSet, Iterable, List, Optional, Sequence, Tuple

from .abelian import FgAbelianGroup, GroupElement
from .actions import Action
from .errors import PreconditionError, WindowTooShort
from .perms import Perm, point_key
from .ustructure import UStructure, graph_signature, graph_structure


# ---------------------------------------------------------------------------
# Symmetric subsets and regular graphs
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SymmetricSubset:
    """Finite S with s in S iff -s in S and 0 excluded."""

    group: FgAbelianGroup
    members: FrozenSet[Tuple[int, ...]]

    def __post_init__(self):
        members = frozenset(self.group.element(m).coords for m in self.members)
        object.__setattr__(self, "members", members)
        for m in members:
            elem = self.group.element(m)
            if elem.is_zero():
                raise PreconditionError("symmetric subset may not contain 0")
            if (-elem).coords not in members:
                raise PreconditionError(
                    f"{m} present without its inverse; subset not symmetric")

    def __contains__(self, elem: GroupElement) -> bool:
        return elem.coords in self.members


def regular_graph(subset: SymmetricSubset, window: Sequence[GroupElement]
                  ) -> UStructure:
    """Translation-invariant graph on a window: x ~ y iff x - y in S."""
    window = list(window)
    for w in window:
        if w.group != subset.group:
            raise PreconditionError("window element outside the group")
    if len({w.coords for w in window}) != len(window):
        raise PreconditionError("window has repeated elements")
    names = {w.coords: _point_name(w) for w in window}
    edges = []
    for i, a in enumerate(window):
        for b in window[i + 1:]:
            if (a - b) in subset:
                edges.append((names[a.coords], names[b.coords]))
    return graph_structure(list(names.values()), edges)


def _point_name(elem: GroupElement):
    if len(elem.coords) == 1:
        return elem.coords[0]
    return ",".join(map(str, elem.coords))


def regular_reps_conjugate(first: SymmetricSubset, second: SymmetricSubset,
                           window: Sequence[GroupElement]) -> bool:
    """Conjugacy of the two regular representations over a common window.

    Over an abelian group every conjugacy of regular representations is
    a translation, and translations transport the defining subset to
    itself, so the decision reduces to equality of the subsets on the
    differences the window can realize.
    """
    if first.group != second.group:
        raise PreconditionError("subsets over different groups")
    diffs = {(a - b).coords for a in window for b in window}
    return (first.members & diffs) == (second.members & diffs)


# ---------------------------------------------------------------------------
# Staged integer prefixes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Stage:
    kind: str         # "block" or "gap"
    start: int        # first position decided by this stage
    stop: int         # last position decided by this stage (inclusive)
    chosen: Tuple[int, ...] = ()   # members added, for block stages

    def __post_init__(self):
        if self.kind not in ("block", "gap"):
            raise ValueError("stage kind must be 'block' or 'gap'")


@dataclass(frozen=True)
class StagedS:
    """Truncated symmetric subset of the positive integers with its log."""

    length: int
    members: FrozenSet[int]
    stages: Tuple[Stage, ...]

    def __contains__(self, n: int) -> bool:
        return abs(n) in self.members

    def decided_up_to(self) -> int:
        return self.length


def staged_S(length: int, seed: int = 0,
             first_block: int = 4, growth: int = 8) -> StagedS:
    """Alternating random blocks and forced gaps up to ``length``.

    Block stages fill the next interval with bits from a generator
    seeded by ``seed``; after a prefix decided up to k, gap stages force
    ``[k+1, 3k]`` empty.  Block lengths grow geometrically (4, 32, 256,
    ... by default) so a late block is wider than any window it has to
    serve; with the default geometry the prefix of length 512 ends
    inside a gap that the unlimited object keeps empty through 1164, so
    distances that a [-512, 512] window can realize but the prefix does
    not mention are genuinely non-edges.  Deterministic given the seed.
    """
    if length < 1:
        raise PreconditionError("length must be >= 1")
    rng = random.Random(seed)
    members = set()
    stages: List[Stage] = []
    k = 0
    block_len = first_block
    while k < length:
        # block stage: decide [k+1, k+block_len]
        start = k + 1
        stop = min(k + block_len, length)
        chosen = tuple(pos for pos in range(start, stop + 1)
                       if rng.getrandbits(1))
        members.update(chosen)
        stages.append(Stage("block", start, stop, chosen))
        k = stop
        if k >= length:
            break
        # gap stage: [k+1, 3k] forced empty
        start = k + 1
        stop = min(3 * k, length)
        if stop >= start:
            stages.append(Stage("gap", start, stop))
            k = stop
        block_len *= growth
        if k >= length:
            break
    return StagedS(length, frozenset(members), tuple(stages))


@dataclass(frozen=True)
class ShiftMap:
    """The unit shift n -> n + 1 with its validity range on a window."""

    lo: int
    hi: int   # domain is [lo, hi]; images land in [lo + 1, hi + 1]

    def apply(self, n: int, power: int = 1) -> int:
        m = n + power
        if not (self.lo <= n <= self.hi + 1) or not (self.lo <= m <= self.hi + 1):
            raise WindowTooShort(
                f"shift by {power} leaves the window at {n}",
                needed_length=abs(m))
        return m


def shift_graph(staged: StagedS, half_width: int
                ) -> Tuple[UStructure, ShiftMap]:
    """Graph on the integer window [-W, W] with n ~ m iff |n - m| in S.

    The companion shift is an automorphism of the unlimited object;
    here it carries the validity range [-W, W-1].
    """
    w = half_width
    if w > staged.length:
        raise PreconditionError("window wider than the decided prefix")
    points = list(range(-w, w + 1))
    edges = []
    for i, a in enumerate(points):
        for b in points[i + 1:]:
            if (b - a) in staged:
                edges.append((a, b))
    return graph_structure(points, edges), ShiftMap(-w, w - 1)


def find_unrelated_translate(graph: UStructure, staged: StagedS,
                             points: Iterable[int]) -> int:
    """Least n > 0 making a configuration and its n-translate disjoint
    and completely non-adjacent.

    The gap stages guarantee such n exists once the window is long
    enough; running off the decided prefix raises
    :class:`WindowTooShort` with a sufficient length estimate.
    """
    pts = sorted(set(points))
    if not pts:
        return 1
    for p in pts:
        if not graph.has_point(p):
            raise PreconditionError(f"point {p} outside the graph window")
    width = pts[-1] - pts[0]
    window_max = max(p for p in graph.points)
    n = 1
    while True:
        if pts[-1] + n > window_max:
            raise WindowTooShort(
                "no unrelated translate inside the window; "
                "a gap beyond the current prefix would be needed",
                needed_length=3 * (pts[-1] + width + 1))
        translated = [p + n for p in pts]
        if set(translated) & set(pts):
            n += 1
            continue
        if all(abs(a - b) not in staged.members
               for a in pts for b in translated):
            return n
        n += 1


def transitivity_splice(left: Action, right: Action, graph: UStructure,
                        staged: StagedS) -> Tuple[Action, int]:
    """Union of an action with an unrelated translate of another.

    Both actions act on induced subgraphs of the window graph.  The
    second is translated by the first power of the shift that makes the
    union of both supports completely unrelated to its own translate;
    with no cross edges the disjoint union of the actions is again an
    action on the induced union.  Returns the union action and the
    translation power.
    """
    from .ustructure import induced_substructure
    if left.group != right.group:
        raise PreconditionError("actions of different groups")
    for act in (left, right):
        if induced_substructure(graph, act.space.points) != act.space:
            raise PreconditionError(
                "action space is not an induced subgraph of the window")
    support = sorted(set(left.space.points) | set(right.space.points))
    k = find_unrelated_translate(graph, staged, support)
    for p in right.space.points:
        if not graph.has_point(p + k):
            raise WindowTooShort("translate leaves the window",
                                 needed_length=max(abs(p + k) for p in support))
    union_points = sorted(set(left.space.points) |
                          {p + k for p in right.space.points})
    union_space = induced_substructure(graph, union_points)
    images = []
    for img_l, img_r in zip(left.images, right.images):
        img = dict(img_l)
        for p, q in img_r.items():
            img[p + k] = q + k
        images.append(img)
    return Action(left.group, union_space, tuple(images)), k
