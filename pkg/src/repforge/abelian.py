"""Exact arithmetic for finitely generated abelian groups.

A group is kept in invariant-factor form ``Z^r x Z/d_1 x ... x Z/d_k``
with ``d_1 | d_2 | ... | d_k``.  Elements are integer coordinate vectors
of length ``r + k`` with torsion coordinates reduced modulo their
modulus.  A subgroup is identified with the full-preimage lattice of
itself in ``Z^(r+k)`` (always containing the relation vectors
``d_j * e_(r+j)``) and stored as the canonical Hermite-normal-form basis
of that lattice, so subgroup equality, membership, and index are plain
integer-matrix questions.  Quotients come out of Smith normal form with
tracked column transforms, which gives exact ``project``/``section``
maps rather than just the abstract invariants.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from math import gcd
from typing import Iterator, List, Optional, Sequence, Tuple

from .errors import DimensionMismatch, RelatorViolation
from .perms import (
    Perm,
    commute,
    compose,
    identity_perm,
    inverse,
    is_perm,
    perm_key,
    perm_order,
)

Row = Tuple[int, ...]


# ---------------------------------------------------------------------------
# Integer matrix normal forms
# ---------------------------------------------------------------------------

def _identity(n: int) -> List[List[int]]:
    return [[1 if i == j else 0 for j in range(n)] for i in range(n)]


def hermite_normal_form(rows: Sequence[Sequence[int]], width: int,
                        with_transform: bool = False):
    """Row-style Hermite normal form.

    Returns ``(H, pivots)`` or ``(H, pivots, U, kernel)`` where ``H`` is
    the list of nonzero echelon rows with positive pivots and entries
    above each pivot reduced into ``[0, pivot)``, ``pivots`` the pivot
    column of each row, ``U`` a unimodular transform with
    ``U * rows = [H; 0]``, and ``kernel`` the ``U``-rows matching the
    zero rows (a basis of the left kernel of ``rows``).
    """
    m = [list(r) for r in rows]
    for r in m:
        if len(r) != width:
            raise DimensionMismatch(f"row width {len(r)} != {width}")
    nrows = len(m)
    u = _identity(nrows) if with_transform else None

    def row_op(i, j, q):
        # row_i -= q * row_j
        mi, mj = m[i], m[j]
        for c in range(width):
            mi[c] -= q * mj[c]
        if u is not None:
            ui, uj = u[i], u[j]
            for c in range(nrows):
                ui[c] -= q * uj[c]

    def swap(i, j):
        m[i], m[j] = m[j], m[i]
        if u is not None:
            u[i], u[j] = u[j], u[i]

    def negate(i):
        m[i] = [-v for v in m[i]]
        if u is not None:
            u[i] = [-v for v in u[i]]

    rank = 0
    pivots: List[int] = []
    for col in range(width):
        while True:
            nz = [i for i in range(rank, nrows) if m[i][col] != 0]
            if not nz:
                break
            best = min(nz, key=lambda i: (abs(m[i][col]), i))
            if best != rank:
                swap(rank, best)
            done = True
            for i in range(rank + 1, nrows):
                if m[i][col] != 0:
                    q = m[i][col] // m[rank][col]
                    row_op(i, rank, q)
                    if m[i][col] != 0:
                        done = False
            if done:
                break
        if rank < nrows and m[rank][col] != 0:
            if m[rank][col] < 0:
                negate(rank)
            for i in range(rank):
                q = m[i][col] // m[rank][col]
                if q:
                    row_op(i, rank, q)
            pivots.append(col)
            rank += 1

    h = [tuple(r) for r in m[:rank]]
    if not with_transform:
        return h, pivots
    kernel = [tuple(u[i]) for i in range(rank, nrows)]
    transform = [tuple(r) for r in u]
    return h, pivots, transform, kernel


def solve_in_lattice(h: Sequence[Row], pivots: Sequence[int],
                     v: Sequence[int]) -> Optional[Tuple[int, ...]]:
    """Solve ``x * H = v`` over Z for an HNF basis ``H``; None if no solution."""
    res = list(v)
    coeffs = []
    for row, p in zip(h, pivots):
        q, rem = divmod(res[p], row[p])
        if rem:
            return None
        coeffs.append(q)
        if q:
            for c in range(len(res)):
                res[c] -= q * row[c]
    if any(res):
        return None
    return tuple(coeffs)


def smith_normal_form(rows: Sequence[Sequence[int]], width: int):
    """Smith normal form with tracked column transforms.

    Returns ``(invariants, V, Vinv)`` such that for the input matrix M
    there is a unimodular U with ``U M V = diag(invariants)`` (padded
    with zero rows/columns), ``invariants`` nonzero with each dividing
    the next, and ``Vinv = V^-1``.
    """
    a = [list(r) for r in rows]
    for r in a:
        if len(r) != width:
            raise DimensionMismatch(f"row width {len(r)} != {width}")
    nrows = len(a)
    v = _identity(width)
    vinv = _identity(width)

    def col_op(j, t, q):
        # col_j -= q * col_t  (right-multiply by elementary matrix)
        for i in range(nrows):
            a[i][j] -= q * a[i][t]
        for i in range(width):
            v[i][j] -= q * v[i][t]
        # inverse picks up the opposite row operation
        for c in range(width):
            vinv[t][c] += q * vinv[j][c]

    def col_swap(j, t):
        for i in range(nrows):
            a[i][j], a[i][t] = a[i][t], a[i][j]
        for i in range(width):
            v[i][j], v[i][t] = v[i][t], v[i][j]
        vinv[j], vinv[t] = vinv[t], vinv[j]

    def col_negate(j):
        for i in range(nrows):
            a[i][j] = -a[i][j]
        for i in range(width):
            v[i][j] = -v[i][j]
        vinv[j] = [-x for x in vinv[j]]

    def row_op(i, t, q):
        ai, at = a[i], a[t]
        for c in range(width):
            ai[c] -= q * at[c]

    def row_swap(i, t):
        a[i], a[t] = a[t], a[i]

    t = 0
    limit = min(nrows, width)
    while t < limit:
        # locate smallest nonzero entry in the trailing block
        pos = None
        best = None
        for i in range(t, nrows):
            for j in range(t, width):
                if a[i][j] != 0 and (best is None or abs(a[i][j]) < best):
                    best = abs(a[i][j])
                    pos = (i, j)
        if pos is None:
            break
        i0, j0 = pos
        if i0 != t:
            row_swap(i0, t)
        if j0 != t:
            col_swap(j0, t)
        # clear row and column t
        dirty = True
        while dirty:
            dirty = False
            for i in range(t + 1, nrows):
                if a[i][t]:
                    q = a[i][t] // a[t][t]
                    row_op(i, t, q)
                    if a[i][t]:
                        row_swap(i, t)
                        dirty = True
            for j in range(t + 1, width):
                if a[t][j]:
                    q = a[t][j] // a[t][t]
                    col_op(j, t, q)
                    if a[t][j]:
                        col_swap(j, t)
                        dirty = True
        if a[t][t] < 0:
            col_negate(t)
        # enforce divisibility of the remaining block
        offender = None
        for i in range(t + 1, nrows):
            for j in range(t + 1, width):
                if a[i][j] % a[t][t]:
                    offender = i
                    break
            if offender is not None:
                break
        if offender is not None:
            row_op(t, offender, -1)  # row_t += row_offender
            continue
        t += 1

    invariants = [a[i][i] for i in range(t) if a[i][i] != 0]
    return invariants, [tuple(r) for r in v], [tuple(r) for r in vinv]


def _mat_vec(vec: Sequence[int], mat: Sequence[Row]) -> Tuple[int, ...]:
    """Row vector times matrix."""
    width = len(mat[0]) if mat else 0
    out = [0] * width
    for x, row in zip(vec, mat):
        if x:
            for c in range(width):
                out[c] += x * row[c]
    return tuple(out)


# ---------------------------------------------------------------------------
# Groups and elements
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FgAbelianGroup:
    """``Z^free_rank x Z/d_1 x ... x Z/d_k`` in invariant-factor form."""

    free_rank: int
    torsion: Tuple[int, ...] = ()

    def __post_init__(self):
        if self.free_rank < 0:
            raise ValueError("free rank must be nonnegative")
        object.__setattr__(self, "torsion", tuple(int(d) for d in self.torsion))
        for d in self.torsion:
            if d < 2:
                raise ValueError(f"torsion invariant {d} < 2")
        for a, b in zip(self.torsion, self.torsion[1:]):
            if b % a:
                raise ValueError(
                    f"invariants {self.torsion} violate the divisibility chain; "
                    "normalize with from_moduli()")

    @classmethod
    def from_moduli(cls, free_rank: int, moduli: Sequence[int]) -> "FgAbelianGroup":
        """Normalize an arbitrary finite-moduli presentation via SNF."""
        moduli = [int(d) for d in moduli if int(d) != 1]
        if any(d < 1 for d in moduli):
            raise ValueError("moduli must be positive")
        k = len(moduli)
        rel = [[moduli[j] if i == j else 0 for i in range(k)] for j in range(k)]
        inv, _, _ = smith_normal_form(rel, k) if k else ([], [], [])
        return cls(free_rank, tuple(d for d in inv if d >= 2))

    @property
    def rank(self) -> int:
        """Coordinate length r + k."""
        return self.free_rank + len(self.torsion)

    @property
    def order(self):
        if self.free_rank:
            return math.inf
        return math.prod(self.torsion) if self.torsion else 1

    def relation_rows(self) -> List[Row]:
        n = self.rank
        rows = []
        for j, d in enumerate(self.torsion):
            row = [0] * n
            row[self.free_rank + j] = d
            rows.append(tuple(row))
        return rows

    def element(self, coords: Sequence[int]) -> "GroupElement":
        return GroupElement(self, tuple(coords))

    def zero(self) -> "GroupElement":
        return self.element((0,) * self.rank)

    def generators(self) -> List["GroupElement"]:
        n = self.rank
        return [self.element(tuple(1 if i == j else 0 for i in range(n)))
                for j in range(n)]

    def elements(self) -> Iterator["GroupElement"]:
        """All elements; only for finite groups."""
        if self.free_rank:
            raise ValueError("cannot enumerate an infinite group")
        for coords in itertools.product(*(range(d) for d in self.torsion)):
            yield self.element(coords)

    def element_order(self, g: "GroupElement"):
        if any(g.coords[: self.free_rank]):
            return math.inf
        out = 1
        for c, d in zip(g.coords[self.free_rank:], self.torsion):
            out = math.lcm(out, d // gcd(d, c))
        return out

    def __repr__(self):
        parts = ["Z"] * self.free_rank + [f"Z/{d}" for d in self.torsion]
        return " x ".join(parts) if parts else "0"


@dataclass(frozen=True)
class GroupElement:
    group: FgAbelianGroup
    coords: Tuple[int, ...]

    def __post_init__(self):
        g = self.group
        if len(self.coords) != g.rank:
            raise DimensionMismatch(
                f"coordinate length {len(self.coords)} != rank {g.rank}")
        reduced = list(int(c) for c in self.coords)
        for j, d in enumerate(g.torsion):
            reduced[g.free_rank + j] %= d
        object.__setattr__(self, "coords", tuple(reduced))

    def __add__(self, other: "GroupElement") -> "GroupElement":
        self._check(other)
        return GroupElement(self.group,
                            tuple(a + b for a, b in zip(self.coords, other.coords)))

    def __sub__(self, other: "GroupElement") -> "GroupElement":
        self._check(other)
        return GroupElement(self.group,
                            tuple(a - b for a, b in zip(self.coords, other.coords)))

    def __neg__(self) -> "GroupElement":
        return GroupElement(self.group, tuple(-a for a in self.coords))

    def __mul__(self, k: int) -> "GroupElement":
        return GroupElement(self.group, tuple(k * a for a in self.coords))

    __rmul__ = __mul__

    def is_zero(self) -> bool:
        return not any(self.coords)

    def _check(self, other):
        if self.group != other.group:
            raise DimensionMismatch("elements of different groups")

    def __repr__(self):
        return f"({', '.join(map(str, self.coords))})"


# ---------------------------------------------------------------------------
# Subgroups
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Subgroup:
    """Subgroup as the HNF basis of its full-preimage lattice in Z^(r+k)."""

    parent: FgAbelianGroup
    basis: Tuple[Row, ...]
    _pivots: Tuple[int, ...] = field(default=(), repr=False, compare=False)

    @classmethod
    def from_rows(cls, parent: FgAbelianGroup,
                  rows: Sequence[Sequence[int]]) -> "Subgroup":
        n = parent.rank
        all_rows = [tuple(int(x) for x in r) for r in rows]
        for r in all_rows:
            if len(r) != n:
                raise DimensionMismatch(f"lattice row width {len(r)} != {n}")
        all_rows += parent.relation_rows()
        h, pivots = hermite_normal_form(all_rows, n)
        return cls(parent, tuple(h), tuple(pivots))

    def __post_init__(self):
        if not self._pivots and self.basis:
            # recover pivot columns for bases built directly
            pivots = []
            for row in self.basis:
                pivots.append(next(i for i, x in enumerate(row) if x))
            object.__setattr__(self, "_pivots", tuple(pivots))

    @property
    def lattice_rank(self) -> int:
        return len(self.basis)

    def contains_vector(self, vec: Sequence[int]) -> bool:
        if len(vec) != self.parent.rank:
            raise DimensionMismatch("vector length mismatch")
        return solve_in_lattice(self.basis, self._pivots, vec) is not None


def subgroup_from_generators(group: FgAbelianGroup,
                             gens: Sequence[GroupElement]) -> Subgroup:
    """Smallest subgroup containing ``gens``, in canonical form."""
    rows = []
    for g in gens:
        if g.group != group:
            raise DimensionMismatch("generator from a different group")
        rows.append(g.coords)
    return Subgroup.from_rows(group, rows)


def whole_group(group: FgAbelianGroup) -> Subgroup:
    return subgroup_from_generators(group, group.generators())


def trivial_subgroup(group: FgAbelianGroup) -> Subgroup:
    return subgroup_from_generators(group, [])


def contains(subgroup: Subgroup, g: GroupElement) -> bool:
    if g.group != subgroup.parent:
        raise DimensionMismatch("element of a different group")
    return subgroup.contains_vector(g.coords)


def index(subgroup: Subgroup):
    """[parent : subgroup]; math.inf when the preimage lattice is not full rank."""
    n = subgroup.parent.rank
    if subgroup.lattice_rank < n:
        return math.inf
    out = 1
    for row, p in zip(subgroup.basis, subgroup._pivots):
        out *= row[p]
    return out


def subgroup_sum(a: Subgroup, b: Subgroup) -> Subgroup:
    if a.parent != b.parent:
        raise DimensionMismatch("subgroups of different groups")
    return Subgroup.from_rows(a.parent, list(a.basis) + list(b.basis))


def subgroup_intersection(a: Subgroup, b: Subgroup) -> Subgroup:
    """Lattice intersection via the left kernel of the stacked bases."""
    if a.parent != b.parent:
        raise DimensionMismatch("subgroups of different groups")
    n = a.parent.rank
    ra, rb = len(a.basis), len(b.basis)
    stacked = [list(r) for r in a.basis] + [[-x for x in r] for r in b.basis]
    _, _, _, kernel = hermite_normal_form(stacked, n, with_transform=True)
    rows = []
    for z in kernel:
        rows.append(_mat_vec(z[:ra], list(a.basis)) if ra else (0,) * n)
    return Subgroup.from_rows(a.parent, rows)


def scaled_subgroup(group: FgAbelianGroup, n: int) -> Subgroup:
    """The subgroup n*G of G."""
    return subgroup_from_generators(group, [n * g for g in group.generators()])


def coset_intersection(cosets: Sequence[Tuple[GroupElement, Subgroup]]
                       ) -> Optional[Tuple[GroupElement, Subgroup]]:
    """Intersect cosets ``shift + H`` of a common parent; None when empty."""
    if not cosets:
        raise ValueError("need at least one coset")
    shift, lat = cosets[0]
    for shift2, lat2 in cosets[1:]:
        # want shift + a = shift2 + b with a in lat, b in lat2
        target = shift2 - shift
        rows = list(lat.basis) + list(lat2.basis)
        if rows:
            h, pivots, u, _ = hermite_normal_form(rows, lat.parent.rank,
                                                  with_transform=True)
            y = solve_in_lattice(h, pivots, target.coords)
            if y is None:
                return None
            coeffs = _mat_vec(y, u[:len(h)]) if h else (0,) * len(rows)
            a_part = coeffs[:len(lat.basis)]
            move = (_mat_vec(a_part, list(lat.basis))
                    if lat.basis else (0,) * lat.parent.rank)
            shift = shift + lat.parent.element(move)
        else:
            if not target.is_zero():
                return None
        lat = subgroup_intersection(lat, lat2)
    return shift, lat


# ---------------------------------------------------------------------------
# Quotients
# ---------------------------------------------------------------------------

class QuotientGroup:
    """G/H with exact projection and a canonical section.

    ``group`` is the quotient in invariant-factor form; ``project`` is a
    surjective homomorphism with kernel exactly H; ``section`` picks the
    canonical representative of each quotient element, and
    ``project(section(q)) == q`` always holds.
    """

    def __init__(self, parent: FgAbelianGroup, subgroup: Subgroup):
        if subgroup.parent != parent:
            raise DimensionMismatch("subgroup of a different group")
        self.parent = parent
        self.subgroup = subgroup
        n = parent.rank
        rows = list(subgroup.basis)
        if rows:
            inv, v, vinv = smith_normal_form(rows, n)
        else:
            inv, v, vinv = [], _identity(n), _identity(n)
            v = [tuple(r) for r in v]
            vinv = [tuple(r) for r in vinv]
        self._v = [tuple(r) for r in v]
        self._vinv = [tuple(r) for r in vinv]
        self._diag = list(inv)
        self._rank = len(inv)
        # positions among 0.._rank-1 with invariant >= 2 contribute torsion
        self._torsion_pos = [i for i, d in enumerate(inv) if d >= 2]
        free_rank = n - self._rank
        self.group = FgAbelianGroup(free_rank,
                                    tuple(inv[i] for i in self._torsion_pos))

    def project(self, g: GroupElement) -> GroupElement:
        if g.group != self.parent:
            raise DimensionMismatch("element of a different group")
        y = _mat_vec(g.coords, self._v) if self._v else ()
        free = list(y[self._rank:])
        tors = [y[i] % self._diag[i] for i in self._torsion_pos]
        return self.group.element(tuple(free + tors))

    def section(self, q: GroupElement) -> GroupElement:
        if q.group != self.group:
            raise DimensionMismatch("element of a different quotient")
        n = self.parent.rank
        y = [0] * n
        fr = self.group.free_rank
        for i, c in enumerate(q.coords[:fr]):
            y[self._rank + i] = c
        for pos, c in zip(self._torsion_pos, q.coords[fr:]):
            y[pos] = c
        x = _mat_vec(y, self._vinv)
        return self.parent.element(x)

    def elements(self) -> Iterator[GroupElement]:
        return self.group.elements()

    def __repr__(self):
        return f"QuotientGroup({self.parent!r} / lattice rank {self.subgroup.lattice_rank} -> {self.group!r})"


def quotient(group: FgAbelianGroup, subgroup: Subgroup) -> QuotientGroup:
    return QuotientGroup(group, subgroup)


def subgroup_as_group(subgroup: Subgroup):
    """Abstract form of a subgroup.

    Returns ``(group, gens)`` where ``group`` is the subgroup's own
    invariant-factor presentation and ``gens`` are parent elements
    realizing its canonical generators.
    """
    parent = subgroup.parent
    basis = list(subgroup.basis)
    m = len(basis)
    if m == 0:
        return FgAbelianGroup(0, ()), []
    # relation vectors of the parent expressed in basis coordinates
    rel_rows = []
    h, pivots = hermite_normal_form(basis, parent.rank)
    assert list(h) == basis  # basis is already HNF
    for rv in parent.relation_rows():
        coeffs = solve_in_lattice(h, pivots, rv)
        assert coeffs is not None, "relation vector escaped the preimage lattice"
        rel_rows.append(coeffs)
    if rel_rows:
        inv, v, vinv = smith_normal_form(rel_rows, m)
    else:
        inv, vinv = [], [tuple(r) for r in _identity(m)]
    rank = len(inv)
    torsion_pos = [i for i, d in enumerate(inv) if d >= 2]
    group = FgAbelianGroup(m - rank, tuple(inv[i] for i in torsion_pos))
    gens = []
    order = list(range(rank, m)) + torsion_pos  # free first, then torsion
    for idx in order:
        coeffs = vinv[idx]
        vec = _mat_vec(coeffs, basis)
        gens.append(parent.element(vec))
    return group, gens


def express_in_generators(group: FgAbelianGroup, gens: Sequence[GroupElement],
                          target: GroupElement) -> Optional[Tuple[int, ...]]:
    """Integer coefficients c with sum(c_i * gens_i) == target, or None."""
    if target.group != group:
        raise DimensionMismatch("target from a different group")
    rows = [g.coords for g in gens] + group.relation_rows()
    if not rows:
        return () if target.is_zero() else None
    h, pivots, u, _ = hermite_normal_form(rows, group.rank, with_transform=True)
    y = solve_in_lattice(h, pivots, target.coords)
    if y is None:
        return None
    coeffs = _mat_vec(y, u[:len(h)])
    return coeffs[:len(gens)]


def generator_relations(group: FgAbelianGroup,
                        gens: Sequence[GroupElement]) -> List[Tuple[int, ...]]:
    """Basis of {c : sum(c_i * gens_i) == 0 in the group}."""
    m = len(gens)
    rel = group.relation_rows()
    rows = [list(g.coords) for g in gens] + [list(r) for r in rel]
    if not rows:
        return []
    _, _, _, kernel = hermite_normal_form(rows, group.rank, with_transform=True)
    out = [z[:m] for z in kernel]
    h, _ = hermite_normal_form(out, m) if out else ([], [])
    return [tuple(r) for r in h]


# ---------------------------------------------------------------------------
# Enumeration of finite-index subgroups
# ---------------------------------------------------------------------------

def _ordered_factorizations(d: int, n: int) -> Iterator[Tuple[int, ...]]:
    """All tuples (d_1..d_n) of positive integers with product d."""
    if n == 0:
        if d == 1:
            yield ()
        return
    for first in range(1, d + 1):
        if d % first == 0:
            for rest in _ordered_factorizations(d // first, n - 1):
                yield (first,) + rest


def enumerate_finite_index_subgroups(group: FgAbelianGroup,
                                     max_index: int) -> Iterator[Subgroup]:
    """Every subgroup of index <= max_index, exactly once.

    Order: nondecreasing index, ties broken lexicographically by the
    canonical basis matrix.  This order is part of the contract; the
    verified searches elsewhere rely on it being total and stable.
    """
    if max_index < 1:
        raise ValueError("max_index must be >= 1")
    n = group.rank
    rel = group.relation_rows()
    if n == 0:
        yield Subgroup(group, ())
        return
    for d in range(1, max_index + 1):
        batch = []
        for diag in _ordered_factorizations(d, n):
            # fill entries above the diagonal, reduced mod the pivot below
            free_positions = [(i, j) for j in range(n) for i in range(j)]
            ranges = [range(diag[j]) for (_, j) in free_positions]
            for fill in itertools.product(*ranges):
                mat = [[0] * n for _ in range(n)]
                for i in range(n):
                    mat[i][i] = diag[i]
                for (pos, val) in zip(free_positions, fill):
                    mat[pos[0]][pos[1]] = val
                rows = [tuple(r) for r in mat]
                h, pivots = rows, list(range(n))
                ok = all(solve_in_lattice(h, pivots, rv) is not None
                         for rv in rel)
                if ok:
                    batch.append(Subgroup(group, tuple(rows), tuple(pivots)))
        batch.sort(key=lambda s: s.basis)
        yield from batch


# ---------------------------------------------------------------------------
# Kernels of permutation representations
# ---------------------------------------------------------------------------

def kernel_of_permutation_images(group: FgAbelianGroup,
                                 images: Sequence[Perm]) -> Subgroup:
    """Kernel of the homomorphism sending generator i to images[i].

    The images must commute pairwise and satisfy the torsion relators;
    otherwise they do not define a homomorphism and a RelatorViolation
    is raised.  The kernel lattice is generated by the Schreier-style
    differences collected while walking the (finite) image group.
    """
    n = group.rank
    if len(images) != n:
        raise DimensionMismatch(f"expected {n} generator images, got {len(images)}")
    if not images:
        return whole_group(group)
    domain = list(images[0].keys())
    for img in images:
        if not is_perm(img, domain):
            raise RelatorViolation("image is not a permutation of the common set")
    for i in range(n):
        for j in range(i + 1, n):
            if not commute(images[i], images[j]):
                raise RelatorViolation(f"images {i} and {j} do not commute")
    for j, d in enumerate(group.torsion):
        o = perm_order(images[group.free_rank + j])
        if d % o:
            raise RelatorViolation(
                f"torsion generator {j} image has order {o}, not dividing {d}")
    ident = identity_perm(domain)
    seen = {perm_key(ident): (0,) * n}
    frontier = [(ident, (0,) * n)]
    diffs: List[Row] = []
    while frontier:
        nxt = []
        for p, word in frontier:
            for i, g in enumerate(images):
                q = compose(p, g)
                w = tuple(word[j] + (1 if j == i else 0) for j in range(n))
                k = perm_key(q)
                if k in seen:
                    prev = seen[k]
                    diffs.append(tuple(a - b for a, b in zip(w, prev)))
                else:
                    seen[k] = w
                    nxt.append((q, w))
        frontier = nxt
    return Subgroup.from_rows(group, diffs)


def preimage_subgroup(q: QuotientGroup, sub: Subgroup) -> Subgroup:
    """Pull a subgroup of the quotient back along ``q.project``."""
    if sub.parent != q.group:
        raise DimensionMismatch("subgroup lives in a different quotient")
    rows = list(q.subgroup.basis)
    for row in sub.basis:
        rows.append(q.section(q.group.element(row)).coords)
    return Subgroup.from_rows(q.parent, rows)


# convenience constructors ---------------------------------------------------

def Z(rank: int = 1) -> FgAbelianGroup:
    return FgAbelianGroup(rank, ())


def Zmod(*moduli: int) -> FgAbelianGroup:
    return FgAbelianGroup.from_moduli(0, moduli)
