"""Small permutation toolkit.

Permutations are plain dicts mapping every point of a finite domain to
its image.  Composition is written left-to-right on points:
``compose(p, q)`` sends ``x`` to ``q[p[x]]``.
"""

from __future__ import annotations

from math import lcm
from typing import Dict, Hashable, Iterable

Point = Hashable
Perm = Dict[Point, Point]


def point_key(p):
    """Total order on mixed int/str point identifiers."""
    if isinstance(p, bool):
        raise TypeError("booleans are not valid points")
    if isinstance(p, int):
        return (0, p, "")
    if isinstance(p, str):
        return (1, 0, p)
    raise TypeError(f"unsupported point identifier {p!r}")


def identity_perm(domain: Iterable[Point]) -> Perm:
    return {x: x for x in domain}


def is_perm(p: Perm, domain) -> bool:
    dom = set(domain)
    return set(p) == dom and set(p.values()) == dom


def compose(p: Perm, q: Perm) -> Perm:
    """x -> q[p[x]]."""
    return {x: q[y] for x, y in p.items()}


def inverse(p: Perm) -> Perm:
    return {y: x for x, y in p.items()}


def perm_power(p: Perm, e: int) -> Perm:
    if e < 0:
        return perm_power(inverse(p), -e)
    out = identity_perm(p)
    for _ in range(e):
        out = compose(out, p)
    return out


def perm_key(p: Perm):
    """Hashable canonical form."""
    return tuple(sorted(p.items(), key=lambda kv: point_key(kv[0])))


def cycles(p: Perm):
    seen = set()
    out = []
    for start in sorted(p, key=point_key):
        if start in seen:
            continue
        cyc = [start]
        seen.add(start)
        x = p[start]
        while x != start:
            cyc.append(x)
            seen.add(x)
            x = p[x]
        out.append(tuple(cyc))
    return out


def cycle_type(p: Perm):
    return tuple(sorted(len(c) for c in cycles(p)))


def perm_order(p: Perm) -> int:
    if not p:
        return 1
    return lcm(*(len(c) for c in cycles(p)))


def commute(p: Perm, q: Perm) -> bool:
    return compose(p, q) == compose(q, p)


def generated_group(gens: Iterable[Perm], domain) -> list[Perm]:
    """All elements of the permutation group generated by ``gens``.

    BFS closure; the domain is finite so this terminates.  Order of the
    result is deterministic (BFS layers, generators in given order).
    """
    ident = identity_perm(domain)
    gens = list(gens)
    seen = {perm_key(ident)}
    out = [ident]
    frontier = [ident]
    while frontier:
        nxt = []
        for p in frontier:
            for g in gens:
                q = compose(p, g)
                k = perm_key(q)
                if k not in seen:
                    seen.add(k)
                    out.append(q)
                    nxt.append(q)
        frontier = nxt
    return out
