"""The affine Weyl group of the building, as affine permutations.

An element is stored by its window (w(1), w(2), w(3)): the restriction of
a bijection w of Z satisfying w(i+3) = w(i)+3 and sum(w(i)-i) = 0.  The
three generators s0, s1, s2 are the affine transpositions; s_i labels the
chamber adjacency whose shared edge omits the vertex color i.

>>> weyl_mul(gen(0), gen(0)) == IDENTITY
True
>>> weyl_len(weyl_from_gallery((1, 2, 1, 0)))
4
"""

from __future__ import annotations

WeylElt = tuple[int, int, int]

IDENTITY: WeylElt = (1, 2, 3)

_GENS: dict[int, WeylElt] = {
    0: (0, 2, 4),
    1: (2, 1, 3),
    2: (1, 3, 2),
}

__all__ = [
    "IDENTITY",
    "WeylElt",
    "gen",
    "weyl_apply",
    "weyl_from_gallery",
    "weyl_inv",
    "weyl_len",
    "weyl_mul",
]


def gen(i: int) -> WeylElt:
    return _GENS[i]


def weyl_apply(w: WeylElt, i: int) -> int:
    """Value of the affine permutation at any integer."""
    q, r = divmod(i - 1, 3)
    return w[r] + 3 * q


def weyl_mul(a: WeylElt, b: WeylElt) -> WeylElt:
    """Composition: (a*b)(i) = a(b(i))."""
    return (weyl_apply(a, b[0]), weyl_apply(a, b[1]), weyl_apply(a, b[2]))


def weyl_inv(w: WeylElt) -> WeylElt:
    out = [0, 0, 0]
    for r in range(3):
        q, rr = divmod(w[r] - 1, 3)
        out[rr] = (r + 1) - 3 * q
    return (out[0], out[1], out[2])


def weyl_len(w: WeylElt) -> int:
    """Coxeter length = number of affine inversions (i < j, w(i) > w(j))."""
    spread = max(w) - min(w)
    bound = 3 * (spread // 3 + 2)
    count = 0
    for i in (1, 2, 3):
        wi = weyl_apply(w, i)
        for j in range(i + 1, i + bound + 1):
            if wi > weyl_apply(w, j):
                count += 1
    return count


def weyl_from_gallery(labels) -> WeylElt:
    w = IDENTITY
    for i in labels:
        w = weyl_mul(w, _GENS[i])
    return w
