"""Vertices, edges, and chambers of the affine SL3 building over K.

A vertex is a homothety class of full-rank O-lattices in K^3, stored in a
canonical upper-triangular column Hermite form: diagonal pi^d1, pi^d2,
pi^d3, entry (i,j) for i<j reduced mod pi^di, and at least one entry a
unit (the homothety normalization).  The stored data is precision-free
integer data, so vertices hash and sort the same way at every working
precision.

Colors are determinant valuations mod 3, anchored at v0 = [O^3] -> 0.
Two classes are joined by an edge when representatives satisfy
L1 >= L2 >= pi*L1 with both quotients nonzero; a chamber is a triple
admitting a chain with one-dimensional successive quotients.
"""

from __future__ import annotations

from dataclasses import dataclass

from .residue import (
    Elem,
    PrecisionError,
    Ring,
    ScaledMatrix,
    mat_det_entries,
    mat_inv,
    mat_mul,
)

__all__ = [
    "Chamber",
    "Edge",
    "Vertex",
    "act_on_chamber",
    "act_on_vertex",
    "canonicalize_columns",
    "canonicalize_lattice",
    "chamber_from_vertices",
    "chambers_through_edge",
    "edge_label",
    "edges_of_chamber",
    "is_edge",
    "lift_vertex",
    "make_edge",
    "matrix_columns",
    "reduce_mod_pi_power",
    "rel_position",
    "standard_chamber",
    "standard_vertex",
    "vert_distance",
    "vertex_color",
]


@dataclass(frozen=True, order=True)
class Vertex:
    """Canonical Hermite data of a lattice class: pivot valuations and
    reduced off-diagonal residues ((0,1), (0,2), (1,2))."""

    d: tuple[int, int, int]
    off: tuple[Elem, Elem, Elem]

    @property
    def color(self) -> int:
        return sum(self.d) % 3


@dataclass(frozen=True, order=True)
class Edge:
    """Oriented edge in canonical orientation: target color = origin color + 1
    mod 3 among the two colors present."""

    origin: Vertex
    target: Vertex


@dataclass(frozen=True, order=True)
class Chamber:
    """Three pairwise-adjacent vertices; verts[c] has color c."""

    verts: tuple[Vertex, Vertex, Vertex]


def vertex_color(v: Vertex) -> int:
    return v.color


_ZERO3 = ((0, 0), (0, 0), (0, 0))


def standard_vertex(i: int) -> Vertex:
    """v0 = [O^3], v1 = [<e1,e2,pi e3>], v2 = [<e1,pi e2,pi e3>]."""
    return (
        Vertex((0, 0, 0), _ZERO3),
        Vertex((0, 0, 1), _ZERO3),
        Vertex((0, 1, 1), _ZERO3),
    )[i]


def standard_chamber() -> Chamber:
    return Chamber((standard_vertex(0), standard_vertex(1), standard_vertex(2)))


def reduce_mod_pi_power(ring: Ring, x: Elem, d: int) -> Elem:
    """Canonical residue of x modulo pi^d."""
    if d <= 0:
        return (0, 0)
    if ring.e == 1:
        return (x[0] % ring.p**d, 0)
    return (x[0] % ring.p ** ((d + 1) // 2), x[1] % ring.p ** (d // 2))


def lift_vertex(ring: Ring, v: Vertex) -> ScaledMatrix:
    """Upper-triangular representative of the class at working precision."""
    z = ring.zero()
    d0, d1, d2 = v.d
    o01, o02, o12 = v.off
    rows = (
        (ring.pi_power(d0), o01, o02),
        (z, ring.pi_power(d1), o12),
        (z, z, ring.pi_power(d2)),
    )
    return ScaledMatrix(rows)


def matrix_columns(m: ScaledMatrix):
    r = m.rows
    return [(r[0][j], r[1][j], r[2][j]) for j in range(3)]


def canonicalize_columns(ring: Ring, cols) -> Vertex:
    """Canonical Hermite form of the lattice spanned by the given columns.

    Accepts three or more columns (extra columns must lie in the span);
    any pi-power scaling of the input gives the same class.
    """
    work = [list(c) for c in cols]
    M = ring.M
    active = list(range(len(work)))
    pivots = {}
    d = [0, 0, 0]
    for r in (2, 1, 0):
        best = -1
        bestv = M
        for idx in active:
            v = ring.val(work[idx][r])
            if v < bestv:
                bestv = v
                best = idx
        if best < 0 or bestv >= M:
            raise PrecisionError("rank collapse at working precision")
        piv = work[best]
        u = ring.shift_down(piv[r], bestv)
        uinv = ring.inv(u)
        piv[:] = [ring.mul(uinv, x) for x in piv]
        # piv[r] is now exactly pi^bestv; eliminate the rest of row r.
        for idx in active:
            if idx == best:
                continue
            c = work[idx]
            f = ring.shift_down(c[r], bestv)
            c[:] = [ring.sub(c[k], ring.mul(f, piv[k])) for k in range(3)]
        active.remove(best)
        pivots[r] = piv
        d[r] = bestv
    for idx in active:
        if any(x != (0, 0) for x in work[idx]):
            raise PrecisionError("dependent column fails to vanish")
    c0, c1, c2 = pivots[0], pivots[1], pivots[2]

    def _reduce(col, row, dd, against):
        rem = reduce_mod_pi_power(ring, col[row], dd)
        f = ring.shift_down(ring.sub(col[row], rem), dd)
        col[:] = [ring.sub(col[k], ring.mul(f, against[k])) for k in range(3)]
        col[row] = rem

    _reduce(c2, 1, d[1], c1)
    _reduce(c1, 0, d[0], c0)
    _reduce(c2, 0, d[0], c0)
    off = [c1[0], c2[0], c2[1]]
    t = min(d[0], d[1], d[2], *(ring.val(x) for x in off))
    if t:
        d = [x - t for x in d]
        off = [ring.shift_down(x, t) for x in off]
    off = [
        reduce_mod_pi_power(ring, off[0], d[0]),
        reduce_mod_pi_power(ring, off[1], d[0]),
        reduce_mod_pi_power(ring, off[2], d[1]),
    ]
    return Vertex((d[0], d[1], d[2]), (off[0], off[1], off[2]))


def canonicalize_lattice(ring: Ring, basis: ScaledMatrix) -> Vertex:
    """Class of the lattice spanned by the columns of basis (denominator
    ignored: homothety invariance)."""
    return canonicalize_columns(ring, matrix_columns(basis))


def _two_by_two_min_val(ring: Ring, rows) -> int:
    best = ring.M
    for i0 in range(3):
        for i1 in range(i0 + 1, 3):
            for j0 in range(3):
                for j1 in range(j0 + 1, 3):
                    m = ring.sub(
                        ring.mul(rows[i0][j0], rows[i1][j1]),
                        ring.mul(rows[i0][j1], rows[i1][j0]),
                    )
                    v = ring.val(m)
                    if v < best:
                        best = v
    return best


def rel_position(ring: Ring, u: Vertex, w: Vertex) -> tuple[int, int, int]:
    """Normalized elementary-divisor exponents (0, r2, r3) of the pair."""
    U = lift_vertex(ring, u)
    W = lift_vertex(ring, w)
    uinv, _ = mat_inv(ring, U)
    B = mat_mul(ring, uinv, W)
    rows = B.rows
    t1 = min(ring.val(x) for row in rows for x in row)
    t2 = _two_by_two_min_val(ring, rows)
    t3 = ring.val(mat_det_entries(ring, rows))
    if t3 >= ring.M:
        raise PrecisionError("relative position exceeds working precision")
    r2 = t2 - 2 * t1
    r3 = t3 - t2 - t1
    assert 0 <= r2 <= r3
    return (0, r2, r3)


def vert_distance(ring: Ring, u: Vertex, w: Vertex) -> int:
    """Distance in the 1-skeleton: the largest normalized divisor exponent."""
    return rel_position(ring, u, w)[2]


def is_edge(ring: Ring, u: Vertex, w: Vertex) -> bool:
    if u == w:
        raise ValueError("is_edge requires distinct classes")
    return rel_position(ring, u, w)[2] == 1


def make_edge(u: Vertex, w: Vertex) -> Edge:
    cu, cw = u.color, w.color
    if cu == cw:
        raise ValueError("edge endpoints must have distinct colors")
    if (cu + 1) % 3 == cw:
        return Edge(u, w)
    return Edge(w, u)


def edge_label(e: Edge) -> int:
    """Panel label: the color missing from the edge."""
    return (3 - e.origin.color - e.target.color) % 3


def chamber_from_vertices(verts) -> Chamber:
    by_color = sorted(verts, key=lambda v: v.color)
    colors = tuple(v.color for v in by_color)
    if colors != (0, 1, 2):
        raise ValueError("chamber needs one vertex of each color")
    return Chamber(tuple(by_color))


def edges_of_chamber(ch: Chamber) -> tuple[Edge, Edge, Edge]:
    a, b, c = ch.verts
    return (make_edge(a, b), make_edge(b, c), make_edge(c, a))


def _fp_echelon(vecs, p: int):
    """Echelon basis of the span of 3-vectors over F_p, pivot-ordered."""
    basis = []
    for v in vecs:
        v = list(x % p for x in v)
        for b in basis:
            lead = next(i for i in range(3) if b[i])
            if v[lead]:
                f = (v[lead] * pow(b[lead], -1, p)) % p
                v = [(x - f * y) % p for x, y in zip(v, b)]
        if any(v):
            basis.append(v)
    basis.sort(key=lambda b: next(i for i in range(3) if b[i]))
    return [tuple(b) for b in basis]


def _mat_vec(ring: Ring, m: ScaledMatrix, vec) -> tuple[Elem, Elem, Elem]:
    out = []
    for i in range(3):
        acc = ring.zero()
        for k in range(3):
            acc = ring.add(acc, ring.mul(m.rows[i][k], vec[k]))
        out.append(acc)
    return tuple(out)


def chambers_through_edge(ring: Ring, u: Vertex, w: Vertex) -> list[Chamber]:
    """The p+1 chambers containing the edge {u, w}, deterministically ordered.

    Third vertices are lifted from the p+1 lines of the 2-dimensional
    F_p-quotient in the chain L_u >= L_w >= pi*L_u.
    """
    p = ring.p
    U = lift_vertex(ring, u)
    uinv, _ = mat_inv(ring, U)
    B = mat_mul(ring, uinv, lift_vertex(ring, w))
    E = B.rows
    t1 = min(ring.val(x) for row in E for x in row)
    if t1:
        E = tuple(tuple(ring.shift_down(x, t1) for x in row) for row in E)
    ebar = [tuple(x[0] % p for x in row) for row in E]
    cols_ebar = [tuple(ebar[i][j] for i in range(3)) for j in range(3)]
    col_basis = _fp_echelon(cols_ebar, p)
    rank = len(col_basis)

    def _line_gens(b1, b2):
        yield b2
        for c in range(p):
            yield tuple((x + c * y) % p for x, y in zip(b1, b2))

    third = []
    if rank == 2:
        # Shape (0,0,1): intermediate lattices pi*L_u < N < L_w, lines in
        # the column space of E mod pi.
        piU = [tuple(ring.shift_up(x, 1) for x in col) for col in matrix_columns(U)]
        for gbar in _line_gens(col_basis[0], col_basis[1]):
            x = _mat_vec(ring, U, tuple(ring.from_int(c) for c in gbar))
            third.append(canonicalize_columns(ring, piU + [x]))
    elif rank == 1:
        # Shape (0,1,1): intermediate lattices L_w < N < L_u, lines in the
        # quotient F_p^3 / im(E mod pi).
        lead = next(i for i in range(3) if col_basis[0][i])
        comp = [tuple(1 if k == i else 0 for k in range(3)) for i in range(3) if i != lead]
        WE = mat_mul(ring, U, ScaledMatrix(E, 0))
        wcols = matrix_columns(WE)
        for gbar in _line_gens(comp[0], comp[1]):
            x = _mat_vec(ring, U, tuple(ring.from_int(c) for c in gbar))
            third.append(canonicalize_columns(ring, wcols + [x]))
    else:
        raise ValueError("not an edge")
    chambers = sorted(set(chamber_from_vertices((u, w, t)) for t in third))
    assert len(chambers) == p + 1
    return chambers


def act_on_vertex(ring: Ring, g: ScaledMatrix, v: Vertex) -> Vertex:
    return canonicalize_lattice(ring, mat_mul(ring, g, lift_vertex(ring, v)))


def act_on_chamber(ring: Ring, g: ScaledMatrix, ch: Chamber) -> Chamber:
    return chamber_from_vertices(tuple(act_on_vertex(ring, g, v) for v in ch.verts))
