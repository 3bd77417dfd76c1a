"""Valuation-shaped subgroups of SL3 and their actions on a region.

A subgroup here is a ValuationShape (entrywise lower bounds on the
valuations of g - 1, plus det g = 1) conjugated by an explicit matrix.
The shapes of the standard facet fixators are pinned for the base
chamber and propagated along the apartment by monomial conjugation, so
membership is always an exact valuation test at working precision.

Pro-p groups are handled through finite generator sets at a truncation
level M: elementary and diagonal one-parameter elements at every
admissible level below M.  Orbit enumeration is plain BFS over region
objects; stabilizers come from Schreier words on the orbit edges, and
every action is recomputed in a second, coarser ring so that truncation
artifacts raise instead of corrupting an orbit.

verify_group_facts runs the group-theoretic claims this package relies
on (quotient orders, sphere transitivity, summit-pair generation,
distance fixing, and the rational-matrix refinements that need a
ramified ground field) and returns a StructureReport.
"""

from __future__ import annotations

import collections
import random
from dataclasses import dataclass

from .residue import (
    PrecisionError,
    Ring,
    ScaledMatrix,
    mat_adj,
    mat_det_entries,
    mat_diag,
    mat_elementary,
    mat_eq,
    mat_identity,
    mat_inv,
    mat_mul,
    mat_normalize,
    mat_scale_entries,
    mat_truncate,
)
from .lattices import (
    Chamber,
    Edge,
    Vertex,
    act_on_chamber,
    act_on_vertex,
    canonicalize_columns,
    chamber_from_vertices,
    edge_label,
    make_edge,
    vert_distance,
)
from .atlas import (
    Region,
    StructureReport,
    _base_gate,
    chamber_in_x,
    classify_summits,
    spheres_at,
    vertex_in_x,
)

__all__ = [
    "GeneratorSet",
    "OrbitResult",
    "SubgroupHandle",
    "ValuationShape",
    "congruence_shape",
    "facet_subgroup",
    "generators",
    "is_rational",
    "orbit",
    "orbit_generators",
    "principal_congruence",
    "rational_generators",
    "shape_membership",
    "special_subgroups",
    "standard_handle",
    "summit_configurations",
    "verify_group_facts",
    "SHAPE_I",
    "SHAPE_T",
    "SHAPE_S",
]


# -- shapes ------------------------------------------------------------

OffGrid = tuple[tuple[int, int, int], tuple[int, int, int], tuple[int, int, int]]


@dataclass(frozen=True)
class ValuationShape:
    """Lower bounds for a matrix group: v(g_ij) >= off[i][j] off the
    diagonal, v(g_ii - 1) >= diag, det g = 1.

    Diagonal positions of `off` are kept at 0 and never consulted.
    """

    off: OffGrid
    diag: int

    def conj_diag(self, t: tuple[int, int, int]) -> "ValuationShape":
        """Shape of d g d^-1 for d = diag(pi^t1, pi^t2, pi^t3)."""
        new = tuple(
            tuple(
                0 if i == j else self.off[i][j] + t[i] - t[j]
                for j in range(3)
            )
            for i in range(3)
        )
        return ValuationShape(new, self.diag)

    def rotate(self) -> "ValuationShape":
        """Shape of r g r^-1 for the order-three monomial matrix r with
        r e1 = pi e3, r e2 = e1, r e3 = e2 (det pi; advances colors)."""
        new = tuple(
            tuple(
                0
                if i == j
                else self.off[(i + 1) % 3][(j + 1) % 3]
                + (1 if i == 2 else 0)
                - (1 if j == 2 else 0)
                for j in range(3)
            )
            for i in range(3)
        )
        return ValuationShape(new, self.diag)

    def join(self, other: "ValuationShape") -> "ValuationShape":
        """Entrywise max: the shape of the intersection group."""
        new = tuple(
            tuple(max(self.off[i][j], other.off[i][j]) for j in range(3))
            for i in range(3)
        )
        return ValuationShape(new, max(self.diag, other.diag))


def _grid(a, b, c) -> OffGrid:
    return (tuple(a), tuple(b), tuple(c))


def congruence_shape(m: int) -> ValuationShape:
    """The m-th principal congruence kernel K_m."""
    if m < 0:
        raise ValueError("congruence level must be non-negative")
    return ValuationShape(_grid((0, m, m), (m, 0, m), (m, m, 0)), m)


# Pro-p fixators of the faces of the base chamber.  The two displayed
# panel shapes and the Iwahori shape are pinned; the rest follow by
# conjugating with the color-advancing monomial matrix, which permutes
# the faces the same way it permutes colors.
SHAPE_I = ValuationShape(_grid((0, 0, 0), (1, 0, 0), (1, 1, 0)), 1)
_I_S1 = ValuationShape(_grid((0, 0, 0), (1, 0, 1), (1, 1, 0)), 1)
_I_S2 = ValuationShape(_grid((0, 1, 0), (1, 0, 0), (1, 1, 0)), 1)
_I_S0 = _I_S2.rotate()
assert _I_S0 == ValuationShape(_grid((0, 0, 0), (1, 0, 0), (2, 1, 0)), 1)
assert _I_S0.rotate() == _I_S1 and _I_S1.rotate() == _I_S2

_I_V0 = congruence_shape(1)
_I_V1 = _I_V0.rotate()
_I_V2 = _I_V1.rotate()
assert _I_V2.rotate() == _I_V0

# Full stabilizers (J-shapes): unit diagonal is allowed, and vertex
# stabilizers other than the base one contain entries of valuation -1.
_J_V0 = ValuationShape(_grid((0, 0, 0), (0, 0, 0), (0, 0, 0)), 0)
_J_V1 = _J_V0.rotate()
_J_V2 = _J_V1.rotate()
_J_S0 = _J_V1.join(_J_V2)
_J_S1 = _J_V2.join(_J_V0)
_J_S2 = _J_V0.join(_J_V1)
_J_C = _J_S0.join(_J_V0)
assert _J_C == ValuationShape(_grid((0, 0, 0), (1, 0, 0), (1, 1, 0)), 0)

_EDGE_SHAPE_I = {0: _I_S0, 1: _I_S1, 2: _I_S2}
_VERTEX_SHAPE_I = {0: _I_V0, 1: _I_V1, 2: _I_V2}
_EDGE_SHAPE_J = {0: _J_S0, 1: _J_S1, 2: _J_S2}
_VERTEX_SHAPE_J = {0: _J_V0, 1: _J_V1, 2: _J_V2}

# Order-p overgroups of K_1 inside the two panel fixators: T fixes the
# base summit chamber on the u-side sphere, S its partner on the w-side.
SHAPE_T = ValuationShape(_grid((0, 1, 1), (1, 0, 0), (1, 1, 0)), 1)
SHAPE_S = ValuationShape(_grid((0, 0, 1), (1, 0, 1), (1, 1, 0)), 1)
assert SHAPE_T.join(SHAPE_S) == congruence_shape(1)


# -- handles and membership --------------------------------------------


@dataclass(frozen=True)
class SubgroupHandle:
    """A shape conjugated into place: the group conj * (shape) * conj^-1."""

    label: str
    base: ValuationShape
    conj: ScaledMatrix
    conj_inv: ScaledMatrix


def standard_handle(ring: Ring, label: str, sh: ValuationShape) -> SubgroupHandle:
    ident = mat_identity(ring)
    return SubgroupHandle(label, sh, ident, ident)


def principal_congruence(ring: Ring, m: int) -> SubgroupHandle:
    return standard_handle(ring, f"K{m}", congruence_shape(m))


def conjugate_handle(
    ring: Ring, label: str, sh: ValuationShape, conj: ScaledMatrix
) -> SubgroupHandle:
    inv, _ = mat_inv(ring, conj)
    return SubgroupHandle(label, sh, conj, inv)


def _det_matches(ring: Ring, rows, shift: int, eff: int) -> bool:
    if 3 * shift >= eff:
        raise PrecisionError("determinant not visible at trusted precision")
    gap = ring.sub(mat_det_entries(ring, rows), ring.pi_power(3 * shift))
    return ring.val(gap) >= eff


def _shape_test_shifted(
    ring: Ring, sh: ValuationShape, rows, shift: int, loss: int = 0
) -> bool:
    """Shape test of pi^-shift * rows, leaving the shift undivided.

    rows are trusted below pi^(M - loss); keeping the shift symbolic
    avoids smearing untrusted digits downward, and any bound that would
    reach into the untrusted range raises instead of guessing.
    """
    eff = ring.M - loss
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            need = sh.off[i][j] + shift
            if need <= 0:
                continue
            if need > eff:
                raise PrecisionError("valuation bound beyond trusted precision")
            if min(ring.val(rows[i][j]), eff) < need:
                return False
    need = sh.diag + shift
    if need > eff:
        raise PrecisionError("diagonal bound beyond trusted precision")
    pd = ring.pi_power(shift)
    for i in range(3):
        if min(ring.val(ring.sub(rows[i][i], pd)), eff) < need:
            return False
    return True


def _shape_test(ring: Ring, sh: ValuationShape, g: ScaledMatrix) -> bool:
    if not _det_matches(ring, g.rows, g.denom, ring.M - g.loss):
        return False
    return _shape_test_shifted(ring, sh, g.rows, g.denom, g.loss)


def _conj_parts(ring: Ring, conj: ScaledMatrix):
    """(val, unit inverse) of the determinant of the entry part."""
    det = mat_det_entries(ring, conj.rows)
    sv = ring.val(det)
    if sv >= ring.M - conj.loss:
        raise PrecisionError("conjugator determinant vanishes at trusted precision")
    u = ring.shift_down(det, sv)
    return sv, ring.inv(u)


def shape_membership(ring: Ring, h, g: ScaledMatrix) -> bool:
    """Exact membership test in a shape or a conjugated handle."""
    if isinstance(h, ValuationShape):
        return _shape_test(ring, h, g)
    ident_rows = mat_identity(ring).rows
    if h.conj.denom == 0 and h.conj.rows == ident_rows and h.conj.loss == 0:
        return _shape_test(ring, h.base, g)
    # Conjugate through the integral adjugate: with conj = pi^-dc C,
    # det C = pi^sv u, and g = pi^-dg G, the identity
    # conj^-1 g conj = pi^-(sv + dg) u^-1 adj(C) G C
    # never divides by pi, so no trusted digit is smeared.
    dg = g.denom
    if not _det_matches(ring, g.rows, dg, ring.M - g.loss):
        return False
    sv, uinv = _conj_parts(ring, h.conj)
    adj = ScaledMatrix(mat_adj(ring, h.conj.rows), 0, h.conj.loss)
    prod = mat_mul(
        ring,
        adj,
        mat_mul(
            ring,
            ScaledMatrix(g.rows, 0, g.loss),
            ScaledMatrix(h.conj.rows, 0, h.conj.loss),
        ),
    )
    assert prod.denom == 0
    if uinv != ring.one():
        prod = mat_scale_entries(ring, prod, uinv)
    return _shape_test_shifted(ring, h.base, prod.rows, sv + dg, prod.loss)


def is_rational(ring: Ring, g: ScaledMatrix) -> bool:
    """True when every entry lies in the unramified subfield."""
    if ring.e == 1:
        return True
    return all(x[1] == 0 for row in g.rows for x in row)


# -- facet fixators ----------------------------------------------------


def _normalize_facet(facet):
    tag, idx = facet
    tag = {"v": "vertex", "e": "edge", "c": "chamber"}.get(tag, tag)
    if tag not in ("vertex", "edge", "chamber"):
        raise ValueError(f"unknown facet tag {facet!r}")
    return tag, idx


def facet_subgroup(r: Region, facet, kind: str = "I") -> SubgroupHandle:
    """Fixator handle of a region facet.

    kind "I" gives the pro-p fixator, "J" the full stabilizer.  The
    handle conjugates the standard shape of the matching face of the
    base chamber by the transporter of the gate chamber (the earliest
    minimal-distance chamber containing the facet).
    """
    kind = kind.rstrip("_F")
    if kind not in ("I", "J"):
        raise ValueError(f"kind must be I or J, got {kind!r}")
    tag, idx = _normalize_facet(facet)
    ring = r.work
    if tag == "chamber":
        if not 0 <= idx < len(r.chambers):
            raise ValueError("chamber outside region")
        gate = idx
        sh = SHAPE_I if kind == "I" else _J_C
    elif tag == "vertex":
        if not 0 <= idx < len(r.vertices):
            raise ValueError("vertex outside region")
        gate = min(r.vertex_chambers[idx], key=lambda c: (r.dist[c], c))
        color = r.vertices[idx].color
        sh = (_VERTEX_SHAPE_I if kind == "I" else _VERTEX_SHAPE_J)[color]
    else:
        if not 0 <= idx < len(r.edges):
            raise ValueError("edge outside region")
        gate = min(r.chambers_through(idx), key=lambda c: (r.dist[c], c))
        lab = edge_label(r.edges[idx])
        sh = (_EDGE_SHAPE_I if kind == "I" else _EDGE_SHAPE_J)[lab]
    label = f"{kind}[{tag} {idx}]"
    if gate == 0:
        return standard_handle(ring, label, sh)
    conj = r.transporter(gate)
    return SubgroupHandle(label, sh, conj, r.transporter_inv(gate))


# -- generator sets ----------------------------------------------------


@dataclass(frozen=True)
class GeneratorSet:
    handle: SubgroupHandle
    M: int
    elements: tuple[ScaledMatrix, ...]
    rational: bool = False


def _elementary_level(ring: Ring, i: int, j: int, t: int) -> ScaledMatrix:
    if t >= 0:
        return mat_elementary(ring, i, j, ring.pi_power(t))
    s = -t
    rows = [
        [ring.pi_power(s) if a == b else ring.zero() for b in range(3)]
        for a in range(3)
    ]
    rows[i][j] = ring.one()
    return ScaledMatrix(tuple(tuple(row) for row in rows), s)


def _unit_diag_pair(ring: Ring, u) -> list[ScaledMatrix]:
    ui = ring.inv(u)
    return [
        mat_diag(ring, (u, ui, ring.one())),
        mat_diag(ring, (ring.one(), u, ui)),
    ]


def _shape_elements(ring: Ring, sh: ValuationShape, M: int, even_only: bool):
    els = []
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            for t in range(sh.off[i][j], M):
                if even_only and t % 2:
                    continue
                els.append(_elementary_level(ring, i, j, t))
    lo = sh.diag
    if lo == 0:
        # unit-diagonal groups: residue torus representatives, then the
        # principal units; 1 + pi^0 may fail to be a unit, so level 0 is
        # covered by the residue representatives instead.
        for c in range(2, ring.p):
            els.extend(_unit_diag_pair(ring, ring.from_int(c)))
        lo = 1
    for t in range(lo, M):
        if even_only and t % 2:
            continue
        els.extend(_unit_diag_pair(ring, ring.add(ring.one(), ring.pi_power(t))))
    return els


def _conjugated_element(
    ring: Ring, conj: ScaledMatrix, g: ScaledMatrix
) -> ScaledMatrix:
    """conj g conj^-1 computed as pi^-(sv + dg) u^-1 C G adj(C), exactly.

    Here pi^sv u = det of the entry part of conj, so the formula holds for
    any invertible conjugator, not only ones with unit determinant.
    """
    sv, uinv = _conj_parts(ring, conj)
    adj = ScaledMatrix(mat_adj(ring, conj.rows), 0, conj.loss)
    prod = mat_mul(
        ring,
        ScaledMatrix(conj.rows, 0, conj.loss),
        mat_mul(ring, ScaledMatrix(g.rows, 0, g.loss), adj),
    )
    assert prod.denom == 0
    if uinv != ring.one():
        prod = mat_scale_entries(ring, prod, uinv)
    return mat_normalize(
        ring, ScaledMatrix(prod.rows, sv + g.denom, prod.loss)
    )


def _wrap_elements(
    ring: Ring, h: SubgroupHandle, els, M: int, rational: bool = False
) -> GeneratorSet:
    ident = mat_eq(ring, h.conj, mat_identity(ring))
    out = []
    for g in els:
        if not ident:
            g = _conjugated_element(ring, h.conj, g)
        assert shape_membership(ring, h, g)
        out.append(g)
    return GeneratorSet(h, M, tuple(out), rational=rational)


def _build_generators(
    ring: Ring, h: SubgroupHandle, M: int, even_only: bool
) -> GeneratorSet:
    if M < 1:
        raise ValueError("generator precision must be at least 1")
    els = _shape_elements(ring, h.base, M, even_only)
    return _wrap_elements(ring, h, els, M, rational=even_only and ring.e == 2)


def generators(ring: Ring, h: SubgroupHandle, M: int) -> GeneratorSet:
    """One-parameter elements of the handle at every level below M."""
    return _build_generators(ring, h, M, even_only=False)


def rational_generators(ring: Ring, h: SubgroupHandle, M: int) -> GeneratorSet:
    """The sub-family with entries in the unramified subfield.

    Only meaningful for handles whose conjugator is itself rational.
    For an unramified ground ring this is generators() verbatim.
    """
    if ring.e == 1:
        return generators(ring, h, M)
    if not is_rational(ring, h.conj):
        raise ValueError("handle conjugator is not rational")
    gs = _build_generators(ring, h, M, even_only=True)
    assert all(is_rational(ring, g) for g in gs.elements)
    return gs


def orbit_generators(ring: Ring, h: SubgroupHandle) -> GeneratorSet:
    """Minimal topological generator family of the handle.

    One elementary level per off-diagonal position (two when ramified)
    plus the matching diagonal levels; integer powers reach every deeper
    level, so finite orbit closures under this family agree with
    closures under the whole group.  Much smaller than generators() at
    comparable depth, which matters for per-facet orbit sweeps.
    """
    sh = h.base
    els = []
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            for t in range(sh.off[i][j], sh.off[i][j] + ring.e):
                els.append(_elementary_level(ring, i, j, t))
    lo = sh.diag
    if lo == 0:
        for c in range(2, ring.p):
            els.extend(_unit_diag_pair(ring, ring.from_int(c)))
        lo = 1
    for t in range(lo, lo + ring.e):
        els.extend(_unit_diag_pair(ring, ring.add(ring.one(), ring.pi_power(t))))
    M = max(max(x for row in sh.off for x in row), lo) + ring.e
    return _wrap_elements(ring, h, els, M)


# -- orbits ------------------------------------------------------------


def _act_object(ring: Ring, g: ScaledMatrix, obj, r: Region):
    """Image of a region object, or None when it leaves the region."""
    if isinstance(obj, Vertex):
        w = act_on_vertex(ring, g, obj)
        return w if r.vertex_ids.get(w) is not None else None
    if isinstance(obj, Edge):
        a = act_on_vertex(ring, g, obj.origin)
        b = act_on_vertex(ring, g, obj.target)
        e = make_edge(a, b)
        return e if r.edge_ids.get(e) is not None else None
    if isinstance(obj, Chamber):
        c = act_on_chamber(ring, g, obj)
        return c if r.chamber_ids.get(c) is not None else None
    if isinstance(obj, tuple):
        out = []
        for part in obj:
            img = _act_object(ring, g, part, r)
            if img is None:
                return None
            out.append(img)
        return tuple(out)
    raise TypeError(f"cannot act on {type(obj).__name__}")


@dataclass
class OrbitResult:
    """BFS orbit with Schreier data.

    words[k] lists generator indices applied left to right after the
    seed: elts[k] = gens[words[k][-1]] * ... * gens[words[k][0]].
    """

    seed: object
    members: tuple
    index: dict
    words: tuple
    elts: tuple
    edges: tuple
    escapes: tuple

    @property
    def escaped(self) -> bool:
        return bool(self.escapes)

    def transporter(self, member) -> ScaledMatrix:
        return self.elts[self.index[member]]

    def stabilizer_generators(self, ring: Ring, gens, cap: int | None = None):
        """Distinct non-identity Schreier generators of the seed stabilizer."""
        mats = gens.elements if isinstance(gens, GeneratorSet) else tuple(gens)
        ident = mat_identity(ring)
        seen = set()
        out = []
        for a, gi, b in self.edges:
            inv, _ = mat_inv(ring, self.elts[b])
            s = mat_mul(ring, inv, mat_mul(ring, mats[gi], self.elts[a]))
            key = (s.rows, s.denom)
            if key in seen or mat_eq(ring, s, ident):
                continue
            seen.add(key)
            out.append(s)
            if cap is not None and len(out) >= cap:
                break
        return out


def orbit(
    gens,
    seed,
    bound: Region,
    *,
    act=None,
    certify: bool | None = None,
    limit: int | None = None,
) -> OrbitResult:
    """Closure of the seed under the generators, restricted to the region.

    Images outside the region are recorded in `escapes` and BFS goes on
    inside; callers decide whether an escaped orbit is usable.  With
    certify on (the default for the built-in action), every action is
    recomputed with the generators truncated into a coarser ring and the
    two canonical images compared; disagreement raises PrecisionError.
    """
    r = bound
    ring = r.work
    if isinstance(gens, GeneratorSet):
        mats = gens.elements
        genM = gens.M
    else:
        mats = tuple(gens)
        genM = None
    if act is None:
        act = _act_object
    if certify is None:
        certify = genM is not None and act is _act_object
    small_ring = None
    small = None
    if certify:
        level = genM if genM is not None else 2
        cert_m = max(level + 2, r.ring.e * (r.n + 3))
        if cert_m < ring.M:
            small_ring = Ring(ring.p, ring.e, cert_m)
            small = [mat_truncate(ring, small_ring, g) for g in mats]

    members = [seed]
    index = {seed: 0}
    words = [()]
    elts = [mat_identity(ring)]
    edges = []
    escapes = []
    queue = collections.deque([0])
    while queue:
        pos = queue.popleft()
        obj = members[pos]
        for gi, g in enumerate(mats):
            img = act(ring, g, obj, r)
            if small_ring is not None:
                try:
                    img2 = act(small_ring, small[gi], obj, r)
                except PrecisionError:
                    img2 = None
                    if img is not None:
                        raise PrecisionError(
                            "action not determined at certification precision"
                        )
                if img is not None and img2 != img:
                    raise PrecisionError(
                        "action differs between working and certification rings"
                    )
            if img is None:
                escapes.append((pos, gi))
                continue
            to = index.get(img)
            if to is None:
                to = len(members)
                if limit is not None and to >= limit:
                    raise ValueError("orbit exceeded the requested limit")
                members.append(img)
                index[img] = to
                words.append(words[pos] + (gi,))
                elts.append(mat_mul(ring, g, elts[pos]))
                queue.append(to)
            edges.append((pos, gi, to))
    return OrbitResult(
        seed,
        tuple(members),
        index,
        tuple(words),
        tuple(elts),
        tuple(edges),
        tuple(escapes),
    )


# -- standard coordinates ----------------------------------------------


def color_shift(ring: Ring) -> ScaledMatrix:
    """The det-pi monomial matrix advancing colors: e1 -> pi e3,
    e2 -> e1, e3 -> e2.  Conjugation by it realizes ValuationShape.rotate."""
    z, o = ring.zero(), ring.one()
    return ScaledMatrix(((z, o, z), (z, z, o), (ring.pi_power(1), z, z)))


def _apartment_vertex(ring: Ring, ex) -> Vertex:
    cols = [
        tuple(ring.pi_power(ex[j]) if i == j else ring.zero() for i in range(3))
        for j in range(3)
    ]
    return canonicalize_columns(ring, cols)


class _Std:
    """Ids of the standard objects the verifier keeps referring to."""

    def __init__(self, r: Region):
        ring = r.work
        ex = {
            "v0": (0, 0, 0),
            "v1": (0, 0, 1),
            "v2": (0, 1, 1),
            "u1": (1, 0, 1),
            "w1": (0, 1, 0),
            "u11": (1, 0, 0),
            "w11": (1, 1, 0),
        }
        self.vert = {k: _apartment_vertex(ring, v) for k, v in ex.items()}
        self.vid = {k: r.vertex_ids[v] for k, v in self.vert.items()}

        def ch(*names):
            return r.chamber_ids[
                chamber_from_vertices([self.vert[x] for x in names])
            ]

        self.C = ch("v0", "v1", "v2")
        self.P1 = ch("v0", "v1", "u1")
        self.Q1 = ch("v0", "v2", "w1")
        self.P11 = ch("v0", "u1", "u11")
        self.Q11 = ch("v0", "w1", "w11")
        self.D111 = ch("v0", "u11", "w11")
        assert self.C == 0

        def ed(a, b):
            return r.edge_ids[make_edge(self.vert[a], self.vert[b])]

        self.s0 = ed("v1", "v2")
        self.s1 = ed("v0", "v2")
        self.s2 = ed("v0", "v1")
        self.e1 = ed("u1", "v1")
        self.d1 = ed("w1", "v2")
        self.h11 = ed("v0", "u11")
        self.e11 = ed("u1", "u11")


def _std(r: Region) -> _Std:
    cache = r.__dict__.get("_groups_std")
    if cache is None:
        cache = _Std(r)
        r.__dict__["_groups_std"] = cache
    return cache


def _iwahori(ring: Ring) -> SubgroupHandle:
    return standard_handle(ring, "I", SHAPE_I)


def _pair_orbit(r: Region) -> OrbitResult:
    """Orbit of the standard joined summit pair under the Iwahori group."""
    cache = r.__dict__.get("_groups_pair_orbit")
    if cache is None:
        std = _std(r)
        gens = generators(r.work, _iwahori(r.work), 2)
        seed = (r.chambers[std.P11], r.chambers[std.Q11])
        cache = orbit(gens, seed, r)
        r.__dict__["_groups_pair_orbit"] = cache
    return cache


# -- summit-chamber configurations -------------------------------------


@dataclass(frozen=True)
class SummitConfig:
    """One orientation of the two-layer picture over a peak.

    middles_e / middles_f are the region chambers meeting the summit at
    e_edge resp. f_edge; outer_e / outer_f the chambers two layers out
    that continue past them while still containing the peak.  pairs
    lists the (E, F) choices with E in outer_f, F in outer_e whose own
    peaks are joined by an edge.
    """

    peak_vid: int
    summit: int
    e_edge: int
    f_edge: int
    middles_e: tuple
    middles_f: tuple
    outer_e: tuple
    outer_f: tuple
    pairs: tuple


def _peak_of(r: Region, cid: int, layer: int) -> int:
    for v in r.chambers[cid].verts:
        vid = r.vertex_ids[v]
        if r.vertex_layer[vid] == layer:
            return vid
    raise AssertionError("chamber has no vertex at its own layer")


def _side_data(r: Region, vid: int, summit: int, eid: int):
    m = r.dist[summit]
    v = r.vertices[vid]
    middles = tuple(
        x for x in r.chambers_through(eid) if x != summit
    )
    outer = []
    for mid in middles:
        inner = None
        for e2 in r.chamber_edge_ids[mid]:
            if e2 == eid:
                continue
            edge = r.edges[e2]
            if v in (edge.origin, edge.target):
                inner = e2
        assert inner is not None
        for x in r.chambers_through(inner):
            if x != mid and r.dist[x] == m + 2:
                outer.append(x)
    return middles, tuple(outer)


def summit_configurations(r: Region, vid: int):
    """Both orientations of the summit configuration at a peak.

    Needs the peak at least three layers inside the region so that the
    joins between outer peaks are visible.
    """
    m = r.vertex_layer[vid]
    if m > r.n - 2:
        raise ValueError("peak too close to the region boundary")
    if m == 0:
        summit = 0
    else:
        recs = [rec for rec in classify_summits(r)[m] if rec.peak == vid]
        assert len(recs) == 1
        summit = recs[0].summit
    v = r.vertices[vid]
    at_peak = [
        eid
        for eid in r.chamber_edge_ids[summit]
        if v in (r.edges[eid].origin, r.edges[eid].target)
    ]
    assert len(at_peak) == 2
    sides = {eid: _side_data(r, vid, summit, eid) for eid in at_peak}
    out = []
    for e_edge, f_edge in (tuple(at_peak), tuple(reversed(at_peak))):
        mids_e, outer_e = sides[e_edge]
        mids_f, outer_f = sides[f_edge]
        pairs = []
        for E in outer_f:
            pe = _peak_of(r, E, m + 2)
            for F in outer_e:
                pf = _peak_of(r, F, m + 2)
                joined = make_edge(r.vertices[pe], r.vertices[pf])
                if r.edge_ids.get(joined) is not None:
                    pairs.append((E, F))
        out.append(
            SummitConfig(
                vid, summit, e_edge, f_edge, mids_e, mids_f,
                outer_e, outer_f, tuple(pairs),
            )
        )
    return tuple(out)


def special_subgroups(r: Region, vid: int, E: int, F: int):
    """The order-p overgroup pair (H_e, H_f) of I_v for a configuration.

    H_e is the part of the e_edge fixator fixing F; H_f the part of the
    f_edge fixator fixing E.  Both are returned as conjugates of the two
    standard summit-stabilizer shapes; membership tests stay exact.
    """
    hit = None
    for cfg in summit_configurations(r, vid):
        if (E, F) in cfg.pairs:
            hit = cfg
            break
    if hit is None:
        raise ValueError("not a valid summit configuration")
    ring = r.work
    rot = color_shift(ring)
    conj0 = r.transporter(hit.summit)
    for _ in range(r.vertices[vid].color):
        conj0 = mat_mul(ring, conj0, rot)
    conj0_inv, _ = mat_inv(ring, conj0)
    std = _std(r)
    img = _act_object(ring, conj0, r.edges[std.s2], r)
    img_eid = r.edge_ids[img]
    if img_eid == hit.e_edge:
        base_e, base_f = SHAPE_T, SHAPE_S
        tP, tQ = F, E
    elif img_eid == hit.f_edge:
        base_e, base_f = SHAPE_S, SHAPE_T
        tP, tQ = E, F
    else:
        raise AssertionError("frame does not land on the peak edges")
    XP = act_on_chamber(ring, conj0_inv, r.chambers[tP])
    XQ = act_on_chamber(ring, conj0_inv, r.chambers[tQ])
    po = _pair_orbit(r)
    pos = po.index.get((XP, XQ))
    assert pos is not None, "pulled-back pair missed the standard orbit"
    conj = mat_mul(ring, conj0, po.elts[pos])
    He = conjugate_handle(ring, f"H_e[v{vid}]", base_e, conj)
    Hf = conjugate_handle(ring, f"H_f[v{vid}]", base_f, conj)
    he_fix = facet_subgroup(r, ("edge", hit.e_edge), "I")
    hf_fix = facet_subgroup(r, ("edge", hit.f_edge), "I")
    chF, chE = r.chambers[F], r.chambers[E]
    for g in generators(ring, He, 2).elements:
        assert shape_membership(ring, he_fix, g)
        assert act_on_chamber(ring, g, chF) == chF
    for g in generators(ring, Hf, 2).elements:
        assert shape_membership(ring, hf_fix, g)
        assert act_on_chamber(ring, g, chE) == chE
    return He, Hf


# -- finite quotient helpers -------------------------------------------


def _heis_image(ring: Ring, g: ScaledMatrix):
    """Image in the mod-pi unipotent upper-triangular group; g must be
    integral and Iwahori-shaped."""
    assert g.denom == 0
    rows = g.rows
    return (
        ring.mod_pi(rows[0][1]),
        ring.mod_pi(rows[0][2]),
        ring.mod_pi(rows[1][2]),
    )


def _heis_mul(p: int, a, b):
    return ((a[0] + b[0]) % p, (a[1] + b[1] + a[0] * b[2]) % p, (a[2] + b[2]) % p)


def _heis_closure(p: int, gens):
    """Subgroup of the order-p^3 group generated by the given triples."""
    ident = (0, 0, 0)
    seen = {ident}
    queue = collections.deque([ident])
    gens = list(gens)
    while queue:
        x = queue.popleft()
        for g in gens:
            y = _heis_mul(p, x, g)
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return seen


def _factor_into_vertex_parts(ring: Ring, g: ScaledMatrix):
    """Exact factorization of a boundary-edge fixator element into
    elements of the two vertex fixators that generate it.

    Returns a list of (factor, tag) pairs with g equal to the ordered
    product of the factors; tag "A" marks membership in the color-1
    vertex shape, "B" the color-2 one, "AB" both.  Clearing order is
    chosen so every cleared entry stays cleared and each multiplier
    lies in A or B.
    """
    if g.denom != 0:
        raise ValueError("integral matrix required")
    tag_of = {
        (1, 0): "A", (2, 0): "AB", (2, 1): "B",
        (1, 2): "A", (0, 2): "AB", (0, 1): "B",
    }
    cur = g
    left = []
    for i, j in ((1, 0), (2, 0), (2, 1), (1, 2), (0, 2), (0, 1)):
        x = cur.rows[i][j]
        if ring.val(x) >= ring.M:
            continue
        c = ring.neg(ring.mul(x, ring.inv(cur.rows[j][j])))
        f = mat_elementary(ring, i, j, c)
        cur = mat_mul(ring, f, cur)
        left.append((f, tag_of[(i, j)]))
    u1 = cur.rows[0][0]
    d = mat_diag(ring, (ring.inv(u1), u1, ring.one()))
    cur = mat_mul(ring, d, cur)
    left.append((d, "AB"))
    u2 = cur.rows[1][1]
    d = mat_diag(ring, (ring.one(), ring.inv(u2), u2))
    cur = mat_mul(ring, d, cur)
    left.append((d, "AB"))
    assert mat_eq(ring, cur, mat_identity(ring))
    factors = []
    for f, tag in left:
        finv, _ = mat_inv(ring, f)
        for sh, letter in ((_I_V1, "A"), (_I_V2, "B")):
            if letter in tag:
                assert _shape_test(ring, sh, finv)
        factors.append((finv, tag))
    return factors


# -- verification ------------------------------------------------------


def _fixes(ring: Ring, g: ScaledMatrix, obj) -> bool:
    if isinstance(obj, Chamber):
        return act_on_chamber(ring, g, obj) == obj
    if isinstance(obj, Vertex):
        return act_on_vertex(ring, g, obj) == obj
    raise TypeError(f"cannot test fixing of {type(obj).__name__}")


def _mat_word(ring: Ring, mats, idxs) -> ScaledMatrix:
    out = mat_identity(ring)
    for i in idxs:
        out = mat_mul(ring, mats[i], out)
    return out


def _rand_word(rng, ring: Ring, mats, length: int) -> ScaledMatrix:
    return _mat_word(ring, mats, [rng.randrange(len(mats)) for _ in range(length)])


def _perm_closure_size(perms) -> int:
    if not perms:
        return 1
    ident = tuple(range(len(perms[0])))
    seen = {ident}
    queue = collections.deque([ident])
    while queue:
        x = queue.popleft()
        for g in perms:
            y = tuple(g[i] for i in x)
            if y not in seen:
                seen.add(y)
                queue.append(y)
    return len(seen)


def _chamber_perm(ring: Ring, g: ScaledMatrix, chambers, index):
    return tuple(index[act_on_chamber(ring, g, ch)] for ch in chambers)


def verify_group_facts(
    r: Region, ring_spec: Ring | None = None, *, seed: int = 0
) -> StructureReport:
    """Check the group-theoretic facts this package relies on.

    Covers the finite quotient orders, sphere transitivity and
    faithfulness, summit-pair generation, edge-family stabilizers,
    distance fixing at every layer up to three, the ball fixator, the
    summit subgroup pair, and the rational-matrix refinements that need
    a ramified ground field (skipped with a note otherwise).  Needs a
    region of radius at least 3.
    """
    if r.n < 3:
        raise ValueError("group facts need region radius >= 3")
    if ring_spec is not None and (ring_spec.p, ring_spec.e) != (r.ring.p, r.ring.e):
        raise ValueError("ring parameters do not match the region")
    ring = r.work
    p = r.p
    rng = random.Random(seed)
    std = _std(r)
    I_h = _iwahori(ring)
    K1_h = principal_congruence(ring, 1)
    K2_h = principal_congruence(ring, 2)
    gI2 = generators(ring, I_h, 2)
    gI3 = generators(ring, I_h, 3)
    gIfull = generators(ring, I_h, r.ring.M)
    gK1 = generators(ring, K1_h, 3)
    checks = []

    # 1. mod-pi quotient of the Iwahori group: order p^3, kernel K_1.
    kernel = SHAPE_I.join(
        ValuationShape(_grid((0, 1, 1), (0, 0, 1), (0, 0, 0)), 1)
    )
    imgs_small = _heis_closure(p, [_heis_image(ring, g) for g in gI3.elements])
    imgs_full = _heis_closure(p, [_heis_image(ring, g) for g in gIfull.elements])
    ok = kernel == congruence_shape(1) and len(imgs_small) == p**3 == len(imgs_full)
    checks.append(("pro-p-quotient-order", ok, {"quotient": len(imgs_small)}))

    # 2. faithful transitive action on each layer-2 sphere; K_1 fixes
    #    X_{0,2} pointwise.
    spheres2 = spheres_at(r, 2)

    def _sphere_recs(cid):
        for crown in spheres2:
            for cls in crown:
                if any(rec.summit == cid for rec in cls):
                    return cls
        raise AssertionError("chamber not in any layer-2 sphere")

    recsP = _sphere_recs(std.P11)
    recsQ = _sphere_recs(std.Q11)
    listP = [rec.summit for rec in recsP]
    listQ = [rec.summit for rec in recsQ]
    ok = len(listP) == p * p and len(listQ) == p * p and set(listP) != set(listQ)
    details = {}
    for name, cid, want in (("u", std.P11, listP), ("w", std.Q11, listQ)):
        orb = orbit(gI3, r.chambers[cid], r)
        got = {r.chamber_ids[c] for c in orb.members}
        chambers = [r.chambers[x] for x in sorted(want)]
        index = {c: i for i, c in enumerate(chambers)}
        perms = [_chamber_perm(ring, g, chambers, index) for g in gI3.elements]
        size = _perm_closure_size(perms)
        ok = ok and got == set(want) and size == p**3
        details[name] = {"orbit": len(orb.members), "image": size}
    x02_verts = [
        r.vertices[vid]
        for vid in range(len(r.vertices))
        if vertex_in_x(r, vid, 0, 2)
    ]
    trivial = all(
        _fixes(ring, g, v) for g in gK1.elements for v in x02_verts
    )
    ok = ok and trivial and len(orbit(gK1, r.chambers[0], r).members) == 1
    details["k1-fixes-x02"] = trivial
    checks.append(("sphere-action-faithful-transitive", ok, details))

    # 3. the chamber fixator modulo an edge fixator is cyclic of order p
    #    and permutes the other chambers at the panel.
    sample_chambers = [0]
    for d in (1, 2):
        pool = r.chambers_at(d)
        sample_chambers.append(pool[rng.randrange(len(pool))])
    bad3 = []
    count3 = 0
    for cid in sample_chambers:
        hD = facet_subgroup(r, ("chamber", cid), "I")
        gD = generators(ring, hD, 3)
        for eid in r.chamber_edge_ids[cid]:
            count3 += 1
            others = [x for x in r.chambers_through(eid) if x != cid]
            he = facet_subgroup(r, ("edge", eid), "I")
            orb = orbit(gD, r.chambers[others[0]], r)
            got = {r.chamber_ids[c] for c in orb.members}
            good = got == set(others) and len(others) == p
            stab = orb.stabilizer_generators(ring, gD, cap=15)
            good = good and all(shape_membership(ring, he, s) for s in stab)
            good = good and all(
                _fixes(ring, g, r.chambers[x])
                for g in generators(ring, he, 2).elements[:6]
                for x in r.chambers_through(eid)
            )
            mover = next(
                (
                    g
                    for g in gD.elements
                    if not _fixes(ring, g, r.chambers[others[0]])
                ),
                None,
            )
            good = good and mover is not None
            if mover is not None:
                seen = []
                y = r.chambers[others[0]]
                for _ in range(p):
                    y = act_on_chamber(ring, mover, y)
                    seen.append(y)
                good = good and seen[-1] == r.chambers[others[0]]
                good = good and {r.chamber_ids[c] for c in seen} == set(others)
                power = mover
                for _ in range(p - 1):
                    power = mat_mul(ring, power, mover)
                good = good and shape_membership(ring, he, power)
            if not good:
                bad3.append((cid, eid))
    checks.append(("chamber-edge-quotient", not bad3, bad3 or {"edges": count3}))

    # 4. the Iwahori orbit of the standard joined summit pair is exactly
    #    the set of joined pairs, p^3 of them.
    po = _pair_orbit(r)
    cfg0 = next(
        c for c in summit_configurations(r, std.vid["v0"]) if c.e_edge == std.s2
    )
    joined = {(F, E) for (E, F) in cfg0.pairs}
    got_pairs = {(r.chamber_ids[a], r.chamber_ids[b]) for a, b in po.members}
    ok = len(po.members) == p**3 and got_pairs == joined and not po.escaped
    checks.append(("summit-pair-transitive", ok, {"pairs": len(po.members)}))

    # 5. per joined pair: the two order-p summit stabilizers meet in K_1
    #    and generate the Iwahori group.
    gT2 = generators(ring, standard_handle(ring, "T", SHAPE_T), 2)
    gS2 = generators(ring, standard_handle(ring, "S", SHAPE_S), 2)
    bad5 = []
    sampled = set(rng.sample(range(len(po.members)), min(3, len(po.members))))
    sampled.add(0)
    for pos in range(len(po.members)):
        h = po.elts[pos]
        hinv, _ = mat_inv(ring, h)
        tg = [mat_mul(ring, h, mat_mul(ring, t, hinv)) for t in gT2.elements]
        sg = [mat_mul(ring, h, mat_mul(ring, s, hinv)) for s in gS2.elements]
        ti = _heis_closure(p, [_heis_image(ring, x) for x in tg])
        si = _heis_closure(p, [_heis_image(ring, x) for x in sg])
        both = _heis_closure(p, [_heis_image(ring, x) for x in tg + sg])
        good = (
            len(ti) == p
            and len(si) == p
            and ti & si == {(0, 0, 0)}
            and len(both) == p**3
        )
        if pos in sampled:
            Th = conjugate_handle(ring, "T@pair", SHAPE_T, h)
            Sh = conjugate_handle(ring, "S@pair", SHAPE_S, h)
            A = po.members[pos][0]
            eT = r.edge_ids[_act_object(ring, h, r.edges[std.s2], r)]
            heT = facet_subgroup(r, ("edge", eT), "I")
            good = good and all(
                shape_membership(ring, heT, x) and _fixes(ring, x, A)
                for x in tg[:6]
            )
            good = good and all(
                shape_membership(ring, Th, k) and shape_membership(ring, Sh, k)
                for k in gK1.elements[:6]
            )
            gedge = generators(ring, heT, 2)
            for _ in range(12):
                wrd = _rand_word(rng, ring, gedge.elements, 3)
                if _fixes(ring, wrd, A):
                    good = good and shape_membership(ring, Th, wrd)
        if not good:
            bad5.append(pos)
    checks.append(
        ("pair-stabilizers-generate", not bad5, bad5[:4] or {"pairs": len(po.members)})
    )

    # 6. inside T and S the stabilizer of each first-layer family edge
    #    is exactly K_1.
    gT3 = generators(ring, standard_handle(ring, "T", SHAPE_T), 3)
    gS3 = generators(ring, standard_handle(ring, "S", SHAPE_S), 3)

    def _family_edges(base_eid, anchor):
        out = set()
        fixed = {std.vid["v0"], r.vertex_ids[anchor]}
        for cid in r.chambers_through(base_eid):
            if cid == 0:
                continue
            peak = next(
                v for v in r.chambers[cid].verts if r.vertex_ids[v] not in fixed
            )
            out.add(r.edge_ids[make_edge(peak, anchor)])
        return out

    d_edges = _family_edges(std.s1, std.vert["v2"])
    e_edges = _family_edges(std.s2, std.vert["v1"])
    bad6 = []
    for name, gset, eid0, want in (
        ("T-on-d", gT3, std.d1, d_edges),
        ("S-on-e", gS3, std.e1, e_edges),
    ):
        orb = orbit(gset, r.edges[eid0], r)
        got = {r.edge_ids[e] for e in orb.members}
        stab = orb.stabilizer_generators(ring, gset, cap=20)
        img = _heis_closure(p, [_heis_image(ring, g) for g in gset.elements])
        if not (
            got == want
            and len(got) == p
            and len(img) == p
            and all(shape_membership(ring, K1_h, s) for s in stab)
        ):
            bad6.append(name)
    pos6 = max(range(len(po.members)), key=lambda k: len(po.words[k]))
    h6 = po.elts[pos6]
    h6i, _ = mat_inv(ring, h6)
    tg6 = [mat_mul(ring, h6, mat_mul(ring, t, h6i)) for t in gT3.elements]
    got6 = {r.edge_ids[e] for e in orbit(tg6, r.edges[std.d1], r).members}
    if got6 != d_edges:
        bad6.append("conjugate-T-on-d")
    checks.append(("edge-family-stabilizers", not bad6, bad6 or {"edges": 2 * p}))

    # 7. the stabilizer of each layer-2 w-peak moves the p adjacent
    #    u-peaks transitively.
    upeak_vids = {rec.peak for rec in recsP}
    orbW = orbit(gI2, std.vert["w11"], r)
    stab0 = orbW.stabilizer_generators(ring, gI2, cap=60)
    bad7 = [] if len(orbW.members) == p * p else ["w-orbit-size"]
    for rec in recsQ:
        wv = r.vertices[rec.peak]
        partners = [
            u
            for u in upeak_vids
            if r.edge_ids.get(make_edge(wv, r.vertices[u])) is not None
        ]
        if len(partners) != p:
            bad7.append((rec.peak, "partner-count", len(partners)))
            continue
        a = orbW.transporter(wv)
        ainv, _ = mat_inv(ring, a)
        sg = [mat_mul(ring, a, mat_mul(ring, s, ainv)) for s in stab0]
        got = {
            r.vertex_ids[v]
            for v in orbit(sg, r.vertices[partners[0]], r).members
        }
        if got != set(partners):
            bad7.append((rec.peak, "not-transitive"))
    checks.append(
        ("peak-stabilizer-adjacent-transitive", not bad7, bad7[:4] or {"peaks": len(recsQ)})
    )

    # 8. the boundary-edge fixator is generated by the two vertex
    #    fixators inside it: exact factorization of samples.
    s0h = facet_subgroup(r, ("edge", std.s0), "I")
    contain = all(
        _I_S0.off[i][j] <= sh.off[i][j]
        for sh in (_I_V1, _I_V2)
        for i in range(3)
        for j in range(3)
        if i != j
    ) and _I_S0.diag <= min(_I_V1.diag, _I_V2.diag)
    gs0 = generators(ring, s0h, 4)
    samples8 = [gs0.elements[0], gs0.elements[len(gs0.elements) // 2]]
    samples8 += [
        _rand_word(rng, ring, gs0.elements, rng.randrange(4, 12)) for _ in range(6)
    ]
    ok8 = contain
    tags8 = set()
    for g in samples8:
        factors = _factor_into_vertex_parts(ring, g)
        prod = mat_identity(ring)
        for f, tag in factors:
            prod = mat_mul(ring, prod, f)
            tags8.add(tag)
        ok8 = ok8 and mat_eq(ring, prod, g)
    ok8 = ok8 and {"A", "B"} <= {t for tag in tags8 for t in tag}
    checks.append(("boundary-edge-generated", ok8, {"samples": len(samples8)}))

    # 9. distance fixing: for each ordered pair of joined summits some
    #    Iwahori element fixes one summit pointwise and moves the gate
    #    of the other.  Layer 1 has no joined peaks.
    summits = classify_summits(r)
    zero_off = ((0, 0), (0, 0), (0, 0))

    def _elem_cands(tmax):
        out = []
        for i in range(3):
            for j in range(3):
                if i == j:
                    continue
                for t in range(SHAPE_I.off[i][j], tmax + 1):
                    out.append(mat_elementary(ring, i, j, ring.pi_power(t)))
        return out

    def _direct_witness(Dch, Fch, cands):
        for g in cands:
            if _fixes(ring, g, Dch) and not _fixes(ring, g, Fch):
                return g
        base = gI2.elements
        for a in range(len(base)):
            for b in range(len(base)):
                g = mat_mul(ring, base[a], base[b])
                if _fixes(ring, g, Dch) and not _fixes(ring, g, Fch):
                    return g
        return None

    peaks1 = {rec.peak for rec in summits[1]}
    l1_joined = any(
        r.vertex_ids[e.origin] in peaks1 and r.vertex_ids[e.target] in peaks1
        for e in r.edges
    )
    bad9 = ["layer-1-joined-pair"] if l1_joined else []
    total9 = 0
    for m in (2, 3):
        peakmap = {rec.peak: rec for rec in summits[m]}
        configs = {}
        for e in r.edges:
            a, b = r.vertex_ids[e.origin], r.vertex_ids[e.target]
            if a in peakmap and b in peakmap:
                for x, y in ((a, b), (b, a)):
                    D, E = peakmap[x], peakmap[y]
                    configs[(D.summit, E.summit)] = (D, E, _base_gate(r, E))
        total9 += len(configs)
        cands = _elem_cands(m + 1)
        apt = sorted(
            key
            for key, (D, E, F) in configs.items()
            if r.vertices[D.peak].off == zero_off
            and r.vertices[E.peak].off == zero_off
        )
        witnesses = {}
        covered = {}
        for key in apt:
            D, E, F = configs[key]
            w0 = _direct_witness(r.chambers[D.summit], r.chambers[F], cands)
            if w0 is None:
                bad9.append(("no-apartment-witness", key))
                continue
            witnesses[key] = w0
            if key in covered:
                continue
            orbp = orbit(
                gI2, (r.chambers[D.summit], r.chambers[E.summit]), r
            )
            for pos2, (pa, pb) in enumerate(orbp.members):
                k2 = (r.chamber_ids[pa], r.chamber_ids[pb])
                if k2 not in covered:
                    covered[k2] = (key, orbp.elts[pos2])
        for key, (D, E, F) in sorted(configs.items()):
            Dch, Fch = r.chambers[D.summit], r.chambers[F]
            if key in covered and covered[key][0] in witnesses:
                src, a = covered[key]
                ainv, _ = mat_inv(ring, a)
                w = mat_mul(ring, a, mat_mul(ring, witnesses[src], ainv))
            else:
                w = _direct_witness(Dch, Fch, cands)
                if w is None:
                    bad9.append(("no-witness", key))
                    continue
            if not (
                shape_membership(ring, I_h, w)
                and _fixes(ring, w, Dch)
                and not _fixes(ring, w, Fch)
            ):
                bad9.append(("witness-failed", key))
    checks.append(("distance-fixing", not bad9, bad9[:4] or {"configs": total9}))

    # 10. the pointwise fixator of the closed unit ball around the base
    #     vertex is exactly K_1.
    v0v = std.vert["v0"]
    ball = tuple(
        r.vertices[vid]
        for vid in range(len(r.vertices))
        if vid != std.vid["v0"] and vert_distance(ring, r.vertices[vid], v0v) == 1
    )
    fwd = all(_fixes(ring, g, v) for g in gK1.elements for v in ball)
    orbB = orbit(gI2, ball, r)
    stabB = orbB.stabilizer_generators(ring, gI2, cap=30)
    ok10 = (
        fwd
        and len(orbB.members) == p**3
        and all(shape_membership(ring, K1_h, s) for s in stabB)
    )
    checks.append(
        ("ball-fixator-is-congruence", ok10, {"ball": len(ball), "orbit": len(orbB.members)})
    )

    # 11. rational refinement over a ramified field: rational entries
    #     have even valuation, so rational ball fixators sit two levels
    #     deep and inside every edge fixator of X_{0,2}.
    if ring.e == 1:
        checks.append(
            ("rational-congruence-shrink", True, "skipped: hypothesis K != Q_p absent")
        )
    else:
        rgI4 = rational_generators(ring, I_h, 4)
        parity = True
        for _ in range(8):
            g = _rand_word(rng, ring, rgI4.elements, rng.randrange(2, 7))
            for row in g.rows:
                for x in row:
                    v = ring.val(x)
                    parity = parity and (v >= ring.M or v % 2 == 0)
        rgK1 = rational_generators(ring, K1_h, 4)
        x02_cids = [
            cid for cid in range(len(r.chambers)) if chamber_in_x(r, cid, 0, 2)
        ]
        eids11 = sorted({e for cid in x02_cids for e in r.chamber_edge_ids[cid]})
        handles11 = [facet_subgroup(r, ("edge", eid), "I") for eid in eids11]
        shrink = True
        for _ in range(6):
            g = _rand_word(rng, ring, rgK1.elements, rng.randrange(1, 5))
            shrink = shrink and shape_membership(ring, K2_h, g)
            shrink = shrink and all(_fixes(ring, g, v) for v in ball)
            shrink = shrink and all(
                shape_membership(ring, h, g) for h in handles11
            )
        checks.append(
            ("rational-congruence-shrink", parity and shrink, {"edges": len(eids11)})
        )

    # 12. a rational Iwahori element fixing a full two-layer
    #     configuration while moving every chamber at the other panel.
    rg3 = rational_generators(ring, I_h, 3)
    w0 = mat_elementary(ring, 0, 2, ring.one())
    bad12 = []
    for fam, base_eid, seed_name in (("u", std.s2, "u1"), ("w", std.s1, "w1")):
        fam_recs = [rec for rec in summits[1] if rec.base_edge == base_eid]
        if len(fam_recs) != p:
            bad12.append((fam, "family-size"))
            continue
        orb1 = orbit(rg3, std.vert[seed_name], r)
        if {r.vertex_ids[v] for v in orb1.members} != {rec.peak for rec in fam_recs}:
            bad12.append((fam, "rational-orbit"))
            continue
        for rec in fam_recs:
            a = orb1.transporter(r.vertices[rec.peak])
            ainv, _ = mat_inv(ring, a)
            w = mat_mul(ring, a, mat_mul(ring, w0, ainv))
            vfx = r.vertices[rec.peak]
            two = [
                eid
                for eid in r.chamber_edge_ids[rec.summit]
                if vfx in (r.edges[eid].origin, r.edges[eid].target)
            ]
            f_edge = next(
                eid
                for eid in two
                if v0v in (r.edges[eid].origin, r.edges[eid].target)
            )
            e_edge = next(eid for eid in two if eid != f_edge)
            good = is_rational(ring, w) and shape_membership(ring, I_h, w)
            good = good and shape_membership(
                ring, facet_subgroup(r, ("edge", e_edge), "I"), w
            )
            good = good and _fixes(ring, w, r.chambers[rec.summit])
            outsiders = [
                x for x in r.chambers_through(f_edge) if x != rec.summit
            ]
            good = good and all(
                not _fixes(ring, w, r.chambers[x]) for x in outsiders
            )
            cfg = next(
                c
                for c in summit_configurations(r, rec.peak)
                if c.e_edge == e_edge
            )
            fixedF = [
                Fc
                for Fc in cfg.outer_e
                if _fixes(ring, w, r.chambers[Fc])
            ]
            good = good and bool(fixedF)
            if cfg.pairs:
                good = good and any(F2 in fixedF for (_, F2) in cfg.pairs)
            if not good:
                bad12.append((fam, rec.peak))
    checks.append(("rational-witness-moves-panel", not bad12, bad12[:4] or {"families": 2}))

    # 13. rational transitivity on the distance-3 chambers over the
    #     base vertex.
    targets13 = set()
    for cid in r.chambers_at(3):
        vids = [r.vertex_ids[v] for v in r.chambers[cid].verts]
        if std.vid["v0"] in vids and all(
            r.vertex_layer[x] == 2 for x in vids if x != std.vid["v0"]
        ):
            targets13.add(cid)
    got13 = {
        r.chamber_ids[c]
        for c in orbit(rg3, r.chambers[std.D111], r).members
    }
    ok13 = len(targets13) == p**3 and got13 == targets13
    checks.append(("rational-chamber-transitive", ok13, {"chambers": len(targets13)}))

    # 14. the rational part of the outer-edge fixator generates the
    #     order-p quotient at the inner edge, at every layer-2 u-peak.
    w0q = mat_elementary(ring, 1, 2, ring.one())
    orbP14 = orbit(rg3, r.chambers[std.P11], r)
    bad14 = []
    if {r.chamber_ids[c] for c in orbP14.members} != set(listP):
        bad14.append("rational-orbit-sphere")
    for rec in recsP:
        a = orbP14.transporter(r.chambers[rec.summit])
        ainv, _ = mat_inv(ring, a)
        w = mat_mul(ring, a, mat_mul(ring, w0q, ainv))
        vfx = r.vertices[rec.peak]
        two = [
            eid
            for eid in r.chamber_edge_ids[rec.summit]
            if vfx in (r.edges[eid].origin, r.edges[eid].target)
        ]
        h_edge = next(
            eid for eid in two if v0v in (r.edges[eid].origin, r.edges[eid].target)
        )
        e_edge = next(eid for eid in two if eid != h_edge)
        good = is_rational(ring, w) and shape_membership(ring, I_h, w)
        good = good and shape_membership(
            ring, facet_subgroup(r, ("edge", e_edge), "I"), w
        )
        good = good and not shape_membership(
            ring, facet_subgroup(r, ("edge", h_edge), "I"), w
        )
        others = [x for x in r.chambers_through(h_edge) if x != rec.summit]
        seen = []
        y = r.chambers[others[0]]
        for _ in range(p):
            y = act_on_chamber(ring, w, y)
            seen.append(y)
        good = good and seen[-1] == r.chambers[others[0]]
        good = good and {r.chamber_ids[c] for c in seen} == set(others)
        if not good:
            bad14.append(rec.peak)
    checks.append(
        ("edge-intersection-generates", not bad14, bad14[:4] or {"peaks": len(recsP)})
    )

    # 15. facet fixators nest along faces and are normal in the full
    #     stabilizers.
    vids0 = [r.vertex_ids[v] for v in r.chambers[0].verts]
    near = (
        [("chamber", 0)]
        + [("edge", eid) for eid in r.chamber_edge_ids[0]]
        + [("vertex", vid) for vid in vids0]
    )
    far = [("vertex", std.vid["u1"]), ("edge", std.e1), ("chamber", std.P11)]
    bad15 = []
    for f in near + far:
        hI = facet_subgroup(r, f, "I")
        hJ = facet_subgroup(r, f, "J")
        giF = generators(ring, hI, 2)
        if not all(shape_membership(ring, hJ, g) for g in giF.elements):
            bad15.append((f, "I-not-in-J"))
            continue
        gjF = generators(ring, hJ, 2)
        normal = True
        for _ in range(5):
            jw = _rand_word(rng, ring, gjF.elements, rng.randrange(1, 4))
            jinv, _ = mat_inv(ring, jw)
            picks = rng.sample(
                range(len(giF.elements)), min(4, len(giF.elements))
            )
            for k in picks:
                x = mat_mul(ring, jw, mat_mul(ring, giF.elements[k], jinv))
                if not shape_membership(ring, hI, x):
                    normal = False
        if not normal:
            bad15.append((f, "not-normal"))
        if f in near and not all(
            shape_membership(ring, I_h, g) for g in giF.elements
        ):
            bad15.append((f, "not-inside-iwahori"))
    tower = all(
        shape_membership(ring, K1_h, g) and shape_membership(ring, I_h, g)
        for g in generators(ring, K2_h, 3).elements
    )
    if not tower:
        bad15.append(("tower",))
    checks.append(("facet-fixator-nesting", not bad15, bad15[:4] or {"facets": len(near) + len(far)}))

    # 16. the Iwahori action preserves layers, crowns, spheres, gallery
    #     distance and Weyl distance.
    labels16 = {}
    for m in (1, 2, 3):
        for ci, crown in enumerate(spheres_at(r, m)):
            for si, cls in enumerate(crown):
                for rec in cls:
                    labels16[rec.peak] = (m, ci, si)
    bad16 = []
    for g in gI3.elements:
        for vid, lab in labels16.items():
            ivid = r.vertex_ids.get(act_on_vertex(ring, g, r.vertices[vid]))
            if ivid is None or labels16.get(ivid) != lab:
                bad16.append((vid, lab))
                break
    pool16 = [cid for d in range(1, r.n + 1) for cid in r.chambers_at(d)]
    for _ in range(12):
        cid = pool16[rng.randrange(len(pool16))]
        g = gI3.elements[rng.randrange(len(gI3.elements))]
        icid = r.chamber_ids.get(act_on_chamber(ring, g, r.chambers[cid]))
        if icid is None or r.dist[icid] != r.dist[cid] or r.delta[icid] != r.delta[cid]:
            bad16.append(("chamber", cid))
    checks.append(("action-preserves-atlas", not bad16, bad16[:4] or {"peaks": len(labels16)}))

    # 17. the summit-chamber subgroup pair at sampled configurations.
    cfg_samples = [(std.vid["v0"], std.Q11, std.P11)]
    for name in ("u1", "w1"):
        # joins between the outer peaks of a layer-1 configuration sit
        # two layers further out, so they need radius at least 4
        cfg = next(
            (c for c in summit_configurations(r, std.vid[name]) if c.pairs),
            None,
        )
        if cfg is not None:
            E2, F2 = cfg.pairs[0]
            cfg_samples.append((std.vid[name], E2, F2))
    bad17 = []
    for vid, Ec, Fc in cfg_samples:
        He, Hf = special_subgroups(r, vid, Ec, Fc)
        good = True
        if vid == std.vid["v0"]:
            good = (
                He.base == SHAPE_T
                and Hf.base == SHAPE_S
                and mat_eq(ring, He.conj, mat_identity(ring))
            )
        hit = next(
            c for c in summit_configurations(r, vid) if (Ec, Fc) in c.pairs
        )
        Iv = facet_subgroup(r, ("vertex", vid), "I")
        ge = generators(ring, He, 2)
        gf = generators(ring, Hf, 2)
        giv = generators(ring, Iv, 2)
        good = good and all(
            shape_membership(ring, He, x) and shape_membership(ring, Hf, x)
            for x in giv.elements[:8]
        )
        for gens_, mids in ((ge, hit.middles_f), (gf, hit.middles_e)):
            ob = orbit(gens_, r.chambers[mids[0]], r)
            got = {r.chamber_ids[c] for c in ob.members}
            good = good and got == set(mids) and len(mids) == p
            st = ob.stabilizer_generators(ring, gens_, cap=15)
            good = good and all(shape_membership(ring, Iv, s) for s in st)
        mix = list(ge.elements[:6]) + [
            _rand_word(rng, ring, ge.elements, 2) for _ in range(4)
        ]
        for x in mix:
            if shape_membership(ring, Hf, x) and not shape_membership(ring, Iv, x):
                good = False
        good = good and any(
            not shape_membership(ring, Hf, x) for x in ge.elements
        )
        tD = r.transporter(hit.summit)
        tDi = r.transporter_inv(hit.summit)
        imgs17 = [
            _heis_image(ring, mat_mul(ring, tDi, mat_mul(ring, x, tD)))
            for x in list(ge.elements) + list(gf.elements)
        ]
        good = good and len(_heis_closure(p, imgs17)) == p**3
        if not good:
            bad17.append(vid)
    checks.append(("summit-subgroup-pair", not bad17, bad17 or {"configs": len(cfg_samples)}))

    return StructureReport(checks)
