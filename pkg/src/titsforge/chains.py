"""Decorated chambers, facet invariants, and oriented chain maps.

The permutation module on chamber cosets is coordinatized by decorated
chambers: a region chamber id plus a residue-torus triple (trivial for
p = 2).  Oriented i-chains assign to each canonically oriented i-facet
a vector supported on decorated chambers, constrained to the invariants
of the facet fixator.  eps1, eps0 and delta_aug are the boundary-style
maps of the oriented chain complex; the linear algebra runs over F_p
with deterministic sparse elimination.

Orientation conventions are purely combinatorial: edges are stored with
target color = origin color + 1 mod 3, triangles with the color order
(0,1,2) positive.  Under these the induced orientation of a stored edge
in a stored triangle is always positive, so eps1 sums without signs and
eps0 signs by target/origin.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import NamedTuple

from .residue import Ring, ScaledMatrix, mat_identity, mat_mul
from .lattices import act_on_vertex, chamber_from_vertices, make_edge
from .atlas import Region, StructureReport
from .groups import facet_subgroup, generators, orbit_generators

__all__ = [
    "Chain",
    "DecoratedChamber",
    "InvariantBasis",
    "LinearSystemGFp",
    "RegionTag",
    "RowSpaceGFp",
    "SolveReport",
    "chamber_set_tag",
    "chain_act",
    "chain_add",
    "chain_eq",
    "chain_json",
    "chain_scale",
    "delta_aug",
    "delta_tag",
    "decorations",
    "eps0",
    "eps1",
    "express_in_basis",
    "g_act_on_x",
    "invariant_basis",
    "random_chain",
    "solve_in_subspace",
    "subspace_image_compare",
    "tag_chambers",
    "tag_edges",
    "tag_vertices",
    "verify_chain_facts",
    "x_eq",
    "zero_chain",
]


# -- decorated chambers ------------------------------------------------


class DecoratedChamber(NamedTuple):
    chamber: int
    torus: tuple[int, int, int]


def decorations(p: int) -> list[tuple[int, int, int]]:
    """All residue-torus triples (a, b, c) with abc = 1 in F_p."""
    out = []
    for a in range(1, p):
        for b in range(1, p):
            c = pow(a * b, p - 2, p) if p > 2 else 1
            out.append((a, b, c))
    return out


def _theta(ring: Ring, m: ScaledMatrix) -> tuple[int, int, int]:
    """Diagonal residues of a chamber-stabilizing matrix.

    The input must reduce to an upper-triangular matrix with unit
    diagonal mod pi; anything else signals a corrupted transporter.
    """
    if m.denom != 0 or m.loss >= ring.M:
        raise ValueError("matrix is not integral at trusted precision")
    p = ring.p
    out = []
    for i in range(3):
        for j in range(i):
            if ring.val(m.rows[i][j]) < 1:
                raise ValueError("matrix is not triangular mod pi")
        d = ring.mod_pi(m.rows[i][i])
        if d == 0:
            raise ValueError("matrix diagonal vanishes mod pi")
        out.append(d)
    if (out[0] * out[1] * out[2]) % p != 1:
        raise ValueError("diagonal residues do not multiply to 1")
    return tuple(out)


def _act_caches(r: Region):
    vc = r.__dict__.setdefault("_chain_vert_cache", {})
    cc = r.__dict__.setdefault("_chain_cham_cache", {})
    pins = r.__dict__.setdefault("_chain_pins", {})
    return vc, cc, pins


_MISS = object()


def _act_cid(r: Region, g: ScaledMatrix, cid: int):
    """(image chamber id, torus factor) or None when the image escapes.

    Cached per (generator object, chamber); vertex images are shared
    between the chambers that contain them, which is where most of the
    work is saved.
    """
    vc, cc, pins = _act_caches(r)
    gk = id(g)
    pins[gk] = g
    key = (gk, cid)
    hit = cc.get(key, _MISS)
    if hit is not _MISS:
        return hit
    ring = r.work
    verts = []
    for vert in r.chambers[cid].verts:
        vkey = (gk, vert)
        w = vc.get(vkey, _MISS)
        if w is _MISS:
            w = act_on_vertex(ring, g, vert)
            vc[vkey] = w
        verts.append(w)
    out = None
    cid2 = r.chamber_ids.get(chamber_from_vertices(verts))
    if cid2 is not None:
        if r.p == 2:
            out = (cid2, (1, 1, 1))
        else:
            h = mat_mul(
                ring,
                r.transporter_inv(cid2),
                mat_mul(ring, g, r.transporter(cid)),
            )
            out = (cid2, _theta(ring, h))
    cc[key] = out
    return out


def act_decorated(r: Region, g: ScaledMatrix, dc: DecoratedChamber):
    """Image of a decorated chamber, or None when it leaves the region."""
    hit = _act_cid(r, g, dc.chamber)
    if hit is None:
        return None
    cid2, th = hit
    p = r.p
    torus = tuple((th[i] * dc.torus[i]) % p for i in range(3))
    return DecoratedChamber(cid2, torus)


def g_act_on_x(r: Region, g: ScaledMatrix, x: dict) -> dict:
    """Permutation action on a sparse decorated-chamber vector."""
    out = {}
    for dc, c in x.items():
        img = act_decorated(r, g, dc)
        if img is None:
            raise ValueError("support escapes the region")
        out[img] = c
    assert len(out) == len(x)
    return out


# -- sparse vectors over F_p -------------------------------------------


def _x_add_into(p: int, acc: dict, x: dict, k: int = 1) -> None:
    k %= p
    if k == 0:
        return
    for dc, c in x.items():
        v = (acc.get(dc, 0) + k * c) % p
        if v:
            acc[dc] = v
        else:
            acc.pop(dc, None)


def x_eq(a: dict, b: dict) -> bool:
    return a == b


def _x_scale(p: int, x: dict, k: int) -> dict:
    out = {}
    _x_add_into(p, out, x, k)
    return out


# -- region tags -------------------------------------------------------


@dataclass(frozen=True)
class RegionTag:
    """A set of region vertices; facets lie in the tag when all their
    vertices do."""

    label: str
    vertices: frozenset


def delta_tag(r: Region, m: int) -> RegionTag:
    """Vertices of chambers within gallery distance m."""
    if not 0 <= m <= r.n:
        raise ValueError("tag radius outside the built region")
    vs = frozenset(i for i, lay in enumerate(r.vertex_layer) if lay <= m)
    return RegionTag(f"delta{m}", vs)


def chamber_set_tag(r: Region, cids, label: str) -> RegionTag:
    vs = set()
    for cid in cids:
        for vert in r.chambers[cid].verts:
            vs.add(r.vertex_ids[vert])
    return RegionTag(label, frozenset(vs))


def tag_vertices(r: Region, tag: RegionTag) -> list[int]:
    return sorted(tag.vertices)


def tag_edges(r: Region, tag: RegionTag) -> list[int]:
    out = []
    for eid, e in enumerate(r.edges):
        if (
            r.vertex_ids[e.origin] in tag.vertices
            and r.vertex_ids[e.target] in tag.vertices
        ):
            out.append(eid)
    return out


def tag_chambers(r: Region, tag: RegionTag) -> list[int]:
    out = []
    for cid, ch in enumerate(r.chambers):
        if all(r.vertex_ids[v] in tag.vertices for v in ch.verts):
            out.append(cid)
    return out


# -- invariant bases ---------------------------------------------------


@dataclass(frozen=True)
class InvariantBasis:
    """Complete-orbit sums of a facet fixator inside a truncation ball.

    Vectors have pairwise disjoint supports; incomplete counts the
    orbits that left the ball (or the region) and were excluded.
    """

    facet: tuple[str, int]
    N: int
    vectors: tuple
    incomplete: int

    @property
    def ident(self) -> str:
        return f"{self.facet[0]}{self.facet[1]}@N{self.N}"


_FACET_TAGS = {"v": "vertex", "e": "edge", "c": "chamber"}


def _facet_key(facet) -> tuple[str, int]:
    tag, idx = facet
    return (_FACET_TAGS.get(tag, tag), idx)


def invariant_basis(r: Region, facet, N: int) -> InvariantBasis:
    """Basis of the facet-fixator invariants supported in the distance-N
    ball: one orbit sum per complete orbit of decorated chambers."""
    if not 0 <= N <= r.n + 1:
        raise ValueError("truncation outside the built region")
    key = (_facet_key(facet), N)
    cache = r.__dict__.setdefault("_chain_basis_cache", {})
    hit = cache.get(key)
    if hit is not None:
        return hit
    handle = facet_subgroup(r, facet, "I")
    gens = orbit_generators(r.work, handle)
    seeds = [
        DecoratedChamber(cid, t)
        for cid in range(len(r.chambers))
        if r.dist[cid] <= N
        for t in decorations(r.p)
    ]
    visited = set()
    vectors = []
    incomplete = 0
    for seed in seeds:
        if seed in visited:
            continue
        members = {seed}
        queue = [seed]
        complete = True
        while queue:
            cur = queue.pop()
            for g in gens.elements:
                img = act_decorated(r, g, cur)
                if img is None:
                    complete = False
                    continue
                if img not in members:
                    members.add(img)
                    queue.append(img)
        visited |= members
        if not complete or any(r.dist[dc.chamber] > N for dc in members):
            incomplete += 1
            continue
        vectors.append(tuple((dc, 1) for dc in sorted(members)))
    out = InvariantBasis(key[0], N, tuple(vectors), incomplete)
    cache[key] = out
    return out


def express_in_basis(r: Region, facet, N: int, x: dict):
    """Coordinates of x in the facet's invariant basis, or None.

    Disjoint supports make this a single sweep: the coefficient of a
    basis vector is read off any of its support points.
    """
    basis = invariant_basis(r, facet, N)
    remaining = dict(x)
    coeffs = []
    for vec in basis.vectors:
        c = remaining.get(vec[0][0], 0)
        coeffs.append(c)
        if c:
            for dc, w in vec:
                v = (remaining.get(dc, 0) - c * w) % r.p
                if v:
                    remaining[dc] = v
                else:
                    remaining.pop(dc, None)
    if remaining:
        return None
    return tuple(coeffs)


def _x_from_coeffs(p: int, basis: InvariantBasis, coeffs) -> dict:
    out = {}
    for c, vec in zip(coeffs, basis.vectors):
        c %= p
        if not c:
            continue
        for dc, w in vec:
            v = (out.get(dc, 0) + c * w) % p
            if v:
                out[dc] = v
            else:
                out.pop(dc, None)
    return out


# -- chains ------------------------------------------------------------


_FACET_OF_DEGREE = {0: "vertex", 1: "edge", 2: "chamber"}


@dataclass
class Chain:
    """Oriented cellular chain in canonical-orientation storage.

    values maps facet ids (vertex/edge/chamber ids for degree 0/1/2) to
    sparse decorated-chamber vectors; reversing an orientation negates
    the value, so only the canonical one is stored.
    """

    degree: int
    tag: RegionTag
    N: int
    values: dict


def zero_chain(degree: int, tag: RegionTag, N: int) -> Chain:
    return Chain(degree, tag, N, {})


def chain_eq(a: Chain, b: Chain) -> bool:
    return (a.degree, a.N, a.tag.vertices) == (b.degree, b.N, b.tag.vertices) and (
        a.values == b.values
    )


def chain_add(p: int, a: Chain, b: Chain, k: int = 1) -> Chain:
    """a + k*b; the tags must agree."""
    if a.degree != b.degree or a.tag.vertices != b.tag.vertices:
        raise ValueError("chain mismatch")
    out = {fid: dict(x) for fid, x in a.values.items()}
    for fid, x in b.values.items():
        acc = out.setdefault(fid, {})
        _x_add_into(p, acc, x, k)
        if not acc:
            del out[fid]
    return Chain(a.degree, a.tag, max(a.N, b.N), out)


def chain_scale(p: int, a: Chain, k: int) -> Chain:
    out = {}
    for fid, x in a.values.items():
        y = _x_scale(p, x, k)
        if y:
            out[fid] = y
    return Chain(a.degree, a.tag, a.N, out)


def _act_facet(r: Region, g: ScaledMatrix, degree: int, fid: int):
    ring = r.work
    if degree == 0:
        w = act_on_vertex(ring, g, r.vertices[fid])
        return r.vertex_ids.get(w)
    if degree == 1:
        e = r.edges[fid]
        u = act_on_vertex(ring, g, e.origin)
        w = act_on_vertex(ring, g, e.target)
        return r.edge_ids.get(make_edge(u, w))
    hit = _act_cid(r, g, fid)
    return None if hit is None else hit[0]


def chain_act(r: Region, g: ScaledMatrix, c: Chain) -> Chain:
    """The module action (g.a)(F) = g.a(g^-1 F) in canonical storage.

    Determinant-1 matrices preserve colors, so canonical orientations
    map to canonical orientations and no signs appear.
    """
    verts = {}
    for vid in c.tag.vertices:
        w = act_on_vertex(r.work, g, r.vertices[vid])
        wid = r.vertex_ids.get(w)
        if wid is None:
            raise ValueError("tag escapes the region")
        verts[vid] = wid
    out = {}
    for fid, x in c.values.items():
        tid = _act_facet(r, g, c.degree, fid)
        if tid is None:
            raise ValueError("support escapes the region")
        out[tid] = g_act_on_x(r, g, x)
    new_vs = frozenset(verts.values())
    tag = c.tag if new_vs == c.tag.vertices else RegionTag(c.tag.label + "'", new_vs)
    return Chain(c.degree, tag, c.N, out)


def eps1(r: Region, c: Chain) -> Chain:
    """Sum each triangle value onto its three edges."""
    if c.degree != 2:
        raise ValueError("degree-2 chain required")
    out = {}
    for cid in sorted(c.values):
        x = c.values[cid]
        for eid in r.chamber_edge_ids[cid]:
            acc = out.setdefault(eid, {})
            _x_add_into(r.p, acc, x)
    out = {eid: x for eid, x in out.items() if x}
    return Chain(1, c.tag, c.N, out)


def eps0(r: Region, c: Chain) -> Chain:
    """Signed scatter to endpoints: + at the target, - at the origin."""
    if c.degree != 1:
        raise ValueError("degree-1 chain required")
    out = {}
    for eid in sorted(c.values):
        x = c.values[eid]
        e = r.edges[eid]
        tv = r.vertex_ids[e.target]
        ov = r.vertex_ids[e.origin]
        _x_add_into(r.p, out.setdefault(tv, {}), x)
        _x_add_into(r.p, out.setdefault(ov, {}), x, r.p - 1)
    out = {vid: x for vid, x in out.items() if x}
    return Chain(0, c.tag, c.N, out)


def delta_aug(r: Region, c: Chain) -> dict:
    """Augmentation: the sum of all vertex values."""
    if c.degree != 0:
        raise ValueError("degree-0 chain required")
    out = {}
    for vid in sorted(c.values):
        _x_add_into(r.p, out, c.values[vid])
    return out


def random_chain(r: Region, tag: RegionTag, degree: int, N: int, rng) -> Chain:
    """Random chain with values drawn from the invariant bases."""
    kind = _FACET_OF_DEGREE[degree]
    fids = (tag_vertices, tag_edges, tag_chambers)[degree](r, tag)
    values = {}
    for fid in fids:
        basis = invariant_basis(r, (kind, fid), N)
        coeffs = [rng.randrange(r.p) for _ in basis.vectors]
        x = _x_from_coeffs(r.p, basis, coeffs)
        if x:
            values[fid] = x
    return Chain(degree, tag, N, values)


def chain_json(r: Region, c: Chain) -> dict:
    """JSON-ready form: facet keys with sparse decorated coefficients."""
    vals = []
    for fid in sorted(c.values):
        items = [
            [dc.chamber, list(dc.torus), coeff]
            for dc, coeff in sorted(c.values[fid].items())
        ]
        vals.append([fid, items])
    return {"degree": c.degree, "tag": c.tag.label, "N": c.N, "values": vals}


# -- linear algebra over F_p -------------------------------------------


class LinearSystemGFp:
    """Sparse Gaussian elimination with provenance-tracked rows.

    Rows are added once; solve() can then be called for many right-hand
    sides.  Dependent rows keep the combination that produced them, so
    an infeasible target comes with a checkable dual certificate.
    """

    def __init__(self, p: int, ncols: int):
        self.p = p
        self.ncols = ncols
        self._pivots = {}
        self._deps = []
        self._count = 0

    @property
    def rank(self) -> int:
        return len(self._pivots)

    def add_row(self, coeffs: dict) -> int:
        p = self.p
        idx = self._count
        self._count += 1
        row = {c: v % p for c, v in coeffs.items() if v % p}
        prov = {idx: 1}
        while row:
            lead = min(row)
            piv = self._pivots.get(lead)
            if piv is None:
                inv = pow(row[lead], p - 2, p)
                row = {c: (v * inv) % p for c, v in row.items()}
                prov = {i: (v * inv) % p for i, v in prov.items()}
                self._pivots[lead] = (row, prov)
                return idx
            prow, pprov = piv
            c = row[lead]
            for col, v in prow.items():
                w = (row.get(col, 0) - c * v) % p
                if w:
                    row[col] = w
                else:
                    row.pop(col, None)
            for i, v in pprov.items():
                w = (prov.get(i, 0) - c * v) % p
                if w:
                    prov[i] = w
                else:
                    prov.pop(i, None)
        self._deps.append(prov)
        return idx

    def solve(self, rhs: dict):
        """Solve for a right-hand side given per-row (free vars 0).

        Returns ("ok", x) or ("infeasible", certificate); the
        certificate is a row combination annihilating every column but
        pairing nonzero with the target.
        """
        p = self.p
        for prov in self._deps:
            v = sum(c * rhs.get(i, 0) for i, c in prov.items()) % p
            if v:
                return (
                    "infeasible",
                    {"combination": sorted(prov.items()), "value": v},
                )
        x = [0] * self.ncols
        for lead in sorted(self._pivots, reverse=True):
            row, prov = self._pivots[lead]
            s = sum(c * rhs.get(i, 0) for i, c in prov.items())
            s -= sum(v * x[col] for col, v in row.items() if col != lead)
            x[lead] = s % p
        return ("ok", x)


class RowSpaceGFp:
    """Echelonized row space over F_p with integer coordinates."""

    def __init__(self, p: int):
        self.p = p
        self._pivots = {}

    @property
    def rank(self) -> int:
        return len(self._pivots)

    def reduce(self, vec: dict) -> dict:
        p = self.p
        row = {c: v % p for c, v in vec.items() if v % p}
        while row:
            lead = min(row)
            piv = self._pivots.get(lead)
            if piv is None:
                return row
            c = row[lead]
            for col, v in piv.items():
                w = (row.get(col, 0) - c * v) % p
                if w:
                    row[col] = w
                else:
                    row.pop(col, None)
        return row

    def insert(self, vec: dict) -> bool:
        row = self.reduce(vec)
        if not row:
            return False
        lead = min(row)
        inv = pow(row[lead], self.p - 2, self.p)
        self._pivots[lead] = {c: (v * inv) % self.p for c, v in row.items()}
        return True

    def rows(self):
        return [self._pivots[lead] for lead in sorted(self._pivots)]


# -- the subspace solver -----------------------------------------------


@dataclass
class SolveReport:
    status: str
    chain: Chain | None
    N: int
    retried: bool
    advisory: str | None
    certificate: dict | None


def _degree1_columns(r: Region, tag: RegionTag, N: int):
    """Variable columns of C_1(tag) in invariant coordinates."""
    cols = []
    for eid in tag_edges(r, tag):
        basis = invariant_basis(r, ("edge", eid), N)
        for k, vec in enumerate(basis.vectors):
            cols.append((eid, k, vec))
    return cols


def _eps0_column(r: Region, eid: int, vec) -> dict:
    e = r.edges[eid]
    tv = r.vertex_ids[e.target]
    ov = r.vertex_ids[e.origin]
    out = {}
    for dc, c in vec:
        out[(tv, dc)] = c % r.p
        out[(ov, dc)] = (-c) % r.p
    return out


def _chain0_coords(c: Chain) -> dict:
    out = {}
    for vid, x in c.values.items():
        for dc, v in x.items():
            out[(vid, dc)] = v
    return out


def solve_in_subspace(r: Region, target: Chain, tag: RegionTag, N: int) -> SolveReport:
    """Find a degree-1 chain on the tag with eps0 equal to the target.

    Infeasibility at N retries once at N + 1 before reporting, with an
    advisory that the truncation was too small when the retry succeeds.
    """
    if target.degree != 0:
        raise ValueError("degree-0 target required")
    if not set(target.values) <= tag.vertices:
        raise ValueError("target supported outside the tag")
    if N > r.n:
        raise ValueError("truncation outside the built region")
    first = _solve_once(r, target, tag, N)
    if first.status == "solved" or N + 1 > r.n + 1:
        return first
    second = _solve_once(r, target, tag, N + 1)
    if second.status == "solved":
        return SolveReport(
            "solved",
            second.chain,
            N + 1,
            True,
            "truncation-too-small",
            None,
        )
    return SolveReport("infeasible", None, N + 1, True, None, second.certificate)


def _solve_once(r: Region, target: Chain, tag: RegionTag, N: int) -> SolveReport:
    cols = _degree1_columns(r, tag, N)
    colvecs = [_eps0_column(r, eid, vec) for eid, _, vec in cols]
    coords = set()
    for cv in colvecs:
        coords |= set(cv)
    coords |= set(_chain0_coords(target))
    coord_ix = {c: i for i, c in enumerate(sorted(coords))}
    sys = LinearSystemGFp(r.p, len(cols))
    rows = [dict() for _ in coord_ix]
    for j, cv in enumerate(colvecs):
        for coord, v in cv.items():
            rows[coord_ix[coord]][j] = v
    for row in rows:
        sys.add_row(row)
    rhs = {
        coord_ix[coord]: v for coord, v in _chain0_coords(target).items()
    }
    verdict, data = sys.solve(rhs)
    if verdict == "infeasible":
        back = sorted(coords)
        cert = {
            "combination": [
                [back[i][0], back[i][1].chamber, list(back[i][1].torus), c]
                for i, c in data["combination"]
            ],
            "value": data["value"],
        }
        return SolveReport("infeasible", None, N, False, None, cert)
    values = {}
    for (eid, k, vec), xj in zip(cols, data):
        if xj % r.p == 0:
            continue
        acc = values.setdefault(eid, {})
        for dc, c in vec:
            v = (acc.get(dc, 0) + xj * c) % r.p
            if v:
                acc[dc] = v
            else:
                acc.pop(dc, None)
    values = {eid: x for eid, x in values.items() if x}
    chain = Chain(1, tag, N, values)
    return SolveReport("solved", chain, N, False, None, None)


def subspace_image_compare(
    r: Region, tag1: RegionTag, tag2: RegionTag, restrict, N: int
) -> dict:
    """Compare eps0 images, restricted to a vertex set.

    Computes V1 = eps0(C_1(tag1)) cut down to vectors supported on the
    restrict vertices, and V2 = eps0(C_1(tag2)); reports containment
    V1 <= V2 with a witness vector when it fails.
    """
    if not tag2.vertices <= tag1.vertices:
        raise ValueError("tag2 must lie inside tag1")
    restrict = frozenset(restrict)
    cols1 = [_eps0_column(r, eid, vec) for eid, _, vec in _degree1_columns(r, tag1, N)]
    cols2 = [_eps0_column(r, eid, vec) for eid, _, vec in _degree1_columns(r, tag2, N)]
    coords = set()
    for cv in cols1:
        coords |= set(cv)
    for cv in cols2:
        coords |= set(cv)
    outside = sorted(c for c in coords if c[0] not in restrict)
    inside = sorted(c for c in coords if c[0] in restrict)
    coord_ix = {c: i for i, c in enumerate(outside + inside)}
    cut = len(outside)
    v1 = RowSpaceGFp(r.p)
    for cv in cols1:
        v1.insert({coord_ix[c]: v for c, v in cv.items()})
    v2 = RowSpaceGFp(r.p)
    for cv in cols2:
        v2.insert({coord_ix[c]: v for c, v in cv.items()})
    back = outside + inside
    witness = None
    restricted_rank = 0
    contained = True
    for row in v1.rows():
        if min(row) < cut:
            continue
        restricted_rank += 1
        if v2.reduce(row) and witness is None:
            contained = False
            witness = sorted((back[i], v) for i, v in row.items())
    return {
        "contained": contained,
        "witness": witness,
        "rank1": v1.rank,
        "rank1_restricted": restricted_rank,
        "rank2": v2.rank,
        "columns": (len(cols1), len(cols2)),
    }


# -- verification ------------------------------------------------------


def _random_x(r: Region, rng, N: int) -> dict:
    cids = [cid for cid in range(len(r.chambers)) if r.dist[cid] <= N]
    out = {}
    for _ in range(rng.randrange(1, 6)):
        dc = DecoratedChamber(
            rng.choice(cids), rng.choice(decorations(r.p))
        )
        v = rng.randrange(1, r.p) if r.p > 2 else 1
        out[dc] = v
    return out


def verify_chain_facts(r: Region, *, seed: int = 0) -> StructureReport:
    """Chain-complex facts at desk scale: identities, invariance,
    injectivity, exactness on the two smallest complete regions, and
    the solver round trip."""
    rng = random.Random(seed)
    ring = r.work
    p = r.p
    checks = []
    n_small = min(r.n, 2)

    iw = generators(ring, facet_subgroup(r, ("chamber", 0), "I"), 2)

    # identity action and composition law
    ident_ok = True
    comp_ok = True
    one = mat_identity(ring)
    for _ in range(25):
        x = _random_x(r, rng, n_small)
        if g_act_on_x(r, one, x) != x:
            ident_ok = False
        g = rng.choice(iw.elements)
        h = rng.choice(iw.elements)
        gh = mat_mul(ring, g, h)
        if g_act_on_x(r, gh, x) != g_act_on_x(r, g, g_act_on_x(r, h, x)):
            comp_ok = False
    checks.append(("identity-action", ident_ok, {}))
    checks.append(("action-composition", comp_ok, {"trials": 25}))

    # invariant bases: fixed vectors, disjoint supports, pinned cases
    fixed_ok = True
    disjoint_ok = True
    sample_facets = [("chamber", 0), ("vertex", 0), ("edge", 0)]
    e1 = r.chambers_at(1)
    if e1:
        sample_facets.append(("chamber", e1[0]))
    for facet in sample_facets:
        basis = invariant_basis(r, facet, n_small)
        gens = generators(ring, facet_subgroup(r, facet, "I"), 2)
        seen = set()
        for vec in basis.vectors:
            x = dict(vec)
            for dc, _ in vec:
                if dc in seen:
                    disjoint_ok = False
                seen.add(dc)
            for g in gens.elements:
                if g_act_on_x(r, g, x) != x:
                    fixed_ok = False
    checks.append(("invariant-basis-fixed", fixed_ok, {"facets": len(sample_facets)}))
    checks.append(("invariant-basis-disjoint", disjoint_ok, {}))

    # the base-chamber fixator fixes the base chamber, so every
    # decoration is its own orbit
    base_c = invariant_basis(r, ("chamber", 0), 0)
    pin_ok = base_c.incomplete == 0 and len(base_c.vectors) == (p - 1) ** 2
    pin_ok = pin_ok and all(len(vec) == 1 for vec in base_c.vectors)
    checks.append(("base-chamber-basis", pin_ok, {"dim": len(base_c.vectors)}))

    # the first congruence ball: neighbors through the opposite panel
    # form one orbit of size p, everything else is fixed
    v0 = next(
        vid
        for vid in range(len(r.vertices))
        if r.vertex_layer[vid] == 0 and r.vertices[vid].color == 0
    )
    bv0 = invariant_basis(r, ("vertex", v0), 1)
    sizes = sorted(len(vec) for vec in bv0.vectors)
    d1 = 1 + 3 * p
    expect = [1] * (1 + 2 * p) * (p - 1) ** 2 + [p] * (p - 1) ** 2
    pin2 = bv0.incomplete == 0 and sizes == sorted(expect)
    checks.append(
        (
            "congruence-ball-basis",
            pin2,
            {"dim": len(bv0.vectors), "sizes": sizes, "chambers": d1},
        )
    )

    # invariant containment along face relations
    cont_ok = True
    eid0 = r.chamber_edge_ids[0][0]
    bD = invariant_basis(r, ("chamber", 0), n_small)
    for vec in bD.vectors:
        if express_in_basis(r, ("edge", eid0), n_small, dict(vec)) is None:
            cont_ok = False
    vtx = r.vertex_ids[r.edges[eid0].origin]
    bE = invariant_basis(r, ("edge", eid0), n_small)
    for vec in bE.vectors:
        if express_in_basis(r, ("vertex", vtx), n_small, dict(vec)) is None:
            cont_ok = False
    checks.append(("invariant-containment", cont_ok, {}))

    # single-triangle and single-edge pins
    t0 = delta_tag(r, 0)
    gamma = Chain(2, t0, n_small, {0: {DecoratedChamber(0, decorations(p)[0]): 1}})
    b1 = eps1(r, gamma)
    tri_ok = sorted(b1.values) == sorted(r.chamber_edge_ids[0]) and all(
        x == gamma.values[0] for x in b1.values.values()
    )
    checks.append(("triangle-boundary", tri_ok, {}))
    e0 = r.chamber_edge_ids[0][0]
    beta = Chain(1, t0, n_small, {e0: {DecoratedChamber(0, decorations(p)[0]): 1}})
    a0 = eps0(r, beta)
    ed = r.edges[e0]
    tv, ov = r.vertex_ids[ed.target], r.vertex_ids[ed.origin]
    edge_ok = (
        sorted(a0.values) == sorted((tv, ov))
        and a0.values[tv] == beta.values[e0]
        and a0.values[ov] == _x_scale(p, beta.values[e0], p - 1)
    )
    checks.append(("edge-boundary", edge_ok, {}))

    # composition identities on random chains
    tag1 = delta_tag(r, min(1, r.n))
    zero1 = True
    zero2 = True
    for _ in range(20):
        g2 = random_chain(r, tag1, 2, n_small, rng)
        if eps0(r, eps1(r, g2)).values:
            zero1 = False
        b = random_chain(r, tag1, 1, n_small, rng)
        if delta_aug(r, eps0(r, b)):
            zero2 = False
    checks.append(("eps0-eps1-zero", zero1, {"trials": 20}))
    checks.append(("delta-eps0-zero", zero2, {"trials": 20}))

    # equivariance under the pro-p chamber fixator
    equi_ok = True
    for _ in range(10):
        g = rng.choice(iw.elements)
        b = random_chain(r, tag1, 1, n_small, rng)
        if not chain_eq(eps0(r, chain_act(r, g, b)), chain_act(r, g, eps0(r, b))):
            equi_ok = False
        g2 = random_chain(r, tag1, 2, n_small, rng)
        if not chain_eq(eps1(r, chain_act(r, g, g2)), chain_act(r, g, eps1(r, g2))):
            equi_ok = False
        if delta_aug(r, eps0(r, chain_act(r, g, b))) != g_act_on_x(
            r, g, delta_aug(r, eps0(r, b))
        ):
            equi_ok = False
    checks.append(("boundary-equivariance", equi_ok, {"trials": 10}))

    # injectivity of eps1 and exactness on the two smallest regions
    inj_ok = True
    exact_ok = True
    exact_data = {}
    for m in (0, 1):
        if m > r.n:
            continue
        tg = delta_tag(r, m)
        N = m + 2
        if N > r.n + 1:
            continue
        cols1 = _degree1_columns(r, tg, N)
        col_ix = {(eid, k): j for j, (eid, k, _) in enumerate(cols1)}
        e1rows = RowSpaceGFp(p)
        n2 = 0
        for cid in tag_chambers(r, tg):
            basisD = invariant_basis(r, ("chamber", cid), N)
            for vec in basisD.vectors:
                n2 += 1
                gam = Chain(2, tg, N, {cid: dict(vec)})
                bimg = eps1(r, gam)
                coords = {}
                for eid, x in bimg.values.items():
                    cf = express_in_basis(r, ("edge", eid), N, x)
                    if cf is None:
                        inj_ok = False
                        continue
                    for k, v in enumerate(cf):
                        if v:
                            coords[col_ix[(eid, k)]] = v
                if not e1rows.insert(coords):
                    inj_ok = False
        sysm = LinearSystemGFp(p, len(cols1))
        colvecs = [_eps0_column(r, eid, vec) for eid, _, vec in cols1]
        coords = set()
        for cv in colvecs:
            coords |= set(cv)
        coord_ix = {c: i for i, c in enumerate(sorted(coords))}
        rows = [dict() for _ in coord_ix]
        for j, cv in enumerate(colvecs):
            for coord, v in cv.items():
                rows[coord_ix[coord]][j] = v
        for row in rows:
            sysm.add_row(row)
        ker_dim = len(cols1) - sysm.rank
        exact_data[f"delta{m}"] = {
            "dim_c2": n2,
            "rank_eps1": e1rows.rank,
            "ker_eps0": ker_dim,
        }
        if not (n2 == e1rows.rank == ker_dim):
            exact_ok = False
    checks.append(("eps1-injective", inj_ok, exact_data))
    checks.append(("exactness-small-regions", exact_ok, exact_data))

    # solver round trip on the base chamber
    solv_ok = True
    for _ in range(5):
        b = random_chain(r, t0, 1, n_small, rng)
        rep = solve_in_subspace(r, eps0(r, b), t0, n_small)
        if rep.status != "solved" or not chain_eq(
            eps0(r, rep.chain), eps0(r, b)
        ):
            solv_ok = False
    zrep = solve_in_subspace(r, zero_chain(0, t0, n_small), t0, n_small)
    if zrep.status != "solved" or zrep.chain.values:
        solv_ok = False
    bad = Chain(0, t0, n_small, {tv: {DecoratedChamber(0, decorations(p)[0]): 1}})
    brep = solve_in_subspace(r, bad, t0, n_small)
    if brep.status != "infeasible" or brep.certificate is None:
        solv_ok = False
    checks.append(("solver-round-trip", solv_ok, {"trials": 5}))

    # image comparison sanity
    cmp_same = subspace_image_compare(
        r, t0, t0, [r.vertex_ids[v] for v in r.chambers[0].verts], n_small
    )
    cmp_ok = cmp_same["contained"] and cmp_same["rank2"] <= cmp_same["rank1"]
    if r.n >= 1:
        te = delta_tag(r, 1)
        cmp_nest = subspace_image_compare(
            r, te, t0, [r.vertex_ids[v] for v in r.chambers[0].verts], n_small
        )
        cmp_ok = cmp_ok and cmp_nest["rank2"] <= cmp_nest["rank1"]
    checks.append(("image-compare-sanity", cmp_ok, cmp_same))

    return StructureReport(checks)
