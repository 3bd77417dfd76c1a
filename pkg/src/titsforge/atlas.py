"""Breadth-first atlas of the chamber complex around the standard chamber.

A Region materializes every chamber within gallery distance n of the
standard chamber C, plus one lookahead layer at distance n+1, so that
summit classification at layer n and border edges at layer n are exact.
Chamber, edge and vertex ids are assigned in discovery order, which is
deterministic for fixed (p, e, n).

Each chamber carries its Weyl distance delta(D, C); transporters in
SL_3(K) with t_D * C = D are computed lazily and verified by acting.

Layer-n structure exposed here: vertices of layer n are peaks, each with
a unique summit chamber and base edge; summits split into three crowns
by the X-regions, and each crown into floor(n/2)+1 spheres, which are
exactly the Weyl-distance classes of its summits.

>>> r = build_region(Ring(2, 1, 8), 2)
>>> r.chamber_count(2)
31
"""

from __future__ import annotations

import collections
from dataclasses import dataclass

from .residue import (
    Ring,
    ScaledMatrix,
    mat_det_entries,
    mat_identity,
    mat_inv,
    mat_mul,
    mat_scale_col,
)
from .lattices import (
    Chamber,
    Edge,
    Vertex,
    _fp_echelon,
    _mat_vec,
    act_on_chamber,
    canonicalize_columns,
    chamber_from_vertices,
    chambers_through_edge,
    edge_label,
    edges_of_chamber,
    lift_vertex,
    standard_chamber,
    standard_vertex,
    vert_distance,
)
from .weyl import IDENTITY, WeylElt, gen, weyl_len, weyl_mul

__all__ = [
    "Classification",
    "Region",
    "StructureReport",
    "SummitRecord",
    "border_edges",
    "build_region",
    "classify_summits",
    "crowns_and_spheres",
    "crowns_at",
    "extended_crown",
    "gallery_distance",
    "peak_graph",
    "region_dot",
    "region_json",
    "sphere_count",
    "spheres_at",
    "standard_hexagon",
    "verify_structure",
    "vertex_in_x",
    "weyl_distance",
    "working_ring",
]


def sphere_count(n: int) -> int:
    """Number of spheres in each crown at layer n (n >= 1)."""
    return n // 2 + 1


def working_ring(ring: Ring, n: int) -> Ring:
    # Guard digits: canonical pivot exponents at radius n+1, adjugate
    # inverses, and transporter unit extraction all stay below this.
    return Ring(ring.p, ring.e, max(ring.M, 6 * (n + 4)))


@dataclass(frozen=True)
class SummitRecord:
    peak: int
    layer: int
    summit: int
    base_edge: int


class Region:
    """Read-only after build_region; ids index the parallel lists."""

    def __init__(self, ring: Ring, work: Ring, n: int) -> None:
        self.ring = ring
        self.work = work
        self.n = n
        self.p = ring.p
        self.chambers: list[Chamber] = []
        self.chamber_ids: dict[Chamber, int] = {}
        self.dist: list[int] = []
        self.delta: list[WeylElt] = []
        self.chamber_edge_ids: list[tuple[int, int, int]] = []
        self.edges: list[Edge] = []
        self.edge_ids: dict[Edge, int] = {}
        self.edge_chambers: list[list[int]] = []
        self.edge_expanded: list[bool] = []
        self.edge_layer: list[int] = []
        self.vertices: list[Vertex] = []
        self.vertex_ids: dict[Vertex, int] = {}
        self.vertex_layer: list[int] = []
        self.vertex_chambers: list[list[int]] = []
        self.vertex_edges: list[list[int]] = []
        self._transporters: list[ScaledMatrix | None] = []
        self._transporter_invs: list[ScaledMatrix | None] = []
        self._vdist: dict[tuple[int, int], int] = {}
        self._summits: dict[int, list[SummitRecord]] | None = None
        self._crowns: dict[int, tuple] = {}
        self._spheres: dict[int, list] = {}

    def chamber_count(self, upto: int | None = None) -> int:
        if upto is None:
            upto = self.n
        return sum(1 for d in self.dist if d <= upto)

    def core_ids(self) -> list[int]:
        return [i for i, d in enumerate(self.dist) if d <= self.n]

    def chambers_at(self, d: int) -> list[int]:
        return [i for i, dd in enumerate(self.dist) if dd == d]

    def neighbors(self, cid: int):
        """(edge id, other chamber id) pairs; complete when dist <= n."""
        out = []
        for eid in self.chamber_edge_ids[cid]:
            for other in self.edge_chambers[eid]:
                if other != cid:
                    out.append((eid, other))
        return out

    def chambers_through(self, eid: int) -> list[int]:
        """All region chambers containing the edge, even if unexpanded."""
        if self.edge_expanded[eid]:
            return list(self.edge_chambers[eid])
        e = self.edges[eid]
        out = []
        for ch in chambers_through_edge(self.work, e.origin, e.target):
            cid = self.chamber_ids.get(ch)
            if cid is not None:
                out.append(cid)
        return out

    def vertex_distance(self, vid: int, base: int) -> int:
        """1-skeleton distance to the standard vertex of the given color."""
        key = (vid, base)
        got = self._vdist.get(key)
        if got is None:
            got = vert_distance(self.work, self.vertices[vid], standard_vertex(base))
            self._vdist[key] = got
        return got

    def transporter(self, cid: int) -> ScaledMatrix:
        t = self._transporters[cid]
        if t is None:
            t = _chamber_transporter(self.work, self.chambers[cid])
            assert act_on_chamber(self.work, t, standard_chamber()) == self.chambers[cid]
            self._transporters[cid] = t
        return t

    def transporter_inv(self, cid: int) -> ScaledMatrix:
        t = self._transporter_invs[cid]
        if t is None:
            t, _ = mat_inv(self.work, self.transporter(cid))
            self._transporter_invs[cid] = t
        return t

    def _intern_vertex(self, v: Vertex, d: int) -> int:
        vid = self.vertex_ids.get(v)
        if vid is None:
            vid = len(self.vertices)
            self.vertex_ids[v] = vid
            self.vertices.append(v)
            self.vertex_layer.append(d)
            self.vertex_chambers.append([])
            self.vertex_edges.append([])
        elif d < self.vertex_layer[vid]:
            self.vertex_layer[vid] = d
        return vid

    def _intern_edge(self, e: Edge, d: int) -> int:
        eid = self.edge_ids.get(e)
        if eid is None:
            eid = len(self.edges)
            self.edge_ids[e] = eid
            self.edges.append(e)
            self.edge_chambers.append([])
            self.edge_expanded.append(False)
            self.edge_layer.append(d)
            for v in (e.origin, e.target):
                vid = self._intern_vertex(v, d)
                self.vertex_edges[vid].append(eid)
        elif d < self.edge_layer[eid]:
            self.edge_layer[eid] = d
        return eid

    def _intern_chamber(self, ch: Chamber, d: int, dl: WeylElt) -> int:
        cid = len(self.chambers)
        self.chamber_ids[ch] = cid
        self.chambers.append(ch)
        self.dist.append(d)
        self.delta.append(dl)
        self._transporters.append(None)
        self._transporter_invs.append(None)
        eids = []
        for e in edges_of_chamber(ch):
            eid = self._intern_edge(e, d)
            self.edge_chambers[eid].append(cid)
            eids.append(eid)
        self.chamber_edge_ids.append(tuple(eids))
        for v in ch.verts:
            vid = self._intern_vertex(v, d)
            self.vertex_chambers[vid].append(cid)
        return cid


def _chamber_transporter(ring: Ring, ch: Chamber) -> ScaledMatrix:
    """Determinant-one matrix carrying the standard chamber to ch.

    Columns lift an adapted flag basis of the residue chain through the
    three vertex classes; every choice is echelon-deterministic, and the
    standard chamber maps to the identity.
    """
    p = ring.p
    u0 = lift_vertex(ring, ch.verts[0])
    u0_inv, _ = mat_inv(ring, u0)

    def _reduced_cols(v: Vertex):
        b = mat_mul(ring, u0_inv, lift_vertex(ring, v))
        rows = b.rows
        t = min(ring.val(x) for row in rows for x in row)
        if t:
            rows = tuple(tuple(ring.shift_down(x, t) for x in row) for row in rows)
        return [tuple(ring.mod_pi(rows[i][j]) for i in range(3)) for j in range(3)]

    v1_basis = _fp_echelon(_reduced_cols(ch.verts[1]), p)
    v2_basis = _fp_echelon(_reduced_cols(ch.verts[2]), p)
    assert len(v1_basis) == 2 and len(v2_basis) == 1
    b1 = v2_basis[0]
    b2 = next(v for v in v1_basis if len(_fp_echelon([b1, v], p)) == 2)
    std = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    b3 = next(v for v in std if len(_fp_echelon(v1_basis + [v], p)) == 3)

    cols = [
        _mat_vec(ring, u0, tuple(ring.from_int(c) for c in bar))
        for bar in (b1, b2, b3)
    ]
    rows = tuple(tuple(cols[j][i] for j in range(3)) for i in range(3))
    det = mat_det_entries(ring, rows)
    s = ring.val(det)
    assert s < ring.M and s % 3 == 0
    unit = ring.shift_down(det, s)
    g = mat_scale_col(ring, ScaledMatrix(rows, 0), 0, ring.inv(unit))
    out = ScaledMatrix(g.rows, s // 3)
    assert mat_det_entries(ring, out.rows) == ring.pi_power(s)
    return out


def build_region(ring: Ring, n: int) -> Region:
    """Enumerate all chambers at distance <= n+1 from the standard chamber."""
    if ring.M < ring.e * (n + 3):
        raise ValueError("precision too small for requested radius")
    work = working_ring(ring, n)
    r = Region(ring, work, n)
    r._intern_chamber(standard_chamber(), 0, IDENTITY)
    queue = collections.deque([0])
    while queue:
        cid = queue.popleft()
        d = r.dist[cid]
        if d > n:
            continue
        for eid in r.chamber_edge_ids[cid]:
            if r.edge_expanded[eid]:
                continue
            r.edge_expanded[eid] = True
            e = r.edges[eid]
            s = gen(edge_label(e))
            for ch in chambers_through_edge(work, e.origin, e.target):
                other = r.chamber_ids.get(ch)
                if other is None:
                    other = r._intern_chamber(ch, d + 1, weyl_mul(r.delta[cid], s))
                    assert weyl_len(r.delta[other]) == d + 1
                    queue.append(other)
                # The panel through an edge has one gate chamber; every
                # other chamber sits one generator beyond it.
                elif r.dist[other] == d:
                    assert r.delta[other] == r.delta[cid]
                elif r.dist[other] == d + 1:
                    assert r.delta[other] == weyl_mul(r.delta[cid], s)
                else:
                    assert r.delta[cid] == weyl_mul(r.delta[other], s)
    for chs in r.edge_chambers:
        chs.sort()
    r._transporters[0] = mat_identity(work)
    return r


def gallery_distance(r: Region, a: int, b: int) -> int:
    """BFS distance within the region's chamber graph."""
    if a == b:
        return 0
    dist = {a: 0}
    queue = collections.deque([a])
    while queue:
        cid = queue.popleft()
        for _, other in r.neighbors(cid):
            if other not in dist:
                dist[other] = dist[cid] + 1
                if other == b:
                    return dist[other]
                queue.append(other)
    raise ValueError("chambers not connected inside the region")


def weyl_distance(r: Region, cid: int) -> WeylElt:
    return r.delta[cid]


def classify_summits(r: Region) -> dict[int, list[SummitRecord]]:
    """One record per vertex of each layer m <= n.

    Layer 0 records the three standard-chamber vertices with summit C.
    A vertex failing the summit conditions (no unique minimal chamber,
    base leaving the previous layer, or stray neighbors below) raises.
    """
    if r._summits is not None:
        return r._summits
    out: dict[int, list[SummitRecord]] = {m: [] for m in range(r.n + 1)}
    for v in standard_chamber().verts:
        vid = r.vertex_ids[v]
        base = _opposite_edge(r, 0, v)
        out[0].append(SummitRecord(vid, 0, 0, base))
    for vid in range(len(r.vertices)):
        m = r.vertex_layer[vid]
        if m == 0 or m > r.n:
            continue
        mins = [cid for cid in r.vertex_chambers[vid] if r.dist[cid] == m]
        if len(mins) != 1:
            raise AssertionError(f"vertex {vid} at layer {m}: {len(mins)} minimal chambers")
        summit = mins[0]
        base = _opposite_edge(r, summit, r.vertices[vid])
        be = r.edges[base]
        base_vids = {r.vertex_ids[be.origin], r.vertex_ids[be.target]}
        if any(r.vertex_layer[b] > m - 1 for b in base_vids):
            raise AssertionError(f"summit base at vertex {vid} leaves layer {m - 1}")
        below = {
            uid
            for uid in _vertex_neighbors(r, vid)
            if r.vertex_layer[uid] <= m - 1
        }
        if below != base_vids:
            raise AssertionError(f"vertex {vid} has neighbors below layer {m} off the base")
        out[m].append(SummitRecord(vid, m, summit, base))
    r._summits = out
    return out


def _opposite_edge(r: Region, cid: int, v: Vertex) -> int:
    return next(
        eid
        for eid in r.chamber_edge_ids[cid]
        if v not in (r.edges[eid].origin, r.edges[eid].target)
    )


def _vertex_neighbors(r: Region, vid: int):
    out = set()
    for eid in r.vertex_edges[vid]:
        e = r.edges[eid]
        for u in (e.origin, e.target):
            uid = r.vertex_ids[u]
            if uid != vid:
                out.add(uid)
    return out


def _odd_pair(i: int) -> tuple[int, int]:
    # X_{i,odd} reaches the two standard vertices of the chamber edge
    # omitting color -i mod 3; this matches the crown labels used by the
    # layer-1 summit families.
    omitted = (3 - i) % 3
    pair = [k for k in range(3) if k != omitted]
    return (pair[0], pair[1])


def vertex_in_x(r: Region, vid: int, i: int, m: int) -> bool:
    half = (m + 1) // 2
    if m % 2 == 0:
        return r.vertex_distance(vid, i) <= half
    a, b = _odd_pair(i)
    return r.vertex_distance(vid, a) <= half and r.vertex_distance(vid, b) <= half


def chamber_in_x(r: Region, cid: int, i: int, m: int) -> bool:
    return all(vertex_in_x(r, r.vertex_ids[v], i, m) for v in r.chambers[cid].verts)


def crowns_at(r: Region, m: int):
    """Layer-m summit records of each X_{i,m}; they partition layer m."""
    got = r._crowns.get(m)
    if got is not None:
        return got
    summits = classify_summits(r)
    if m == 0:
        crowns = tuple(
            tuple(
                rec
                for rec in summits[0]
                if r.vertices[rec.peak] == standard_vertex(i)
            )
            for i in range(3)
        )
    else:
        buckets: tuple[list, list, list] = ([], [], [])
        for rec in summits[m]:
            hits = [i for i in range(3) if chamber_in_x(r, rec.summit, i, m)]
            assert len(hits) == 1, f"summit {rec.summit} in {len(hits)} regions"
            buckets[hits[0]].append(rec)
        crowns = tuple(tuple(b) for b in buckets)
    r._crowns[m] = crowns
    return crowns


def _delta_classes(r: Region, records):
    classes: dict[WeylElt, list[SummitRecord]] = {}
    for rec in records:
        classes.setdefault(r.delta[rec.summit], []).append(rec)
    return list(classes.values())


def _base_gate(r: Region, rec: SummitRecord) -> int:
    """The unique chamber one layer below the summit containing its base."""
    below = [
        cid
        for cid in r.edge_chambers[rec.base_edge]
        if r.dist[cid] == rec.layer - 1
    ]
    assert len(below) == 1
    return below[0]


def sorted_records(r: Region, records):
    return sorted(records, key=lambda rec: r.chambers[rec.summit])


def _anchor_pair(i: int) -> tuple[int, int]:
    pair = [k for k in range(3) if k != (3 - i) % 3]
    return (pair[0], pair[1])


def spheres_at(r: Region, m: int):
    """Ordered spheres of each crown at layer m, outermost classification.

    The end classes are anchored one layer down: their bases are edges
    of previous-layer summits, and the anchor crowns are the pair
    {0,1,2} minus (-i mod 3).  The class anchored at the smaller crown
    index comes first; middle classes follow the peak-adjacency path.
    """
    got = r._spheres.get(m)
    if got is not None:
        return got
    crowns = crowns_at(r, m)
    if m == 1:
        out = [[sorted_records(r, crowns[i])] for i in range(3)]
        r._spheres[m] = out
        return out
    prev_crowns = crowns_at(r, m - 1)
    crown_of_prev = {rec.summit: k for k in range(3) for rec in prev_crowns[k]}
    out = []
    for i in range(3):
        classes = _delta_classes(r, crowns[i])
        anchors = []
        for cls in classes:
            kinds = {crown_of_prev.get(_base_gate(r, rec), -1) for rec in cls}
            assert len(kinds) == 1, "mixed anchors within one Weyl class"
            anchors.append(kinds.pop())
        a, b = _anchor_pair(i)
        first = [t for t, k in enumerate(anchors) if k == a]
        last = [t for t, k in enumerate(anchors) if k == b]
        assert len(first) == 1 and len(last) == 1
        assert all(
            k == -1 for t, k in enumerate(anchors) if t not in (first[0], last[0])
        ), "middle sphere anchored at a summit"
        order = _path_order(r, classes, first[0], last[0])
        out.append([sorted_records(r, classes[t]) for t in order])
    r._spheres[m] = out
    return out


def _path_order(r: Region, classes, first: int, last: int):
    if len(classes) == 1:
        assert first == last == 0
        return [0]
    peak_class = {}
    for t, cls in enumerate(classes):
        for rec in cls:
            peak_class[rec.peak] = t
    adj: dict[int, set[int]] = {t: set() for t in range(len(classes))}
    for t, cls in enumerate(classes):
        for rec in cls:
            for uid in _vertex_neighbors(r, rec.peak):
                tt = peak_class.get(uid)
                if tt is not None and tt != t:
                    adj[t].add(tt)
    order = [first]
    seen = {first}
    while order[-1] != last:
        step = [t for t in adj[order[-1]] if t not in seen]
        assert len(step) == 1, "sphere adjacency is not a path"
        order.append(step[0])
        seen.add(step[0])
    assert len(order) == len(classes)
    return order


@dataclass(frozen=True)
class Classification:
    """Crown and sphere assignment of one layer of a region."""

    layer: int
    crowns: tuple
    spheres: tuple
    extended: tuple


def crowns_and_spheres(r: Region, m: int | None = None) -> Classification:
    if m is None:
        m = r.n
    crowns = crowns_at(r, m)
    spheres = spheres_at(r, m)
    extended = tuple(extended_crown(r, i, m) for i in range(3))
    return Classification(
        layer=m,
        crowns=tuple(tuple(sorted_records(r, c)) for c in crowns),
        spheres=tuple(tuple(tuple(s) for s in sph) for sph in spheres),
        extended=extended,
    )


def x_d_chambers(r: Region, rec: SummitRecord):
    """Chambers whose vertices all lie within distance 1 of the peak."""
    peak = r.vertices[rec.peak]
    out = []
    for cid in r.vertex_chambers[rec.peak]:
        ok = True
        for v in r.chambers[cid].verts:
            if v != peak and vert_distance(r.work, v, peak) > 1:
                ok = False
                break
        if ok:
            out.append(cid)
    return out


def extended_crown(r: Region, i: int, m: int):
    """Vertices within distance 1 of a layer-(m-2) crown peak of X_i.

    Contains the vertex sets of both Crown(X_{i,m-2}) and Crown(X_{i,m}).
    """
    if m < 2:
        return tuple()
    got: set[int] = set()
    for rec in crowns_at(r, m - 2)[i]:
        got.add(rec.peak)
        got.update(_vertex_neighbors(r, rec.peak))
    return tuple(sorted(got))


def _lookahead_bases(r: Region):
    """Base edges of the next layer beyond n, via minimal chambers only."""
    bases = set()
    for vid in range(len(r.vertices)):
        if r.vertex_layer[vid] != r.n + 1:
            continue
        mins = [cid for cid in r.vertex_chambers[vid] if r.dist[cid] == r.n + 1]
        assert len(mins) == 1
        bases.add(_opposite_edge(r, mins[0], r.vertices[vid]))
    return bases


def border_edges(r: Region, m: int):
    """Edges with both endpoints in layer <= m, at least one at layer m,
    that carry the base of a summit further out.

    A border edge joining layer m to a lower layer is the base of
    summits one layer out; one joining two layer-m peaks is the base of
    summits two layers out, so both layers are scanned.
    """
    if not 1 <= m <= r.n - 1:
        raise ValueError("border classification needs two layers beyond m")
    summits = classify_summits(r)
    bases = {rec.base_edge for rec in summits[m + 1]}
    if m + 2 <= r.n:
        bases |= {rec.base_edge for rec in summits[m + 2]}
    else:
        bases |= _lookahead_bases(r)
    out = []
    for eid in sorted(bases):
        e = r.edges[eid]
        lu = r.vertex_layer[r.vertex_ids[e.origin]]
        lv = r.vertex_layer[r.vertex_ids[e.target]]
        if max(lu, lv) == m:
            out.append(eid)
    return out


def standard_hexagon(r: Region):
    """The six apartment chambers around v_0, in cyclic order."""
    ring = r.work
    exps = [
        ((0, 0, 0), (1, 0, 0), (1, 1, 0)),
        ((0, 0, 0), (1, 1, 0), (0, 1, 0)),
        ((0, 0, 0), (0, 1, 0), (0, 1, 1)),
        ((0, 0, 0), (0, 1, 1), (0, 0, 1)),
        ((0, 0, 0), (0, 0, 1), (1, 0, 1)),
        ((0, 0, 0), (1, 0, 1), (1, 0, 0)),
    ]
    ids = []
    for triple in exps:
        verts = []
        for ex in triple:
            cols = [
                tuple(
                    ring.pi_power(ex[j]) if i == j else ring.zero()
                    for i in range(3)
                )
                for j in range(3)
            ]
            verts.append(canonicalize_columns(ring, cols))
        ids.append(r.chamber_ids[chamber_from_vertices(verts)])
    assert len(set(ids)) == 6
    return ids


def _closed_walks_below_six(r: Region, max_dist: int):
    """Witnesses of closed non-backtracking panel walks of length 3 to 5.

    A short cycle splits at a basepoint into two panel-disjoint walks
    with distinct first and last panels, so matching walk pairs of
    lengths (1,2), (2,2) and (2,3) is exhaustive.
    """
    allowed = [d <= max_dist for d in r.dist]
    witnesses = []
    for start in range(len(r.chambers)):
        if not allowed[start]:
            continue
        frontier = [
            (other, eid, eid)
            for eid, other in r.neighbors(start)
            if allowed[other]
        ]
        walks = {1: frontier}
        for length in (2, 3):
            nxt = []
            for cur, first, prev in walks[length - 1]:
                for eid, other in r.neighbors(cur):
                    if eid == prev or other == start or not allowed[other]:
                        continue
                    nxt.append((other, first, eid))
            walks[length] = nxt
        for la, lb in ((1, 2), (2, 2), (2, 3)):
            ends: dict[int, list] = {}
            for cur, first, prev in walks[la]:
                ends.setdefault(cur, []).append((first, prev))
            for cur, first, prev in walks[lb]:
                for fa, pa in ends.get(cur, ()):
                    if fa != first and pa != prev:
                        witnesses.append((start, cur, la + lb))
                        if len(witnesses) >= 3:
                            return witnesses
    return witnesses


def peak_graph(r: Region, i: int, m: int):
    """Peak adjacency between consecutive spheres S_1, S_2 of crown i."""
    sph = spheres_at(r, m)[i]
    assert len(sph) >= 2
    left = [rec.peak for rec in sph[0]]
    right = [rec.peak for rec in sph[1]]
    right_set = set(right)
    found = []
    for vid in left:
        for eid in r.vertex_edges[vid]:
            e = r.edges[eid]
            for u in (e.origin, e.target):
                uid = r.vertex_ids[u]
                if uid in right_set:
                    found.append((vid, uid, eid))
    return left, right, found


# End-class anchoring: (crown, end) -> (anchor crown, anchor sphere).
# Computed in the standard apartment; the convention above pins crown 0,
# and parity self-similarity repeats the table at every layer.
_END_ANCHOR = {
    (0, 0): (1, 0),
    (0, 1): (2, 0),
    (1, 0): (0, 0),
    (1, 1): (1, -1),
    (2, 0): (0, -1),
    (2, 1): (2, -1),
}


@dataclass
class StructureReport:
    checks: list

    @property
    def ok(self) -> bool:
        return all(okay for _, okay, _ in self.checks)

    def failures(self):
        return [(name, w) for name, okay, w in self.checks if not okay]


def verify_structure(r: Region) -> StructureReport:
    checks = []
    p = r.p
    n = r.n
    q = p

    bad = [
        eid
        for eid in range(len(r.edges))
        if r.edge_layer[eid] <= n and len(r.edge_chambers[eid]) != p + 1
    ]
    checks.append(("edge-chamber-count", not bad, bad[:3] or None))

    shared: dict[tuple[int, int], int] = {}
    for chs in r.edge_chambers:
        for x in range(len(chs)):
            for y in range(x + 1, len(chs)):
                key = (chs[x], chs[y])
                shared[key] = shared.get(key, 0) + 1
    multi = [k for k, c in shared.items() if c > 1]
    checks.append(("single-shared-panel", not multi, multi[:3] or None))

    short = _closed_walks_below_six(r, n)
    checks.append(("girth-at-least-six", not short, short[:3] or None))
    if n >= 3:
        hexa = standard_hexagon(r)
        panel_ids = []
        okhex = True
        for k in range(6):
            a, b = hexa[k], hexa[(k + 1) % 6]
            common = set(r.chamber_edge_ids[a]) & set(r.chamber_edge_ids[b])
            if len(common) != 1:
                okhex = False
                break
            panel_ids.append(common.pop())
        okhex = okhex and len(set(panel_ids)) == 6
        checks.append(("six-cycle-witness", okhex, hexa))

    summits = classify_summits(r)
    summit_of = {rec.peak: rec for m in range(n + 1) for rec in summits[m]}

    count_bad = []
    for m in range(1, n + 1):
        want = 3 * sphere_count(m) * q**m
        if len(summits[m]) != want:
            count_bad.append((m, len(summits[m]), want))
        layer = len(r.chambers_at(m))
        if layer != 3 * m * q**m:
            count_bad.append(("chambers", m, layer))
    checks.append(("layer-counts", not count_bad, count_bad[:3] or None))

    join_bad = []
    for m in range(1, n + 1):
        layer_peaks = {rec.peak for rec in summits[m]}
        for rec in summits[m]:
            base_u = _base_vids(r, rec)
            for eid in r.vertex_edges[rec.peak]:
                other = _other_end(r, eid, rec.peak)
                if other not in layer_peaks or other <= rec.peak:
                    continue
                base_v = _base_vids(r, summit_of[other])
                joins = []
                for cid in r.chambers_through(eid):
                    if r.dist[cid] != m + 1:
                        continue
                    third = next(
                        r.vertex_ids[v]
                        for v in r.chambers[cid].verts
                        if r.vertex_ids[v] not in (rec.peak, other)
                    )
                    if third in base_u and third in base_v:
                        joins.append(cid)
                if len(joins) != 1:
                    join_bad.append((rec.peak, other, joins))
    checks.append(("peak-joining-chamber", not join_bad, join_bad[:3] or None))

    weyl_bad = []
    for m in range(1, n + 1):
        for rec in summits[m]:
            for eid in r.chamber_edge_ids[rec.summit]:
                if eid == rec.base_edge:
                    continue
                ups = {
                    r.delta[cid]
                    for cid in r.edge_chambers[eid]
                    if cid != rec.summit
                }
                if len(ups) != 1:
                    weyl_bad.append((rec.summit, eid))
    checks.append(("weyl-invariant-side-panels", not weyl_bad, weyl_bad[:3] or None))

    part_bad = []
    for m in range(1, n + 1):
        layer_peaks = {rec.peak for rec in summits[m]}
        member = {}
        for rec in summits[m]:
            hits = [i for i in range(3) if vertex_in_x(r, rec.peak, i, m)]
            if len(hits) != 1:
                part_bad.append((rec.peak, hits))
            else:
                member[rec.peak] = hits[0]
        for rec in summits[m]:
            for uid in _vertex_neighbors(r, rec.peak):
                if uid in layer_peaks and member.get(uid) != member.get(rec.peak):
                    part_bad.append((rec.peak, uid))
    checks.append(("region-partition", not part_bad, part_bad[:3] or None))

    dp_bad = []
    for m in range(1, n + 1):
        sph = spheres_at(r, m)
        delta_count: dict[WeylElt, int] = {}
        for cid in r.chambers_at(m):
            delta_count[r.delta[cid]] = delta_count.get(r.delta[cid], 0) + 1
        for i in range(3):
            if len(sph[i]) != sphere_count(m):
                dp_bad.append(("sphere-count", m, i, len(sph[i])))
                continue
            peak_sphere = {}
            for j, cls in enumerate(sph[i]):
                if len(cls) != q**m:
                    dp_bad.append(("sphere-size", m, i, j, len(cls)))
                w = r.delta[cls[0].summit]
                if delta_count.get(w) != len(cls):
                    dp_bad.append(("sphere-not-pure", m, i, j))
                for rec in cls:
                    peak_sphere[rec.peak] = j
            for j, cls in enumerate(sph[i]):
                for rec in cls:
                    nb: dict[int, list[int]] = {}
                    for uid in _vertex_neighbors(r, rec.peak):
                        jj = peak_sphere.get(uid)
                        if jj is not None:
                            nb.setdefault(jj, []).append(uid)
                    if any(jj not in (j - 1, j + 1) for jj in nb):
                        dp_bad.append(("adjacent-spheres", m, i, rec.peak))
                    bases = [
                        summit_of[u].base_edge for us in nb.values() for u in us
                    ]
                    if len(bases) != len(set(bases)):
                        dp_bad.append(("distinct-bases", m, i, rec.peak))
                    for jj in (j - 1, j + 1):
                        if 0 <= jj < len(sph[i]) and len(nb.get(jj, ())) != q:
                            dp_bad.append(("neighbor-count", m, i, rec.peak, jj))
        if m < 2:
            continue
        prev_sph = spheres_at(r, m - 1)
        prev_index = {}
        for k in range(3):
            for j, cls in enumerate(prev_sph[k]):
                for rec in cls:
                    prev_index[rec.summit] = (k, j)
        for i in range(3):
            ends = {0: _END_ANCHOR[(i, 0)], len(sph[i]) - 1: _END_ANCHOR[(i, 1)]}
            for j, (ak, aj) in ends.items():
                target = aj % len(prev_sph[ak])
                for rec in sph[i][j]:
                    got = prev_index.get(_base_gate(r, rec))
                    if got != (ak, target):
                        dp_bad.append(("end-anchor", m, i, j, rec.peak, got))
            if m >= 4:
                prev2_sph = spheres_at(r, m - 2)
                peak_prev2 = {}
                for j, cls in enumerate(prev2_sph[i]):
                    for rec in cls:
                        peak_prev2[rec.peak] = j
                for t in range(1, len(sph[i]) - 1):
                    for rec in sph[i][t]:
                        got = sorted(
                            peak_prev2.get(u, -1) for u in _base_vids(r, rec)
                        )
                        if got != [t - 1, t]:
                            dp_bad.append(("middle-base", m, i, t, rec.peak, got))
    checks.append(("sphere-structure", not dp_bad, dp_bad[:3] or None))

    # A border edge joining layer m to a lower layer lies in a unique
    # chamber of the region, its summit; one joining two layer-m peaks
    # lies in no layer-m chamber, only the joining chamber one further
    # out and summits two further out.
    border_bad = []
    for m in range(1, n):
        for eid in border_edges(r, m):
            e = r.edges[eid]
            lu = r.vertex_layer[r.vertex_ids[e.origin]]
            lv = r.vertex_layer[r.vertex_ids[e.target]]
            dists = sorted(r.dist[c] for c in r.chambers_through(eid))
            if min(lu, lv) < m:
                want = [m] + [m + 1] * p
            else:
                want = [m + 1] + [m + 2] * p
            if dists != want:
                border_bad.append((m, eid, dists))
    checks.append(("border-gate-profile", not border_bad, border_bad[:3] or None))

    ext_bad = []
    for m in range(2, n + 1):
        for i in range(3):
            ext = set(extended_crown(r, i, m))
            for mm in (m - 2, m):
                for rec in crowns_at(r, mm)[i]:
                    vids = {r.vertex_ids[v] for v in r.chambers[rec.summit].verts}
                    if not vids <= ext:
                        ext_bad.append((m, i, rec.summit))
    checks.append(("extended-crown-contains", not ext_bad, ext_bad[:3] or None))

    if p == 2 and n >= 2:
        left, right, found = peak_graph(r, 0, 2)
        deg: dict[int, int] = {}
        for a, b, _ in found:
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        ok7 = (
            len(left) == 4
            and len(right) == 4
            and len(found) == 8
            and all(deg.get(v) == 2 for v in left + right)
        )
        if ok7:
            nbm: dict[int, list[int]] = {}
            for a, b, _ in found:
                nbm.setdefault(a, []).append(b)
                nbm.setdefault(b, []).append(a)
            start = left[0]
            prev, cur = start, nbm[start][0]
            length = 1
            while cur != start:
                step = [u for u in nbm[cur] if u != prev]
                if len(step) != 1:
                    ok7 = False
                    break
                prev, cur = cur, step[0]
                length += 1
            ok7 = ok7 and length == 8
        if ok7 and n >= 3:
            in_x02 = {
                eid
                for eid in range(len(r.edges))
                if all(
                    vertex_in_x(r, r.vertex_ids[u], 0, 2)
                    and r.vertex_layer[r.vertex_ids[u]] == 2
                    for u in (r.edges[eid].origin, r.edges[eid].target)
                )
            }
            ok7 = {eid for _, _, eid in found} == set(border_edges(r, 2)) & in_x02
        checks.append(("bipartite-eight-cycle", ok7, (len(left), len(right), len(found))))

    return StructureReport(checks)


def _base_vids(r: Region, rec: SummitRecord):
    e = r.edges[rec.base_edge]
    return {r.vertex_ids[e.origin], r.vertex_ids[e.target]}


def _other_end(r: Region, eid: int, vid: int) -> int:
    e = r.edges[eid]
    o, t = r.vertex_ids[e.origin], r.vertex_ids[e.target]
    return t if o == vid else o


def region_dot(r: Region, overlay: str = "distance") -> str:
    """Chamber graph in DOT form, core layers only."""
    label = {}
    if overlay == "spheres" and r.n >= 1:
        for i in range(3):
            for j, cls in enumerate(spheres_at(r, r.n)[i]):
                for rec in cls:
                    label[rec.summit] = f"X{i}S{j + 1}"
    lines = ["graph region {"]
    for cid in r.core_ids():
        extra = f' xlabel="{label[cid]}"' if cid in label else ""
        lines.append(f'  c{cid} [label="{r.dist[cid]}"{extra}];')
    seen = set()
    for chs in r.edge_chambers:
        core = [c for c in chs if r.dist[c] <= r.n]
        for x in range(len(core)):
            for y in range(x + 1, len(core)):
                key = (core[x], core[y])
                if key not in seen:
                    seen.add(key)
                    lines.append(f"  c{key[0]} -- c{key[1]};")
    lines.append("}")
    return "\n".join(lines)


def region_json(r: Region) -> dict:
    summits = classify_summits(r)
    return {
        "p": r.p,
        "e": r.ring.e,
        "n": r.n,
        "chambers": r.chamber_count(),
        "layers": {str(d): len(r.chambers_at(d)) for d in range(r.n + 1)},
        "peaks": {str(m): len(summits[m]) for m in range(1, r.n + 1)},
    }
