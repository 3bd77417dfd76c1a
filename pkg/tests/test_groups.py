"""Fixator shapes, generator families, orbits, and the fact battery."""

from __future__ import annotations

import pytest

from titsforge.atlas import build_region
from titsforge.groups import (
    SHAPE_I,
    SHAPE_S,
    SHAPE_T,
    congruence_shape,
    facet_subgroup,
    generators,
    is_rational,
    orbit,
    principal_congruence,
    rational_generators,
    shape_membership,
    special_subgroups,
    standard_handle,
    summit_configurations,
    verify_group_facts,
)
from titsforge.lattices import act_on_chamber, act_on_vertex, edge_label
from titsforge.residue import (
    Ring,
    mat_diag,
    mat_elementary,
    mat_eq,
    mat_identity,
    mat_inv,
    mat_mul,
)

_CACHE: dict = {}


def _region(p: int, e: int, n: int):
    key = (p, e, n)
    if key not in _CACHE:
        _CACHE[key] = build_region(Ring(p, e, max(8, e * (n + 3))), n)
    return _CACHE[key]


def _e(ring, i, j, t):
    return mat_elementary(ring, i, j, ring.pi_power(t))


def _base_vertex(r):
    """Vertex id of the color-0 corner of the base chamber."""
    hits = [
        vid
        for vid in r.vertex_ids.values()
        if r.vertex_layer[vid] == 0 and r.vertices[vid].color == 0
    ]
    assert len(hits) == 1
    return hits[0]


def test_standard_shape_membership_pins():
    ring = _region(2, 1, 1).work
    assert shape_membership(ring, SHAPE_I, _e(ring, 0, 1, 0))
    assert shape_membership(ring, SHAPE_I, _e(ring, 0, 2, 0))
    assert not shape_membership(ring, SHAPE_I, _e(ring, 1, 0, 0))
    assert shape_membership(ring, SHAPE_I, _e(ring, 1, 0, 1))
    assert not shape_membership(ring, SHAPE_I, _e(ring, 2, 0, 0))
    u = ring.add(ring.one(), ring.pi())
    dv = mat_diag(ring, (u, ring.inv(u), ring.one()))
    assert shape_membership(ring, SHAPE_I, dv)
    k1 = congruence_shape(1)
    assert shape_membership(ring, k1, dv)
    assert shape_membership(ring, k1, _e(ring, 0, 1, 1))
    assert not shape_membership(ring, k1, _e(ring, 0, 1, 0))


def test_congruence_levels_nest():
    ring = _region(2, 1, 1).work
    for m in (1, 2):
        h = principal_congruence(ring, m)
        for g in generators(ring, h, m + 2).elements:
            assert shape_membership(ring, congruence_shape(m), g)
            if m == 2:
                assert shape_membership(ring, congruence_shape(1), g)
    assert not shape_membership(ring, congruence_shape(2), _e(ring, 0, 1, 1))


def test_summit_shapes_sandwich_first_congruence():
    ring = _region(2, 1, 1).work
    k1 = principal_congruence(ring, 1)
    for sh in (SHAPE_T, SHAPE_S):
        for g in generators(ring, k1, 3).elements:
            assert shape_membership(ring, sh, g)
    for sh in (SHAPE_T, SHAPE_S):
        own = generators(ring, standard_handle(ring, "t", sh), 2).elements
        assert all(shape_membership(ring, SHAPE_I, g) for g in own)
    # the two shapes differ in which unit entry they admit
    assert shape_membership(ring, SHAPE_T, _e(ring, 1, 2, 0))
    assert not shape_membership(ring, SHAPE_S, _e(ring, 1, 2, 0))
    assert shape_membership(ring, SHAPE_S, _e(ring, 0, 1, 0))
    assert not shape_membership(ring, SHAPE_T, _e(ring, 0, 1, 0))


def test_facet_fixators_at_base_chamber():
    r = _region(2, 1, 2)
    ring = r.work
    h = facet_subgroup(r, ("chamber", 0), "I")
    assert h.base is SHAPE_I
    assert mat_eq(ring, h.conj, mat_identity(ring))
    v0 = _base_vertex(r)
    hv = facet_subgroup(r, ("vertex", v0), "I")
    assert hv.base == congruence_shape(1)
    ch = r.chambers[0]
    for g in generators(ring, h, 2).elements:
        assert act_on_chamber(ring, g, ch) == ch
    # label-1 edge of the base chamber: the unit upper-corner entry is
    # allowed in its fixator but not in the chamber fixator
    eids = r.chamber_edge_ids[0]
    by_label = {edge_label(r.edges[eid]): eid for eid in eids}
    assert set(by_label) == {0, 1, 2}
    hs1 = facet_subgroup(r, ("edge", by_label[1]), "I")
    x = _e(ring, 0, 2, 0)
    assert shape_membership(ring, hs1, x)
    assert shape_membership(ring, hs1, _e(ring, 0, 1, 0))
    assert not shape_membership(ring, hs1, _e(ring, 1, 0, 0))
    e = r.edges[by_label[1]]
    assert act_on_vertex(ring, x, e.origin) == e.origin
    assert act_on_vertex(ring, x, e.target) == e.target


def test_facet_fixator_generators_fix_their_facet():
    r = _region(2, 1, 2)
    ring = r.work
    for cid in (0, r.chambers_at(1)[0], r.chambers_at(2)[0]):
        h = facet_subgroup(r, ("chamber", cid), "I")
        ch = r.chambers[cid]
        for g in generators(ring, h, 2).elements:
            assert act_on_chamber(ring, g, ch) == ch
    for eid in list(r.edge_ids.values())[:6]:
        h = facet_subgroup(r, ("edge", eid), "I")
        e = r.edges[eid]
        for g in generators(ring, h, 2).elements:
            assert act_on_vertex(ring, g, e.origin) == e.origin
            assert act_on_vertex(ring, g, e.target) == e.target


def test_full_stabilizer_adds_residue_torus():
    r = _region(3, 1, 2)
    ring = r.work
    c = ring.from_int(2)
    dv = mat_diag(ring, (c, ring.inv(c), ring.one()))
    hj = facet_subgroup(r, ("chamber", 0), "J")
    hi = facet_subgroup(r, ("chamber", 0), "I")
    assert shape_membership(ring, hj, dv)
    assert not shape_membership(ring, hi, dv)
    assert act_on_chamber(ring, dv, r.chambers[0]) == r.chambers[0]


def test_conjugated_fixator_matches_transport():
    """Membership after conjugation agrees with moving the facet back."""
    r = _region(2, 1, 2)
    ring = r.work
    cid = r.chambers_at(2)[1]
    h = facet_subgroup(r, ("chamber", cid), "I")
    t = r.transporter(cid)
    t_inv = r.transporter_inv(cid)
    for g in generators(ring, facet_subgroup(r, ("chamber", 0), "I"), 2).elements:
        moved = mat_mul(ring, t, mat_mul(ring, g, t_inv))
        assert shape_membership(ring, h, moved)
    for g in generators(ring, h, 2).elements:
        assert act_on_chamber(ring, g, r.chambers[cid]) == r.chambers[cid]


def test_rational_generators_respect_subfield():
    r = _region(2, 2, 2)
    ring = r.work
    h = facet_subgroup(r, ("chamber", 0), "I")
    gs = rational_generators(ring, h, 4)
    assert gs.rational
    assert all(is_rational(ring, g) for g in gs.elements)
    full = generators(ring, h, 4)
    assert len(gs.elements) < len(full.elements)
    # odd-level witnesses exist in the full family but are irrational
    assert any(not is_rational(ring, g) for g in full.elements)


def test_unramified_ground_ring_is_all_rational():
    ring = _region(2, 1, 1).work
    h = facet_subgroup(_region(2, 1, 1), ("chamber", 0), "I")
    full = generators(ring, h, 3)
    rat = rational_generators(ring, h, 3)
    assert len(full.elements) == len(rat.elements)
    assert all(is_rational(ring, g) for g in full.elements)


def test_orbit_of_base_chamber_under_congruence_is_trivial():
    r = _region(2, 1, 2)
    ring = r.work
    gens = generators(ring, principal_congruence(ring, 1), 3)
    res = orbit(gens, r.chambers[0], r)
    assert res.members == (r.chambers[0],)
    assert not res.escaped


def test_orbit_is_deterministic():
    r = _region(2, 1, 2)
    ring = r.work
    gens = generators(ring, facet_subgroup(r, ("chamber", 0), "I"), 2)
    seed = r.chambers[r.chambers_at(1)[0]]
    first = orbit(gens, seed, r)
    second = orbit(gens, seed, r)
    assert first.members == second.members
    assert first.words == second.words
    assert [g.rows for g in first.elts] == [g.rows for g in second.elts]


def test_orbit_transporter_moves_seed():
    r = _region(2, 1, 2)
    ring = r.work
    gens = generators(ring, facet_subgroup(r, ("chamber", 0), "I"), 2)
    seed = r.chambers[r.chambers_at(1)[0]]
    res = orbit(gens, seed, r)
    assert len(res.members) == r.p
    for ch in res.members:
        got = act_on_chamber(ring, res.transporter(ch), seed)
        assert got == ch


def test_summit_configurations_over_base_vertex():
    r = _region(2, 1, 3)
    v0 = _base_vertex(r)
    cfgs = summit_configurations(r, v0)
    assert cfgs
    for cfg in cfgs:
        assert cfg.peak_vid == v0
        edge_ids = set(r.chamber_edge_ids[cfg.summit])
        assert cfg.e_edge in edge_ids and cfg.f_edge in edge_ids
        for eid in (cfg.e_edge, cfg.f_edge):
            e = r.edges[eid]
            assert v0 in (r.vertex_ids[e.origin], r.vertex_ids[e.target])
        assert cfg.pairs
        for E, F in cfg.pairs:
            assert E in cfg.outer_f and F in cfg.outer_e


def test_summit_configurations_reject_deep_peaks():
    r = _region(2, 1, 3)
    deep = next(
        vid for vid in range(len(r.vertices)) if r.vertex_layer[vid] == r.n
    )
    with pytest.raises(ValueError):
        summit_configurations(r, deep)


def test_special_subgroup_pair_over_base_vertex():
    r = _region(2, 1, 3)
    ring = r.work
    v0 = _base_vertex(r)
    cfg = next(c for c in summit_configurations(r, v0) if c.summit == 0)
    E, F = cfg.pairs[0]
    He, Hf = special_subgroups(r, v0, E, F)
    assert {He.base, Hf.base} == {SHAPE_T, SHAPE_S}
    peak = r.vertices[v0]
    chE, chF = r.chambers[E], r.chambers[F]
    for h, fixed in ((He, chF), (Hf, chE)):
        gs = generators(ring, h, 2)
        assert gs.elements
        for g in gs.elements:
            assert act_on_vertex(ring, g, peak) == peak
            assert act_on_chamber(ring, g, fixed) == fixed
    He2, Hf2 = special_subgroups(r, v0, E, F)
    assert He2.base == He.base and Hf2.base == Hf.base
    assert He2.conj.rows == He.conj.rows


def test_special_subgroups_reject_unpaired_chambers():
    r = _region(2, 1, 3)
    v0 = _base_vertex(r)
    with pytest.raises(ValueError):
        special_subgroups(r, v0, 0, 0)


def test_group_fact_battery_unramified():
    rep = verify_group_facts(_region(2, 1, 3), seed=0)
    assert rep.ok
    notes = dict((name, note) for name, okc, note in rep.checks)
    assert str(notes["rational-congruence-shrink"]).startswith("skipped")


def test_group_fact_battery_ramified():
    rep = verify_group_facts(_region(2, 2, 3), seed=0)
    assert rep.ok
    notes = dict((name, note) for name, okc, note in rep.checks)
    assert not str(notes["rational-congruence-shrink"]).startswith("skipped")
