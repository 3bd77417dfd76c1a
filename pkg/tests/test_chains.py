"""Decorated actions, invariant bases, chain maps, and the solver."""

from __future__ import annotations

import random

import pytest

from titsforge.residue import Ring, mat_identity, mat_mul
from titsforge.atlas import build_region
from titsforge.groups import facet_subgroup, generators
from titsforge.chains import (
    Chain,
    DecoratedChamber,
    LinearSystemGFp,
    RowSpaceGFp,
    chamber_set_tag,
    chain_act,
    chain_add,
    chain_eq,
    chain_json,
    chain_scale,
    decorations,
    delta_aug,
    delta_tag,
    eps0,
    eps1,
    express_in_basis,
    g_act_on_x,
    invariant_basis,
    random_chain,
    solve_in_subspace,
    subspace_image_compare,
    tag_chambers,
    tag_edges,
    tag_vertices,
    verify_chain_facts,
    zero_chain,
)

_CACHE = {}


def _region(p, e, n):
    key = (p, e, n)
    if key not in _CACHE:
        _CACHE[key] = build_region(Ring(p, e, max(8, e * (n + 3))), n)
    return _CACHE[key]


def test_decorations_are_the_unit_norm_triples():
    assert decorations(2) == [(1, 1, 1)]
    d3 = decorations(3)
    assert len(d3) == 4
    assert all((a * b * c) % 3 == 1 for a, b, c in d3)
    assert len(decorations(5)) == 16


def test_action_is_a_permutation_with_identity():
    r = _region(2, 1, 3)
    rng = random.Random(5)
    one = mat_identity(r.work)
    iw = generators(r.work, facet_subgroup(r, ("chamber", 0), "I"), 2)
    for _ in range(10):
        cid = rng.randrange(len(r.chambers))
        while r.dist[cid] > 2:
            cid = rng.randrange(len(r.chambers))
        x = {DecoratedChamber(cid, (1, 1, 1)): 1}
        assert g_act_on_x(r, one, x) == x
        g, h = rng.choice(iw.elements), rng.choice(iw.elements)
        gh = mat_mul(r.work, g, h)
        assert g_act_on_x(r, gh, x) == g_act_on_x(r, g, g_act_on_x(r, h, x))


def test_region_tags_select_facets_by_vertices():
    r = _region(2, 1, 3)
    t0 = delta_tag(r, 0)
    assert len(t0.vertices) == 3
    assert tag_chambers(r, t0) == [0]
    assert sorted(tag_edges(r, t0)) == sorted(r.chamber_edge_ids[0])
    assert tag_vertices(r, t0) == sorted(t0.vertices)
    t1 = delta_tag(r, 1)
    assert len(t1.vertices) == 9
    assert len(tag_chambers(r, t1)) == 7
    same = chamber_set_tag(r, [0], "base")
    assert same.vertices == t0.vertices
    with pytest.raises(ValueError):
        delta_tag(r, r.n + 1)


def test_base_chamber_invariants_are_decorations():
    r = _region(2, 1, 3)
    b = invariant_basis(r, ("chamber", 0), 0)
    assert b.incomplete == 0
    assert len(b.vectors) == 1
    ((dc, coeff),) = b.vectors[0]
    assert dc == DecoratedChamber(0, (1, 1, 1)) and coeff == 1


def test_congruence_ball_orbit_structure():
    # the vertex fixator moves only the opposite-panel neighbors,
    # which fall into a single orbit of size p
    for p in (2, 3):
        r = _region(p, 1, 2)
        v0 = next(
            vid
            for vid in range(len(r.vertices))
            if r.vertex_layer[vid] == 0 and r.vertices[vid].color == 0
        )
        b = invariant_basis(r, ("vertex", v0), 1)
        sizes = sorted(len(vec) for vec in b.vectors)
        k = (p - 1) ** 2
        assert b.incomplete == 0
        assert sizes == [1] * (1 + 2 * p) * k + [p] * k


def test_invariant_basis_is_cached_and_deterministic():
    r = _region(2, 1, 3)
    a = invariant_basis(r, ("edge", 0), 2)
    b = invariant_basis(r, ("edge", 0), 2)
    assert a is b
    fresh = build_region(Ring(2, 1, 8), 3)
    c = invariant_basis(fresh, ("edge", 0), 2)
    assert a.vectors == c.vectors and a.incomplete == c.incomplete


def test_express_in_basis_roundtrip():
    r = _region(2, 1, 3)
    rng = random.Random(11)
    basis = invariant_basis(r, ("edge", 0), 2)
    coeffs = tuple(rng.randrange(r.p) for _ in basis.vectors)
    x = {}
    for c, vec in zip(coeffs, basis.vectors):
        for dc, w in vec:
            if c:
                x[dc] = (c * w) % r.p
    assert express_in_basis(r, ("edge", 0), 2, x) == coeffs
    # breaking one coordinate of a multi-member orbit leaves the span
    wide = next(vec for vec in basis.vectors if len(vec) > 1)
    dc0 = wide[0][0]
    x[dc0] = (x.get(dc0, 0) + 1) % r.p
    bad = {k: v for k, v in x.items() if v}
    assert express_in_basis(r, ("edge", 0), 2, bad) is None


def test_triangle_boundary_hits_its_three_edges():
    r = _region(2, 1, 3)
    t0 = delta_tag(r, 0)
    x = {DecoratedChamber(0, (1, 1, 1)): 1}
    gamma = Chain(2, t0, 2, {0: x})
    b = eps1(r, gamma)
    assert sorted(b.values) == sorted(r.chamber_edge_ids[0])
    assert all(v == x for v in b.values.values())
    a = eps0(r, b)
    assert delta_aug(r, a) == {}


def test_edge_boundary_signs_by_orientation():
    r = _region(2, 1, 3)
    t0 = delta_tag(r, 0)
    eid = r.chamber_edge_ids[0][0]
    x = {DecoratedChamber(0, (1, 1, 1)): 1}
    beta = Chain(1, t0, 2, {eid: x})
    a = eps0(r, beta)
    e = r.edges[eid]
    tv, ov = r.vertex_ids[e.target], r.vertex_ids[e.origin]
    assert a.values[tv] == x
    assert a.values[ov] == {DecoratedChamber(0, (1, 1, 1)): r.p - 1}


def test_chain_arithmetic():
    r = _region(2, 1, 3)
    rng = random.Random(3)
    t1 = delta_tag(r, 1)
    a = random_chain(r, t1, 1, 2, rng)
    b = random_chain(r, t1, 1, 2, rng)
    s = chain_add(r.p, a, b)
    assert chain_eq(chain_add(r.p, s, b, r.p - 1), a)
    assert chain_eq(chain_scale(r.p, a, 0), zero_chain(1, t1, 2))


def test_boundary_maps_commute_with_the_action():
    r = _region(2, 1, 3)
    rng = random.Random(7)
    iw = generators(r.work, facet_subgroup(r, ("chamber", 0), "I"), 2)
    t1 = delta_tag(r, 1)
    for _ in range(5):
        g = rng.choice(iw.elements)
        beta = random_chain(r, t1, 1, 2, rng)
        assert chain_eq(eps0(r, chain_act(r, g, beta)), chain_act(r, g, eps0(r, beta)))
        gamma = random_chain(r, t1, 2, 2, rng)
        assert chain_eq(eps1(r, chain_act(r, g, gamma)), chain_act(r, g, eps1(r, gamma)))


def test_linear_system_solves_and_certifies():
    for p in (2, 3):
        sys = LinearSystemGFp(p, 2)
        rows = [{0: 1, 1: 1}, {0: 1}, {1: 1}]
        for row in rows:
            sys.add_row(row)
        assert sys.rank == 2
        b = {0: 1}
        # b violates the dependency row0 = row1 + row2
        status, x = sys.solve(b)
        assert status == "infeasible"
        lam = dict(x["combination"])
        for col in (0, 1):
            assert sum(lam.get(i, 0) * rows[i].get(col, 0) for i in range(3)) % p == 0
        assert sum(lam.get(i, 0) * b.get(i, 0) for i in range(3)) % p == x["value"] != 0
        status, x = sys.solve({0: (1 + 1) % p, 1: 1, 2: 1})
        assert status == "ok"
        for i, row in enumerate(rows):
            want = [(1 + 1) % p, 1, 1][i]
            assert sum(v * x[c] for c, v in row.items()) % p == want


def test_rowspace_membership():
    rs = RowSpaceGFp(3)
    assert rs.insert({0: 1, 2: 1})
    assert rs.insert({1: 1, 2: 2})
    assert rs.rank == 2
    assert not rs.insert({0: 2, 1: 1, 2: 1})
    assert rs.reduce({0: 1, 1: 2, 2: 2}) == {}
    assert rs.reduce({2: 1}) != {}


def test_solver_round_trip_on_the_base_chamber():
    r = _region(2, 1, 3)
    rng = random.Random(13)
    t0 = delta_tag(r, 0)
    beta = random_chain(r, t0, 1, 2, rng)
    rep = solve_in_subspace(r, eps0(r, beta), t0, 2)
    assert rep.status == "solved" and not rep.retried
    assert chain_eq(eps0(r, rep.chain), eps0(r, beta))
    zrep = solve_in_subspace(r, zero_chain(0, t0, 2), t0, 2)
    assert zrep.status == "solved" and zrep.chain.values == {}


def test_solver_retries_at_deeper_truncation():
    r = _region(2, 1, 3)
    t0 = delta_tag(r, 0)
    eid = r.chamber_edge_ids[0][0]
    deep = next(
        vec
        for vec in invariant_basis(r, ("edge", eid), 3).vectors
        if max(r.dist[dc.chamber] for dc, _ in vec) == 3
    )
    beta = Chain(1, t0, 3, {eid: dict(deep)})
    target = eps0(r, beta)
    rep = solve_in_subspace(r, target, t0, 2)
    assert rep.status == "solved" and rep.retried
    assert rep.N == 3 and rep.advisory == "truncation-too-small"
    assert chain_eq(eps0(r, rep.chain), target)


def test_solver_reports_infeasible_with_certificate():
    r = _region(2, 1, 3)
    t0 = delta_tag(r, 0)
    vid = sorted(t0.vertices)[0]
    bad = Chain(0, t0, 2, {vid: {DecoratedChamber(0, (1, 1, 1)): 1}})
    rep = solve_in_subspace(r, bad, t0, 2)
    # augmentation is nonzero, so no preimage exists at any truncation
    assert rep.status == "infeasible" and rep.retried
    assert rep.certificate is not None and rep.certificate["value"] != 0


def test_image_compare_is_reflexive_and_monotone():
    r = _region(2, 1, 3)
    t0 = delta_tag(r, 0)
    t1 = delta_tag(r, 1)
    core = [r.vertex_ids[v] for v in r.chambers[0].verts]
    same = subspace_image_compare(r, t0, t0, core, 2)
    assert same["contained"] and same["witness"] is None
    nest = subspace_image_compare(r, t1, t0, core, 2)
    assert nest["rank2"] <= nest["rank1"]
    assert nest["rank1_restricted"] <= nest["rank1"]


def test_chain_json_is_deterministic():
    r = _region(2, 1, 3)
    rng = random.Random(17)
    beta = random_chain(r, delta_tag(r, 1), 1, 2, rng)
    fresh = build_region(Ring(2, 1, 8), 3)
    beta2 = random_chain(fresh, delta_tag(fresh, 1), 1, 2, random.Random(17))
    assert chain_json(r, beta) == chain_json(fresh, beta2)


def test_chain_fact_battery_unramified():
    rep = verify_chain_facts(_region(2, 1, 3))
    assert rep.ok, rep.failures()


def test_chain_fact_battery_ramified():
    rep = verify_chain_facts(_region(2, 2, 3))
    assert rep.ok, rep.failures()


def test_chain_fact_battery_odd_prime():
    rep = verify_chain_facts(_region(3, 1, 2))
    assert rep.ok, rep.failures()
