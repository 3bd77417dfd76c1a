"""Lattice classes: canonical forms, colors, adjacency, chamber enumeration."""

from __future__ import annotations

import random

import pytest

from titsforge.residue import Ring, ScaledMatrix, mat_diag, mat_from_ints, mat_identity, mat_mul
from titsforge.lattices import (
    act_on_vertex,
    canonicalize_lattice,
    chamber_from_vertices,
    chambers_through_edge,
    edge_label,
    edges_of_chamber,
    is_edge,
    lift_vertex,
    make_edge,
    rel_position,
    standard_chamber,
    standard_vertex,
    vert_distance,
)


def _random_gl3o(ring, rng):
    while True:
        rows = tuple(
            tuple(ring.from_pair(rng.randrange(ring.pa), rng.randrange(ring.pb)) for _ in range(3))
            for _ in range(3)
        )
        m = ScaledMatrix(rows)
        from titsforge.residue import mat_det_entries

        if ring.is_unit(mat_det_entries(ring, rows)):
            return m


def test_canonicalize_standard_examples():
    for p, e in ((2, 1), (2, 2), (3, 1), (3, 2)):
        ring = Ring(p, e, 10)
        assert canonicalize_lattice(ring, mat_identity(ring)) == standard_vertex(0)
        d11pi = mat_diag(ring, (ring.one(), ring.one(), ring.pi()))
        assert canonicalize_lattice(ring, d11pi) == standard_vertex(1)
        pi_id = mat_diag(ring, (ring.pi(), ring.pi(), ring.pi()))
        assert canonicalize_lattice(ring, pi_id) == standard_vertex(0)


def test_colors():
    ring = Ring(2, 2, 10)
    assert standard_vertex(0).color == 0
    assert standard_vertex(1).color == 1
    assert standard_vertex(2).color == 2
    u1 = canonicalize_lattice(ring, mat_diag(ring, (ring.pi(), ring.one(), ring.pi())))
    assert u1.d == (1, 0, 1)
    assert u1.color == 2


def test_is_edge_basics():
    ring = Ring(2, 2, 10)
    v0, v1, v2 = (standard_vertex(i) for i in range(3))
    assert is_edge(ring, v0, v1)
    assert is_edge(ring, v1, v0)
    assert is_edge(ring, v1, v2)
    with pytest.raises(ValueError):
        is_edge(ring, v0, v0)


def test_p_scaled_lattice_adjacency_depends_on_ramification():
    # <p e1, e2, e3>: an edge over Q_p (p is the uniformizer), but at
    # vertex distance 2 in the ramified quadratic case (p = pi^2).
    for p in (2, 3):
        r1 = Ring(p, 1, 10)
        w = canonicalize_lattice(r1, mat_from_ints(r1, ((p, 0, 0), (0, 1, 0), (0, 0, 1))))
        assert is_edge(r1, standard_vertex(0), w)
        r2 = Ring(p, 2, 10)
        w2 = canonicalize_lattice(r2, mat_from_ints(r2, ((p, 0, 0), (0, 1, 0), (0, 0, 1))))
        assert not is_edge(r2, standard_vertex(0), w2)
        assert vert_distance(r2, standard_vertex(0), w2) == 2


def test_rel_position_symmetric_shapes():
    ring = Ring(3, 1, 10)
    v0, v1 = standard_vertex(0), standard_vertex(1)
    assert rel_position(ring, v0, v1) == (0, 0, 1)
    assert rel_position(ring, v1, v0) == (0, 1, 1)


def test_chambers_through_edge_counts_and_membership():
    for p in (2, 3):
        for e in (1, 2):
            ring = Ring(p, e, 12)
            v0, v1, v2 = (standard_vertex(i) for i in range(3))
            for u, w in ((v1, v2), (v0, v1), (v0, v2)):
                chams = chambers_through_edge(ring, u, w)
                assert len(chams) == p + 1
                for ch in chams:
                    assert u in ch.verts and w in ch.verts
            assert standard_chamber() in chambers_through_edge(ring, v1, v2)


def test_edge_canonical_orientation_and_label():
    v0, v1, v2 = (standard_vertex(i) for i in range(3))
    e01 = make_edge(v1, v0)
    assert (e01.origin, e01.target) == (v0, v1)
    assert edge_label(e01) == 2
    e12 = make_edge(v2, v1)
    assert (e12.origin, e12.target) == (v1, v2)
    assert edge_label(e12) == 0
    e20 = make_edge(v0, v2)
    assert (e20.origin, e20.target) == (v2, v0)
    assert edge_label(e20) == 1


def test_chamber_edges_cover_colors():
    ch = standard_chamber()
    labels = sorted(edge_label(e) for e in edges_of_chamber(ch))
    assert labels == [0, 1, 2]


def test_act_on_vertex_examples():
    ring = Ring(2, 2, 10)
    g = mat_diag(ring, (ring.pi(), ring.one(), ring.pi()))
    u1 = act_on_vertex(ring, g, standard_vertex(0))
    assert u1.d == (1, 0, 1)
    assert act_on_vertex(ring, mat_identity(ring), standard_vertex(1)) == standard_vertex(1)


def test_action_is_left_action():
    ring = Ring(2, 2, 14)
    rng = random.Random(7)
    v = standard_vertex(1)
    for _ in range(25):
        g = _random_gl3o(ring, rng)
        h = _random_gl3o(ring, rng)
        assert act_on_vertex(ring, g, act_on_vertex(ring, h, v)) == act_on_vertex(
            ring, mat_mul(ring, g, h), v
        )


def test_canonicalization_is_class_function():
    rng = random.Random(11)
    for p, e in ((2, 2), (3, 1)):
        ring = Ring(p, e, 12)
        third = ring.from_pair(1, 1) if e == 2 else ring.from_int(1 + p)
        base = mat_diag(ring, (ring.pi(), ring.one(), third))
        v = canonicalize_lattice(ring, base)
        for _ in range(50):
            g = _random_gl3o(ring, rng)
            assert canonicalize_lattice(ring, mat_mul(ring, base, g)) == v


def test_canonicalization_idempotent():
    ring = Ring(3, 2, 12)
    g = mat_from_ints(ring, ((3, 1, 4), (1, 5, 9), (2, 6, 5)))
    v = canonicalize_lattice(ring, g)
    assert canonicalize_lattice(ring, lift_vertex(ring, v)) == v


def test_edge_endpoint_colors_differ():
    ring = Ring(2, 1, 10)
    v0 = standard_vertex(0)
    for u, w in ((standard_vertex(0), standard_vertex(1)),):
        for ch in chambers_through_edge(ring, u, w):
            for e in edges_of_chamber(ch):
                assert e.origin.color != e.target.color
    with pytest.raises(ValueError):
        make_edge(v0, v0)


def test_chamber_from_vertices_requires_all_colors():
    with pytest.raises(ValueError):
        chamber_from_vertices((standard_vertex(0), standard_vertex(0), standard_vertex(1)))
