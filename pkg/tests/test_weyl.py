from __future__ import annotations

import collections
import itertools

from titsforge.weyl import (
    IDENTITY,
    gen,
    weyl_apply,
    weyl_from_gallery,
    weyl_inv,
    weyl_len,
    weyl_mul,
)


def _bfs_lengths(max_len: int) -> dict:
    """Word-length oracle: BFS over the Cayley graph of {s0, s1, s2}."""
    dist = {IDENTITY: 0}
    frontier = [IDENTITY]
    for d in range(1, max_len + 1):
        nxt = []
        for w in frontier:
            for i in range(3):
                u = weyl_mul(w, gen(i))
                if u not in dist:
                    dist[u] = d
                    nxt.append(u)
        frontier = nxt
    return dist


def test_generators_are_involutions():
    for i in range(3):
        assert weyl_mul(gen(i), gen(i)) == IDENTITY


def test_braid_relations():
    for i, j in itertools.permutations(range(3), 2):
        lhs = weyl_mul(weyl_mul(gen(i), gen(j)), gen(i))
        rhs = weyl_mul(weyl_mul(gen(j), gen(i)), gen(j))
        assert lhs == rhs


def test_window_invariants_preserved():
    words = itertools.product(range(3), repeat=5)
    for word in itertools.islice(words, 100):
        w = weyl_from_gallery(word)
        assert sorted(v % 3 for v in w) == [0, 1, 2]
        assert sum(w[i] - (i + 1) for i in range(3)) == 0


def test_apply_periodicity():
    w = weyl_from_gallery((0, 1, 2, 0))
    for i in range(-6, 7):
        assert weyl_apply(w, i + 3) == weyl_apply(w, i) + 3


def test_inverse():
    for word in itertools.product(range(3), repeat=4):
        w = weyl_from_gallery(word)
        assert weyl_mul(w, weyl_inv(w)) == IDENTITY
        assert weyl_mul(weyl_inv(w), w) == IDENTITY


def test_length_basics():
    assert weyl_len(IDENTITY) == 0
    for i in range(3):
        assert weyl_len(gen(i)) == 1
    assert weyl_len(weyl_from_gallery((1, 2, 1, 0))) == 4


def test_length_matches_cayley_distance():
    dist = _bfs_lengths(8)
    assert len(dist) >= 100
    for w, d in dist.items():
        assert weyl_len(w) == d


def test_growth_three_n_per_length():
    dist = _bfs_lengths(8)
    by_len = collections.Counter(dist.values())
    assert by_len[0] == 1
    for n in range(1, 9):
        assert by_len[n] == 3 * n


def test_length_changes_by_one_under_generators():
    dist = _bfs_lengths(6)
    for w in dist:
        for i in range(3):
            assert abs(weyl_len(weyl_mul(w, gen(i))) - weyl_len(w)) == 1


def test_gallery_products():
    assert weyl_from_gallery(()) == IDENTITY
    assert weyl_from_gallery((0, 1, 0)) == weyl_from_gallery((1, 0, 1))
    two = weyl_mul(gen(2), gen(1))
    assert weyl_from_gallery((2, 1)) == two
