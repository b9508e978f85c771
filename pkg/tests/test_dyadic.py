import itertools
from fractions import Fraction

import numpy as np
import pytest

from radmax.dyadic import (
    Cube,
    DyadicTree,
    ShiftedSystem,
    chain,
    children,
    deinterleave,
    interleave,
    maximal_cubes,
    morton_decode,
    morton_encode,
    parent,
    parse_cube,
    shifted_average,
    standard_average,
    union_mask,
)


def test_children_of_unit_interval():
    kids = children(Cube.root(1))
    assert [(c.corner, c.side) for c in kids] == [
        ((Fraction(0),), Fraction(1, 2)),
        ((Fraction(1, 2),), Fraction(1, 2)),
    ]


def test_parent_in_the_plane():
    Q = Cube(2, 1, (1, 0))
    assert parent(Q) == Cube.root(2)
    assert parent(Q).volume == 4 * Q.volume
    with pytest.raises(ValueError):
        parent(Cube.root(2))


def test_children_partition_parent():
    Q = Cube(2, 2, (3, 1))
    kids = children(Q)
    assert sum(c.volume for c in kids) == Q.volume
    assert all(Q.contains(c) and c.parent() == Q for c in kids)
    assert len(set(kids)) == 4


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_morton_round_trip_exhaustive(n):
    for k in range(0, 6 if n <= 2 else 4):
        for code in range(2 ** (n * k)):
            m = morton_decode(code, k, n)
            assert morton_encode(m, k) == code


def test_chain_examples():
    t = DyadicTree(1, 2)
    assert [(Q.k, Q.m) for Q in chain(t, 0)] == [(0, (0,)), (1, (0,)), (2, (0,))]
    t2 = DyadicTree(2, 1)
    leaf = morton_encode((1, 0), 1)
    assert [Q.m for Q in chain(t2, leaf)] == [(0, 0), (1, 0)]
    assert all(len(chain(t2, i)) == 2 for i in range(t2.size))
    with pytest.raises(IndexError):
        chain(t2, 4)


def test_chain_strictly_nested():
    t = DyadicTree(2, 3)
    for leaf in range(t.size):
        c = chain(t, leaf)
        assert all(a.contains(b) and a != b for a, b in zip(c, c[1:]))


def test_maximal_cubes_examples():
    t = DyadicTree(1, 3)
    assert maximal_cubes(t, lambda Q: True) == [Cube.root(1)]
    assert maximal_cubes(t, lambda Q: True, min_level=2) == t.cubes(2)
    marks = {Cube(1, 1, (0,)), Cube(1, 2, (0,))}
    assert maximal_cubes(t, lambda Q: Q in marks) == [Cube(1, 1, (0,))]


def test_maximal_cubes_disjoint_and_cover_exhaustive():
    t = DyadicTree(1, 3)
    cubes = [Q for k in range(4) for Q in t.cubes(k)]
    rng = np.random.default_rng(1)
    for _ in range(200):
        marked = {Q for Q in cubes if rng.random() < 0.25}
        out = maximal_cubes(t, lambda Q: Q in marked)
        masks = [union_mask(t, [Q]) for Q in out]
        assert all(not np.any(a & b) for a, b in itertools.combinations(masks, 2))
        assert np.array_equal(union_mask(t, out), union_mask(t, list(marked)))


def test_interleave_examples():
    Q = Cube(2, 1, (1, 0))
    I = interleave(Q)
    assert (I.k, I.index) == (2, 2)
    assert I.corner == (Fraction(1, 2),) and I.side == Fraction(1, 4)
    assert interleave(Cube.root(2)) == Cube.root(1)
    assert deinterleave(I, 2) == Q


@pytest.mark.parametrize("n", [1, 2, 3])
def test_interleave_bijective_and_order_preserving(n):
    for k in range(4):
        cubes = [Cube.from_morton(n, k, i) for i in range(2 ** (n * k))]
        images = {interleave(Q) for Q in cubes}
        assert len(images) == 2 ** (n * k)
        assert images == {Cube(1, n * k, (i,)) for i in range(2 ** (n * k))}
        assert all(interleave(Q).volume == Q.volume for Q in cubes)
    small = [Cube.from_morton(n, k, i) for k in range(3 if n < 3 else 2)
             for i in range(2 ** (n * k))]
    for R, Q in itertools.product(small, repeat=2):
        assert Q.contains(R) == interleave(Q).contains(interleave(R))


def test_cube_literal_round_trip():
    Q = Cube(2, 3, (5, 2))
    assert parse_cube(Q.literal(), 2) == Q
    with pytest.raises(ValueError):
        parse_cube("x3:1", 2)


def test_mass_additivity_exact():
    m = np.array([Fraction(i + 1, 64) for i in range(16)], dtype=object)
    t = DyadicTree(2, 2, m)
    for k in range(2):
        kids = t.masses[k + 1].reshape(-1, 4).sum(axis=1)
        assert all(a == b for a, b in zip(t.masses[k], kids))
    dy = np.arange(1, 17) / 64.0
    tf = DyadicTree(2, 2, dy)
    assert tf.masses[0][0] == dy.sum() == 136 / 64


def test_tree_validation():
    with pytest.raises(ValueError):
        DyadicTree(1, 2, [1, 1, 1])
    with pytest.raises(ValueError):
        DyadicTree(1, 1, [1, -1])


def _system(rng, n, M):
    beta = {j: tuple(int(b) for b in rng.integers(0, 2, n)) for j in range(1, M + 1)}
    return ShiftedSystem(n, beta, M)


def test_zero_beta_is_standard(rng):
    S = ShiftedSystem(2, {}, 3)
    f = S.embed(rng.standard_normal((8, 8)))
    for k in range(4):
        assert np.array_equal(shifted_average(S, k, f), standard_average(S, k, f))


@pytest.mark.parametrize("n", [1, 2])
def test_conjugation_identity_exact(rng, n):
    M = 5 if n == 1 else 4
    for _ in range(4):
        S = _system(rng, n, M)
        f = S.embed(rng.standard_normal((2 ** M,) * n))
        for N in range(M + 1):
            tf = S.tau(f, N)
            for k in range(N, M + 1):
                assert np.array_equal(shifted_average(S, k, f),
                                      S.tau_inv(standard_average(S, k, tf), N))


def test_tau_composition_on_indicators():
    S = ShiftedSystem(1, {2: (1,), 3: (1,), 4: (0,)}, 4)
    for cell in range(16):
        unit = np.zeros(16)
        unit[cell] = 1.0
        f = S.embed(unit)
        for k in range(1, 5):
            assert np.array_equal(S.tau(f, k - 1), S.sigma(S.tau(f, k), k))


def test_shifted_errors(rng):
    S = ShiftedSystem(1, {1: (1,)}, 3)
    with pytest.raises(ValueError):
        shifted_average(S, 4, np.zeros(S.shape))
    g = np.zeros(S.shape)
    g[0] = 1.0
    with pytest.raises(ValueError):
        shifted_average(S, 1, g)
    with pytest.raises(ValueError):
        ShiftedSystem(1, {5: (1,)}, 3)
