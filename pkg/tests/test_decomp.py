import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from radmax.dyadic import Cube, DyadicTree, union_mask
from radmax.decomp import atom_defects, atomic_decompose, calderon_zygmund, gundy, is_atom
from radmax.maximal import rmf_upper
from radmax.space import NormedSpace
from radmax.stepfn import StepFunction, haar_function, h1_norm, lp_norm

L1 = NormedSpace(2, 1.0)


def dyadic_values(rng, size, dim, scale=8):
    return rng.integers(-4 * scale, 4 * scale + 1, (size, dim)) / scale


def test_cz_example():
    t = DyadicTree(1, 2)
    f = StepFunction.scalar(t, [4.0, 0.0, 0.0, 0.0])
    R = calderon_zygmund(f, 1.5)
    assert R.stopping == [Cube(1, 1, (0,))]
    assert list(R.g.scalar_values()) == [2.0, 2.0, 0.0, 0.0]
    assert list(R.bad_total().scalar_values()) == [2.0, -2.0, 0.0, 0.0]
    assert R.stopped_mass() == 0.5


def test_cz_nothing_stops_above_the_mean():
    t = DyadicTree(1, 3)
    f = StepFunction.scalar(t, np.ones(8))
    R = calderon_zygmund(f, 1.0)
    assert R.stopping == [] and np.array_equal(R.g.values, f.values)


@pytest.mark.parametrize("n,depth", [(1, 5), (2, 3)])
def test_cz_postconditions_exact_data(rng, n, depth):
    t = DyadicTree(n, depth)
    for _ in range(10):
        f = StepFunction(t, L1, dyadic_values(rng, t.size, 2))
        l1 = lp_norm(f, 1)
        lam = float(rng.choice([0.25, 0.5, 1.0, 2.0, 4.0]))
        R = calderon_zygmund(f, lam)
        assert np.array_equal(R.g.values + R.bad_total().values, f.values)
        for _, b in R.bad:
            assert not np.any(b.integral())
        assert R.stopped_mass() <= l1 / lam
        assert lp_norm(R.g, math.inf) <= 2 ** n * lam
        covered = union_mask(t, R.stopping)
        assert np.all(rmf_upper(R.bad_total())[~covered] == 0.0)


def test_cz_rejects_nonpositive_height():
    with pytest.raises(ValueError):
        calderon_zygmund(StepFunction.scalar(DyadicTree(1, 1), [1.0, 0.0]), 0.0)


def test_gundy_spike_on_lopsided_tree():
    t = DyadicTree(1, 1, [1 / 16, 15 / 16])
    f = StepFunction.scalar(t, [32.0, 0.0])
    G = gundy(f, 2.0)
    assert list(G.tau) == [1.0, math.inf]
    assert list(G.h.scalar_values()) == [30.0, 0.0]
    assert list(G.g.scalar_values()) == [2.0, 0.0]
    assert lp_norm(G.g, math.inf) <= 6.0
    assert G.h_variation() <= 4 * lp_norm(f, 1)


def test_gundy_no_stop_leaves_f_good():
    t = DyadicTree(1, 2)
    f = StepFunction.scalar(t, [1.0, -1.0, 0.5, 0.0])
    G = gundy(f, 10.0)
    assert np.all(np.isinf(G.tau))
    assert np.array_equal(G.g.values, f.values)
    assert not np.any(G.h.values) and not np.any(G.b.values)


def test_gundy_postconditions_exact(rng):
    for trial in range(20):
        n = 1 + trial % 2
        depth = 4 if n == 1 else 2
        size = 2 ** (n * depth)
        m = np.array([Fraction(int(x), 64) for x in rng.integers(1, 9, size)], dtype=object)
        t = DyadicTree(n, depth, m / m.sum())
        vals = np.array([[Fraction(int(v), 4) for v in row]
                         for row in rng.integers(-12, 13, (size, 2))], dtype=object)
        f = StepFunction(t, L1, vals)
        lam = float(rng.choice([0.25, 0.5, 1.0, 2.0]))
        N0 = int(rng.integers(0, depth + 1))
        G = gundy(f, lam, N0)
        assert all(x == 0 for x in (G.g.values + G.h.values + G.b.values - vals).ravel())
        for j in range(N0, depth + 1):
            Ab = t.expand(G.b.averages(j), j)
            live = G.tau >= j
            assert all(x == 0 for x in Ab[live].ravel())


def test_gundy_constant_four_counterexample():
    """The h-variation can exceed 4||f||_1: a single-leaf spike in the plane."""
    t = DyadicTree(2, 6)
    vals = np.zeros(t.size)
    vals[0] = 1.0
    f = StepFunction.scalar(t, vals)
    G = gundy(f, 1 / 15)
    assert G.tau[0] == 5
    assert G.h_variation() / lp_norm(f, 1) == pytest.approx(51 / 8, rel=1e-12)


def test_atomic_single_haar_atom():
    t = DyadicTree(1, 3)
    h = haar_function(t, Cube.root(1), 1)
    A = atomic_decompose(h)
    assert len(A.atoms) == 1
    assert A.atoms[0].coef == pytest.approx(1.0)
    assert A.atoms[0].cube == Cube.root(1)


@pytest.mark.parametrize("q", [math.inf, 2.0])
def test_atomic_decomposition_is_valid(rng, q):
    t = DyadicTree(1, 5)
    for _ in range(5):
        v = rng.standard_normal((32, 2))
        f = StepFunction(t, L1, v - v.mean(axis=0))
        A = atomic_decompose(f, q)
        np.testing.assert_allclose(A.reconstruct().values, f.values, atol=1e-10)
        for at in A.atoms:
            assert is_atom(at.a, at.cube, q, tol=1e-10)
        assert A.h1 == pytest.approx(h1_norm(f))


def test_atomic_rejects_nonzero_mean():
    f = StepFunction.scalar(DyadicTree(1, 2), [1.0, 0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        atomic_decompose(f)


def test_atom_defects_examples():
    t = DyadicTree(1, 2)
    Q = Cube(1, 1, (0,))
    a = StepFunction.scalar(t, [2.0, -2.0, 0.0, 0.0])
    assert atom_defects(a, Q, math.inf) == (0.0, 0.0, 0.0)
    spill, _, _ = atom_defects(a, Cube(1, 2, (0,)), math.inf)
    assert spill == 0.25
    assert not is_atom(a * 2.0, Q, math.inf)


@given(st.lists(st.integers(-16, 16), min_size=8, max_size=8), st.sampled_from([0.5, 1.0, 3.0]))
def test_cz_good_part_l1_bound(ints, lam):
    f = StepFunction.scalar(DyadicTree(1, 3), [i / 4 for i in ints])
    R = calderon_zygmund(f, lam)
    assert lp_norm(R.g, 1) <= lp_norm(f, 1) + 1e-12
    assert R.stopped_mass() <= lp_norm(f, 1) / lam
