import itertools
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from radmax.rademacher import (
    HILBERT_EXACT,
    SEQUENCE_SUM,
    TELESCOPING,
    EnumerationCapExceeded,
    EstimatorConfig,
    Selection,
    rademacher_norm,
    rbound_lower,
    rbound_oracle,
    rbound_upper,
    selection_norm,
)
from radmax.space import NormedSpace

L1 = NormedSpace(2, 1.0)
L2 = NormedSpace(2, 2.0)
E12 = np.eye(2)


def brute(space, vecs, coeffs):
    """All 2**k sign patterns, no symmetry reduction."""
    vecs = np.asarray(vecs, dtype=float)
    tot = 0.0
    for eps in itertools.product((1.0, -1.0), repeat=len(vecs)):
        tot += space.norm(np.sum([e * c * v for e, c, v in zip(eps, coeffs, vecs)], axis=0)) ** 2
    return math.sqrt(tot / 2 ** len(vecs))


def test_single_term():
    assert rademacher_norm(L2, [[3.0, 4.0]], [1.0]) == 5.0


def test_l1_pair_equal_coefficients():
    c = 1 / math.sqrt(2)
    assert math.isclose(rademacher_norm(L1, E12, [c, c]), math.sqrt(2), rel_tol=1e-15)


def test_hilbert_orthogonality_example():
    v = rademacher_norm(L2, [[1.0, 0.0], [0.0, 2.0]], [0.6, 0.8])
    assert math.isclose(v, math.sqrt(2.92), rel_tol=1e-14)
    assert math.isclose(v, brute(L2, [[1, 0], [0, 2]], [0.6, 0.8]), rel_tol=1e-14)


@given(st.integers(1, 6), st.sampled_from([1.0, 1.5, 3.0, math.inf]), st.integers(0, 10 ** 6))
def test_matches_full_enumeration(k, p, seed):
    r = np.random.default_rng(seed)
    sp = NormedSpace(3, p)
    vecs = r.standard_normal((k, 3))
    lam = r.standard_normal(k)
    lam /= np.linalg.norm(lam)
    assert math.isclose(rademacher_norm(sp, vecs, lam), brute(sp, vecs, lam), rel_tol=1e-12)


def test_rademacher_errors():
    with pytest.raises(EnumerationCapExceeded):
        rademacher_norm(L2, np.ones((30, 2)), np.ones(30) / 30, cap=24)
    with pytest.raises(ValueError):
        rademacher_norm(L2, np.ones((2, 3)), [0.5, 0.5])
    with pytest.raises(ValueError):
        Selection((0, 1), (1.0, 1.0))


def test_oracle_single_vector_is_its_norm():
    for p in (1.0, 2.0, math.inf):
        sp = NormedSpace(2, p)
        est = rbound_oracle(sp, [[1.0, -2.0]], max_len=3)
        assert math.isclose(est.lower, sp.norm(np.array([1.0, -2.0])), rel_tol=1e-12)
        assert math.isclose(est.upper, est.lower, rel_tol=1e-12)


def test_oracle_hilbert_pair():
    est = rbound_oracle(L2, [[1.0, 0.0], [0.0, 2.0]], max_len=3)
    assert est.lower == 2.0 and est.upper == 2.0
    assert est.upper_method == HILBERT_EXACT


def test_oracle_l1_basis_pair():
    est = rbound_oracle(L1, E12, max_len=4)
    assert abs(est.lower - math.sqrt(2)) <= 1e-9
    assert sorted(est.lower_witness.indices) == [0, 1]
    assert np.allclose(np.abs(est.lower_witness.coeffs), 1 / math.sqrt(2), atol=1e-6)
    assert est.upper == 2.0 and est.upper_method == SEQUENCE_SUM


def test_oracle_cap():
    with pytest.raises(EnumerationCapExceeded):
        rbound_oracle(L1, np.eye(2)[[0, 1] * 5], max_len=6, cap=100)


def test_lower_greedy_l1_pair():
    est = rbound_lower(L1, E12, EstimatorConfig(max_len=2, restarts=8, seed=42))
    assert est.lower >= math.sqrt(2) - 1e-6


def test_lower_hilbert_closed_form(rng):
    S = rng.standard_normal((6, 4))
    est = rbound_lower(NormedSpace(4, 2), S)
    assert abs(est.lower - np.linalg.norm(S, axis=1).max()) <= 1e-12


def test_warm_start_is_kept(rng):
    sp = NormedSpace(3, 1.0)
    S = rng.standard_normal((4, 3))
    ws = Selection((0, 1, 2, 3), (0.5, 0.5, 0.5, 0.5))
    est = rbound_lower(sp, S, EstimatorConfig(max_len=1, restarts=0), warm_start=ws)
    assert est.lower >= selection_norm(sp, S, ws)


def test_lower_empty():
    with pytest.raises(ValueError):
        rbound_lower(L1, np.zeros((0, 2)))


def test_upper_methods():
    xi = np.array([1.0, 2.0])
    val, tag = rbound_upper(L1, np.stack([xi, xi, xi]), chain_order=True)
    assert val == 3.0 and tag == TELESCOPING
    assert rbound_upper(L1, E12) == (2.0, SEQUENCE_SUM)
    assert rbound_upper(L2, [[1.0, 0.0], [0.0, 2.0]]) == (2.0, HILBERT_EXACT)


@given(st.integers(0, 10 ** 6), st.sampled_from([1.0, 3.0, math.inf]))
def test_estimate_invariants(seed, p):
    r = np.random.default_rng(seed)
    sp = NormedSpace(2, p)
    S = r.standard_normal((3, 2))
    est = rbound_lower(sp, S, EstimatorConfig(max_len=3, restarts=2, iters=50), rng=r)
    top = sp.norms(S).max()
    assert top <= est.lower <= est.upper
    assert est.lower == selection_norm(sp, S, est.lower_witness)


def test_determinism(rng):
    S = rng.standard_normal((4, 3))
    sp = NormedSpace(3, 1.0)
    cfg = EstimatorConfig(max_len=3, restarts=3, seed=7)
    assert rbound_lower(sp, S, cfg) == rbound_lower(sp, S, cfg)


@given(st.integers(0, 10 ** 6))
def test_triangle_at_certificate_level(seed):
    r = np.random.default_rng(seed)
    sp = NormedSpace(2, 1.0)
    S, T = r.standard_normal((3, 2)), r.standard_normal((3, 2))
    lam = r.standard_normal(3)
    lam /= np.linalg.norm(lam)
    a, b = rademacher_norm(sp, S, lam), rademacher_norm(sp, T, lam)
    assert abs(a - b) <= rademacher_norm(sp, S - T, lam) * (1 + 1e-12) + 1e-15
    assert rademacher_norm(sp, S + T, lam) <= (a + b) * (1 + 1e-12)


def test_oracle_monotone_under_inclusion(rng):
    sp = NormedSpace(2, 1.0)
    S = rng.standard_normal((3, 2))
    small = rbound_oracle(sp, S[:2], max_len=3, grid=8)
    big = rbound_oracle(sp, S, max_len=3, grid=8)
    assert big.lower >= small.lower - 1e-12
    # witness transfer makes it exact: the small witness is a big-set selection
    assert big.lower >= selection_norm(sp, S, small.lower_witness) - 1e-12


def test_oracle_uniform_bound_and_hilbert_collapse(rng):
    for _ in range(5):
        S = rng.standard_normal((3, 3))
        est = rbound_oracle(NormedSpace(3, 2), S, max_len=3, grid=6)
        top = np.linalg.norm(S, axis=1).max()
        assert abs(est.lower - top) <= 1e-9 and abs(est.upper - top) <= 1e-9
        est1 = rbound_oracle(NormedSpace(3, 1), S, max_len=2, grid=6)
        assert est1.lower >= np.abs(S).sum(axis=1).max()
