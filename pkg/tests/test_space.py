import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from radmax.space import NormedSpace, format_space, norm, parse_space

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_subnormal=False)
exponents = st.sampled_from([1.0, 1.5, 2.0, 3.0, 7.0, math.inf])


@pytest.mark.parametrize(
    "p, v, expected",
    [(1, (1, -2, 3), 6.0), (2, (3, 4), 5.0), (math.inf, (1, -2, 3), 3.0)],
)
def test_norm_examples(p, v, expected):
    assert norm(NormedSpace(len(v), p), np.array(v, dtype=float)) == expected


def test_dimension_mismatch_and_nonfinite():
    sp = NormedSpace(2, 2)
    with pytest.raises(ValueError):
        sp.norm(np.ones(3))
    with pytest.raises(ValueError):
        sp.norm(np.array([1.0, np.nan]))
    with pytest.raises(ValueError):
        NormedSpace(0, 2)
    with pytest.raises(ValueError):
        NormedSpace(2, 0.5)


def test_parse_and_format():
    assert parse_space("lp:inf", 3) == NormedSpace(3, math.inf)
    assert parse_space("lp:1.5", 2).p == 1.5
    assert format_space(math.inf) == "lp:inf"
    assert format_space(2.0) == "lp:2"
    with pytest.raises(ValueError):
        parse_space("l2", 2)


@given(arrays(float, 4, elements=finite), arrays(float, 4, elements=finite), exponents,
       st.floats(-100, 100, allow_subnormal=False))
def test_norm_axioms(u, v, p, c):
    sp = NormedSpace(4, p)
    nu, nv = sp.norm(u), sp.norm(v)
    assert nu >= 0
    assert (nu == 0) == (not np.any(u))
    assert math.isclose(sp.norm(c * u), abs(c) * nu, rel_tol=1e-12, abs_tol=1e-300)
    assert sp.norm(u + v) <= (nu + nv) * (1 + 1e-12)


@given(arrays(float, 5, elements=finite))
def test_norm_nonincreasing_in_p(v):
    vals = [NormedSpace(5, p).norm(v) for p in (1.0, 1.5, 2.0, 3.0, 10.0, math.inf)]
    for a, b in zip(vals, vals[1:]):
        assert b <= a * (1 + 1e-12)


def test_norm_deterministic(rng):
    v = rng.standard_normal(7)
    sp = NormedSpace(7, 3.3)
    assert sp.norm(v) == sp.norm(v.copy())


def test_norm_grad_matches_finite_difference(rng):
    v = rng.standard_normal(4)
    for p in (1.5, 2.0, 3.0):
        sp = NormedSpace(4, p)
        g = sp.norm_grad_scaled(v)
        h = 1e-6
        fd = np.array([(sp.norm(v + h * e) ** 2 - sp.norm(v - h * e) ** 2) / (4 * h)
                       for e in np.eye(4)])
        assert np.allclose(g, fd, atol=1e-6)
