import math

import numpy as np
import pytest

from radmax.corpus import CorpusSpec, gen_corpus, l1_partial_sum, partial_sums
from radmax.decomp import is_atom
from radmax.dyadic import Cube
from radmax.experiments import ExperimentConfig, parse_beta, random_beta, run, transfer
from radmax.rademacher import rademacher_norm
from radmax.rmxio import csv_text
from radmax.space import NormedSpace
from radmax.stepfn import lp_norm


def test_corpus_deterministic_and_prefix_stable():
    a = gen_corpus(CorpusSpec(count=3, seed=5))
    b = gen_corpus(CorpusSpec(count=5, seed=5))
    for x, y in zip(a, b):
        assert np.array_equal(x.f.values, y.f.values) and x.tag == y.tag
    c = gen_corpus(CorpusSpec(count=1, seed=6))
    assert not np.array_equal(a[0].f.values, c[0].f.values)


def test_random_measure_is_normalised():
    for item in gen_corpus(CorpusSpec(count=3, measure="random", n=2, depth=2)):
        assert float(item.f.tree.masses[0][0]) == pytest.approx(1.0)


@pytest.mark.parametrize("q", [math.inf, 2.0])
def test_generated_atoms_are_atoms(q):
    for item in gen_corpus(CorpusSpec("atoms", depth=4, count=8, atom_q=q, p=1.0)):
        f = item.f
        nz = np.flatnonzero(f.leaf_norms())
        k = f.tree.depth
        while k > 0 and (nz[0] >> (f.tree.n * (f.tree.depth - k))) != (nz[-1] >> (f.tree.n * (f.tree.depth - k))):
            k -= 1
        Q = Cube.from_morton(f.tree.n, k, int(nz[0] >> (f.tree.n * (f.tree.depth - k))))
        assert is_atom(f, Q, q, tol=1e-10)


def test_haar_sparse_has_few_terms():
    from radmax.stepfn import haar_decompose
    for item in gen_corpus(CorpusSpec("haar-sparse", depth=4, count=3, sparsity=2)):
        assert len(haar_decompose(item.f).nonzero(1e-12)) <= 2


@pytest.mark.parametrize("m", [1, 3, 6])
def test_l1_family_chain_averages(m):
    f = l1_partial_sum(m)
    s = np.vstack([np.zeros(m), partial_sums(m)])
    for k in range(m + 1):
        assert np.array_equal(f.averages(k)[0], s[k])


def test_l1_family_equal_coefficient_values():
    space = NormedSpace(4, 1.0)
    assert rademacher_norm(space, partial_sums(4), np.full(4, 0.5)) == pytest.approx(math.sqrt(8))
    sp8 = NormedSpace(8, 1.0)
    assert rademacher_norm(sp8, partial_sums(8), np.full(8, 1 / math.sqrt(8))) == pytest.approx(
        5.291502622129181)


def test_unknown_generator_and_measure():
    with pytest.raises(ValueError):
        CorpusSpec("bogus")
    with pytest.raises(ValueError):
        CorpusSpec(measure="bogus")


def test_transfer_preserves_averages(rng):
    f = gen_corpus(CorpusSpec(n=2, depth=2, count=1))[0].f
    g = transfer(f)
    assert g.tree.n == 1 and g.tree.depth == 4
    for k in range(3):
        assert np.abs(f.averages(k) - g.averages(2 * k)).max() <= 1e-12
    assert lp_norm(f, 3) == pytest.approx(lp_norm(g, 3), abs=1e-12)


def test_beta_helpers(rng):
    assert parse_beta("1:0,1; 3:1,1", 2) == {1: (0, 1), 3: (1, 1)}
    with pytest.raises(ValueError):
        parse_beta("1:0", 2)
    beta = random_beta(rng, 2, 3)
    assert set(beta) == {1, 2, 3} and any(any(b) for b in beta.values())


SMALL = dict(depth="3", count="2", max_len="3", restarts="1", iters="30")


@pytest.mark.parametrize("name", ["opnorm", "weak-type", "good-lambda", "bmo", "transfer",
                                  "systems", "paraproduct"])
def test_experiments_byte_reproducible(name):
    data = dict(SMALL, experiment=name, space="lp:1")
    if name == "transfer":
        data["n"] = "2"
        data["depth"] = "2"
    first = csv_text(*run(ExperimentConfig.from_mapping(data)))
    second = csv_text(*run(ExperimentConfig.from_mapping(data)))
    assert first == second and first.startswith("# ")


def test_unknown_config_key():
    with pytest.raises(ValueError):
        ExperimentConfig.from_mapping({"experiment": "opnorm", "bogus": "1"})
