"""Seeded test-function generators for the experiments."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .dyadic import Cube, DyadicTree
from .rmxio import read_rmx
from .space import NormedSpace
from .stepfn import HaarCoeffs, StepFunction, haar_reconstruct, lp_norm

GENERATORS = ("random-gaussian", "haar-sparse", "atoms", "l1-partial-sum", "constant", "files")


@dataclass
class CorpusSpec:
    generator: str = "random-gaussian"
    n: int = 1
    depth: int = 4
    dim: int = 2
    p: float = 2.0
    count: int = 10
    seed: int = 0
    measure: str = "uniform"
    sparsity: int = 3
    atom_q: float = math.inf
    min_depth: int = 3
    files: list = field(default_factory=list)

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}; choose from {GENERATORS}")
        if self.measure not in ("uniform", "random"):
            raise ValueError("measure must be 'uniform' or 'random'")


@dataclass
class CorpusItem:
    f: StepFunction
    tag: str


def _item_rng(spec: CorpusSpec, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([spec.seed, i]))


def _tree(spec: CorpusSpec, rng) -> DyadicTree:
    if spec.measure == "uniform":
        return DyadicTree(spec.n, spec.depth)
    m = rng.exponential(size=2 ** (spec.n * spec.depth))
    return DyadicTree(spec.n, spec.depth, m / m.sum())


def random_gaussian(spec: CorpusSpec, rng) -> StepFunction:
    t = _tree(spec, rng)
    return StepFunction(t, NormedSpace(spec.dim, spec.p), rng.standard_normal((t.size, spec.dim)))


def haar_sparse(spec: CorpusSpec, rng) -> StepFunction:
    """A few random tensor Haar terms plus a random mean (uniform mass only)."""
    t = DyadicTree(spec.n, spec.depth)
    space = NormedSpace(spec.dim, spec.p)
    coeffs = [np.zeros((t.level_size(k), t.branching - 1, spec.dim)) for k in range(t.depth)]
    if t.depth:
        for _ in range(spec.sparsity):
            k = int(rng.integers(t.depth))
            coeffs[k][int(rng.integers(t.level_size(k))), int(rng.integers(t.branching - 1))] += (
                rng.standard_normal(spec.dim)
            )
    return haar_reconstruct(HaarCoeffs(t, space, rng.standard_normal(spec.dim), coeffs))


def random_atom(spec: CorpusSpec, rng) -> StepFunction:
    """Mean-zero values on a random cube, scaled below the q-atom size bound."""
    t = _tree(spec, rng)
    space = NormedSpace(spec.dim, spec.p)
    k = int(rng.integers(0, max(t.depth, 1)))
    Q = Cube.from_morton(t.n, k, int(rng.integers(t.level_size(k))))
    sl = Q.leaf_slice(t.depth)
    vals = np.zeros((t.size, spec.dim))
    local = rng.standard_normal((sl.stop - sl.start, spec.dim))
    m = np.asarray(t.leaf_mass[sl], dtype=float)
    local -= (m[:, None] * local).sum(axis=0) / m.sum()
    vals[sl] = local
    f = StepFunction(t, space, vals)
    q = spec.atom_q
    dual = 1.0 if q == math.inf else 1.0 - 1.0 / q
    size = lp_norm(f, q)
    if size == 0.0:
        return f
    target = float(t.mass(Q)) ** (-dual) * rng.uniform(0.5, 1.0)
    return f.with_values(vals * (target / size))


def l1_partial_sum(m: int) -> StepFunction:
    """Function on [0,1) in l^1_m whose averages over [0, 2^-k) are s_k = e_1 + ... + e_k.

    The leaf [0, 2^-m) carries s_m and the interval [2^-(k+1), 2^-k) carries
    2 s_k - s_{k+1}, so each halving step averages back to s_k.
    """
    if m < 1:
        raise ValueError("depth must be positive")
    t = DyadicTree(1, m)
    vals = np.zeros((t.size, m))
    vals[0, :m] = 1.0
    for k in range(m):
        s_k = np.r_[np.ones(k), np.zeros(m - k)]
        s_next = np.r_[np.ones(k + 1), np.zeros(m - k - 1)]
        vals[2 ** (m - k - 1): 2 ** (m - k)] = 2 * s_k - s_next
    return StepFunction(t, NormedSpace(m, 1.0), vals)


def partial_sums(m: int) -> np.ndarray:
    """Rows s_1, ..., s_m."""
    return np.tril(np.ones((m, m)))


def gen_corpus(spec: CorpusSpec) -> list:
    items = []
    if spec.generator == "files":
        return [CorpusItem(read_rmx(p), f"file:{p}") for p in spec.files]
    if spec.generator == "l1-partial-sum":
        return [
            CorpusItem(l1_partial_sum(m), f"l1-partial-sum:m={m}")
            for m in range(spec.min_depth, spec.depth + 1)
        ]
    for i in range(spec.count):
        rng = _item_rng(spec, i)
        if spec.generator == "random-gaussian":
            f = random_gaussian(spec, rng)
        elif spec.generator == "haar-sparse":
            f = haar_sparse(spec, rng)
        elif spec.generator == "atoms":
            f = random_atom(spec, rng)
        else:
            t = _tree(spec, rng)
            f = StepFunction.constant(t, NormedSpace(spec.dim, spec.p), rng.standard_normal(spec.dim))
        items.append(CorpusItem(f, f"{spec.generator}:{i}"))
    return items
