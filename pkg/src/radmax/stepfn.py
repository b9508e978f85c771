"""Vector-valued step functions on a dyadic tree and their norms."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .dyadic import Cube, DyadicTree
from .space import NormedSpace

SCALAR = NormedSpace(1, 2.0)


class StepFunction:
    """Leaf-indexed values (Morton order) of a function with values in ``space``.

    Values on zero-mass leaves are carried along but ignored by every average
    and norm.
    """

    def __init__(self, tree: DyadicTree, space: NormedSpace, values):
        values = np.asarray(values)
        if values.dtype != object:
            values = values.astype(float)
        if values.ndim == 1 and space.dim == 1:
            values = values[:, None]
        if values.shape != (tree.size, space.dim):
            raise ValueError(
                f"expected values of shape {(tree.size, space.dim)}, got {values.shape}"
            )
        if values.dtype != object and not np.all(np.isfinite(values)):
            raise ValueError("step function values must be finite")
        self.tree = tree
        self.space = space
        self.values = values
        self.values.setflags(write=False)

    # construction helpers

    @classmethod
    def scalar(cls, tree: DyadicTree, values) -> "StepFunction":
        return cls(tree, SCALAR, np.asarray(values).reshape(-1, 1))

    @classmethod
    def constant(cls, tree: DyadicTree, space: NormedSpace, vector) -> "StepFunction":
        vec = np.asarray(vector, dtype=float).reshape(1, space.dim)
        return cls(tree, space, np.repeat(vec, tree.size, axis=0))

    @classmethod
    def indicator(cls, tree: DyadicTree, Q: Cube, space: NormedSpace = SCALAR, vector=None):
        vec = np.ones(space.dim) if vector is None else np.asarray(vector, dtype=float)
        vals = np.zeros((tree.size, space.dim))
        vals[Q.leaf_slice(tree.depth)] = vec
        return cls(tree, space, vals)

    def with_values(self, values) -> "StepFunction":
        return StepFunction(self.tree, self.space, values)

    def with_tree(self, tree: DyadicTree) -> "StepFunction":
        return StepFunction(tree, self.space, self.values)

    @property
    def is_scalar(self) -> bool:
        return self.space.dim == 1

    @property
    def exact(self) -> bool:
        return self.values.dtype == object

    def scalar_values(self) -> np.ndarray:
        if not self.is_scalar:
            raise ValueError("scalar function expected")
        return self.values[:, 0]

    def _compatible(self, other: "StepFunction"):
        if not (self.tree.same_shape(other.tree) and self.space == other.space):
            raise ValueError("step functions live on different trees or spaces")

    def __add__(self, other):
        self._compatible(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other):
        self._compatible(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, c):
        return self.with_values(self.values * c)

    __rmul__ = __mul__

    def __neg__(self):
        return self.with_values(-self.values)

    def restrict(self, Q: Cube) -> "StepFunction":
        """f * 1_Q."""
        vals = np.zeros_like(self.values)
        sl = Q.leaf_slice(self.tree.depth)
        vals[sl] = self.values[sl]
        return self.with_values(vals)

    # averages

    @cached_property
    def _sums(self) -> list:
        t = self.tree
        out = [None] * (t.depth + 1)
        out[t.depth] = t.leaf_mass[:, None] * self.values
        for k in range(t.depth - 1, -1, -1):
            nxt = out[k + 1]
            out[k] = nxt.reshape(-1, t.branching, nxt.shape[1]).sum(axis=1)
        return out

    def integrals(self, k: int) -> np.ndarray:
        """Mass-weighted integrals over every level-k cube, shape (2**(nk), d)."""
        return self._sums[k]

    def integral(self) -> np.ndarray:
        return self._sums[0][0]

    def averages(self, k: int) -> np.ndarray:
        if not 0 <= k <= self.tree.depth:
            raise ValueError(f"level {k} outside 0..{self.tree.depth}")
        return _divide(self._sums[k], self.tree.masses[k])

    def leaf_norms(self) -> np.ndarray:
        return self.space.norms(self.values)

    def positive_mass(self) -> np.ndarray:
        return np.asarray(self.tree.leaf_mass, dtype=float) > 0


def _divide(sums: np.ndarray, masses: np.ndarray) -> np.ndarray:
    """sums / masses per cube, zero where the mass vanishes."""
    zero = masses == 0
    if sums.dtype == object or masses.dtype == object:
        safe = np.where(zero, 1, masses)
        out = sums / safe[:, None]
        out[zero] = 0
        return out
    safe = np.where(zero, 1.0, masses)
    out = sums / safe[:, None]
    out[zero] = 0.0
    return out


def average(f: StepFunction, Q: Cube) -> np.ndarray:
    f.tree._check_cube(Q)
    return f.averages(Q.k)[Q.index]


def averaging_operator(f: StepFunction, k: int) -> StepFunction:
    """A_k f: the level-k averages spread over the leaves."""
    return f.with_values(f.tree.expand(f.averages(k), k))


def chain_averages(f: StepFunction, min_level: int = 0) -> np.ndarray:
    """Array (leaves, levels, d) of A_k f(x) for k = min_level..N, root first."""
    t = f.tree
    return np.stack(
        [t.expand(f.averages(k), k) for k in range(min_level, t.depth + 1)], axis=1
    )


def maximal_values(f: StepFunction, min_level: int = 0) -> np.ndarray:
    """sup_{Q ∋ x, level >= min_level} ||<f>_Q|| per leaf."""
    t = f.tree
    out = np.zeros(t.size)
    for k in range(min_level, t.depth + 1):
        out = np.maximum(out, t.expand(f.space.norms(f.averages(k)), k))
    return out


# ---------------------------------------------------------------------------
# Haar and martingale-difference decompositions


def walsh(n: int) -> np.ndarray:
    """H[t, c] = (-1)^{popcount(t & c)} for t, c in 0..2**n - 1."""
    r = np.arange(2 ** n)
    bits = np.bitwise_and.outer(r, r)
    pop = np.zeros_like(bits)
    for _ in range(n):
        pop += bits & 1
        bits = bits >> 1
    return np.where(pop % 2 == 0, 1.0, -1.0)


@dataclass
class HaarCoeffs:
    """Tensor Haar coefficients of a function on a uniform-mass tree.

    ``coeffs[k]`` has shape (2**(nk), 2**n - 1, d): the coefficient
    <f, h_Q^theta> for the level-k cube Q and theta = 1..2**n - 1 (theta read
    as n bits, first coordinate most significant).  ``mean`` is <f>_root.
    """

    tree: DyadicTree
    space: NormedSpace
    mean: np.ndarray
    coeffs: list

    def coefficient(self, Q: Cube, theta: int) -> np.ndarray:
        return self.coeffs[Q.k][Q.index, theta - 1]

    def nonzero(self, tol: float = 0.0) -> list:
        """(Q, theta, coefficient) triples with norm above ``tol``."""
        out = []
        for k, ck in enumerate(self.coeffs):
            nr = self.space.norms(ck)
            for i, t in zip(*np.nonzero(nr > tol)):
                out.append((Cube.from_morton(self.tree.n, k, int(i)), int(t) + 1, ck[i, t]))
        return out


@dataclass
class MartingaleDecomposition:
    """f = A_{N0} f + sum_{k=N0}^{N-1} D_k f (+ the part living on zero-mass leaves).

    ``diffs[j]`` holds D_{N0+j} f = A_{N0+j+1} f - A_{N0+j} f as a full leaf field.
    """

    tree: DyadicTree
    space: NormedSpace
    min_level: int
    base: np.ndarray
    diffs: list
    null: np.ndarray


def _require_uniform(tree: DyadicTree):
    if not tree.uniform:
        raise ValueError("tensor Haar coefficients need a uniform-mass tree; use adapted mode")


def haar_decompose(f: StepFunction, adapted: bool | None = None, min_level: int = 0):
    """Haar coefficients (uniform mass) or martingale differences (adapted mode).

    ``adapted=None`` picks adapted mode exactly when the tree is not uniform.
    """
    if adapted is None:
        adapted = not f.tree.uniform
    if adapted:
        return _martingale_decompose(f, min_level)
    if min_level:
        raise ValueError("min_level only applies to the adapted decomposition")
    t = f.tree
    _require_uniform(t)
    H = walsh(t.n)[1:]
    coeffs = []
    for k in range(t.depth):
        child = f.averages(k + 1).reshape(-1, t.branching, f.space.dim)
        scale = np.sqrt(np.asarray(t.masses[k], dtype=float)) / t.branching
        coeffs.append(scale[:, None, None] * np.einsum("tc,qcd->qtd", H, child))
    return HaarCoeffs(t, f.space, f.averages(0)[0].astype(float), coeffs)


def _martingale_decompose(f: StepFunction, min_level: int) -> MartingaleDecomposition:
    t = f.tree
    if not 0 <= min_level <= t.depth:
        raise ValueError("min_level out of range")
    A = [t.expand(f.averages(k), k) for k in range(min_level, t.depth + 1)]
    diffs = [A[j + 1] - A[j] for j in range(len(A) - 1)]
    return MartingaleDecomposition(t, f.space, min_level, A[0], diffs, f.values - A[-1])


def haar_reconstruct(coeffs) -> StepFunction:
    if isinstance(coeffs, MartingaleDecomposition):
        vals = coeffs.base
        for d in coeffs.diffs:
            vals = vals + d
        return StepFunction(coeffs.tree, coeffs.space, vals + coeffs.null)
    t = coeffs.tree
    H = walsh(t.n)[1:]
    avg = np.asarray(coeffs.mean, dtype=float).reshape(1, -1)
    for k in range(t.depth):
        inv = 1.0 / np.sqrt(np.asarray(t.masses[k], dtype=float))
        spread = np.einsum("tc,qtd->qcd", H, coeffs.coeffs[k])
        avg = (avg[:, None, :] + inv[:, None, None] * spread).reshape(-1, avg.shape[1])
    return StepFunction(t, coeffs.space, avg)


def haar_function(tree: DyadicTree, Q: Cube, theta: int) -> StepFunction:
    """h_Q^theta: modulus mu(Q)^{-1/2} on Q, sign pattern theta over the children."""
    _require_uniform(tree)
    if not 1 <= theta < 2 ** tree.n or Q.k >= tree.depth:
        raise ValueError("need theta in 1..2**n - 1 and a cube above the leaf level")
    H = walsh(tree.n)[theta]
    vals = np.zeros(tree.size)
    sl = Q.leaf_slice(tree.depth)
    per_child = (sl.stop - sl.start) // tree.branching
    vals[sl] = np.repeat(H, per_child) / math.sqrt(float(tree.mass(Q)))
    return StepFunction.scalar(tree, vals)


# ---------------------------------------------------------------------------
# norms


def _weights(f: StepFunction, weight) -> np.ndarray:
    m = np.asarray(f.tree.leaf_mass, dtype=float)
    if weight is None:
        return m
    w = weight.scalar_values() if isinstance(weight, StepFunction) else np.asarray(weight)
    w = np.asarray(w, dtype=float).ravel()
    if w.shape != m.shape:
        raise ValueError("weight must have one value per leaf")
    if np.any(w < 0):
        raise ValueError("weights must be nonnegative")
    return m * w


def field_norm(tree: DyadicTree, values, p: float, weight=None) -> float:
    """L^p(w mu) norm of a nonnegative scalar leaf field."""
    g = StepFunction.scalar(tree, np.abs(np.asarray(values, dtype=float)))
    return lp_norm(g, p, weight)


def lp_norm(f: StepFunction, p: float, weight=None) -> float:
    if not p >= 1:
        raise ValueError("p must be >= 1")
    wm = _weights(f, weight)
    nr = f.leaf_norms()
    live = wm > 0
    if p == math.inf:
        return float(nr[live].max()) if np.any(live) else 0.0
    top = float(nr.max()) if len(nr) else 0.0
    if top == 0.0:
        return 0.0
    # scaled for range safety; exact for p = 1
    if p == 1:
        return float(np.dot(wm, nr))
    return top * float(np.dot(wm, (nr / top) ** p)) ** (1.0 / p)


def weak_l1(g, tree: DyadicTree | None = None) -> float:
    """sup_lambda lambda * mu{g > lambda} for a nonnegative scalar step function."""
    if isinstance(g, StepFunction):
        tree, vals = g.tree, np.asarray(g.scalar_values(), dtype=float)
    else:
        vals = np.asarray(g, dtype=float).ravel()
        if tree is None:
            raise ValueError("a tree is required for raw value arrays")
    if np.any(vals < 0):
        raise ValueError("weak L1 quasi-norm needs a nonnegative function")
    m = np.asarray(tree.leaf_mass, dtype=float)
    live = m > 0
    vals, m = vals[live], m[live]
    if len(vals) == 0:
        return 0.0
    order = np.argsort(-vals, kind="stable")
    v, w = vals[order], m[order]
    cum = np.cumsum(w)
    # mu{g >= v_j}: include ties
    last = np.r_[v[1:] != v[:-1], True]
    return float(np.max(v[last] * cum[last]))


def _weighted_median(vals: np.ndarray, w: np.ndarray) -> np.ndarray:
    """Row-wise weighted median; midpoint of the median interval on ties."""
    order = np.argsort(vals, axis=1, kind="stable")
    v = np.take_along_axis(vals, order, axis=1)
    ww = np.take_along_axis(w, order, axis=1)
    cum = np.cumsum(ww, axis=1)
    half = cum[:, -1:] / 2.0
    lo_idx = np.argmax(cum >= half, axis=1)
    # an exact hit of one half opens an interval up to the next positive-weight value
    rows = np.arange(len(v))
    exact_hit = cum[rows, lo_idx] == half[:, 0]
    out = v[rows, lo_idx].copy()
    for r in np.flatnonzero(exact_hit):
        nxt = np.flatnonzero((ww[r] > 0) & (np.arange(v.shape[1]) > lo_idx[r]))
        if len(nxt):
            out[r] = 0.5 * (v[r, lo_idx[r]] + v[r, nxt[0]])
    return out


def bmo_norm(f: StepFunction, p: float = 1.0, centering: str = "average") -> float:
    """Dyadic BMO norm: sup over cubes of the p-mean oscillation.

    ``centering='average'`` subtracts <f>_Q; ``'optimal-constant'`` (scalar f,
    p = 1) subtracts a mu-weighted median, which minimises the mean deviation.
    """
    t = f.tree
    m = np.asarray(t.leaf_mass, dtype=float)
    masses = [np.asarray(x, dtype=float) for x in t.masses]
    best = 0.0
    if centering == "average":
        if not 1 <= p < math.inf:
            raise ValueError("BMO exponent must lie in [1, inf)")
        vals = np.asarray(f.values, dtype=float)
        for k in range(t.depth + 1):
            dev = f.space.norms(vals - t.expand(np.asarray(f.averages(k), dtype=float), k))
            s = (m * dev ** p).reshape(t.level_size(k), -1).sum(axis=1)
            live = masses[k] > 0
            if np.any(live):
                best = max(best, float(np.max((s[live] / masses[k][live]) ** (1.0 / p))))
        return best
    if centering == "optimal-constant":
        if not f.is_scalar:
            raise ValueError("optimal-constant centering needs a scalar function")
        if p != 1:
            raise ValueError("optimal-constant centering is defined for p = 1")
        vals = np.asarray(f.scalar_values(), dtype=float)
        for k in range(t.depth + 1):
            V = vals.reshape(t.level_size(k), -1)
            W = m.reshape(t.level_size(k), -1)
            live = masses[k] > 0
            if not np.any(live):
                continue
            med = _weighted_median(V[live], W[live])
            s = (W[live] * np.abs(V[live] - med[:, None])).sum(axis=1)
            best = max(best, float(np.max(s / masses[k][live])))
        return best
    raise ValueError(f"unknown centering {centering!r}")


def h1_norm(f: StepFunction) -> float:
    """||Mf||_{L^1} with M the dyadic maximal function."""
    return field_norm(f.tree, maximal_values(f), 1)
