"""Maximal operators: dyadic M and M_q, the Rademacher maximal function,
the square function and the dyadic paraproduct."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dyadic import Cube, DyadicTree, maximal_selection, selection_mask
from .rademacher import (
    HILBERT_EXACT,
    EnumerationCapExceeded,
    EstimatorConfig,
    RadEstimate,
    Selection,
    estimate,
    rademacher_norm,
    rbound_upper,
    selection_norm,
)
from .stepfn import HaarCoeffs, StepFunction, haar_decompose, haar_reconstruct, maximal_values, walsh


@dataclass
class MaxField:
    """Per-leaf lower/upper values of a maximal-type operator."""

    tree: DyadicTree
    lower: np.ndarray
    upper: np.ndarray
    fingerprint: str
    estimates: list | None = None
    chains: "ChainEstimates | None" = None

    def lower_function(self) -> StepFunction:
        return StepFunction.scalar(self.tree, self.lower)

    def upper_function(self) -> StepFunction:
        return StepFunction.scalar(self.tree, self.upper)


def dyadic_maximal(f: StepFunction, q: float | None = None, min_level: int = 0) -> StepFunction:
    """Mf = sup ||<f>_Q|| over Q containing x, or M_q f with q-means of ||f||."""
    if q is None:
        return StepFunction.scalar(f.tree, maximal_values(f, min_level))
    if not q >= 1:
        raise ValueError("q must be >= 1")
    nr = f.leaf_norms()
    top = float(nr.max()) if len(nr) else 0.0
    if top == 0.0:
        return StepFunction.scalar(f.tree, np.zeros(f.tree.size))
    g = StepFunction.scalar(f.tree, (nr / top) ** q)
    return StepFunction.scalar(f.tree, top * maximal_values(g, min_level) ** (1.0 / q))


# ---------------------------------------------------------------------------
# Rademacher maximal function


@dataclass
class ChainEstimates:
    """R-bound estimates of the ancestor chain of every cube at levels >= min_level.

    ``levels[k][i]`` estimates the set {<f>_R : R ⊇ Q, level(R) >= min_level}
    for the level-k cube Q with Morton index i; chain position j is level
    min_level + j.
    """

    tree: DyadicTree
    min_level: int
    levels: dict = field(default_factory=dict)

    def lower(self, k: int) -> np.ndarray:
        return np.array([e.lower for e in self.levels[k]])

    def upper(self, k: int) -> np.ndarray:
        return np.array([e.upper for e in self.levels[k]])


def chain_vectors(f: StepFunction, k: int, min_level: int = 0) -> np.ndarray:
    """Array (cubes at level k, chain length, d) of ancestor averages, root first."""
    t = f.tree
    idx = np.arange(t.level_size(k))
    cols = [
        np.asarray(f.averages(j), dtype=float)[idx >> (t.n * (k - j))]
        for j in range(min_level, k + 1)
    ]
    return np.stack(cols, axis=1)


def _cube_rng(config: EstimatorConfig, k: int, i: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([config.seed, k, i]))


def _hilbert_chains(f, min_level, warm_starts, config):
    t = f.tree
    out = ChainEstimates(t, min_level)
    best = arg = None
    for k in range(min_level, t.depth + 1):
        nr = f.space.norms(np.asarray(f.averages(k), dtype=float))
        if best is None:
            best, arg = nr, np.zeros(len(nr), dtype=int)
        else:
            best = np.repeat(best, t.branching)
            arg = np.repeat(arg, t.branching)
            take = nr > best
            best = np.where(take, nr, best)
            arg = np.where(take, k - min_level, arg)
        ests = [
            RadEstimate(float(b), Selection((int(a),), (1.0,)), float(b), HILBERT_EXACT)
            for b, a in zip(best, arg)
        ]
        if k == t.depth and warm_starts is not None:
            vecs = chain_vectors(f, k, min_level)
            for i, ws in enumerate(warm_starts):
                for w in _as_list(ws):
                    val = selection_norm(f.space, vecs[i], w, cap=config.cap)
                    if val > ests[i].lower:
                        ests[i] = RadEstimate(val, w, max(val, ests[i].upper), HILBERT_EXACT)
        out.levels[k] = ests
    return out


def _as_list(ws):
    if ws is None:
        return []
    if isinstance(ws, Selection):
        return [ws]
    return list(ws)


def chain_estimates(
    f: StepFunction,
    config: EstimatorConfig = EstimatorConfig(),
    min_level: int = 0,
    warm_starts=None,
) -> ChainEstimates:
    """Estimate every cube's ancestor chain, top down.

    Each cube is warm-started with its parent's witness, so lower bounds never
    decrease along a chain.  ``warm_starts`` optionally gives extra leaf-level
    candidates (one Selection or list of them per leaf).
    """
    t = f.tree
    if not 0 <= min_level <= t.depth:
        raise ValueError("min_level out of range")
    if warm_starts is not None and len(warm_starts) != t.size:
        raise ValueError("need one warm start entry per leaf")
    if f.space.is_hilbert:
        return _hilbert_chains(f, min_level, warm_starts, config)
    out = ChainEstimates(t, min_level)
    parent = None
    # identical (chain, candidates) pairs reuse the first estimate in Morton order
    memo = {}
    for k in range(min_level, t.depth + 1):
        vecs = chain_vectors(f, k, min_level)
        ests = []
        for i in range(t.level_size(k)):
            warm = [] if parent is None else [parent[i >> t.n].lower_witness]
            if k == t.depth and warm_starts is not None:
                warm += _as_list(warm_starts[i])
            key = (vecs[i].tobytes(), tuple(warm))
            if key not in memo:
                memo[key] = estimate(f.space, vecs[i], config, warm_start=warm,
                                     chain_order=True, rng=_cube_rng(config, k, i))
            ests.append(memo[key])
        out.levels[k] = ests
        parent = ests
    return out


def rmf(
    f: StepFunction,
    config: EstimatorConfig = EstimatorConfig(),
    min_level: int = 0,
    warm_starts=None,
) -> MaxField:
    """Rademacher maximal function (truncated at ``min_level``) as a certified interval field."""
    chains = chain_estimates(f, config, min_level, warm_starts)
    leaf = chains.levels[f.tree.depth]
    return MaxField(
        f.tree,
        np.array([e.lower for e in leaf]),
        np.array([e.upper for e in leaf]),
        config.fingerprint,
        estimates=leaf,
        chains=chains,
    )


def rmf_upper(f: StepFunction, min_level: int = 0) -> np.ndarray:
    """Certified per-leaf upper bounds only (no search)."""
    vecs = chain_vectors(f, f.tree.depth, min_level)
    return np.array([rbound_upper(f.space, v, chain_order=True)[0] for v in vecs])


def chain_field(space, vecs: np.ndarray, config: EstimatorConfig, keys=None):
    """Lower/upper R-bound estimates for a stack of chains (points, length, d).

    ``keys[i]`` seeds point i (default: its position).  Points with equal
    chains share the estimate of the first such point.
    """
    vecs = np.asarray(vecs, dtype=float)
    keys = range(len(vecs)) if keys is None else keys
    lower = np.zeros(len(vecs))
    upper = np.zeros(len(vecs))
    memo = {}
    for i, key in enumerate(keys):
        v = vecs[i]
        if not np.any(v):
            continue
        b = v.tobytes()
        if b not in memo:
            memo[b] = estimate(space, v, config, chain_order=True,
                               rng=np.random.default_rng(np.random.SeedSequence([config.seed, int(key)])))
        lower[i], upper[i] = memo[b].lower, memo[b].upper
    return lower, upper


def transfer_witnesses(estimates, remap) -> list:
    """Re-index leaf witnesses, e.g. onto a finer chain or a longer truncation."""
    return [e.lower_witness.remap(remap) for e in estimates]


# ---------------------------------------------------------------------------
# good-lambda geometry and the BMO sandwich


def stopping_selection(chains: ChainEstimates, lam: float) -> list:
    """Per-level flags of the maximal cubes whose chain lower bound exceeds lam."""
    t = chains.tree
    marks = [np.zeros(t.level_size(k), dtype=bool) for k in range(t.depth + 1)]
    for k in range(chains.min_level, t.depth + 1):
        marks[k] = chains.lower(k) > lam
    return maximal_selection(t, marks, chains.min_level)


def good_lambda_violations(chains: ChainEstimates, lam: float) -> int:
    """Leaves with lower bound > 2 lam outside the maximal cubes of level > lam."""
    t = chains.tree
    covered = selection_mask(t, stopping_selection(chains, lam))
    big = chains.lower(t.depth) > 2 * lam
    return int(np.count_nonzero(big & ~covered))


@dataclass
class SandwichReport:
    """c_Q per cube and the two sandwich slacks, checked on every (Q, x in Q)."""

    c: list
    lower: np.ndarray
    below: int
    above: int
    worst_below: float
    worst_above: float


def _project(sel: Selection, top: int) -> Selection:
    return Selection(tuple(min(i, top) for i in sel.indices), sel.coeffs)


def bmo_sandwich(f: StepFunction, config: EstimatorConfig = EstimatorConfig(),
                 tol: float = 1e-12) -> SandwichReport:
    """Check  c_Q <= lower(x)  and  lower(x) - c_Q <= upper(rmf of (f - <f>_Q)1_Q)(x).

    c_Q starts as the chain estimate of Q.  Leaf witnesses projected onto the
    chain of Q (indices above level(Q) clamped to it) are added as candidates
    for c_Q, and each c_Q witness is offered back to the leaves below, until
    nothing changes.  At the fixpoint both inequalities follow from the
    triangle inequality for Rademacher sums.
    """
    t = f.tree
    chains = chain_estimates(f, config)
    N = t.depth
    vecs = [chain_vectors(f, k) for k in range(N + 1)]
    c = [chains.lower(k) for k in range(N + 1)]
    cw = [[e.lower_witness for e in chains.levels[k]] for k in range(N + 1)]
    low = c[N].copy()
    lw = list(cw[N])
    cap = config.cap
    changed = True
    while changed:
        changed = False
        for x in range(t.size):
            for k in range(N + 1):
                i = x >> (t.n * (N - k))
                proj = _project(lw[x], k)
                val = selection_norm(f.space, vecs[k][i], proj, cap=cap)
                if val > c[k][i]:
                    c[k][i], cw[k][i] = val, proj
                    changed = True
        for x in range(t.size):
            for k in range(N + 1):
                i = x >> (t.n * (N - k))
                if c[k][i] > low[x]:
                    val = selection_norm(f.space, vecs[N][x], cw[k][i], cap=cap)
                    if val > low[x]:
                        low[x], lw[x] = val, cw[k][i]
                        changed = True
    below = above = 0
    worst_below = worst_above = 0.0
    for k in range(N + 1):
        avg = np.asarray(f.averages(k), dtype=float)
        for i in range(t.level_size(k)):
            Q = Cube.from_morton(t.n, k, i)
            sl = Q.leaf_slice(N)
            local = np.zeros((t.size, f.space.dim))
            local[sl] = np.asarray(f.values[sl], dtype=float) - avg[i]
            ub = rmf_upper(f.with_values(local))
            d = low[sl] - c[k][i]
            worst_below = min(worst_below, float(d.min()))
            worst_above = max(worst_above, float((d - ub[sl]).max()))
            below += int(np.count_nonzero(d < -tol))
            above += int(np.count_nonzero(d - ub[sl] > tol))
    return SandwichReport(c, low, below, above, worst_below, worst_above)


# ---------------------------------------------------------------------------
# square function and paraproduct


def square_terms(f: StepFunction) -> np.ndarray:
    """Array (leaves, terms, d) of <f, h_Q^theta> h_Q^theta(x) over Q containing x."""
    t = f.tree
    coeffs = haar_decompose(f, adapted=False)
    H = walsh(t.n)[1:]
    cols = []
    leaves = np.arange(t.size)
    for k in range(t.depth):
        q = leaves >> (t.n * (t.depth - k))
        child = (leaves >> (t.n * (t.depth - k - 1))) & (t.branching - 1)
        inv = 1.0 / np.sqrt(np.asarray(t.masses[k], dtype=float))[q]
        ck = coeffs.coeffs[k][q]  # (L, 2**n - 1, d)
        cols.append(ck * (H[:, child].T * inv[:, None])[:, :, None])
    if not cols:
        return np.zeros((t.size, 0, f.space.dim))
    return np.concatenate(cols, axis=1)


def square_function(f: StepFunction, config: EstimatorConfig = EstimatorConfig(),
                    exact: bool = False) -> MaxField:
    """Dyadic square function (E||sum eps h-terms||^2)^(1/2) per leaf.

    Exact when the space is Hilbert or a leaf has at most ``config.cap``
    nonzero terms.  Otherwise the lower bound enumerates the ``cap`` largest
    terms (dropping terms never increases the mean square) and the upper bound
    is the sum of term norms.  ``exact=True`` raises instead of estimating.
    """
    terms = square_terms(f)
    nr = f.space.norms(terms) if terms.shape[1] else np.zeros((f.tree.size, 0))
    if f.space.is_hilbert:
        val = np.sqrt((nr * nr).sum(axis=1))
        return MaxField(f.tree, val, val.copy(), "exact")
    lower = np.zeros(f.tree.size)
    upper = np.zeros(f.tree.size)
    for x in range(f.tree.size):
        live = np.flatnonzero(nr[x] > 0)
        if len(live) == 0:
            continue
        if len(live) <= config.cap:
            v = rademacher_norm(f.space, terms[x, live], np.ones(len(live)), cap=config.cap)
            lower[x] = upper[x] = v
            continue
        if exact:
            raise EnumerationCapExceeded(f"{len(live)} terms exceed the cap {config.cap}")
        top = live[np.argsort(-nr[x, live], kind="stable")[: config.cap]]
        top.sort()
        lower[x] = rademacher_norm(f.space, terms[x, top], np.ones(len(top)), cap=config.cap)
        upper[x] = max(float(nr[x, live].sum()), lower[x])
    return MaxField(f.tree, lower, upper, f"square:cap={config.cap}")


def paraproduct(b: StepFunction, f: StepFunction) -> StepFunction:
    """Pi_b f = sum over Q, theta of <f>_Q <b, h_Q^theta> h_Q^theta."""
    if not b.is_scalar:
        raise ValueError("the symbol b must be scalar")
    if not b.tree.same_shape(f.tree):
        raise ValueError("b and f live on different trees")
    t = f.tree
    bc = haar_decompose(b, adapted=False)
    coeffs = []
    for k in range(t.depth):
        avg = np.asarray(f.averages(k), dtype=float)  # (cubes, d)
        coeffs.append(bc.coeffs[k][:, :, 0][:, :, None] * avg[:, None, :])
    out = HaarCoeffs(t, f.space, np.zeros(f.space.dim), coeffs)
    return haar_reconstruct(out)
