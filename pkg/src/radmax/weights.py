"""Dyadic Muckenhoupt diagnostics for weights on a finite tree."""

from __future__ import annotations

import itertools
import math

import numpy as np

from .stepfn import StepFunction, lp_norm, maximal_values


def _weight_values(w: StepFunction) -> np.ndarray:
    if not w.is_scalar:
        raise ValueError("a weight is a scalar step function")
    vals = np.asarray(w.scalar_values(), dtype=float)
    live = np.asarray(w.tree.leaf_mass, dtype=float) > 0
    if np.any(vals[live] <= 0):
        raise ValueError("weights must be positive on every leaf of positive mass")
    # zero-mass leaves are ignored; park a harmless value there
    return np.where(live, vals, 1.0)


def ap_characteristic(w: StepFunction, p: float) -> float:
    """sup over cubes of <w>_Q (<w^{1-p'}>_Q)^{p-1}; never below 1."""
    if not 1 < p < math.inf:
        raise ValueError("p must lie in (1, inf)")
    vals = _weight_values(w)
    # scale invariant; normalising makes constant weights come out exactly 1
    vals = vals / vals.max()
    dual = 1.0 - p / (p - 1.0)  # 1 - p'
    a = StepFunction.scalar(w.tree, vals)
    b = StepFunction.scalar(w.tree, vals ** dual)
    masses = [np.asarray(m, dtype=float) for m in w.tree.masses]
    best = 1.0
    for k in range(w.tree.depth + 1):
        live = masses[k] > 0
        if not np.any(live):
            continue
        prod = a.averages(k)[live, 0] * b.averages(k)[live, 0] ** (p - 1.0)
        best = max(best, float(prod.max()))
    return best


def _share(wE, wQ, mE, mQ, gamma):
    if gamma == 1:
        return (wE * mQ) / (wQ * mE)
    return (wE / wQ) / (mE / mQ) ** gamma


def fair_share_ratio(
    w: StepFunction,
    gamma: float,
    samples: int = 256,
    seed: int = 0,
    exhaustive_limit: int = 8,
) -> float:
    """Largest observed (w(E)/w(Q)) / (mu(E)/mu(Q))^gamma.

    E runs over unions of descendants of Q taken from a single level.  Pairs
    (Q, level) with at most ``exhaustive_limit`` descendants are enumerated
    completely; ``samples`` further random (Q, level, union) draws cover the
    larger ones.
    """
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    t = w.tree
    wint = StepFunction.scalar(t, _weight_values(w))
    masses = [np.asarray(x, dtype=float) for x in t.masses]
    weights = [wint.integrals(k)[:, 0] for k in range(t.depth + 1)]

    def ratio(k, i, j, pick):
        count = len(pick)
        sub = slice(i * count, (i + 1) * count)
        mE = float(masses[j][sub][pick].sum())
        if mE <= 0 or masses[k][i] <= 0:
            return 0.0
        wE = float(weights[j][sub][pick].sum())
        return float(_share(wE, weights[k][i], mE, masses[k][i], gamma))

    best = 0.0
    large = []
    for k in range(t.depth + 1):
        for j in range(k, t.depth + 1):
            count = 2 ** (t.n * (j - k))
            if count > exhaustive_limit:
                large.append((k, j))
                continue
            for i in range(t.level_size(k)):
                for pick in itertools.product((False, True), repeat=count):
                    best = max(best, ratio(k, i, j, np.array(pick, dtype=bool)))
    if large:
        rng = np.random.default_rng(seed)
        for _ in range(samples):
            k, j = large[int(rng.integers(len(large)))]
            i = int(rng.integers(t.level_size(k)))
            best = max(best, ratio(k, i, j, rng.random(2 ** (t.n * (j - k))) < 0.5))
    return best


def self_improvement_scan(w: StepFunction, p: float, q_grid) -> list:
    """Rows (q, characteristic of w in the class with exponent p/q)."""
    grid = list(q_grid)
    if not grid:
        raise ValueError("empty q grid")
    rows = []
    for q in grid:
        if not 1 < q < p:
            raise ValueError(f"q must lie in (1, p); got {q}")
        rows.append((float(q), ap_characteristic(w, p / q)))
    return rows


def weighted_maximal_ratio(f: StepFunction, w: StepFunction, p: float) -> float:
    """||Mf||_{L^p(w)} / ||f||_{L^p(w)} (0 when f vanishes)."""
    den = lp_norm(f, p, weight=w)
    if den == 0:
        return 0.0
    mf = StepFunction.scalar(f.tree, maximal_values(f))
    return lp_norm(mf, p, weight=w) / den
