"""Calderón–Zygmund, Gundy and atomic decompositions with checkable pieces."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dyadic import Cube, maximal_cubes
from .stepfn import StepFunction, lp_norm, maximal_values


def _scalar_norms(f: StepFunction) -> StepFunction:
    return StepFunction.scalar(f.tree, f.leaf_norms())


def _positive(lam: float):
    if not lam > 0:
        raise ValueError("the height lambda must be positive")


@dataclass
class CZResult:
    lam: float
    stopping: list
    g: StepFunction
    bad: list

    def bad_total(self) -> StepFunction:
        vals = np.zeros_like(self.g.values)
        for _, b in self.bad:
            vals = vals + b.values
        return self.g.with_values(vals)

    def stopped_mass(self) -> float:
        return float(sum(self.g.tree.mass(Q) for Q in self.stopping))


def calderon_zygmund(f: StepFunction, lam: float) -> CZResult:
    """Stop on the maximal cubes where the mean of ||f|| exceeds lam.

    g keeps f off the stopping cubes and equals <f>_Q on each of them; the
    bad pieces are (f - <f>_Q) 1_Q.
    """
    _positive(lam)
    t = f.tree
    mean_norm = _scalar_norms(f)
    marks = [
        np.asarray(mean_norm.averages(k)[:, 0], dtype=float) > lam for k in range(t.depth + 1)
    ]
    stopping = maximal_cubes(t, marks)
    g = f.values.copy()
    bad = []
    for Q in stopping:
        sl = Q.leaf_slice(t.depth)
        avg = f.averages(Q.k)[Q.index]
        piece = np.zeros_like(f.values)
        piece[sl] = f.values[sl] - avg
        g[sl] = avg
        bad.append((Q, f.with_values(piece)))
    return CZResult(lam, stopping, f.with_values(g), bad)


@dataclass
class GundyResult:
    """f = g + h + b at height lam with stopping time tau (math.inf where it never stops)."""

    lam: float
    min_level: int
    g: StepFunction
    h: StepFunction
    b: StepFunction
    tau: np.ndarray

    def h_variation(self) -> float:
        """||A_{N0} h||_1 + sum_k ||A_{k+1} h - A_k h||_1."""
        t = self.h.tree
        prev = self.h.tree.expand(self.h.averages(self.min_level), self.min_level)
        total = lp_norm(self.h.with_values(prev), 1)
        for k in range(self.min_level + 1, t.depth + 1):
            cur = t.expand(self.h.averages(k), k)
            total += lp_norm(self.h.with_values(cur - prev), 1)
            prev = cur
        return total

    def bad_support_mass(self) -> float:
        """mu{Mb > 0} with the maximal function truncated at min_level."""
        mb = maximal_values(self.b, self.min_level)
        return float(np.asarray(self.b.tree.leaf_mass, dtype=float)[mb > 0].sum())

    def stopped_mass(self) -> float:
        return float(np.asarray(self.b.tree.leaf_mass, dtype=float)[np.isfinite(self.tau)].sum())


def gundy(f: StepFunction, lam: float, min_level: int = 0) -> GundyResult:
    """Stopping-time decomposition at height lam over levels min_level..N.

    tau is the first level k >= min_level where ||A_k f|| > lam.  The stopped
    function f^tau is A_tau f (f where tau never fires), b = f - f^tau, the
    jump at tau is A_tau f - A_{tau-1} f (A_{min_level-1} f := 0) and h keeps
    the jumps larger than 2 lam; g = f^tau - h.
    """
    _positive(lam)
    t = f.tree
    if not 0 <= min_level <= t.depth:
        raise ValueError("min_level out of range")
    A = [t.expand(f.averages(k), k) for k in range(min_level, t.depth + 1)]
    tau = np.full(t.size, math.inf)
    for j, Ak in enumerate(A):
        hit = (f.space.norms(Ak) > lam) & ~np.isfinite(tau)
        tau[hit] = min_level + j
    stopped = f.values.copy()
    jump = np.zeros_like(f.values)
    for j, Ak in enumerate(A):
        at = tau == min_level + j
        stopped[at] = Ak[at]
        jump[at] = Ak[at] - (A[j - 1][at] if j > 0 else 0)
    big = f.space.norms(jump) > 2 * lam
    h = np.zeros_like(f.values)
    h[big] = jump[big]
    return GundyResult(
        lam,
        min_level,
        f.with_values(stopped - h),
        f.with_values(h),
        f.with_values(f.values - stopped),
        tau,
    )


@dataclass
class Atom:
    coef: float
    cube: Cube
    a: StepFunction
    height: int


@dataclass
class AtomicDecomp:
    q: float
    atoms: list
    residual: StepFunction
    h1: float

    def reconstruct(self) -> StepFunction:
        vals = np.asarray(self.residual.values, dtype=float).copy()
        for at in self.atoms:
            vals = vals + at.coef * at.a.values
        return self.residual.with_values(vals)

    @property
    def coefficient_sum(self) -> float:
        return float(sum(abs(at.coef) for at in self.atoms))

    @property
    def ratio(self) -> float:
        return self.coefficient_sum / self.h1 if self.h1 > 0 else 0.0


def _dual_power(q: float) -> float:
    """1/q' for the conjugate exponent."""
    return 1.0 if q == math.inf else 1.0 - 1.0 / q


def atom_defects(a: StepFunction, Q: Cube, q: float) -> tuple:
    """(mass of the support outside Q, ||integral||, ||a||_q - mu(Q)^{-1/q'})."""
    t = a.tree
    sl = Q.leaf_slice(t.depth)
    nr = a.leaf_norms()
    m = np.asarray(t.leaf_mass, dtype=float)
    outside = np.ones(t.size, dtype=bool)
    outside[sl] = False
    spill = float(m[outside & (nr > 0)].sum())
    mean = float(a.space.norm(np.asarray(a.integral(), dtype=float)))
    excess = lp_norm(a, q) - float(t.mass(Q)) ** (-_dual_power(q))
    return spill, mean, excess


def is_atom(a: StepFunction, Q: Cube, q: float, tol: float = 1e-12) -> bool:
    spill, mean, excess = atom_defects(a, Q, q)
    bound = float(a.tree.mass(Q)) ** (-_dual_power(q))
    return spill == 0.0 and mean <= tol * max(1.0, bound) and excess <= tol * max(1.0, bound)


def atomic_decompose(f: StepFunction, q: float = math.inf, tol: float = 1e-12) -> AtomicDecomp:
    """q-atoms from Calderón–Zygmund stopping at the heights 2**j.

    With g_j the good part at height 2**j, each piece (g_{j+1} - g_j) 1_Q over
    a stopping cube Q of height 2**j is mean zero and supported in Q; scaling
    it to unit atom size gives the coefficient.  Heights run from below the
    root mean of ||f|| (where g is the root average) up to the largest value.
    """
    if not q > 1:
        raise ValueError("atoms need q > 1")
    t = f.tree
    m = np.asarray(t.leaf_mass, dtype=float)
    nr = f.leaf_norms()
    scale = float(np.dot(m, nr))
    root = np.asarray(f.averages(0)[0], dtype=float)
    if f.space.norm(root) * float(t.masses[0][0]) > tol * max(scale, 1e-300):
        raise ValueError("atomic decomposition needs a mean-zero function")
    h1 = lp_norm(StepFunction.scalar(t, maximal_values(f)), 1)
    residual = f.with_values(np.zeros((t.size, f.space.dim)))
    live = m > 0
    if scale == 0.0 or not np.any(live):
        return AtomicDecomp(q, [], residual, h1)
    top = float(nr[live].max())
    root_mean = float(_scalar_norms(f).averages(0)[0, 0])
    j_hi = math.ceil(math.log2(top))
    while 2.0 ** (j_hi - 1) >= top:
        j_hi -= 1
    while 2.0 ** j_hi < top:
        j_hi += 1
    j_lo = math.floor(math.log2(root_mean))
    while 2.0 ** j_lo >= root_mean:
        j_lo -= 1
    while 2.0 ** (j_lo + 1) < root_mean:
        j_lo += 1
    fv = np.asarray(f.values, dtype=float)
    ff = f.with_values(fv)
    atoms = []
    czs = {j: calderon_zygmund(ff, 2.0 ** j) for j in range(j_lo, j_hi + 1)}
    for j in range(j_lo, j_hi):
        g_lo, g_hi = czs[j].g.values, czs[j + 1].g.values
        for Q in czs[j].stopping:
            sl = Q.leaf_slice(t.depth)
            piece = np.zeros_like(fv)
            piece[sl] = g_hi[sl] - g_lo[sl]
            term = ff.with_values(piece)
            size = lp_norm(term, q)
            if size == 0.0:
                continue
            coef = size * float(t.mass(Q)) ** _dual_power(q)
            atoms.append(Atom(coef, Q, ff.with_values(piece / coef), j))
    residual = ff.with_values(czs[j_lo].g.values)
    return AtomicDecomp(q, atoms, residual, h1)
