"""Rademacher averages and two-sided estimates of R-bounds of finite vector sets.

The R-bound of a set S is the supremum of

    (E || sum_k eps_k lam_k xi_k ||^2)^(1/2)

over finite selections xi_k from S (repetition allowed) and coefficients with
sum lam_k^2 <= 1.  Lower bounds here are always certificates: a witness
selection whose exact Rademacher average equals the reported value.  Upper
bounds come from the inequalities R(S) <= sum ||xi|| and its telescoping form
for ordered chains, or from the Hilbert identity when p = 2.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .space import NormedSpace

SEQUENCE_SUM = "sequence-sum"
TELESCOPING = "telescoping"
HILBERT_EXACT = "hilbert-exact"
TYPE2_HEURISTIC = "type2-heuristic"
CERTIFIED_METHODS = (SEQUENCE_SUM, TELESCOPING, HILBERT_EXACT)


class EnumerationCapExceeded(ValueError):
    pass


@dataclass(frozen=True)
class Selection:
    """Indices into a vector set plus coefficients in the unit l^2 ball."""

    indices: tuple
    coeffs: tuple

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        lam = tuple(float(c) for c in self.coeffs)
        if len(idx) != len(lam):
            raise ValueError("indices and coeffs must have equal length")
        if not idx:
            raise ValueError("empty selection")
        if sum(c * c for c in lam) > 1 + 1e-12:
            raise ValueError("coefficients must lie in the unit l2 ball")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "coeffs", lam)

    def __len__(self):
        return len(self.indices)

    def remap(self, mapping) -> "Selection":
        """Selection with every index replaced by ``mapping(index)``."""
        return Selection(tuple(mapping(i) for i in self.indices), self.coeffs)


@dataclass(frozen=True)
class RadEstimate:
    lower: float
    lower_witness: Selection
    upper: float
    upper_method: str

    @property
    def certified(self) -> bool:
        return self.upper_method in CERTIFIED_METHODS


@dataclass(frozen=True)
class EstimatorConfig:
    """Settings shared by every R-bound estimate (CLI: ``--estimator`` etc.)."""

    mode: str = "greedy"
    max_len: int = 8
    restarts: int = 8
    seed: int = 0
    grid: int = 12
    cap: int = 24
    iters: int = 200
    oracle_cap: int = 20000

    def __post_init__(self):
        if self.mode not in ("greedy", "oracle"):
            raise ValueError(f"unknown estimator mode {self.mode!r}")
        if self.max_len < 1 or self.restarts < 0 or self.iters < 1:
            raise ValueError("max_len >= 1, restarts >= 0 and iters >= 1 required")
        if self.max_len > self.cap:
            raise ValueError("max_len may not exceed the enumeration cap")

    @property
    def fingerprint(self) -> str:
        return (
            f"{self.mode}:len={self.max_len}:restarts={self.restarts}:seed={self.seed}"
            f":grid={self.grid}:iters={self.iters}"
        )


# ---------------------------------------------------------------------------
# exact Rademacher averages


def sign_patterns(k: int) -> np.ndarray:
    """All 2**k sign vectors of length k as a float array, row r <-> bits of r."""
    if k == 0:
        return np.ones((1, 0))
    r = np.arange(2 ** k)[:, None]
    bits = (r >> np.arange(k - 1, -1, -1)[None, :]) & 1
    return 1.0 - 2.0 * bits


def _as_vectors(space: NormedSpace, vectors) -> np.ndarray:
    v = np.asarray(vectors, dtype=float)
    if v.ndim == 1:
        v = v[None, :]
    if v.ndim != 2 or v.shape[1] != space.dim:
        raise ValueError(f"dimension mismatch: expected (k, {space.dim}), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("non-finite entry in vector set")
    return v


def rademacher_norm(space: NormedSpace, vectors, coeffs, cap: int = 24) -> float:
    """Exact (E||sum eps_k c_k v_k||^2)^(1/2) by enumerating 2**(k-1) sign patterns."""
    v = _as_vectors(space, vectors)
    c = np.asarray(coeffs, dtype=float).ravel()
    k = len(v)
    if k < 1:
        raise ValueError("need at least one vector")
    if len(c) != k:
        raise ValueError("vectors and coeffs lengths differ")
    if k > cap:
        raise EnumerationCapExceeded(f"{k} terms exceed the enumeration cap {cap}")
    if k == 1:
        return abs(float(c[0])) * space.norm(v[0])
    w = c[:, None] * v
    rest = w[1:]
    t = min(k - 1, 14)
    h = k - 1 - t
    tail = sign_patterns(t) @ rest[h:]
    total = 0.0
    for head in itertools.product((1.0, -1.0), repeat=h):
        base = w[0] + np.asarray(head) @ rest[:h] if h else w[0]
        nr = space.norms(base + tail)
        total += float(np.dot(nr, nr))
    return math.sqrt(total / 2 ** (k - 1))


def selection_norm(space: NormedSpace, S, sel: Selection, cap: int = 24) -> float:
    S = _as_vectors(space, S)
    return rademacher_norm(space, S[list(sel.indices)], sel.coeffs, cap=cap)


# ---------------------------------------------------------------------------
# upper bounds


def type2_heuristic(space: NormedSpace, S) -> float:
    """Advisory sqrt(p-1) * max||xi|| for p >= 2; not a certified bound."""
    S = _as_vectors(space, S)
    if space.p < 2:
        return math.inf
    return math.sqrt(space.p - 1.0) * float(space.norms(S).max())


def rbound_upper(space: NormedSpace, S, chain_order: bool = False, include_heuristic: bool = False):
    """Smallest applicable upper bound for R(S) and the tag of the method that won.

    With ``chain_order`` the rows of ``S`` are read as an ordered chain
    xi_1, ..., xi_m and the telescoping bound ||xi_1|| + sum ||xi_{k+1} - xi_k||
    is also considered.
    """
    S = _as_vectors(space, S)
    nr = space.norms(S)
    if space.is_hilbert:
        return float(nr.max()), HILBERT_EXACT
    # repeated vectors count once in the set
    _, first = np.unique(S, axis=0, return_index=True)
    best, tag = float(nr[np.sort(first)].sum()), SEQUENCE_SUM
    if chain_order and len(S) > 1:
        tele = float(nr[0] + space.norms(np.diff(S, axis=0)).sum())
        # ties go to the chain bound
        if tele <= best:
            best, tag = tele, TELESCOPING
    if include_heuristic:
        heur = type2_heuristic(space, S)
        if heur < best:
            best, tag = heur, TYPE2_HEURISTIC
    return best, tag


# ---------------------------------------------------------------------------
# coefficient ascent


def _mean_sq(space, vecs, lam, signs):
    """Batched E||sum eps lam xi||^2.  vecs (C,k,d), lam (C,B,k), signs (P,k)."""
    V = (lam[:, :, None, :] * signs) @ vecs[:, None]
    nr = space.norms(V)
    return np.mean(nr * nr, axis=-1), V


def _ascent(space, vecs, lam, signs, iters):
    """Projected gradient ascent on the unit sphere, step 0.1/sqrt(t)."""
    lam = lam / np.linalg.norm(lam, axis=-1, keepdims=True)
    best_val, V = _mean_sq(space, vecs, lam, signs)
    best_lam = lam.copy()
    P = signs.shape[0]
    for t in range(1, iters + 1):
        G = space.norm_grad_scaled(V)
        grad = (2.0 / P) * ((G @ vecs[:, None].swapaxes(-1, -2)) * signs).sum(axis=2)
        lam = lam + (0.1 / math.sqrt(t)) * grad
        nrm = np.linalg.norm(lam, axis=-1, keepdims=True)
        lam = lam / np.where(nrm > 0, nrm, 1.0)
        val, V = _mean_sq(space, vecs, lam, signs)
        better = val > best_val
        best_val = np.where(better, val, best_val)
        best_lam = np.where(better[..., None], lam, best_lam)
    return best_val, best_lam


def _normalised(S: np.ndarray):
    scale = float(np.abs(S).max())
    return (S / scale if scale > 0 else S), scale


def _certify(space, S, indices, lam, cap):
    lam = np.asarray(lam, dtype=float)
    lam = lam / max(float(np.linalg.norm(lam)), 1e-300)
    # guard against rounding pushing the norm above one
    while float(np.sum(lam * lam)) > 1.0:
        lam = lam * (1.0 - 1e-16)
    sel = Selection(tuple(indices), tuple(lam.tolist()))
    return selection_norm(space, S, sel, cap=cap), sel


def _estimate(space, S, lower, witness, chain_order):
    upper, tag = rbound_upper(space, S, chain_order=chain_order)
    if lower > upper:
        # certified uppers are mathematically >= any witness value; only rounding lands here
        upper = lower
    return RadEstimate(lower, witness, upper, tag)


def _best_singleton(space, S):
    nr = space.norms(S)
    i = int(np.argmax(nr))
    return float(nr[i]), Selection((i,), (1.0,))


def rbound_lower(
    space: NormedSpace,
    S,
    config: EstimatorConfig = EstimatorConfig(),
    warm_start=None,
    chain_order: bool = False,
    rng: np.random.Generator | None = None,
) -> RadEstimate:
    """Certified lower bound by singletons, greedy selection growth and multi-start ascent.

    ``warm_start`` may be a Selection or a sequence of them; each is evaluated
    and kept as a candidate, so the result never falls below any of them.
    """
    S = _as_vectors(space, S)
    if len(S) == 0:
        raise ValueError("empty vector set")
    lower, witness = _best_singleton(space, S)
    for ws in _warm_list(warm_start):
        val = selection_norm(space, S, ws, cap=config.cap)
        if val > lower:
            lower, witness = val, ws
    if space.is_hilbert:
        return _estimate(space, S, lower, witness, chain_order)
    if lower == 0.0:
        return _estimate(space, S, lower, witness, chain_order)
    if rng is None:
        rng = np.random.default_rng(config.seed)

    Sn, scale = _normalised(S)
    m = len(S)
    cur_idx = list(witness.indices)
    cur_lam = np.asarray(witness.coeffs)
    cur_val = (lower / scale) ** 2
    while len(cur_idx) < config.max_len:
        k = len(cur_idx) + 1
        signs = sign_patterns(k - 1)
        signs = np.hstack([np.ones((len(signs), 1)), signs])
        vecs = np.stack([Sn[cur_idx + [j]] for j in range(m)])  # (m, k, d)
        starts = [np.append(cur_lam * math.cos(a), math.sin(a)) for a in (0.3, 0.8)]
        starts += list(np.abs(rng.standard_normal((config.restarts, k))))
        lam0 = np.broadcast_to(np.stack(starts), (m, len(starts), k)).copy()
        val, lam = _ascent(space, vecs, lam0, signs, config.iters)
        c, b = np.unravel_index(int(np.argmax(val)), val.shape)
        if val[c, b] <= cur_val * (1 + 1e-12):
            break
        cur_idx = cur_idx + [int(c)]
        cur_lam = lam[c, b]
        cur_val = float(val[c, b])
        exact, sel = _certify(space, S, cur_idx, cur_lam, config.cap)
        if exact > lower:
            lower, witness = exact, sel
    return _estimate(space, S, lower, witness, chain_order)


def _warm_list(warm_start):
    if warm_start is None:
        return []
    if isinstance(warm_start, Selection):
        return [warm_start]
    return [w for w in warm_start if w is not None]


def _simplex_grid(k: int, res: int) -> np.ndarray:
    """Points of the k-simplex with coordinates in multiples of 1/res."""
    pts = []
    for cut in itertools.combinations(range(res + k - 1), k - 1):
        edges = (-1,) + cut + (res + k - 1,)
        pts.append([edges[i + 1] - edges[i] - 1 for i in range(k)])
    return np.asarray(pts, dtype=float) / res


def count_multisets(m: int, max_len: int) -> int:
    return sum(math.comb(m + j - 1, j) for j in range(1, max_len + 1))


def rbound_oracle(
    space: NormedSpace,
    S,
    max_len: int = 4,
    grid: int = 12,
    cap: int = 20000,
    tol: float = 1e-10,
    chain_order: bool = False,
) -> RadEstimate:
    """Exhaustive search over all multisets of size <= max_len.

    Each multiset gets a simplex grid of squared coefficients (resolution
    ``grid``) followed by local ascent from the best grid points until the
    improvement drops below ``tol``.
    """
    S = _as_vectors(space, S)
    m = len(S)
    if count_multisets(m, max_len) > cap:
        raise EnumerationCapExceeded(
            f"{count_multisets(m, max_len)} multisets exceed the oracle cap {cap}"
        )
    lower, witness = _best_singleton(space, S)
    if lower == 0.0:
        return _estimate(space, S, lower, witness, chain_order)
    Sn, scale = _normalised(S)
    for k in range(2, max_len + 1):
        signs = sign_patterns(k - 1)
        signs = np.hstack([np.ones((len(signs), 1)), signs])
        lam_grid = np.sqrt(_simplex_grid(k, grid))
        for combo in itertools.combinations_with_replacement(range(m), k):
            vecs = Sn[list(combo)][None]
            val, _ = _mean_sq(space, vecs, lam_grid[None], signs)
            top = np.argsort(val[0])[::-1][:3]
            best_val, best_lam = _polish(space, vecs, lam_grid[top][None], signs, tol)
            if best_val * scale * scale <= lower * lower * (1 - 1e-9):
                continue
            exact, sel = _certify(space, S, combo, best_lam, cap=max(k, 24))
            if exact > lower:
                lower, witness = exact, sel
    return _estimate(space, S, lower, witness, chain_order)


def _polish(space, vecs, lam, signs, tol, max_rounds=50):
    val, lam = _ascent(space, vecs, lam, signs, 20)
    for _ in range(max_rounds):
        new_val, new_lam = _ascent(space, vecs, lam, signs, 20)
        gain = float(new_val.max() - val.max())
        val, lam = new_val, new_lam
        if gain < tol:
            break
    b = int(np.argmax(val[0]))
    return float(val[0, b]), lam[0, b]


def estimate(space: NormedSpace, S, config: EstimatorConfig, warm_start=None,
             chain_order: bool = True, rng=None) -> RadEstimate:
    """Dispatch on ``config.mode``; chains are passed root first."""
    if config.mode == "oracle":
        est = rbound_oracle(space, S, max_len=config.max_len, grid=config.grid,
                            cap=config.oracle_cap, chain_order=chain_order)
        extra = _warm_list(warm_start)
        if extra:
            S = _as_vectors(space, S)
            lower, witness = est.lower, est.lower_witness
            for ws in extra:
                val = selection_norm(space, S, ws, cap=config.cap)
                if val > lower:
                    lower, witness = val, ws
            est = _estimate(space, S, lower, witness, chain_order)
        return est
    return rbound_lower(space, S, config, warm_start=warm_start,
                        chain_order=chain_order, rng=rng)
