"""Dyadic cubes of the unit cube, Morton-ordered trees and shifted systems.

A cube at level k is ``2**-k * ([0,1)^n + m)`` with integer ``m``.  Leaves of a
depth-N tree are stored in Morton (bit-interleaved) order, so the leaves under
a cube form one contiguous block and the interval of the one-dimensional tree
of depth nN matched to a cube has the cube's Morton index.  Bits of the first
coordinate are the most significant within each group of n bits.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Sequence

import numpy as np


def morton_encode(m: Sequence[int], k: int) -> int:
    """Morton index of the level-k cube with integer corner ``m``."""
    n = len(m)
    code = 0
    for level in range(k - 1, -1, -1):
        for i in range(n):
            code = (code << 1) | ((int(m[i]) >> level) & 1)
    return code


def morton_decode(code: int, k: int, n: int) -> tuple:
    m = [0] * n
    for level in range(k):
        for i in range(n - 1, -1, -1):
            m[i] |= (code & 1) << level
            code >>= 1
    return tuple(m)


def morton_decode_array(codes: np.ndarray, k: int, n: int) -> np.ndarray:
    """Vectorised decode; returns integer coordinates of shape (len(codes), n)."""
    codes = np.asarray(codes, dtype=np.int64)
    out = np.zeros((len(codes), n), dtype=np.int64)
    c = codes.copy()
    for level in range(k):
        for i in range(n - 1, -1, -1):
            out[:, i] |= (c & 1) << level
            c >>= 1
    return out


def morton_encode_array(coords: np.ndarray, k: int) -> np.ndarray:
    coords = np.asarray(coords, dtype=np.int64)
    n = coords.shape[1]
    code = np.zeros(len(coords), dtype=np.int64)
    for level in range(k - 1, -1, -1):
        for i in range(n):
            code = (code << 1) | ((coords[:, i] >> level) & 1)
    return code


@dataclass(frozen=True, order=True)
class Cube:
    """Dyadic subcube ``2**-k ([0,1)^n + m)`` of the unit cube."""

    n: int
    k: int
    m: tuple

    def __post_init__(self):
        m = tuple(int(x) for x in self.m)
        if len(m) != self.n:
            raise ValueError("corner length must equal the dimension")
        if self.k < 0 or any(x < 0 or x >= 2 ** self.k for x in m):
            raise ValueError(f"cube {m} at level {self.k} lies outside the unit cube")
        object.__setattr__(self, "m", m)

    @classmethod
    def root(cls, n: int) -> "Cube":
        return cls(n, 0, (0,) * n)

    @classmethod
    def from_morton(cls, n: int, k: int, index: int) -> "Cube":
        if not 0 <= index < 2 ** (n * k):
            raise ValueError(f"index {index} out of range for level {k}")
        return cls(n, k, morton_decode(index, k, n))

    @property
    def index(self) -> int:
        return morton_encode(self.m, self.k)

    @property
    def volume(self) -> Fraction:
        return Fraction(1, 2 ** (self.n * self.k))

    @property
    def corner(self) -> tuple:
        return tuple(Fraction(x, 2 ** self.k) for x in self.m)

    @property
    def side(self) -> Fraction:
        return Fraction(1, 2 ** self.k)

    def children(self) -> list:
        """The 2**n children in Morton order."""
        out = []
        for delta in itertools.product((0, 1), repeat=self.n):
            out.append(Cube(self.n, self.k + 1, tuple(2 * x + d for x, d in zip(self.m, delta))))
        return out

    def parent(self) -> "Cube":
        if self.k == 0:
            raise ValueError("the level-0 cube has no parent")
        return Cube(self.n, self.k - 1, tuple(x >> 1 for x in self.m))

    def ancestor(self, level: int) -> "Cube":
        if not 0 <= level <= self.k:
            raise ValueError("ancestor level out of range")
        s = self.k - level
        return Cube(self.n, level, tuple(x >> s for x in self.m))

    def contains(self, other: "Cube") -> bool:
        return other.k >= self.k and other.ancestor(self.k) == self

    def leaf_slice(self, depth: int) -> slice:
        """Block of Morton leaf indices of a depth-``depth`` tree under this cube."""
        size = 2 ** (self.n * (depth - self.k))
        start = self.index * size
        return slice(start, start + size)

    def literal(self) -> str:
        return f"n{self.k}:{self.index}"

    def __str__(self):
        parts = [f"[{Fraction(x, 2 ** self.k)},{Fraction(x + 1, 2 ** self.k)})" for x in self.m]
        return "x".join(parts)


def parse_cube(text: str, n: int) -> Cube:
    """Inverse of :meth:`Cube.literal`; the dimension comes from context."""
    head, _, idx = text.partition(":")
    if not head.startswith("n") or not idx:
        raise ValueError(f"bad cube literal {text!r}")
    return Cube.from_morton(n, int(head[1:]), int(idx))


def children(Q: Cube) -> list:
    return Q.children()


def parent(Q: Cube) -> Cube:
    return Q.parent()


def interleave(Q: Cube) -> Cube:
    """Measure- and order-preserving map of a level-k cube onto a level-nk interval."""
    return Cube(1, Q.n * Q.k, (Q.index,))


def deinterleave(I: Cube, n: int) -> Cube:
    if I.n != 1 or I.k % n:
        raise ValueError("interval level must be a multiple of the target dimension")
    return Cube.from_morton(n, I.k // n, I.m[0])


class DyadicTree:
    """Depth-N dyadic partition of [0,1)^n with a nonnegative mass per leaf.

    ``leaf_mass`` may be a float array or an object array of Fractions; all
    derived sums keep its dtype, which makes exact-arithmetic runs possible.
    """

    def __init__(self, n: int, depth: int, leaf_mass=None):
        if n < 1 or depth < 0:
            raise ValueError("need n >= 1 and depth >= 0")
        self.n = int(n)
        self.depth = int(depth)
        size = 2 ** (self.n * self.depth)
        if leaf_mass is None:
            leaf_mass = np.full(size, 1.0 / size)
            self.uniform = True
        else:
            leaf_mass = np.asarray(leaf_mass)
            if leaf_mass.dtype != object:
                leaf_mass = leaf_mass.astype(float)
            if leaf_mass.shape != (size,):
                raise ValueError(f"expected {size} leaf masses, got shape {leaf_mass.shape}")
            if any(x < 0 for x in leaf_mass.tolist()):
                raise ValueError("leaf masses must be nonnegative")
            first = leaf_mass[0]
            self.uniform = bool(np.all(leaf_mass == first)) and first > 0
        self.leaf_mass = leaf_mass
        self.leaf_mass.setflags(write=False)

    @classmethod
    def uniform_tree(cls, n: int, depth: int) -> "DyadicTree":
        return cls(n, depth)

    @property
    def size(self) -> int:
        return len(self.leaf_mass)

    @property
    def branching(self) -> int:
        return 2 ** self.n

    @property
    def exact(self) -> bool:
        return self.leaf_mass.dtype == object

    def level_size(self, k: int) -> int:
        return 2 ** (self.n * k)

    @cached_property
    def masses(self) -> list:
        """Cube masses per level, built bottom-up so parents are sums of children."""
        out = [None] * (self.depth + 1)
        out[self.depth] = self.leaf_mass
        for k in range(self.depth - 1, -1, -1):
            out[k] = out[k + 1].reshape(-1, self.branching).sum(axis=1)
        return out

    def mass(self, Q: Cube):
        self._check_cube(Q)
        return self.masses[Q.k][Q.index]

    def _check_cube(self, Q: Cube):
        if Q.n != self.n or Q.k > self.depth:
            raise ValueError(f"cube {Q} is not in this tree")

    def leaf_cube(self, leaf: int) -> Cube:
        return Cube.from_morton(self.n, self.depth, leaf)

    def ancestor_index(self, leaf, k: int):
        """Morton index of the level-k ancestor (works on arrays)."""
        return np.asarray(leaf) >> (self.n * (self.depth - k))

    def leaves_to_level(self, k: int) -> np.ndarray:
        return np.arange(self.size) >> (self.n * (self.depth - k))

    def expand(self, level_values: np.ndarray, k: int) -> np.ndarray:
        """Repeat per-cube values of level k onto the leaves."""
        return np.repeat(level_values, 2 ** (self.n * (self.depth - k)), axis=0)

    def cubes(self, k: int) -> list:
        return [Cube.from_morton(self.n, k, i) for i in range(self.level_size(k))]

    def same_shape(self, other: "DyadicTree") -> bool:
        return self.n == other.n and self.depth == other.depth

    def __eq__(self, other):
        return (
            isinstance(other, DyadicTree)
            and self.same_shape(other)
            and np.array_equal(self.leaf_mass, other.leaf_mass)
        )

    def __repr__(self):
        kind = "uniform" if self.uniform else "leafmass"
        return f"DyadicTree(n={self.n}, depth={self.depth}, {kind})"


def chain(tree: DyadicTree, leaf_index: int) -> list:
    """Cubes Q_0 ⊃ Q_1 ⊃ ... ⊃ Q_N containing the given leaf, root first."""
    if not 0 <= leaf_index < tree.size:
        raise IndexError(f"leaf index {leaf_index} out of range")
    return [
        Cube.from_morton(tree.n, k, int(tree.ancestor_index(leaf_index, k)))
        for k in range(tree.depth + 1)
    ]


def _marks_by_level(tree: DyadicTree, marked) -> list:
    if callable(marked):
        return [
            np.array([bool(marked(Q)) for Q in tree.cubes(k)], dtype=bool)
            for k in range(tree.depth + 1)
        ]
    marks = [np.asarray(m, dtype=bool) for m in marked]
    if len(marks) != tree.depth + 1 or any(
        len(m) != tree.level_size(k) for k, m in enumerate(marks)
    ):
        raise ValueError("need one boolean array per level with one entry per cube")
    return marks


def maximal_selection(tree: DyadicTree, marked, min_level: int = 0) -> list:
    """Per-level boolean arrays of the maximal marked cubes (levels >= min_level)."""
    marks = _marks_by_level(tree, marked)
    chosen = [np.zeros(tree.level_size(k), dtype=bool) for k in range(tree.depth + 1)]
    covered = np.zeros(tree.level_size(min_level), dtype=bool)
    for k in range(min_level, tree.depth + 1):
        if k > min_level:
            covered = np.repeat(covered | marks[k - 1], tree.branching)
        chosen[k] = marks[k] & ~covered
    return chosen


def maximal_cubes(tree: DyadicTree, marked, min_level: int = 0) -> list:
    """Marked cubes with no marked strict ancestor at level >= min_level.

    ``marked`` is a predicate on cubes or a list of per-level boolean arrays
    indexed by Morton index.  Output is sorted by position (Morton order of
    the first leaf) and is pairwise disjoint.
    """
    chosen = maximal_selection(tree, marked, min_level)
    out = []
    for k, sel in enumerate(chosen):
        for i in np.flatnonzero(sel):
            out.append(Cube.from_morton(tree.n, k, int(i)))
    out.sort(key=lambda Q: (Q.leaf_slice(tree.depth).start, Q.k))
    return out


def selection_mask(tree: DyadicTree, chosen: list) -> np.ndarray:
    """Boolean leaf mask of the cubes flagged in per-level arrays."""
    mask = np.zeros(tree.size, dtype=bool)
    for k, sel in enumerate(chosen):
        mask |= tree.expand(np.asarray(sel, dtype=bool), k)
    return mask


def union_mask(tree: DyadicTree, cubes: Sequence[Cube]) -> np.ndarray:
    """Boolean leaf mask of a union of cubes."""
    mask = np.zeros(tree.size, dtype=bool)
    for Q in cubes:
        mask[Q.leaf_slice(tree.depth)] = True
    return mask


# ---------------------------------------------------------------------------
# shifted systems on a finite window


class ShiftedSystem:
    """The system D^beta restricted to a window grid.

    ``beta`` maps j >= 1 to a 0/1 vector of length n (finite support, j <= M).
    Cubes of level k are translates of standard cubes by s_k = sum_{j>k} 2**-j beta_j.
    Functions live on the window [-2, 2)^n sampled on cells of side 2**-M,
    stored as arrays of shape (4 * 2**M,) * n.
    """

    WINDOW = 2

    def __init__(self, n: int, beta: dict, M: int):
        self.n = int(n)
        self.M = int(M)
        clean = {}
        for j, b in beta.items():
            j = int(j)
            b = tuple(int(x) for x in b)
            if len(b) != self.n or any(x not in (0, 1) for x in b):
                raise ValueError(f"beta_{j} must be a 0/1 vector of length {n}")
            if any(b):
                if j < 1 or j > self.M:
                    raise ValueError(f"beta must be supported in 1..{self.M}; got j={j}")
                clean[j] = b
        self.beta = clean

    @property
    def cells(self) -> int:
        return 2 * self.WINDOW * 2 ** self.M

    @property
    def shape(self) -> tuple:
        return (self.cells,) * self.n

    @property
    def origin(self) -> int:
        """Cell index of x = 0 along each axis."""
        return self.WINDOW * 2 ** self.M

    def shift_cells(self, k: int) -> np.ndarray:
        """s_k in units of cells: sum_{j>k} 2**(M-j) beta_j."""
        s = np.zeros(self.n, dtype=np.int64)
        for j, b in self.beta.items():
            if j > k:
                s += np.asarray(b, dtype=np.int64) << (self.M - j)
        return s

    def sigma_cells(self, j: int) -> np.ndarray:
        b = self.beta.get(j, (0,) * self.n)
        return np.asarray(b, dtype=np.int64) << (self.M - j) if j <= self.M else np.zeros(self.n, dtype=np.int64)

    def embed(self, values: np.ndarray) -> np.ndarray:
        """Place a function on [0,1)^n (cells of side 2**-M) into the window."""
        values = np.asarray(values)
        side = 2 ** self.M
        if values.shape[: self.n] != (side,) * self.n:
            raise ValueError(f"expected leading shape {(side,) * self.n}")
        out = np.zeros(self.shape + values.shape[self.n:], dtype=values.dtype)
        sl = tuple(slice(self.origin, self.origin + side) for _ in range(self.n))
        out[sl] = values
        return out

    def _translate(self, f: np.ndarray, s: np.ndarray) -> np.ndarray:
        """g(x) = f(x + s) with s in cells; raises if support would leave the window."""
        out = np.zeros_like(f)
        src, dst = [], []
        for i in range(self.n):
            d = int(s[i])
            if d >= 0:
                src.append(slice(d, self.cells))
                dst.append(slice(0, self.cells - d))
            else:
                src.append(slice(0, self.cells + d))
                dst.append(slice(-d, self.cells))
        kept = np.zeros(self.shape, dtype=bool)
        kept[tuple(src)] = True
        if np.any(np.abs(_support(f, self.n)[~kept]) > 0):
            raise ValueError("translation moves the support out of the window")
        out[tuple(dst)] = f[tuple(src)]
        return out

    def tau(self, f: np.ndarray, k: int) -> np.ndarray:
        """tau_k f(x) = f(x + s_k)."""
        return self._translate(f, self.shift_cells(k))

    def tau_inv(self, f: np.ndarray, k: int) -> np.ndarray:
        return self._translate(f, -self.shift_cells(k))

    def sigma(self, f: np.ndarray, j: int) -> np.ndarray:
        """sigma_j f(x) = f(x + 2**-j beta_j)."""
        return self._translate(f, self.sigma_cells(j))

    def _labels(self, k: int, shift: np.ndarray) -> np.ndarray:
        if k > self.M:
            raise ValueError(f"level {k} is finer than the grid resolution {self.M}")
        block = 2 ** (self.M - k)
        axes = []
        for i in range(self.n):
            g = np.arange(self.cells) - self.origin - int(shift[i])
            axes.append(np.floor_divide(g, block))
        grids = np.meshgrid(*axes, indexing="ij")
        lab = np.zeros(self.shape, dtype=np.int64)
        span = self.cells // block + 2
        for g in grids:
            lab = lab * span + (g - g.min())
        return lab

    def average(self, f: np.ndarray, k: int, shift=None) -> np.ndarray:
        """Average of f over the cubes of level k translated by ``shift`` cells."""
        if shift is None:
            shift = self.shift_cells(k)
        if k < 0:
            raise ValueError("negative levels are not modelled")
        f = np.asarray(f, dtype=float)
        vec_shape = f.shape[self.n:]
        flat = f.reshape(-1, int(np.prod(vec_shape, dtype=int)))
        lab = self._labels(k, shift).ravel()
        _, inv = np.unique(lab, return_inverse=True)
        counts = np.bincount(inv)
        out = np.empty_like(flat)
        for c in range(flat.shape[1]):
            sums = np.bincount(inv, weights=flat[:, c])
            out[:, c] = (sums / counts)[inv]
        return out.reshape(f.shape)

    def check_support(self, f: np.ndarray):
        """Averages at levels >= 0 need support in [-1, 1)^n so every touching cube fits."""
        lo, hi = self.origin - 2 ** self.M, self.origin + 2 ** self.M
        inside = np.zeros(self.shape, dtype=bool)
        inside[tuple(slice(lo, hi) for _ in range(self.n))] = True
        if np.any(np.abs(_support(f, self.n)[~inside]) > 0):
            raise ValueError("function must be supported in [-1, 1)^n")


def _support(f: np.ndarray, n: int) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.ndim > n:
        return np.abs(f).reshape(f.shape[:n] + (-1,)).max(axis=-1)
    return np.abs(f)


def shifted_average(system: ShiftedSystem, k: int, f: np.ndarray) -> np.ndarray:
    """A^beta_k f: exact averages over the shifted level-k cubes."""
    system.check_support(f)
    return system.average(f, k)


def standard_average(system: ShiftedSystem, k: int, f: np.ndarray) -> np.ndarray:
    """A_k f for the unshifted system on the same window."""
    system.check_support(f)
    return system.average(f, k, shift=np.zeros(system.n, dtype=np.int64))
