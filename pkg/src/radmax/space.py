"""Finite-dimensional ``l^p_d`` spaces used as the value space of all functions."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class NormedSpace:
    """Real ``l^p`` space of dimension ``dim``; ``p = math.inf`` is the sup norm."""

    dim: int
    p: float = 2.0

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValueError(f"dimension must be a positive integer, got {self.dim!r}")
        if not (self.p >= 1):
            raise ValueError(f"exponent must be >= 1, got {self.p!r}")
        object.__setattr__(self, "dim", int(self.dim))
        object.__setattr__(self, "p", float(self.p))

    @property
    def is_hilbert(self) -> bool:
        return self.p == 2.0 or self.dim == 1

    @property
    def spec(self) -> str:
        return format_space(self.p)

    def _check(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v)
        if v.dtype == object:
            v = v.astype(float)
        else:
            v = v.astype(float, copy=False)
        if v.ndim == 0 or v.shape[-1] != self.dim:
            raise ValueError(
                f"dimension mismatch: expected trailing length {self.dim}, got shape {v.shape}"
            )
        if not np.all(np.isfinite(v)):
            raise ValueError("non-finite entry in vector")
        return v

    def norms(self, v) -> np.ndarray:
        """Norms along the last axis of ``v`` (any leading shape)."""
        v = self._check(v)
        a = np.abs(v)
        if self.p == 1.0:
            return a.sum(axis=-1)
        if self.p == math.inf:
            return a.max(axis=-1)
        # scaled by the largest entry against overflow and underflow
        m = a.max(axis=-1, keepdims=True)
        safe = np.where(m > 0, m, 1.0)
        r = a / safe
        if self.p == 2.0:
            s = np.sqrt((r * r).sum(axis=-1))
        else:
            s = (r ** self.p).sum(axis=-1) ** (1.0 / self.p)
        return s * m[..., 0]

    def norm(self, v) -> float:
        v = np.asarray(v)
        if v.ndim != 1:
            raise ValueError(f"expected a single vector, got shape {v.shape}")
        return float(self.norms(v))

    def norm_grad_scaled(self, v: np.ndarray) -> np.ndarray:
        """Half the gradient of ``norm(v)**2`` along the last axis.

        Used by the coefficient ascent; at points of non-differentiability an
        arbitrary subgradient is returned.
        """
        v = np.asarray(v, dtype=float)
        if self.p == 2.0:
            return v
        a = np.abs(v)
        s = np.sign(v)
        nrm = self.norms(v)[..., None]
        if self.p == 1.0:
            return nrm * s
        if self.p == math.inf:
            hit = np.zeros_like(v)
            idx = np.argmax(a, axis=-1)[..., None]
            np.put_along_axis(hit, idx, 1.0, axis=-1)
            return nrm * s * hit
        safe = np.where(nrm > 0, nrm, 1.0)
        return s * a ** (self.p - 1.0) * safe ** (2.0 - self.p) * (nrm > 0)


def parse_space(text: str, dim: int) -> NormedSpace:
    """Parse ``lp:<p>`` (``p`` a decimal >= 1 or ``inf``)."""
    head, sep, tail = text.strip().partition(":")
    if head != "lp" or not sep:
        raise ValueError(f"space must look like 'lp:<p>', got {text!r}")
    tail = tail.strip().lower()
    p = math.inf if tail in ("inf", "infinity") else float(tail)
    return NormedSpace(dim, p)


def format_space(p: float) -> str:
    if p == math.inf:
        return "lp:inf"
    return f"lp:{p:g}"


def norm(space: NormedSpace, v) -> float:
    return space.norm(v)
