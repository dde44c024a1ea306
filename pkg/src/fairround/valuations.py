"""Monotone submodular valuation families and their set-value oracles.

Four closed-form families are provided:

  Additive         v(S) = sum of per-good weights
  Coverage         v(S) = total weight of universe elements covered by S
  BudgetAdditive   v(S) = min(cap, additive score)
  ConcaveAdditive  v(S) = phi(additive score), phi in {sqrt, log1p}

All weights are nonnegative, so every induced set function is normalized
(v(empty) = 0), monotone and submodular; ``check_submodular`` verifies this
exhaustively for small ground sets.

Good sets are plain Python ints used as bitmasks (bit j set <=> good j in
the set), which keeps subset arithmetic cheap and hashable at any m.
Exhaustive routines reject ground sets beyond their stated cap instead of
silently running forever.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .errors import CapacityError, InputError

SUBMODULAR_CHECK_MAX_GOODS = 12
TABLE_MAX_GOODS = 22


# ---------------------------------------------------------------------------
# Good sets as bitmasks
# ---------------------------------------------------------------------------

def mask_from_goods(goods: Iterable[int], m: int) -> int:
    """Build a bitmask from good indices, validating range and duplicates."""
    mask = 0
    for g in goods:
        g = int(g)
        if not 0 <= g < m:
            raise InputError(f"good index {g} out of range [0, {m})")
        bit = 1 << g
        if mask & bit:
            raise InputError(f"duplicate good index {g}")
        mask |= bit
    return mask


def goods_from_mask(mask: int) -> list[int]:
    """Sorted list of good indices in a bitmask."""
    out = []
    g = 0
    while mask:
        if mask & 1:
            out.append(g)
        mask >>= 1
        g += 1
    return out


def _check_weights(weights) -> tuple[float, ...]:
    w = tuple(float(v) for v in weights)
    for j, v in enumerate(w):
        if not math.isfinite(v) or v < 0:
            raise InputError(f"weight {j} must be a finite nonnegative real, got {v}")
    return w


# ---------------------------------------------------------------------------
# Valuation families
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Additive:
    weights: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "weights", _check_weights(self.weights))


@dataclass(frozen=True)
class Coverage:
    """Weighted coverage: ``covers[j]`` is the bitmask of universe elements good j covers."""

    element_weights: tuple[float, ...]
    covers: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "element_weights", _check_weights(self.element_weights))
        u = len(self.element_weights)
        full = (1 << u) - 1
        cov = []
        for j, c in enumerate(self.covers):
            c = int(c)
            if c < 0 or c & ~full:
                raise InputError(f"covers[{j}] references elements outside the universe of size {u}")
            cov.append(c)
        object.__setattr__(self, "covers", tuple(cov))

    @staticmethod
    def from_sets(element_weights, covers: Sequence[Iterable[int]]) -> "Coverage":
        u = len(tuple(element_weights))
        masks = [mask_from_goods(c, u) for c in covers]
        return Coverage(tuple(element_weights), tuple(masks))


@dataclass(frozen=True)
class BudgetAdditive:
    weights: tuple[float, ...]
    cap: float

    def __post_init__(self):
        object.__setattr__(self, "weights", _check_weights(self.weights))
        cap = float(self.cap)
        if not math.isfinite(cap) or cap < 0:
            raise InputError(f"cap must be a finite nonnegative real, got {cap}")
        object.__setattr__(self, "cap", cap)


CONCAVE_FUNCS: dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "sqrt": np.sqrt,
    "log1p": np.log1p,
}


@dataclass(frozen=True)
class ConcaveAdditive:
    weights: tuple[float, ...]
    concave: str

    def __post_init__(self):
        object.__setattr__(self, "weights", _check_weights(self.weights))
        if self.concave not in CONCAVE_FUNCS:
            raise InputError(f"concave must be one of {sorted(CONCAVE_FUNCS)}, got {self.concave!r}")


ValuationSpec = Union[Additive, Coverage, BudgetAdditive, ConcaveAdditive]

_FAMILIES = (Additive, Coverage, BudgetAdditive, ConcaveAdditive)


def num_goods(spec: ValuationSpec) -> int:
    if isinstance(spec, Coverage):
        return len(spec.covers)
    return len(spec.weights)


# ---------------------------------------------------------------------------
# Point queries
# ---------------------------------------------------------------------------

def value(spec: ValuationSpec, s: int) -> float:
    """Value of the good set ``s`` (bitmask) under ``spec``. Pure and deterministic."""
    m = num_goods(spec)
    if s < 0 or s >> m:
        raise InputError(f"good set {bin(s)} out of range for {m} goods")
    if isinstance(spec, Coverage):
        covered = 0
        rest = s
        j = 0
        while rest:
            if rest & 1:
                covered |= spec.covers[j]
            rest >>= 1
            j += 1
        return float(sum(w for e, w in enumerate(spec.element_weights) if covered >> e & 1))
    score = 0.0
    rest = s
    j = 0
    while rest:
        if rest & 1:
            score += spec.weights[j]
        rest >>= 1
        j += 1
    if isinstance(spec, Additive):
        return score
    if isinstance(spec, BudgetAdditive):
        return min(spec.cap, score)
    return float(CONCAVE_FUNCS[spec.concave](score))


def marginal(spec: ValuationSpec, s: int, g: int) -> float:
    """Marginal value of adding good ``g`` to set ``s``; requires g not in s."""
    m = num_goods(spec)
    if not 0 <= g < m:
        raise InputError(f"good index {g} out of range [0, {m})")
    if s >> g & 1:
        raise InputError(f"good {g} already in the set")
    return value(spec, s | (1 << g)) - value(spec, s)


# ---------------------------------------------------------------------------
# Vectorized subset tables (shared by exact multilinear evaluation and the
# brute-force oracles)
# ---------------------------------------------------------------------------

@lru_cache(maxsize=4096)
def subset_value_table(spec: ValuationSpec, goods: tuple[int, ...], base: int = 0) -> np.ndarray:
    """Values of ``base | T`` for every T over ``goods``, indexed by the k-bit
    subset pattern (bit b of the index <=> goods[b] included).

    Cached: specs are frozen and hashable, and solvers re-query the same
    (spec, goods, base) triple across many evaluation points.
    """
    k = len(goods)
    if k > TABLE_MAX_GOODS:
        raise CapacityError(f"subset table over {k} goods exceeds cap {TABLE_MAX_GOODS}")
    m = num_goods(spec)
    if base < 0 or base >> m:
        raise InputError("base set out of range")
    for g in goods:
        if not 0 <= g < m:
            raise InputError(f"good index {g} out of range [0, {m})")
        if base >> g & 1:
            raise InputError(f"good {g} appears both in base and in the enumerated goods")

    if isinstance(spec, Coverage):
        base_cov = 0
        rest = base
        j = 0
        while rest:
            if rest & 1:
                base_cov |= spec.covers[j]
            rest >>= 1
            j += 1
        idx = np.arange(1 << k, dtype=np.int64)
        vals = np.full(1 << k, value(spec, base), dtype=float)
        for e, we in enumerate(spec.element_weights):
            if we == 0.0 or base_cov >> e & 1:
                continue
            emask = 0
            for b, g in enumerate(goods):
                if spec.covers[g] >> e & 1:
                    emask |= 1 << b
            if emask:
                vals = vals + we * ((idx & emask) != 0)
        return vals

    scores = np.zeros(1, dtype=float)
    rest = base
    j = 0
    base_score = 0.0
    while rest:
        if rest & 1:
            base_score += spec.weights[j]
        rest >>= 1
        j += 1
    scores[0] = base_score
    for g in goods:
        scores = np.concatenate([scores, scores + spec.weights[g]])
    if isinstance(spec, Additive):
        return scores
    if isinstance(spec, BudgetAdditive):
        return np.minimum(spec.cap, scores)
    return CONCAVE_FUNCS[spec.concave](scores)


def batch_values(spec: ValuationSpec, include: np.ndarray) -> np.ndarray:
    """Values of many sets at once; ``include`` is a boolean (batch, m) matrix."""
    if isinstance(spec, Coverage):
        u = len(spec.element_weights)
        cover_mat = np.zeros((num_goods(spec), u), dtype=bool)
        for j, c in enumerate(spec.covers):
            for e in range(u):
                if c >> e & 1:
                    cover_mat[j, e] = True
        covered = include.astype(np.int8) @ cover_mat
        return (covered > 0) @ np.asarray(spec.element_weights)
    w = np.asarray(spec.weights)
    scores = include @ w
    if isinstance(spec, Additive):
        return scores
    if isinstance(spec, BudgetAdditive):
        return np.minimum(spec.cap, scores)
    return CONCAVE_FUNCS[spec.concave](scores)


# ---------------------------------------------------------------------------
# Restriction to a sub-universe (exact for every family)
# ---------------------------------------------------------------------------

def restrict(spec: ValuationSpec, goods: Sequence[int]) -> ValuationSpec:
    """Spec over the sub-universe ``goods``; local good b maps to global goods[b]."""
    m = num_goods(spec)
    for g in goods:
        if not 0 <= g < m:
            raise InputError(f"good index {g} out of range [0, {m})")
    if isinstance(spec, Additive):
        return Additive(tuple(spec.weights[g] for g in goods))
    if isinstance(spec, BudgetAdditive):
        return BudgetAdditive(tuple(spec.weights[g] for g in goods), spec.cap)
    if isinstance(spec, ConcaveAdditive):
        return ConcaveAdditive(tuple(spec.weights[g] for g in goods), spec.concave)
    return Coverage(spec.element_weights, tuple(spec.covers[g] for g in goods))


# ---------------------------------------------------------------------------
# Exhaustive submodularity check
# ---------------------------------------------------------------------------

def check_submodular(spec, m: int | None = None, tol: float = 1e-9) -> bool:
    """Exhaustively verify normalization, monotonicity and submodularity.

    Accepts a ValuationSpec, or (for testing hand-built tables) any callable
    mapping a bitmask to a value together with an explicit ``m``.

    Uses the pairwise exchange condition f(S+i) + f(S+j) >= f(S) + f(S+i+j),
    which is equivalent to diminishing marginals over all A subseteq B.
    """
    if isinstance(spec, _FAMILIES):
        m = num_goods(spec)
        if m > SUBMODULAR_CHECK_MAX_GOODS:
            raise CapacityError(
                f"exhaustive check over {m} goods exceeds cap {SUBMODULAR_CHECK_MAX_GOODS}")
        table = subset_value_table(spec, tuple(range(m)))
    else:
        if m is None:
            raise InputError("m is required when checking a raw set function")
        if m > SUBMODULAR_CHECK_MAX_GOODS:
            raise CapacityError(
                f"exhaustive check over {m} goods exceeds cap {SUBMODULAR_CHECK_MAX_GOODS}")
        table = np.array([float(spec(s)) for s in range(1 << m)])

    if abs(table[0]) > tol:
        return False
    idx = np.arange(1 << m, dtype=np.int64)
    for g in range(m):
        without = idx[(idx >> g & 1) == 0]
        if np.any(table[without | (1 << g)] < table[without] - tol):
            return False
    for i in range(m):
        for j in range(i + 1, m):
            both = (1 << i) | (1 << j)
            s = idx[(idx & both) == 0]
            lhs = table[s | (1 << i)] + table[s | (1 << j)]
            rhs = table[s] + table[s | both]
            if np.any(lhs < rhs - tol):
                return False
    return True
