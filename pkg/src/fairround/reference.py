"""Brute-force ground-truth oracles for desk-scale instances.

Exact optima by exhaustive enumeration: max-min value, Nash social welfare,
and per-agent maximin shares.  Every solver test checks its output against
these, so they are written for obvious correctness, with one speed
concession: per-agent values come from precomputed subset tables, and the
two-agent case enumerates bundles as a vectorized sweep over bitmasks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from .errors import CapacityError, InputError
from .instances import Instance
from .rounding import IntegralAllocation
from .valuations import ValuationSpec, num_goods, restrict, subset_value_table


@dataclass(frozen=True)
class BruteLimits:
    max_assignments: int = 2_000_000

    def __post_init__(self):
        if self.max_assignments < 1:
            raise InputError("max_assignments must be positive")


DEFAULT_LIMITS = BruteLimits()


def _check_capacity(total: int, limits: BruteLimits) -> None:
    if total > limits.max_assignments:
        raise CapacityError(
            f"{total} assignments exceed the enumeration cap {limits.max_assignments}")


def _tables(instance: Instance) -> list[np.ndarray]:
    goods = tuple(range(instance.m))
    return [subset_value_table(spec, goods) for spec in instance.valuations]


def _enumerate_best(instance: Instance, limits: BruteLimits, score_fn):
    """Maximize score_fn(per-agent bundle masks) over all n^m assignments.

    Deterministic: the first assignment attaining the maximum wins, in
    DFS order (good 0 varies slowest, agent 0 tried first).
    """
    n, m = instance.n, instance.m
    _check_capacity(n ** m, limits)
    best_score = None
    best_masks = None
    masks = [0] * n

    def rec(j: int):
        nonlocal best_score, best_masks
        if j == m:
            score = score_fn(masks)
            if best_score is None or score > best_score:
                best_score = score
                best_masks = tuple(masks)
            return
        bit = 1 << j
        for i in range(n):
            masks[i] |= bit
            rec(j + 1)
            masks[i] &= ~bit

    rec(0)
    return best_score, IntegralAllocation(best_masks, m)


def brute_opt_maxmin(instance: Instance,
                     limits: BruteLimits = DEFAULT_LIMITS) -> tuple[float, IntegralAllocation]:
    """Exact max-min optimum over all assignments of goods to agents."""
    n, m = instance.n, instance.m
    if n == 2:
        _check_capacity(n ** m, limits)
        t0, t1 = _tables(instance)
        idx = np.arange(1 << m, dtype=np.int64)
        full = (1 << m) - 1
        scores = np.minimum(t0, t1[full ^ idx])
        best = int(np.argmax(scores))
        alloc = IntegralAllocation((best, full ^ best), m)
        return float(scores[best]), alloc
    tables = _tables(instance)
    score, alloc = _enumerate_best(
        instance, limits, lambda masks: min(tables[i][masks[i]] for i in range(n)))
    return float(score), alloc


def brute_opt_nsw(instance: Instance,
                  limits: BruteLimits = DEFAULT_LIMITS) -> tuple[float, IntegralAllocation]:
    """Exact Nash-social-welfare optimum (geometric mean of agent values)."""
    n, m = instance.n, instance.m
    if n == 2:
        _check_capacity(n ** m, limits)
        t0, t1 = _tables(instance)
        idx = np.arange(1 << m, dtype=np.int64)
        full = (1 << m) - 1
        with np.errstate(divide="ignore"):
            scores = np.log(t0) + np.log(t1[full ^ idx])
        best = int(np.argmax(scores))
        alloc = IntegralAllocation((best, full ^ best), m)
        val = 0.0 if scores[best] == -np.inf else float(np.exp(scores[best] / n))
        return val, alloc
    tables = _tables(instance)

    def score_fn(masks):
        logsum = 0.0
        for i in range(n):
            v = tables[i][masks[i]]
            if v <= 0.0:
                return -math.inf
            logsum += math.log(v)
        return logsum

    score, alloc = _enumerate_best(instance, limits, score_fn)
    val = 0.0 if score == -math.inf else float(math.exp(score / n))
    return val, alloc


def mms_bruteforce(spec: ValuationSpec, k: int,
                   goods: Union[int, Iterable[int], None] = None,
                   limits: BruteLimits = DEFAULT_LIMITS) -> float:
    """Exact maximin share: best over k-partitions of the worst part's value.

    ``goods`` may be a bitmask, an iterable of good indices, or None for the
    full ground set of the spec.
    """
    if k < 1:
        raise InputError(f"part count must be positive, got {k}")
    m = num_goods(spec)
    if goods is None:
        good_list = list(range(m))
    elif isinstance(goods, int):
        good_list = [g for g in range(m) if goods >> g & 1]
        if goods < 0 or goods >> m:
            raise InputError("goods mask out of range")
    else:
        good_list = sorted(int(g) for g in goods)
        for g in good_list:
            if not 0 <= g < m:
                raise InputError(f"good index {g} out of range [0, {m})")
    g = len(good_list)
    _check_capacity(k ** g, limits)
    sub = restrict(spec, good_list)
    table = subset_value_table(sub, tuple(range(g)))
    if g == 0 or k > g:
        return 0.0  # some part is empty, and values are monotone from v(empty)=0
    if k == 1:
        return float(table[-1])

    best = -math.inf
    parts = [0] * k

    def rec(j: int):
        nonlocal best
        if j == g:
            score = min(table[p] for p in parts)
            if score > best:
                best = score
            return
        bit = 1 << j
        # part labels are symmetric: pinning good 0 to part 0 loses nothing
        for i in range(1 if j == 0 else k):
            parts[i] |= bit
            rec(j + 1)
            parts[i] &= ~bit

    rec(0)
    return float(best)
