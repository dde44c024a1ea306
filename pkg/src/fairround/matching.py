"""Exact maximum-weight bipartite matching, perfect on the agent side.

Thin wrapper around scipy's rectangular assignment solver with two contract
additions the callers rely on: minus-infinity entries mark forbidden pairs
(a matching that would need one is infeasible), and ties between optimal
matchings break toward the lexicographically smallest assignment vector so
results are reproducible.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InfeasibleError, InputError

NEG_INF = float("-inf")
_REL_TIE_TOL = 1e-9


def _best_total(weights: np.ndarray) -> float:
    """Optimal total weight, or raise when no finite perfect matching exists."""
    cost = -weights
    try:
        rows, cols = linear_sum_assignment(cost)
    except ValueError as exc:
        raise InfeasibleError("no finite-weight perfect matching on agents") from exc
    total = float(weights[rows, cols].sum())
    if not math.isfinite(total):
        raise InfeasibleError("no finite-weight perfect matching on agents")
    return total


def max_weight_matching(weights) -> tuple[list[int], float]:
    """Matching of every row to a distinct column maximizing the total weight.

    ``weights`` is an n x k matrix (k >= n) whose entries may be -inf for
    forbidden pairs.  Returns (assignment, total) where assignment[i] is the
    column matched to row i.  Raises InfeasibleError when every perfect
    matching uses a forbidden pair.
    """
    w = np.asarray(weights, dtype=float)
    if w.ndim != 2:
        raise InputError(f"weight matrix must be 2-d, got shape {w.shape}")
    n, k = w.shape
    if n == 0:
        return [], 0.0
    if np.any(np.isnan(w)) or np.any(w == np.inf):
        raise InputError("weights must be reals or -inf")
    if k < n:
        raise InfeasibleError(f"{n} agents cannot be perfectly matched into {k} columns")

    total = _best_total(w)
    tol = _REL_TIE_TOL * max(1.0, abs(total))

    # Fix rows one by one to the smallest column that still allows an optimal
    # completion; n extra solver calls per row keep ties deterministic.
    assign: list[int] = []
    remaining_rows = list(range(n))
    remaining_cols = list(range(k))
    rest_total = total
    for i in range(n):
        remaining_rows.remove(i)
        chosen = None
        for cpos, c in enumerate(remaining_cols):
            if w[i, c] == NEG_INF:
                continue
            sub_cols = remaining_cols[:cpos] + remaining_cols[cpos + 1:]
            if remaining_rows:
                sub = w[np.ix_(remaining_rows, sub_cols)]
                try:
                    sub_best = _best_total(sub)
                except InfeasibleError:
                    continue
            else:
                sub_best = 0.0
            if w[i, c] + sub_best >= rest_total - tol:
                chosen = c
                rest_total = rest_total - w[i, c]
                break
        if chosen is None:  # unreachable if _best_total succeeded
            raise InfeasibleError("no finite-weight perfect matching on agents")
        assign.append(chosen)
        remaining_cols.remove(chosen)
    return assign, total
