"""Fractional allocations and rounding: cycle cancellation plus tree rounding.

A fractional allocation is an n x m matrix with unit column sums (every
good fully shared among agents).  Its support graph is bipartite between
agents and goods.  ``cancel_all_cycles`` repeatedly shifts shares around a
support cycle so that no agent's multilinear value drops while one cycle
variable snaps to 0 or 1; the support ends up a forest with at most n-1
fractionally assigned goods.  ``pipage_round`` then roots every tree at its
lowest-indexed agent and hands each good to its parent agent, which costs
every agent at most one good from its support.  ``nonuniform_pipage`` is the
composition, and ``randomized_round`` is the independent-rounding baseline
kept for comparison.

Moving shares along a cycle a_0 - g_0 - a_1 - ... - g_{l-1} - a_0 changes
good g_i by +delta_i on edge (a_i, g_i) and -delta_i on edge (a_{i+1}, g_i),
so column sums are preserved by construction.  Agent a_i sees one coordinate
go up and one go down; picking delta_i = delta_{i-1} * d(a_i, g_{i-1}) /
d(a_i, g_i) (ratios of its two partial derivatives) zeroes its first-order
change, and the one remaining free sign is chosen so the closing agent gains.
Derivatives at or below ``tau_zero`` (widened by 3x the CI half-width in
sampled mode) are treated as zero and handled by moving a single delta.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from numpy.random import Generator, Philox

from . import multilinear as ml
from .errors import InputError, NumericError
from .valuations import ValuationSpec, goods_from_mask

DEFAULT_ETA = 1e-9
DEFAULT_TAU_ZERO = 1e-9
COLUMN_TOL = 1e-9
ENTRY_TOL = 1e-12


class FractionalAllocation:
    """Point of the assignment polytope: entries in [0,1], unit column sums."""

    def __init__(self, x):
        arr = np.array(x, dtype=float)
        if arr.ndim != 2:
            raise InputError(f"allocation must be a 2-d matrix, got shape {arr.shape}")
        if arr.shape[0] < 1:
            raise InputError("allocation needs at least one agent row")
        if not np.all(np.isfinite(arr)):
            raise InputError("allocation has non-finite entries")
        if np.any(arr < -ENTRY_TOL) or np.any(arr > 1.0 + ENTRY_TOL):
            raise InputError("allocation entries must lie in [0, 1] within 1e-12")
        arr = np.clip(arr, 0.0, 1.0)
        if arr.shape[1] > 0:
            sums = arr.sum(axis=0)
            bad = np.where(np.abs(sums - 1.0) > COLUMN_TOL)[0]
            if bad.size:
                raise InputError(
                    f"column {bad[0]} sums to {sums[bad[0]]!r}, expected 1 within 1e-9")
        self.x = arr

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def m(self) -> int:
        return self.x.shape[1]

    def row(self, i: int) -> np.ndarray:
        return self.x[i]

    def to_dict(self) -> dict:
        return {"rows": self.n, "cols": self.m, "x": [float(v) for v in self.x.ravel()]}

    @staticmethod
    def from_dict(d: dict) -> "FractionalAllocation":
        try:
            rows, cols = int(d["rows"]), int(d["cols"])
            flat = d["x"]
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"malformed allocation object: {exc}") from exc
        if not isinstance(flat, list) or len(flat) != rows * cols:
            raise InputError("allocation field 'x' must be a row-major list of rows*cols reals")
        return FractionalAllocation(np.array(flat, dtype=float).reshape(rows, cols))


@dataclass(frozen=True)
class IntegralAllocation:
    """Partition of the goods into per-agent bundles (bitmasks)."""

    bundles: tuple[int, ...]
    m: int

    def __post_init__(self):
        union = 0
        count = 0
        for b in self.bundles:
            if b < 0 or b >> self.m:
                raise InputError("bundle references goods outside the instance")
            if union & b:
                raise InputError("bundles overlap")
            union |= b
            count += bin(b).count("1")
        if union != (1 << self.m) - 1 or count != self.m:
            raise InputError("bundles do not partition the goods")

    @property
    def n(self) -> int:
        return len(self.bundles)

    def as_lists(self) -> list[list[int]]:
        return [goods_from_mask(b) for b in self.bundles]

    def indicator(self) -> FractionalAllocation:
        x = np.zeros((self.n, self.m))
        for i, b in enumerate(self.bundles):
            for j in goods_from_mask(b):
                x[i, j] = 1.0
        return FractionalAllocation(x)


@dataclass
class SupportGraph:
    """Bipartite support of an allocation: edge (i, j) iff x_ij > eta."""

    agent_adj: list[list[int]]
    good_adj: list[list[int]]
    eta: float


@dataclass
class CycleStep:
    """One cancellation event: the cycle, realized share moves, and the snap."""

    agents: list[int]
    goods: list[int]
    deltas: list[float]
    limiting_edge: tuple[int, int]
    snapped_value: float

    def to_dict(self) -> dict:
        return {
            "agents": [int(a) for a in self.agents],
            "goods": [int(g) for g in self.goods],
            "deltas": [float(d) for d in self.deltas],
            "limiting_edge": [int(self.limiting_edge[0]), int(self.limiting_edge[1])],
            "snapped_value": float(self.snapped_value),
        }


def support_graph(x: FractionalAllocation, eta: float = DEFAULT_ETA) -> SupportGraph:
    if not 0.0 < eta < 0.5:
        raise InputError(f"support threshold must lie in (0, 0.5), got {eta}")
    agent_adj = [[] for _ in range(x.n)]
    good_adj = [[] for _ in range(x.m)]
    rows, cols = np.nonzero(x.x > eta)
    for i, j in zip(rows.tolist(), cols.tolist()):
        agent_adj[i].append(j)
        good_adj[j].append(i)
    return SupportGraph(agent_adj, good_adj, eta)


def _neighbors(graph: SupportGraph, node):
    kind, idx = node
    if kind == "a":
        return [("g", j) for j in graph.agent_adj[idx]]
    return [("a", i) for i in graph.good_adj[idx]]


def _canonical_cycle(nodes) -> tuple[list[int], list[int]]:
    """Rotate/orient a cycle node list to start at its lowest agent, smaller good first."""
    k = len(nodes)
    start = min((p for p in range(k) if nodes[p][0] == "a"), key=lambda p: nodes[p][1])
    fwd = [nodes[(start + t) % k] for t in range(k)]
    bwd = [nodes[(start - t) % k] for t in range(k)]
    seq = fwd if fwd[1][1] <= bwd[1][1] else bwd
    agents = [idx for kind, idx in seq if kind == "a"]
    goods = [idx for kind, idx in seq if kind == "g"]
    return agents, goods


def find_cycle(graph: SupportGraph) -> Optional[tuple[list[int], list[int]]]:
    """First simple alternating cycle found by DFS from the lowest-indexed agent.

    Returns (agents, goods) with edges (a_i, g_i) and (a_{i+1}, g_i), or None
    when the support is a forest.  Deterministic given the node ordering.
    """
    visited = set()
    for start in range(len(graph.agent_adj)):
        root = ("a", start)
        if root in visited:
            continue
        visited.add(root)
        parent = {root: None}
        stack = [root]
        child_iter = {root: iter(_neighbors(graph, root))}
        while stack:
            node = stack[-1]
            advanced = False
            for nb in child_iter[node]:
                if nb == parent[node]:
                    continue
                if nb in visited:
                    if nb in child_iter:  # ancestor still on the DFS path
                        path = [node]
                        while path[-1] != nb:
                            path.append(parent[path[-1]])
                        path.reverse()
                        return _canonical_cycle(path)
                    continue
                visited.add(nb)
                parent[nb] = node
                child_iter[nb] = iter(_neighbors(graph, nb))
                stack.append(nb)
                advanced = True
                break
            if not advanced:
                stack.pop()
                del child_iter[node]
    return None


def _zero_threshold(est: ml.Estimate, tau_zero: float) -> float:
    if est.samples_used > 0 and np.isfinite(est.half_width):
        return max(tau_zero, 3.0 * est.half_width)
    return tau_zero


def _cancel_cycle(x: FractionalAllocation, valuations: Sequence[ValuationSpec],
                  cycle, mode, tau_zero) -> tuple[FractionalAllocation, CycleStep]:
    agents, goods = cycle
    ell = len(agents)
    d_own = [ml.partial(valuations[agents[i]], x.row(agents[i]), goods[i], mode)
             for i in range(ell)]
    d_prev = [ml.partial(valuations[agents[i]], x.row(agents[i]), goods[i - 1], mode)
              for i in range(ell)]

    rho = np.zeros(ell)
    zero_own = next((i for i in range(ell)
                     if d_own[i].value <= _zero_threshold(d_own[i], tau_zero)), None)
    if zero_own is not None:
        # Only good g_i moves; push its share toward agent a_{i+1}, whose
        # first-order change is -delta_i * d(a_{i+1}, g_i).
        i = zero_own
        rho[i] = 1.0 if d_prev[(i + 1) % ell].value < 0.0 else -1.0
    else:
        zero_prev = next((i for i in range(ell)
                          if d_prev[i].value <= _zero_threshold(d_prev[i], tau_zero)), None)
        if zero_prev is not None:
            # Only good g_{i-1} moves; agent a_{i-1} gains delta * d(a_{i-1}, g_{i-1}) > 0.
            rho[(zero_prev - 1) % ell] = 1.0
        else:
            rho[0] = 1.0
            for i in range(1, ell):
                rho[i] = rho[i - 1] * d_prev[i].value / d_own[i].value
            if not np.all(np.isfinite(rho)):
                raise NumericError("derivative ratio product overflowed along the cycle")
            kappa = d_own[0].value - rho[ell - 1] * d_prev[0].value
            if kappa < 0.0:
                rho = -rho

    rho = rho / np.max(np.abs(rho))
    if not np.all(np.isfinite(rho)):
        raise NumericError("cycle deltas are non-finite after normalization")

    # Largest feasible move: every touched entry must stay inside [0, 1].
    # Ties on the limiting edge break toward the lexicographically smallest
    # (agent, good) pair for determinism.
    best = None
    for i in range(ell):
        for a, coef in ((agents[i], rho[i]), (agents[(i + 1) % ell], -rho[i])):
            if coef > 0.0:
                bound, snap = (1.0 - x.x[a, goods[i]]) / coef, 1.0
            elif coef < 0.0:
                bound, snap = x.x[a, goods[i]] / (-coef), 0.0
            else:
                continue
            key = (bound, a, goods[i])
            if best is None or key < best[0]:
                best = (key, a, goods[i], snap)
    if best is None:
        raise NumericError("cycle move has no active coefficient")
    (step, _, _), limit_a, limit_g, snap = best

    x2 = x.x.copy()
    for i in range(ell):
        x2[agents[i], goods[i]] += step * rho[i]
        x2[agents[(i + 1) % ell], goods[i]] -= step * rho[i]
    x2[limit_a, limit_g] = snap
    pos = goods.index(limit_g)
    partner = agents[(pos + 1) % ell] if agents[pos] == limit_a else agents[pos]
    x2[partner, limit_g] = 1.0 - (x2[:, limit_g].sum() - x2[partner, limit_g])
    x2 = np.clip(x2, 0.0, 1.0)

    record = CycleStep(
        agents=list(agents),
        goods=list(goods),
        deltas=[float(step * r) for r in rho],
        limiting_edge=(int(limit_a), int(limit_g)),
        snapped_value=float(snap),
    )
    return FractionalAllocation(x2), record


def cancel_one_cycle(x: FractionalAllocation, valuations: Sequence[ValuationSpec],
                     mode: ml.EvalMode = ml.EXACT, tau_zero: float = DEFAULT_TAU_ZERO,
                     eta: float = DEFAULT_ETA) -> tuple[FractionalAllocation, CycleStep]:
    """Cancel one support cycle; column sums are preserved and one variable snaps."""
    cycle = find_cycle(support_graph(x, eta))
    if cycle is None:
        raise InputError("support graph has no cycle to cancel")
    return _cancel_cycle(x, valuations, cycle, mode, tau_zero)


def cancel_all_cycles(x: FractionalAllocation, valuations: Sequence[ValuationSpec],
                      mode: ml.EvalMode = ml.EXACT, tau_zero: float = DEFAULT_TAU_ZERO,
                      eta: float = DEFAULT_ETA) -> tuple[FractionalAllocation, list[CycleStep]]:
    """Cancel cycles until the support is a forest.

    Each step snaps at least one variable, so n*m steps always suffice;
    exceeding that budget indicates numeric trouble and aborts.
    """
    trace: list[CycleStep] = []
    cur = x
    max_steps = cur.n * max(1, cur.m)
    while True:
        cycle = find_cycle(support_graph(cur, eta))
        if cycle is None:
            return cur, trace
        if len(trace) >= max_steps:
            raise NumericError(f"cycle cancellation did not terminate in {max_steps} steps")
        cur, record = _cancel_cycle(cur, valuations, cycle, mode, tau_zero)
        trace.append(record)


def pipage_round(x: FractionalAllocation, valuations: Sequence[ValuationSpec] | None = None,
                 eta: float = DEFAULT_ETA) -> IntegralAllocation:
    """Round an acyclic allocation: each good goes to its parent agent.

    Trees are rooted at their lowest-indexed agent.  Fully assigned goods are
    leaves whose parent is their owner, so they keep it; every agent loses at
    most the one good sitting between it and its own parent.
    """
    graph = support_graph(x, eta)
    if find_cycle(graph) is not None:
        raise InputError("pipage rounding requires an acyclic support")
    owner = [-1] * x.m
    seen_agent = [False] * x.n
    seen_good = [False] * x.m
    for root in range(x.n):
        if seen_agent[root]:
            continue
        seen_agent[root] = True
        queue = deque([("a", root)])
        while queue:
            kind, idx = queue.popleft()
            if kind == "a":
                for j in graph.agent_adj[idx]:
                    if not seen_good[j]:
                        seen_good[j] = True
                        owner[j] = idx
                        queue.append(("g", j))
            else:
                for i in graph.good_adj[idx]:
                    if not seen_agent[i]:
                        seen_agent[i] = True
                        queue.append(("a", i))
    for j in range(x.m):
        if owner[j] < 0:  # no support edge above eta; give it to the largest share
            owner[j] = int(np.argmax(x.x[:, j]))
    bundles = [0] * x.n
    for j, i in enumerate(owner):
        bundles[i] |= 1 << j
    return IntegralAllocation(tuple(bundles), x.m)


def nonuniform_pipage(x: FractionalAllocation, valuations: Sequence[ValuationSpec],
                      mode: ml.EvalMode = ml.EXACT, tau_zero: float = DEFAULT_TAU_ZERO,
                      eta: float = DEFAULT_ETA) -> tuple[IntegralAllocation, list[CycleStep]]:
    """Cycle cancellation followed by tree rounding; the full rounding pipeline."""
    acyclic, trace = cancel_all_cycles(x, valuations, mode, tau_zero, eta)
    return pipage_round(acyclic, valuations, eta), trace


def randomized_round(x: FractionalAllocation, seed: int = 0) -> IntegralAllocation:
    """Assign each good independently: agent i wins good j with probability x_ij."""
    gen = Generator(Philox(key=int(seed)))
    u = gen.random(x.m)
    bundles = [0] * x.n
    for j in range(x.m):
        cdf = np.cumsum(x.x[:, j])
        cdf[-1] = max(cdf[-1], 1.0)
        i = int(np.searchsorted(cdf, u[j] * cdf[-1], side="right"))
        bundles[min(i, x.n - 1)] |= 1 << j
    return IntegralAllocation(tuple(bundles), x.m)
