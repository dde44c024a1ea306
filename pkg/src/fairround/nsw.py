"""Nash social welfare solver: matching, continuous relaxation, rematching.

Four phases.  (1) Match every agent to a distinct good maximizing the sum
of log singleton values; matched goods H are set aside.  (2) On the rest,
ascend F(x) = sum_i log V_i(x_i) over the assignment polytope from the
uniform point: each iteration moves toward the vertex y maximizing the
linearized objective (per good, give it to the agent with the largest
dV_i/dx_ij / V_i) until the improvement gap max_y (y-x) . grad F drops to
stop_delta.  (3) Round the relaxation by cycle cancellation plus tree
rounding, losing at most one good per agent.  (4) Rematch the reserved
goods H optimally against the rounded bundles.

Steps use the x + eps*(y - x) form with eps halved until the objective does
not decrease (a sufficient-progress test), which keeps the ascent monotone
and actually reaches the gap threshold; a bare fixed step orbits interior
optima at a gap proportional to eps and never converges.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import multilinear as ml
from .errors import DegenerateError, InfeasibleError, InputError
from .instances import Instance, instance_digest
from .matching import NEG_INF, max_weight_matching
from .report import RunReport, mode_to_dict
from .rounding import (DEFAULT_ETA, DEFAULT_TAU_ZERO, FractionalAllocation,
                       nonuniform_pipage)
from .valuations import ValuationSpec, goods_from_mask, restrict, value

ARMIJO = 0.1
MIN_STEP_FACTOR = 2.0 ** -40


@dataclass(frozen=True)
class NswParams:
    step_eps: float = 0.05
    stop_delta: Optional[float] = None  # None: 1e-3 * n, resolved per instance
    max_iters: int = 10_000
    value_floor: float = 1e-12
    mode: ml.EvalMode = ml.EXACT
    seed: int = 0
    tau_zero: float = DEFAULT_TAU_ZERO
    eta: float = DEFAULT_ETA

    def __post_init__(self):
        if not 0.0 < self.step_eps < 1.0:
            raise InputError(f"step_eps must lie in (0, 1), got {self.step_eps}")
        if self.stop_delta is not None and self.stop_delta < 0.0:
            raise InputError("stop_delta must be nonnegative")
        if self.max_iters < 1:
            raise InputError("max_iters must be positive")
        if self.value_floor <= 0.0:
            raise InputError("value_floor must be positive")

    def resolved_stop_delta(self, n: int) -> float:
        return 1e-3 * n if self.stop_delta is None else self.stop_delta


@dataclass
class LocalSearchResult:
    x: FractionalAllocation
    gap: float
    iterations: int
    locally_optimal: bool
    floor_used: bool


def _uniform_matrix(n: int, m: int) -> np.ndarray:
    x = np.full((n, m), 1.0 / n)
    x[-1, :] = 1.0 - x[:-1, :].sum(axis=0)  # last row absorbs rounding residue
    return x


def initial_matching(instance: Instance) -> tuple[list[int], list[int], list[int]]:
    """Optimal log-singleton matching tau; returns (tau, H, remaining goods).

    Afterwards every unmatched good is worth at most the matched one to each
    agent, which the rematching phase relies on.
    """
    n, m = instance.n, instance.m
    if n > m:
        raise InputError(f"matching needs n <= m, got n={n}, m={m}")
    w = np.empty((n, m))
    for i, spec in enumerate(instance.valuations):
        for j in range(m):
            v = value(spec, 1 << j)
            w[i, j] = math.log(v) if v > 0.0 else NEG_INF
        if np.all(w[i] == NEG_INF):
            raise DegenerateError(f"agent {i} values no good; Nash welfare is 0")
    try:
        tau, _ = max_weight_matching(w)
    except InfeasibleError as exc:  # no all-positive matching: optimal Nash welfare is 0
        raise DegenerateError(str(exc)) from exc

    matched = set(tau)
    for i in range(n):  # sanity: tau leaves no agent preferring an unmatched good
        best_left = max((value(instance.valuations[i], 1 << j)
                         for j in range(m) if j not in matched), default=0.0)
        assert best_left <= value(instance.valuations[i], 1 << tau[i]) + 1e-12

    h = sorted(tau)
    rest = [j for j in range(m) if j not in set(h)]
    return tau, h, rest


def continuous_local_search(goods: Sequence[int], valuations: Sequence[ValuationSpec],
                            params: NswParams = NswParams()) -> LocalSearchResult:
    """Ascend sum_i log V_i over the assignment polytope on ``goods``.

    Starts at the uniform point and stops when no polytope point improves
    the linearization by more than stop_delta (or at max_iters, flagged).
    """
    n = len(valuations)
    mp = len(goods)
    restricted = [restrict(spec, list(goods)) for spec in valuations]
    stop_delta = params.resolved_stop_delta(n)
    floor = params.value_floor
    if mp == 0:
        return LocalSearchResult(FractionalAllocation(np.zeros((n, 0))), 0.0, 0, True, False)

    x = _uniform_matrix(n, mp)
    cols = np.arange(mp)
    floor_used = False

    def mode_at(k: int) -> ml.EvalMode:
        if isinstance(params.mode, ml.Sampled):
            return ml.Sampled(params.mode.samples, params.seed * 1_000_003 + k)
        return ml.EXACT

    def objective(mat: np.ndarray, mode) -> tuple[float, np.ndarray]:
        vals = np.array([ml.evaluate(restricted[i], mat[i], mode).value
                         for i in range(n)])
        return float(np.sum(np.log(np.maximum(vals, floor)))), vals

    for t in range(params.max_iters):
        mode_t = mode_at(t)
        f_x, vals = objective(x, mode_t)
        if np.any(vals < floor):
            floor_used = True
        guarded = np.maximum(vals, floor)
        grads = np.vstack([ml.gradient(restricted[i], x[i], mode_t) for i in range(n)])
        score = grads / guarded[:, None]
        winners = np.argmax(score, axis=0)
        gap = float((score[winners, cols] - (x * score).sum(axis=0)).sum())
        if gap <= stop_delta:
            return LocalSearchResult(FractionalAllocation(x), gap, t, True, floor_used)

        y = np.zeros_like(x)
        y[winners, cols] = 1.0
        direction = y - x
        eps = params.step_eps
        while eps >= params.step_eps * MIN_STEP_FACTOR:
            cand = x + eps * direction
            f_cand, _ = objective(cand, mode_t)
            if f_cand >= f_x + ARMIJO * eps * gap:
                x = cand
                break
            eps *= 0.5
        else:
            # No step of any size makes progress despite a positive gap:
            # numerically stuck (sampled noise or fp limits), stop honestly.
            return LocalSearchResult(FractionalAllocation(x), gap, t, False, floor_used)

    f_x, vals = objective(x, mode_at(params.max_iters))
    guarded = np.maximum(vals, floor)
    grads = np.vstack([ml.gradient(restricted[i], x[i], mode_at(params.max_iters))
                       for i in range(n)])
    score = grads / guarded[:, None]
    winners = np.argmax(score, axis=0)
    gap = float((score[winners, cols] - (x * score).sum(axis=0)).sum())
    return LocalSearchResult(FractionalAllocation(x), gap, params.max_iters,
                             gap <= stop_delta, floor_used)


def rematch(bundles: Sequence[int], h_goods: Sequence[int],
            valuations: Sequence[ValuationSpec]) -> list[int]:
    """Match each agent to a reserved good maximizing sum_i log v_i(S_i + h).

    Zero-valued combinations are forbidden pairs unless an agent's whole row
    is zero, in which case the row is replaced by a constant so the matching
    stays feasible (that agent contributes nothing either way).
    """
    n = len(valuations)
    if len(h_goods) < n:
        raise InputError(f"rematching needs at least {n} reserved goods, got {len(h_goods)}")
    w = np.empty((n, len(h_goods)))
    for i, spec in enumerate(valuations):
        for c, h in enumerate(h_goods):
            v = value(spec, bundles[i] | (1 << h))
            w[i, c] = math.log(v) if v > 0.0 else NEG_INF
        if np.all(w[i] == NEG_INF):
            w[i, :] = 0.0
    assign, _ = max_weight_matching(w)
    return [h_goods[c] for c in assign]


def _nsw_value(values: Sequence[float]) -> float:
    if any(v <= 0.0 for v in values):
        return 0.0
    return float(math.exp(sum(math.log(v) for v in values) / len(values)))


def _degenerate_report(instance: Instance, params: NswParams, reason: str,
                       t_start: float) -> RunReport:
    n, m = instance.n, instance.m
    bundles = [0] * n
    bundles[0] = (1 << m) - 1
    per_agent = [value(instance.valuations[i], bundles[i]) for i in range(n)]
    return RunReport(
        algorithm="nsw",
        instance_digest=instance_digest(instance),
        params=_params_dict(params),
        allocation=[goods_from_mask(b) for b in bundles],
        per_agent_values=per_agent,
        objective={"nsw": 0.0},
        certificates={"degenerate": reason},
        iterations=0,
        wall_time_ms=(time.perf_counter() - t_start) * 1e3,
    )


def _params_dict(params: NswParams) -> dict:
    return {
        "step_eps": params.step_eps,
        "stop_delta": params.stop_delta,
        "max_iters": params.max_iters,
        "value_floor": params.value_floor,
        "seed": params.seed,
        "tau_zero": params.tau_zero,
        "eta": params.eta,
        "mode": mode_to_dict(params.mode),
    }


def solve_nsw(instance: Instance, params: NswParams = NswParams()) -> RunReport:
    """Full pipeline; degenerate instances produce a Nash-welfare-0 report."""
    t_start = time.perf_counter()
    n, m = instance.n, instance.m
    if n > m:
        raise InputError(f"Nash welfare pipeline needs n <= m, got n={n}, m={m}")
    try:
        tau, h_goods, rest = initial_matching(instance)
    except DegenerateError as exc:
        return _degenerate_report(instance, params, str(exc), t_start)

    cls = continuous_local_search(rest, instance.valuations, params)
    restricted = [restrict(spec, rest) for spec in instance.valuations]
    alloc_local, trace = nonuniform_pipage(cls.x, restricted, params.mode,
                                           params.tau_zero, params.eta)
    bundles = [0] * n
    for i in range(n):
        for local_j in goods_from_mask(alloc_local.bundles[i]):
            bundles[i] |= 1 << rest[local_j]

    sigma = rematch(bundles, h_goods, instance.valuations)
    final = [bundles[i] | (1 << sigma[i]) for i in range(n)]
    per_agent = [value(instance.valuations[i], final[i]) for i in range(n)]
    nsw = _nsw_value(per_agent)

    return RunReport(
        algorithm="nsw",
        instance_digest=instance_digest(instance),
        params=_params_dict(params),
        allocation=[goods_from_mask(b) for b in final],
        per_agent_values=per_agent,
        objective={"nsw": nsw},
        certificates={
            "tau": tau,
            "reserved_goods": list(h_goods),
            "relaxation_goods": list(rest),
            "fractional_point": cls.x.to_dict(),
            "local_search_gap": cls.gap,
            "locally_optimal": cls.locally_optimal,
            "stop_delta": params.resolved_stop_delta(n),
            "floor_used": cls.floor_used,
            "pre_rematch_bundles": [goods_from_mask(b) for b in bundles],
            "sigma": sigma,
            "cancel_trace": [s.to_dict() for s in trace],
        },
        iterations=cls.iterations,
        wall_time_ms=(time.perf_counter() - t_start) * 1e3,
    )
