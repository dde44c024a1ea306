"""Maximin-share solver: single-good reductions, then round the uniform point.

While some remaining agent i values some remaining good g at least half of
i's multilinear value at the uniform split of the remaining goods, hand g
to i and drop both (removing one agent with one good never lowers anyone
else's maximin share).  When the loop stops, every residual agent is happy
with half the uniform value, and rounding the uniform point by cycle
cancellation plus tree rounding costs each of them at most one good, which
by the loop exit condition is at most half the uniform value.  The uniform
value itself is at least (1 - 1/e) of the maximin share.

Pair selection scans (agent, good) in ascending index order and takes the
first qualifying pair, so runs are reproducible.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import multilinear as ml
from .errors import CapacityError, InputError
from .instances import Instance, instance_digest
from .reference import DEFAULT_LIMITS, BruteLimits, mms_bruteforce
from .report import RunReport, mode_to_dict
from .rounding import (DEFAULT_ETA, DEFAULT_TAU_ZERO, FractionalAllocation,
                       IntegralAllocation, nonuniform_pipage)
from .valuations import goods_from_mask, restrict, value


@dataclass(frozen=True)
class MmsParams:
    mode: ml.EvalMode = ml.EXACT
    seed: int = 0
    tau_zero: float = DEFAULT_TAU_ZERO
    eta: float = DEFAULT_ETA


@dataclass
class ReductionStep:
    agent: int
    good: int
    threshold: float  # half the agent's uniform-point value when it got the good

    def to_dict(self) -> dict:
        return {"agent": self.agent, "good": self.good, "threshold": self.threshold}


@dataclass
class Residual:
    agents: list[int]
    goods: list[int]


def uniform_point(n_agents: int, m_goods: int) -> FractionalAllocation:
    """Every good split 1/n per agent; the last row absorbs rounding residue
    so columns sum to exactly 1."""
    if n_agents < 1:
        raise InputError(f"need at least one agent, got {n_agents}")
    if m_goods < 0:
        raise InputError(f"good count must be nonnegative, got {m_goods}")
    x = np.full((n_agents, m_goods), 1.0 / n_agents)
    if m_goods > 0:
        x[-1, :] = 1.0 - x[:-1, :].sum(axis=0)
    return FractionalAllocation(x)


def single_good_reduction(instance: Instance,
                          mode: ml.EvalMode = ml.EXACT) -> tuple[list[ReductionStep], Residual]:
    """Run the allocation loop; thresholds are recomputed on each residual."""
    agents = list(range(instance.n))
    goods = list(range(instance.m))
    trace: list[ReductionStep] = []
    while agents:
        np_agents = len(agents)
        point = uniform_point(np_agents, len(goods))
        thresholds = {}
        for pos, i in enumerate(agents):
            spec = restrict(instance.valuations[i], goods)
            thresholds[i] = 0.5 * ml.evaluate(spec, point.row(pos), mode).value
        hit = None
        for i in agents:
            for g in goods:
                if value(instance.valuations[i], 1 << g) >= thresholds[i]:
                    hit = (i, g)
                    break
            if hit:
                break
        if hit is None:
            break
        i, g = hit
        trace.append(ReductionStep(i, g, thresholds[i]))
        agents.remove(i)
        goods.remove(g)
    return trace, Residual(agents, goods)


def solve_mms(instance: Instance, params: MmsParams = MmsParams(),
              limits: BruteLimits = DEFAULT_LIMITS) -> RunReport:
    """Reduction loop plus uniform-point rounding; reports per-agent maximin
    ratios whenever the brute-force share oracle fits in the enumeration cap."""
    t_start = time.perf_counter()
    n, m = instance.n, instance.m
    trace, residual = single_good_reduction(instance, params.mode)

    bundles = [0] * n
    for step in trace:
        bundles[step.agent] |= 1 << step.good

    cancel_trace = []
    if residual.agents:
        point = uniform_point(len(residual.agents), len(residual.goods))
        restricted = [restrict(instance.valuations[i], residual.goods)
                      for i in residual.agents]
        alloc_local, cancel_trace = nonuniform_pipage(point, restricted, params.mode,
                                                      params.tau_zero, params.eta)
        for pos, i in enumerate(residual.agents):
            for local_j in goods_from_mask(alloc_local.bundles[pos]):
                bundles[i] |= 1 << residual.goods[local_j]
    else:
        for g in residual.goods:  # nobody left to round for; keep the partition total
            bundles[0] |= 1 << g

    alloc = IntegralAllocation(tuple(bundles), m)
    per_agent = [value(instance.valuations[i], alloc.bundles[i]) for i in range(n)]

    shares: Optional[list[float]] = None
    ratios: Optional[list[Optional[float]]] = None
    try:
        shares = [mms_bruteforce(spec, n, None, limits) for spec in instance.valuations]
        ratios = [per_agent[i] / shares[i] if shares[i] > 0.0 else None for i in range(n)]
    except CapacityError:
        pass  # oracle out of reach; report the allocation without ratios

    objective: dict = {"min": min(per_agent) if per_agent else 0.0}
    objective["mms_ratios"] = ratios

    return RunReport(
        algorithm="mms",
        instance_digest=instance_digest(instance),
        params={
            "seed": params.seed,
            "tau_zero": params.tau_zero,
            "eta": params.eta,
            "mode": mode_to_dict(params.mode),
        },
        allocation=alloc.as_lists(),
        per_agent_values=per_agent,
        objective=objective,
        certificates={
            "reduction_trace": [s.to_dict() for s in trace],
            "residual_agents": residual.agents,
            "residual_goods": residual.goods,
            "mms_values": shares,
            "cancel_trace": [s.to_dict() for s in cancel_trace],
        },
        iterations=len(trace),
        wall_time_ms=(time.perf_counter() - t_start) * 1e3,
    )
