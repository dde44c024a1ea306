"""Machine-readable run reports shared by the solvers and the CLI."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

from . import multilinear as ml


def mode_to_dict(mode: ml.EvalMode) -> dict:
    if isinstance(mode, ml.Sampled):
        return {"kind": "sampled", "samples": mode.samples, "seed": mode.seed}
    return {"kind": "exact"}


def mode_from_args(kind: str, samples: int, seed: int) -> ml.EvalMode:
    if kind == "exact":
        return ml.EXACT
    return ml.Sampled(samples, seed)


@dataclass
class RunReport:
    """Everything a run produced: allocation, values, certificates, provenance.

    ``allocation`` lists each agent's goods; ``objective`` carries the
    headline number(s); ``certificates`` holds whatever evidence the
    algorithm produced (fractional values, search transcripts, traces) so
    reported values can be re-derived from the instance alone.
    """

    algorithm: str
    instance_digest: str
    params: dict
    allocation: list[list[int]]
    per_agent_values: list[float]
    objective: dict
    certificates: dict = field(default_factory=dict)
    iterations: int = 0
    wall_time_ms: float = 0.0

    def to_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "instance_digest": self.instance_digest,
            "params": self.params,
            "allocation": self.allocation,
            "per_agent_values": self.per_agent_values,
            "objective": self.objective,
            "certificates": self.certificates,
            "iterations": self.iterations,
            "wall_time_ms": self.wall_time_ms,
        }

    def to_json(self, indent: Optional[int] = 1) -> str:
        return json.dumps(self.to_dict(), indent=indent)
