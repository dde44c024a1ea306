"""Instance data model, JSON (de)serialization and seeded generators.

File schema (``*.instance.json``)::

    {"agents": n, "goods": m, "valuations": [spec, ...]}

where each spec is discriminated by its "type":

    {"type": "additive",         "weights": [w0, ...]}
    {"type": "coverage",         "element_weights": [...], "covers": [[e, ...], ...]}
    {"type": "budget_additive",  "weights": [...], "cap": c}
    {"type": "concave_additive", "weights": [...], "concave": "sqrt" | "log1p"}

Fractional allocations travel as ``{"rows": n, "cols": m, "x": [row-major]}``
in ``*.point.json`` files.  Schema violations raise InputError with a JSON
pointer to the offending field.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import InputError
from .rounding import FractionalAllocation
from .valuations import (Additive, BudgetAdditive, ConcaveAdditive, Coverage,
                         ValuationSpec, goods_from_mask, num_goods)

FAMILIES = ("additive", "coverage", "budget_additive", "concave_additive")
GEN_FAMILIES = FAMILIES + ("mixed",)


@dataclass(frozen=True)
class Instance:
    n: int
    m: int
    valuations: tuple[ValuationSpec, ...]

    def __post_init__(self):
        if self.n < 1:
            raise InputError(f"need at least one agent, got {self.n}")
        if self.m < 0:
            raise InputError(f"good count must be nonnegative, got {self.m}")
        if len(self.valuations) != self.n:
            raise InputError(
                f"{len(self.valuations)} valuation specs for {self.n} agents")
        for i, spec in enumerate(self.valuations):
            if num_goods(spec) != self.m:
                raise InputError(
                    f"/valuations/{i}: spec covers {num_goods(spec)} goods, expected {self.m}")


# ---------------------------------------------------------------------------
# JSON serialization
# ---------------------------------------------------------------------------

def spec_to_dict(spec: ValuationSpec) -> dict:
    if isinstance(spec, Additive):
        return {"type": "additive", "weights": list(spec.weights)}
    if isinstance(spec, Coverage):
        return {
            "type": "coverage",
            "element_weights": list(spec.element_weights),
            "covers": [goods_from_mask(c) for c in spec.covers],
        }
    if isinstance(spec, BudgetAdditive):
        return {"type": "budget_additive", "weights": list(spec.weights), "cap": spec.cap}
    return {"type": "concave_additive", "weights": list(spec.weights), "concave": spec.concave}


def _expect(obj: dict, key: str, ptr: str):
    if key not in obj:
        raise InputError(f"{ptr}/{key}: missing required field")
    return obj[key]


def _real_list(value, ptr: str) -> tuple[float, ...]:
    if not isinstance(value, list):
        raise InputError(f"{ptr}: expected a list of reals")
    out = []
    for k, v in enumerate(value):
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise InputError(f"{ptr}/{k}: expected a real number")
        out.append(float(v))
    return tuple(out)


def spec_from_dict(obj, ptr: str = "") -> ValuationSpec:
    if not isinstance(obj, dict):
        raise InputError(f"{ptr}: expected a valuation object")
    kind = _expect(obj, "type", ptr)
    try:
        if kind == "additive":
            return Additive(_real_list(_expect(obj, "weights", ptr), f"{ptr}/weights"))
        if kind == "coverage":
            ew = _real_list(_expect(obj, "element_weights", ptr), f"{ptr}/element_weights")
            covers_raw = _expect(obj, "covers", ptr)
            if not isinstance(covers_raw, list):
                raise InputError(f"{ptr}/covers: expected a list of element-index lists")
            covers = []
            for j, cov in enumerate(covers_raw):
                if not isinstance(cov, list):
                    raise InputError(f"{ptr}/covers/{j}: expected a list of element indices")
                mask = 0
                for e in cov:
                    if isinstance(e, bool) or not isinstance(e, int) or not 0 <= e < len(ew):
                        raise InputError(
                            f"{ptr}/covers/{j}: element index {e!r} outside the universe")
                    mask |= 1 << e
                covers.append(mask)
            return Coverage(ew, tuple(covers))
        if kind == "budget_additive":
            cap = _expect(obj, "cap", ptr)
            if isinstance(cap, bool) or not isinstance(cap, (int, float)):
                raise InputError(f"{ptr}/cap: expected a real number")
            return BudgetAdditive(
                _real_list(_expect(obj, "weights", ptr), f"{ptr}/weights"), float(cap))
        if kind == "concave_additive":
            concave = _expect(obj, "concave", ptr)
            return ConcaveAdditive(
                _real_list(_expect(obj, "weights", ptr), f"{ptr}/weights"), concave)
    except InputError as exc:
        if str(exc).startswith(ptr) and ptr:
            raise
        raise InputError(f"{ptr}: {exc}") from exc
    raise InputError(f"{ptr}/type: unknown valuation type {kind!r}")


def instance_to_dict(instance: Instance) -> dict:
    return {
        "agents": instance.n,
        "goods": instance.m,
        "valuations": [spec_to_dict(s) for s in instance.valuations],
    }


def instance_from_dict(obj) -> Instance:
    if not isinstance(obj, dict):
        raise InputError(": expected a JSON object at the top level")
    n = _expect(obj, "agents", "")
    m = _expect(obj, "goods", "")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InputError("/agents: expected a positive integer")
    if isinstance(m, bool) or not isinstance(m, int) or m < 0:
        raise InputError("/goods: expected a nonnegative integer")
    specs_raw = _expect(obj, "valuations", "")
    if not isinstance(specs_raw, list):
        raise InputError("/valuations: expected a list of valuation objects")
    if len(specs_raw) != n:
        raise InputError(f"/valuations: got {len(specs_raw)} specs for {n} agents")
    specs = []
    for i, s in enumerate(specs_raw):
        spec = spec_from_dict(s, f"/valuations/{i}")
        if num_goods(spec) != m:
            raise InputError(f"/valuations/{i}: spec covers {num_goods(spec)} goods, expected {m}")
        specs.append(spec)
    return Instance(n, m, tuple(specs))


def save(instance: Instance, path) -> None:
    with open(path, "w") as fh:
        json.dump(instance_to_dict(instance), fh, indent=1)
        fh.write("\n")


def load(path) -> Instance:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read instance file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc}") from exc
    return instance_from_dict(obj)


def save_point(point: FractionalAllocation, path) -> None:
    with open(path, "w") as fh:
        json.dump(point.to_dict(), fh, indent=1)
        fh.write("\n")


def load_point(path) -> FractionalAllocation:
    try:
        with open(path) as fh:
            obj = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read point file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"malformed JSON: {exc}") from exc
    return FractionalAllocation.from_dict(obj)


def instance_digest(instance: Instance) -> str:
    blob = json.dumps(instance_to_dict(instance), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Seeded generators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GenConfig:
    family: str
    n: int
    m: int
    seed: int = 0
    small_goods: Optional[float] = None

    def __post_init__(self):
        if self.family not in GEN_FAMILIES:
            raise InputError(f"family must be one of {GEN_FAMILIES}, got {self.family!r}")
        if self.n < 1 or self.m < 0:
            raise InputError("need n >= 1 and m >= 0")
        if self.small_goods is not None:
            eps = float(self.small_goods)
            if not 0.0 < eps <= 1.0:
                raise InputError(f"small_goods cap must lie in (0, 1], got {eps}")
            if self.family != "additive":
                raise InputError("small_goods generation is defined for the additive family")
            if eps * self.m < self.n:
                raise InputError(
                    f"small_goods needs m >= n/eps (m={self.m}, n={self.n}, eps={eps})")


def _gen_spec(family: str, m: int, rng: np.random.Generator) -> ValuationSpec:
    if family == "additive":
        return Additive(tuple(rng.uniform(0.1, 1.0, m)))
    if family == "budget_additive":
        w = rng.uniform(0.1, 1.0, m)
        cap = float(rng.uniform(0.3, 0.9) * max(w.sum(), 1e-9))
        return BudgetAdditive(tuple(w), cap)
    if family == "concave_additive":
        concave = "sqrt" if rng.integers(2) == 0 else "log1p"
        return ConcaveAdditive(tuple(rng.uniform(0.1, 2.0, m)), concave)
    # coverage: universe slightly larger than the good count, every good
    # covers at least one element
    u = int(m + rng.integers(1, m + 2)) if m > 0 else 1
    ew = tuple(rng.uniform(0.2, 1.0, u))
    covers = []
    p = min(0.9, 2.5 / max(1, m))
    for _ in range(m):
        mask = 0
        for e in range(u):
            if rng.random() < p:
                mask |= 1 << e
        if mask == 0:
            mask = 1 << int(rng.integers(u))
        covers.append(mask)
    return Coverage(ew, tuple(covers))


def generate(cfg: GenConfig) -> Instance:
    """Deterministic instance from a config: same config, same instance."""
    rng = np.random.default_rng(cfg.seed)
    if cfg.small_goods is not None:
        # Identical equal-weight additive agents.  With all m weights equal,
        # every singleton is exactly (n/m) of the proportional share, so the
        # cap v(j) <= eps * (total/n) holds by the m >= n/eps precondition,
        # and the balanced split makes the max-min optimum closed-form.
        scale = float(rng.uniform(0.5, 2.0))
        spec = Additive((scale,) * cfg.m)
        return Instance(cfg.n, cfg.m, (spec,) * cfg.n)
    specs = []
    for _ in range(cfg.n):
        family = cfg.family
        if family == "mixed":
            family = FAMILIES[int(rng.integers(len(FAMILIES)))]
        specs.append(_gen_spec(family, cfg.m, rng))
    return Instance(cfg.n, cfg.m, tuple(specs))
