"""Multilinear extension of a set valuation: exact and sampled evaluation.

For a valuation v and a point x in [0,1]^m, the extension is the expected
value of the random set that includes each good j independently with
probability x_j.  It is linear in every single coordinate, so the partial
derivative with respect to x_g is exactly F(x with x_g=1) - F(x with x_g=0),
independent of the current value of x_g.

Exact mode folds coordinates that are already 0 or 1 into the query set and
enumerates only the fractional ones (at most ``EXACT_MAX_FRACTIONAL``), with
closed forms for the additive and coverage families where no enumeration is
needed at all.  Sampled mode draws independent random sets from a
counter-based Philox stream keyed by the seed; sample s always reads the
same fixed slice of the stream, so estimates are bit-reproducible and do not
depend on evaluation order or worker count.  Paired queries (derivative
endpoints) share one draw matrix, i.e. common random numbers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

from . import valuations as vals
from .errors import CapacityError, InputError
from .valuations import ValuationSpec

POINT_TOL = 1e-12
EXACT_MAX_FRACTIONAL = 20
Z95 = 1.959963984540054  # two-sided 95% normal quantile


@dataclass(frozen=True)
class Exact:
    pass


@dataclass(frozen=True)
class Sampled:
    samples: int
    seed: int = 0

    def __post_init__(self):
        if int(self.samples) < 1:
            raise InputError(f"samples must be a positive integer, got {self.samples}")
        object.__setattr__(self, "samples", int(self.samples))
        object.__setattr__(self, "seed", int(self.seed))


EXACT = Exact()
EvalMode = Exact | Sampled


@dataclass(frozen=True)
class Estimate:
    value: float
    half_width: float
    samples_used: int


def as_point(x, m: int | None = None) -> np.ndarray:
    """Validate a point of [0,1]^m (coordinates may overshoot by <= 1e-12) and clamp."""
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise InputError(f"point must be one-dimensional, got shape {arr.shape}")
    if m is not None and arr.shape[0] != m:
        raise InputError(f"point has {arr.shape[0]} coordinates, expected {m}")
    if not np.all(np.isfinite(arr)):
        raise InputError("point has non-finite coordinates")
    if np.any(arr < -POINT_TOL) or np.any(arr > 1.0 + POINT_TOL):
        raise InputError("point coordinates must lie in [0, 1] within 1e-12")
    return np.clip(arr, 0.0, 1.0)


def _fold(x: np.ndarray) -> tuple[int, tuple[int, ...]]:
    """Split coordinates into an integral base mask and the fractional positions."""
    base = 0
    fracs = []
    for j, v in enumerate(x):
        if v >= 1.0:
            base |= 1 << j
        elif v > 0.0:
            fracs.append(j)
    return base, tuple(fracs)


def _check_budget(fracs) -> None:
    if len(fracs) > EXACT_MAX_FRACTIONAL:
        raise CapacityError(
            f"{len(fracs)} fractional coordinates exceed the exact-mode cap "
            f"of {EXACT_MAX_FRACTIONAL}")


def _subset_probs(probs: np.ndarray) -> np.ndarray:
    """Product weights of all subsets of the fractional coordinates (bit b <=> probs[b])."""
    p = np.ones(1)
    for q in probs:
        p = np.concatenate([p * (1.0 - q), p * q])
    return p


def _exact_value(spec: ValuationSpec, x: np.ndarray) -> float:
    base, fracs = _fold(x)
    _check_budget(fracs)
    if isinstance(spec, vals.Additive):
        return float(np.dot(spec.weights, x))
    if isinstance(spec, vals.Coverage):
        total = 0.0
        for e, we in enumerate(spec.element_weights):
            if we == 0.0:
                continue
            miss = 1.0
            for j, c in enumerate(spec.covers):
                if c >> e & 1:
                    miss *= 1.0 - x[j]
            total += we * (1.0 - miss)
        return total
    table = vals.subset_value_table(spec, fracs, base)
    p = _subset_probs(x[list(fracs)])
    return float(np.dot(p, table))


def _sample_includes(x: np.ndarray, mode: Sampled) -> np.ndarray:
    gen = Generator(Philox(key=mode.seed))
    u = gen.random((mode.samples, x.shape[0]))
    return u < x


def _estimate_from_draws(draws: np.ndarray) -> Estimate:
    n = draws.shape[0]
    mean = float(draws.mean())
    if n < 2:
        return Estimate(mean, float("inf"), n)
    hw = Z95 * float(draws.std(ddof=1)) / float(np.sqrt(n))
    return Estimate(mean, hw, n)


def evaluate(spec: ValuationSpec, x, mode: EvalMode = EXACT) -> Estimate:
    """Multilinear extension of ``spec`` at ``x``."""
    point = as_point(x, vals.num_goods(spec))
    if isinstance(mode, Exact):
        return Estimate(_exact_value(spec, point), 0.0, 0)
    include = _sample_includes(point, mode)
    return _estimate_from_draws(vals.batch_values(spec, include))


def partial(spec: ValuationSpec, x, g: int, mode: EvalMode = EXACT) -> Estimate:
    """Partial derivative with respect to coordinate ``g``.

    Computed as the difference of the two endpoint values, which is exact
    because the extension is linear in each coordinate.  Sampled mode uses
    the same draw matrix for both endpoints (common random numbers).
    """
    point = as_point(x, vals.num_goods(spec))
    if not 0 <= g < point.shape[0]:
        raise InputError(f"good index {g} out of range [0, {point.shape[0]})")
    if isinstance(mode, Exact):
        hi = point.copy()
        lo = point.copy()
        hi[g] = 1.0
        lo[g] = 0.0
        return Estimate(_exact_value(spec, hi) - _exact_value(spec, lo), 0.0, 0)
    include = _sample_includes(point, mode)
    with_g = include.copy()
    with_g[:, g] = True
    without_g = include.copy()
    without_g[:, g] = False
    diffs = vals.batch_values(spec, with_g) - vals.batch_values(spec, without_g)
    return _estimate_from_draws(diffs)


def direction_gain_bound(spec: ValuationSpec, x, i: int, j: int,
                         t_i: float, t_j: float, mode: EvalMode = EXACT) -> float:
    """First-order lower bound on F(x + t_i e_i - t_j e_j) - F(x).

    Submodularity makes the extension convex along such two-coordinate
    swap directions, so the true gain is never below this bound.
    """
    point = as_point(x, vals.num_goods(spec))
    m = point.shape[0]
    if not (0 <= i < m and 0 <= j < m):
        raise InputError("good index out of range")
    if i == j:
        raise InputError("swap directions need two distinct goods")
    if t_i < 0 or t_j < 0:
        raise InputError("step sizes must be nonnegative")
    if point[i] + t_i > 1.0 + POINT_TOL or point[j] - t_j < -POINT_TOL:
        raise InputError("perturbed point leaves [0, 1]")
    di = partial(spec, point, i, mode).value
    dj = partial(spec, point, j, mode).value
    return t_i * di - t_j * dj


def gradient(spec: ValuationSpec, x, mode: EvalMode = EXACT) -> np.ndarray:
    """All m coordinate partials at once.

    Solver hot path: exact mode shares one subset table across coordinates,
    sampled mode shares one draw matrix across coordinates (coherent common
    random numbers for a whole linear-maximization step).
    """
    point = as_point(x, vals.num_goods(spec))
    m = point.shape[0]
    if isinstance(mode, Sampled):
        include = _sample_includes(point, mode)
        out = np.empty(m)
        for g in range(m):
            with_g = include.copy()
            with_g[:, g] = True
            without_g = include.copy()
            without_g[:, g] = False
            out[g] = float(
                (vals.batch_values(spec, with_g) - vals.batch_values(spec, without_g)).mean())
        return out

    if isinstance(spec, vals.Additive):
        return np.asarray(spec.weights, dtype=float)
    if isinstance(spec, vals.Coverage):
        out = np.zeros(m)
        for e, we in enumerate(spec.element_weights):
            if we == 0.0:
                continue
            members = [j for j, c in enumerate(spec.covers) if c >> e & 1]
            miss = np.array([1.0 - point[j] for j in members])
            full = float(np.prod(miss))
            for pos, j in enumerate(members):
                rest = full / miss[pos] if miss[pos] > 0.0 else float(
                    np.prod(np.delete(miss, pos)))
                out[j] += we * rest
        return out

    base, fracs = _fold(point)
    _check_budget(fracs)
    table = vals.subset_value_table(spec, fracs, base)
    probs = point[list(fracs)]
    p = _subset_probs(probs)
    out = np.empty(m)
    frac_set = set(fracs)
    for g in range(m):
        if g in frac_set:
            b = fracs.index(g)
            hi = probs.copy()
            lo = probs.copy()
            hi[b] = 1.0
            lo[b] = 0.0
            out[g] = float(np.dot(_subset_probs(hi) - _subset_probs(lo), table))
        else:
            base_wo = base & ~(1 << g)
            t1 = vals.subset_value_table(spec, fracs, base_wo | (1 << g))
            t0 = vals.subset_value_table(spec, fracs, base_wo)
            out[g] = float(np.dot(p, t1 - t0))
    return out
