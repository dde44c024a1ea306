import numpy as np
import pytest

from conftest import random_instance
from fairround import multilinear as ml
from fairround.errors import CapacityError, InputError
from fairround.valuations import (Additive, BudgetAdditive, Coverage, num_goods,
                                  value)

COV = Coverage.from_sets((1.0, 1.0, 1.0), [{0, 1}, {1, 2}])


def brute_multilinear(spec, x):
    """Independent oracle: full 2^m sum of P(S) * v(S)."""
    m = num_goods(spec)
    total = 0.0
    for s in range(1 << m):
        p = 1.0
        for j in range(m):
            p *= x[j] if s >> j & 1 else 1.0 - x[j]
        total += p * value(spec, s)
    return total


def test_additive_extension_is_linear():
    est = ml.evaluate(Additive((1.0, 2.0)), [0.5, 0.5])
    assert est.value == pytest.approx(1.5, abs=1e-15)
    assert est.half_width == 0.0 and est.samples_used == 0


def test_indicator_point_gives_set_value(rng):
    for trial in range(5):
        inst = random_instance(rng, (1, 1), (3, 7))
        spec = inst.valuations[0]
        m = num_goods(spec)
        s = int(rng.integers(1 << m))
        x = np.array([float(s >> j & 1) for j in range(m)])
        assert ml.evaluate(spec, x).value == pytest.approx(value(spec, s), abs=1e-12)


def test_coverage_example_against_oracle():
    x = [0.5, 0.5]
    expected = brute_multilinear(COV, x)  # 0.25 * (0 + 2 + 2 + 3)
    assert expected == pytest.approx(1.75, abs=1e-15)
    assert ml.evaluate(COV, x).value == pytest.approx(expected, abs=1e-12)


def test_exact_matches_bruteforce_all_families(rng):
    for trial in range(12):
        inst = random_instance(rng, (1, 1), (2, 6))
        spec = inst.valuations[0]
        x = rng.random(num_goods(spec))
        assert ml.evaluate(spec, x).value == pytest.approx(
            brute_multilinear(spec, x), abs=1e-10)


def test_exact_folds_integral_coordinates(rng):
    # points mixing 0/1 coordinates with fractional ones
    for trial in range(8):
        inst = random_instance(rng, (1, 1), (4, 6))
        spec = inst.valuations[0]
        m = num_goods(spec)
        x = rng.random(m)
        x[rng.integers(m)] = 1.0
        x[int(rng.integers(m))] = 0.0
        assert ml.evaluate(spec, x).value == pytest.approx(
            brute_multilinear(spec, x), abs=1e-10)


def test_point_validation():
    with pytest.raises(InputError):
        ml.evaluate(Additive((1.0,)), [1.5])
    with pytest.raises(InputError):
        ml.evaluate(Additive((1.0,)), [-0.1])
    with pytest.raises(InputError):
        ml.evaluate(Additive((1.0, 1.0)), [0.5])


def test_exact_budget_cap():
    spec = BudgetAdditive((1.0,) * 25, 5.0)
    with pytest.raises(CapacityError):
        ml.evaluate(spec, [0.5] * 25)
    # integral coordinates fold away and stay under the cap
    x = [0.5] * 10 + [1.0] * 15
    assert np.isfinite(ml.evaluate(spec, x).value)


def test_coordinate_linearity(rng):
    for trial in range(10):
        inst = random_instance(rng, (1, 1), (3, 6))
        spec = inst.valuations[0]
        m = num_goods(spec)
        x = rng.random(m)
        g = int(rng.integers(m))
        a = float(rng.random())
        x_a, x0, x1 = x.copy(), x.copy(), x.copy()
        x_a[g], x0[g], x1[g] = a, 0.0, 1.0
        f_a = ml.evaluate(spec, x_a).value
        f0 = ml.evaluate(spec, x0).value
        f1 = ml.evaluate(spec, x1).value
        assert f_a == pytest.approx((1 - a) * f0 + a * f1, abs=1e-12)


def test_partial_examples():
    assert ml.partial(Additive((1.0, 2.0)), [0.3, 0.8], 1).value == pytest.approx(2.0, abs=1e-15)
    assert ml.partial(COV, [0.5, 0.5], 0).value == pytest.approx(1.5, abs=1e-15)


def test_partial_is_exact_finite_difference(rng):
    # the extension is linear per coordinate, so the coordinate finite
    # difference IS the derivative; the implementation computes exactly that
    for trial in range(10):
        inst = random_instance(rng, (1, 1), (3, 6))
        spec = inst.valuations[0]
        m = num_goods(spec)
        x = rng.random(m)
        g = int(rng.integers(m))
        hi, lo = x.copy(), x.copy()
        hi[g], lo[g] = 1.0, 0.0
        diff = ml.evaluate(spec, hi).value - ml.evaluate(spec, lo).value
        assert ml.partial(spec, x, g).value == diff


def test_partial_independent_of_own_coordinate(rng):
    inst = random_instance(rng, (1, 1), (4, 6))
    spec = inst.valuations[0]
    m = num_goods(spec)
    x = rng.random(m)
    g = 1
    vals = []
    for a in (0.0, 0.25, 0.7, 1.0):
        xa = x.copy()
        xa[g] = a
        vals.append(ml.partial(spec, xa, g).value)
    assert all(v == pytest.approx(vals[0], abs=1e-12) for v in vals)


def test_gradient_matches_partial(rng):
    for trial in range(6):
        inst = random_instance(rng, (1, 1), (3, 7))
        spec = inst.valuations[0]
        m = num_goods(spec)
        x = rng.random(m)
        x[int(rng.integers(m))] = 0.0  # include an integral coordinate
        grad = ml.gradient(spec, x)
        for g in range(m):
            assert grad[g] == pytest.approx(ml.partial(spec, x, g).value, abs=1e-11)


def test_direction_gain_bound_never_exceeds_true_gain(rng):
    trials = 0
    while trials < 300:
        inst = random_instance(rng, (1, 1), (2, 8))
        spec = inst.valuations[0]
        m = num_goods(spec)
        if m < 2:
            continue
        x = rng.random(m)
        i, j = rng.choice(m, size=2, replace=False).tolist()
        t_i = float(rng.random() * (1.0 - x[i]))
        t_j = float(rng.random() * x[j])
        bound = ml.direction_gain_bound(spec, x, i, j, t_i, t_j)
        moved = x.copy()
        moved[i] += t_i
        moved[j] -= t_j
        gain = ml.evaluate(spec, moved).value - ml.evaluate(spec, x).value
        assert gain >= bound - 1e-9
        trials += 1


def test_direction_gain_bound_additive_is_tight(rng):
    w = tuple(rng.uniform(0, 3, 5))
    spec = Additive(w)
    x = rng.uniform(0.2, 0.8, 5)
    bound = ml.direction_gain_bound(spec, x, 0, 3, 0.1, 0.15)
    moved = x.copy()
    moved[0] += 0.1
    moved[3] -= 0.15
    gain = ml.evaluate(spec, moved).value - ml.evaluate(spec, x).value
    assert gain == pytest.approx(bound, abs=1e-12)


def test_direction_gain_bound_zero_steps_is_zero():
    assert ml.direction_gain_bound(COV, [0.5, 0.5], 0, 1, 0.0, 0.0) == 0.0


def test_direction_gain_bound_validation():
    with pytest.raises(InputError):
        ml.direction_gain_bound(COV, [0.5, 0.5], 0, 0, 0.1, 0.1)
    with pytest.raises(InputError):
        ml.direction_gain_bound(COV, [0.9, 0.5], 0, 1, 0.2, 0.1)
    with pytest.raises(InputError):
        ml.direction_gain_bound(COV, [0.5, 0.1], 0, 1, 0.1, 0.2)


def test_sampled_requires_positive_samples():
    with pytest.raises(InputError):
        ml.Sampled(0, 1)


def test_sampled_estimates_are_deterministic(rng):
    inst = random_instance(rng, (1, 1), (4, 6))
    spec = inst.valuations[0]
    x = rng.random(num_goods(spec))
    mode = ml.Sampled(2000, seed=99)
    a = ml.evaluate(spec, x, mode)
    b = ml.evaluate(spec, x, mode)
    assert a == b  # bit-identical, including the half width


def test_sampled_close_to_exact(rng):
    hits = 0
    for trial in range(10):
        inst = random_instance(rng, (1, 1), (4, 7))
        spec = inst.valuations[0]
        x = rng.random(num_goods(spec))
        exact = ml.evaluate(spec, x).value
        est = ml.evaluate(spec, x, ml.Sampled(10_000, seed=trial))
        if abs(est.value - exact) <= est.half_width:
            hits += 1
    assert hits >= 9


def test_sampled_partial_uses_common_random_numbers():
    # with shared draws, the additive derivative estimate is exactly the weight
    spec = Additive((1.0, 2.0, 3.0))
    est = ml.partial(spec, [0.4, 0.5, 0.6], 1, ml.Sampled(500, seed=3))
    assert est.value == pytest.approx(2.0, abs=1e-12)
    assert est.half_width == pytest.approx(0.0, abs=1e-12)
