import numpy as np
import pytest

from conftest import random_instance
from fairround.errors import CapacityError, InputError
from fairround.valuations import (Additive, BudgetAdditive, ConcaveAdditive,
                                  Coverage, check_submodular, goods_from_mask,
                                  marginal, mask_from_goods, num_goods,
                                  restrict, subset_value_table, value)

COV = Coverage.from_sets((1.0, 1.0, 1.0), [{0, 1}, {1, 2}])


def test_value_additive_example():
    assert value(Additive((1.0, 2.0, 3.0)), mask_from_goods([0, 2], 3)) == 4.0


def test_value_empty_set_is_zero():
    specs = [Additive((1.0, 2.0)), COV, BudgetAdditive((3.0, 3.0), 4.0),
             ConcaveAdditive((1.0, 2.0), "sqrt")]
    for spec in specs:
        assert value(spec, 0) == 0.0


def test_value_coverage_example():
    # covered elements of {g0, g1}: g0 -> {0,1}, g1 -> {1,2}, union weight 3
    assert value(COV, 0b11) == 3.0
    assert value(COV, 0b01) == 2.0
    assert value(COV, 0b10) == 2.0


def test_value_rejects_out_of_range_set():
    with pytest.raises(InputError):
        value(Additive((1.0,)), 0b10)


def test_marginal_examples():
    assert marginal(Additive((1.0, 2.0)), 0, 1) == 2.0
    # value({0,1}) - value({0}) = 3 - 2
    assert marginal(COV, 0b01, 1) == 1.0
    # min(4, 6) - min(4, 3) = 1
    assert marginal(BudgetAdditive((3.0, 3.0), 4.0), 0b01, 1) == 1.0


def test_marginal_rejects_member_good():
    with pytest.raises(InputError):
        marginal(Additive((1.0, 2.0)), 0b10, 1)


def test_weights_must_be_nonnegative():
    with pytest.raises(InputError):
        Additive((1.0, -0.5))
    with pytest.raises(InputError):
        BudgetAdditive((1.0,), -1.0)
    with pytest.raises(InputError):
        ConcaveAdditive((1.0,), "exp")


def test_check_submodular_families(rng):
    assert check_submodular(Additive(tuple(rng.uniform(0, 2, 6))))
    assert check_submodular(COV)
    for trial in range(5):
        inst = random_instance(rng, (1, 1), (3, 7))
        for spec in inst.valuations:
            assert check_submodular(spec)


def test_check_submodular_rejects_supermodular_table():
    table = {0: 0.0, 0b01: 0.0, 0b10: 0.0, 0b11: 1.0}
    assert not check_submodular(lambda s: table[s], m=2)


def test_check_submodular_rejects_nonmonotone_table():
    table = {0: 0.0, 0b01: 2.0, 0b10: 1.0, 0b11: 1.5}
    assert not check_submodular(lambda s: table[s], m=2)


def test_check_submodular_rejects_unnormalized_table():
    assert not check_submodular(lambda s: 1.0, m=2)


def test_check_submodular_capacity_cap():
    with pytest.raises(CapacityError):
        check_submodular(Additive((1.0,) * 13))
    with pytest.raises(CapacityError):
        check_submodular(lambda s: 0.0, m=13)


def test_check_submodular_requires_m_for_callables():
    with pytest.raises(InputError):
        check_submodular(lambda s: 0.0)


def test_subset_value_table_matches_scalar_value(rng):
    for trial in range(8):
        inst = random_instance(rng, (1, 1), (2, 6))
        spec = inst.valuations[0]
        m = num_goods(spec)
        table = subset_value_table(spec, tuple(range(m)))
        for s in range(1 << m):
            assert table[s] == pytest.approx(value(spec, s), abs=1e-12)


def test_subset_value_table_with_base(rng):
    spec = COV
    table = subset_value_table(spec, (1,), base=0b01)
    assert table[0] == value(spec, 0b01)
    assert table[1] == value(spec, 0b11)


def test_diminishing_marginals_exhaustive_small(rng):
    """Direct definition check: marginal(A, g) >= marginal(B, g) for A <= B."""
    for trial in range(4):
        inst = random_instance(rng, (1, 1), (5, 6))
        spec = inst.valuations[0]
        m = num_goods(spec)
        for b in range(1 << m):
            for g in range(m):
                if b >> g & 1:
                    continue
                mb = marginal(spec, b, g)
                a = b
                while True:  # all submasks of b
                    assert marginal(spec, a, g) >= mb - 1e-12
                    if a == 0:
                        break
                    a = (a - 1) & b


def test_diminishing_marginals_m10():
    """Same property at m = 10 via the (independently tested) subset tables."""
    rng = np.random.default_rng(7)
    specs = [
        Additive(tuple(rng.uniform(0, 1, 10))),
        BudgetAdditive(tuple(rng.uniform(0, 1, 10)), 3.0),
        ConcaveAdditive(tuple(rng.uniform(0, 2, 10)), "log1p"),
        random_instance(rng, (1, 1), (10, 10), family="coverage").valuations[0],
    ]
    for spec in specs:
        t = subset_value_table(spec, tuple(range(10)))
        for b in range(1 << 10):
            for g in range(10):
                if b >> g & 1:
                    continue
                mb = t[b | 1 << g] - t[b]
                a = b
                while True:
                    assert t[a | 1 << g] - t[a] >= mb - 1e-12
                    if a == 0:
                        break
                    a = (a - 1) & b


def test_value_is_pure(rng):
    inst = random_instance(rng, (1, 1), (4, 8))
    spec = inst.valuations[0]
    m = num_goods(spec)
    masks = [int(rng.integers(1 << m)) for _ in range(20)]
    first = [value(spec, s) for s in masks]
    second = [value(spec, s) for s in masks]
    assert first == second  # bit-identical


def test_budget_additive_with_loose_cap_is_additive(rng):
    w = tuple(rng.uniform(0, 1, 10))
    loose = BudgetAdditive(w, sum(w) + 1.0)
    plain = Additive(w)
    for s in range(1 << 10):
        assert value(loose, s) == value(plain, s)


def test_restrict_matches_global_values(rng):
    for trial in range(6):
        inst = random_instance(rng, (1, 1), (4, 8))
        spec = inst.valuations[0]
        m = num_goods(spec)
        keep = sorted(rng.choice(m, size=min(4, m), replace=False).tolist())
        sub = restrict(spec, keep)
        for t in range(1 << len(keep)):
            global_mask = 0
            for b, g in enumerate(keep):
                if t >> b & 1:
                    global_mask |= 1 << g
            assert value(sub, t) == pytest.approx(value(spec, global_mask), abs=1e-12)


def test_mask_helpers_roundtrip():
    assert goods_from_mask(mask_from_goods([2, 0, 5], 6)) == [0, 2, 5]
    with pytest.raises(InputError):
        mask_from_goods([0, 0], 3)
    with pytest.raises(InputError):
        mask_from_goods([3], 3)
