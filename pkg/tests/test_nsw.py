import itertools
import math

import numpy as np
import pytest

from conftest import random_instance
from fairround import multilinear as ml
from fairround.errors import InputError
from fairround.instances import GenConfig, Instance, generate
from fairround.nsw import (NswParams, continuous_local_search, initial_matching,
                           rematch, solve_nsw)
from fairround.reference import brute_opt_nsw
from fairround.rounding import FractionalAllocation
from fairround.valuations import Additive, restrict, value


def test_initial_matching_single_agent():
    inst = Instance(1, 2, (Additive((3.0, 1.0)),))
    tau, h, rest = initial_matching(inst)
    assert tau == [0] and h == [0] and rest == [1]


def test_initial_matching_two_agents_pick_their_best():
    inst = Instance(2, 3, (Additive((4.0, 1.0, 1.0)), Additive((1.0, 4.0, 1.0))))
    tau, h, rest = initial_matching(inst)
    assert tau == [0, 1] and h == [0, 1] and rest == [2]


def test_initial_matching_requires_enough_goods():
    inst = Instance(2, 1, (Additive((1.0,)),) * 2)
    with pytest.raises(InputError):
        initial_matching(inst)


def test_initial_matching_leftover_goods_never_beat_matched(rng):
    for trial in range(100):
        inst = random_instance(rng, (2, 3), (4, 7))
        try:
            tau, h, rest = initial_matching(inst)
        except Exception:
            continue
        for i in range(inst.n):
            vi_match = value(inst.valuations[i], 1 << tau[i])
            for j in rest:
                assert value(inst.valuations[i], 1 << j) <= vi_match + 1e-12


def test_local_search_single_agent_takes_all():
    res = continuous_local_search([0, 1, 2], [Additive((1.0, 2.0, 3.0))], NswParams())
    assert np.allclose(res.x.x, 1.0)
    assert res.gap <= 1e-3
    assert res.locally_optimal


def test_local_search_symmetric_uniform_is_optimal():
    res = continuous_local_search([0, 1], [Additive((1.0, 1.0))] * 2, NswParams())
    assert res.iterations == 0 and res.gap == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(res.x.x, 0.5)


def test_local_search_preferences_separate():
    res = continuous_local_search([0, 1], [Additive((2.0, 1.0)), Additive((1.0, 2.0))],
                                  NswParams())
    assert res.locally_optimal
    assert res.x.x[0, 0] > 0.95 and res.x.x[1, 1] > 0.95


def test_local_search_objective_never_decreases(rng):
    # ascent is enforced per accepted step; check the aggregate consequence
    for trial in range(8):
        inst = random_instance(rng, (2, 3), (4, 6))
        goods = list(range(inst.m))
        res = continuous_local_search(goods, list(inst.valuations), NswParams(seed=trial))
        uniform = np.full((inst.n, inst.m), 1.0 / inst.n)
        uniform[-1, :] = 1.0 - uniform[:-1, :].sum(axis=0)
        def objective(mat):
            total = 0.0
            for i in range(inst.n):
                v = ml.evaluate(inst.valuations[i], mat[i]).value
                total += math.log(max(v, 1e-12))
            return total
        assert objective(res.x.x) >= objective(uniform) - 1e-9


def test_local_search_empty_good_set():
    res = continuous_local_search([], [Additive(())], NswParams())
    assert res.x.m == 0 and res.gap == 0.0 and res.locally_optimal


def test_rematch_single_agent_picks_best():
    spec = Additive((5.0, 1.0, 3.0))
    sigma = rematch([0b000], [0, 2], [spec])
    assert sigma == [0]


def test_rematch_beats_every_other_matching(rng):
    for trial in range(25):
        inst = random_instance(rng, (2, 3), (4, 7))
        n, m = inst.n, inst.m
        h = list(range(n))
        bundles = []
        for i in range(n):
            mask = 0
            for j in range(n, m):
                if rng.random() < 0.4:
                    mask |= 1 << j
            bundles.append(mask)
        try:
            sigma = rematch(bundles, h, list(inst.valuations))
        except Exception:
            continue
        def product(assign):
            p = 1.0
            for i, g in enumerate(assign):
                p *= value(inst.valuations[i], bundles[i] | (1 << g))
            return p
        best = max(product(list(p)) for p in itertools.permutations(h, n))
        assert product(sigma) == pytest.approx(best, rel=1e-9)


def test_rematch_empty_bundles_reduces_to_singleton_matching():
    specs = [Additive((3.0, 1.0)), Additive((1.0, 3.0))]
    sigma = rematch([0, 0], [0, 1], specs)
    assert sigma == [0, 1]


def test_solve_single_agent():
    inst = Instance(1, 2, (Additive((3.0, 1.0)),))
    rep = solve_nsw(inst)
    assert rep.objective["nsw"] == 4.0
    assert rep.allocation == [[0, 1]]


def test_solve_two_unit_goods_is_optimal():
    inst = Instance(2, 2, (Additive((1.0, 1.0)),) * 2)
    rep = solve_nsw(inst)
    assert rep.objective["nsw"] == pytest.approx(1.0)
    opt, _ = brute_opt_nsw(inst)
    assert opt == 1.0


def test_solve_degenerate_agent_reports_zero():
    inst = Instance(2, 2, (Additive((1.0, 1.0)), Additive((0.0, 0.0))))
    rep = solve_nsw(inst)
    assert rep.objective["nsw"] == 0.0
    assert "degenerate" in rep.certificates
    assert sorted(g for row in rep.allocation for g in row) == [0, 1]


def test_solve_needs_enough_goods():
    inst = Instance(3, 2, (Additive((1.0, 1.0)),) * 3)
    with pytest.raises(InputError):
        solve_nsw(inst)


def test_solve_quality_and_dominance(rng):
    for trial in range(10):
        inst = random_instance(rng, (2, 3), (4, 7))
        if inst.n > inst.m:
            continue
        opt, _ = brute_opt_nsw(inst)
        rep = solve_nsw(inst, NswParams(seed=trial))
        assert rep.objective["nsw"] >= 0.2 * opt - 1e-9
        assert rep.objective["nsw"] <= opt + 1e-9


def test_rematch_keeps_agents_at_their_initial_match_level(rng):
    for trial in range(15):
        inst = random_instance(rng, (2, 3), (4, 7))
        rep = solve_nsw(inst, NswParams(seed=trial))
        if "degenerate" in rep.certificates:
            continue
        tau = rep.certificates["tau"]
        pre = rep.certificates["pre_rematch_bundles"]
        sigma = rep.certificates["sigma"]
        for i in range(inst.n):
            s_mask = 0
            for g in pre[i]:
                s_mask |= 1 << g
            vi = value(inst.valuations[i], s_mask | (1 << sigma[i]))
            assert vi >= value(inst.valuations[i], s_mask) - 1e-9
            assert vi >= value(inst.valuations[i], 1 << tau[i]) - 1e-9


def test_approximate_local_opt_inequality(rng):
    for trial in range(8):
        inst = random_instance(rng, (2, 3), (4, 7))
        rep = solve_nsw(inst, NswParams(seed=trial))
        if "degenerate" in rep.certificates:
            continue
        rest = rep.certificates["relaxation_goods"]
        if not rest:
            continue
        opt, opt_alloc = brute_opt_nsw(inst)
        x = FractionalAllocation.from_dict(rep.certificates["fractional_point"])
        total = 0.0
        for i in range(inst.n):
            spec = restrict(inst.valuations[i], rest)
            vi = ml.evaluate(spec, x.row(i)).value
            star = 0
            for pos, g in enumerate(rest):
                if opt_alloc.bundles[i] >> g & 1:
                    star |= 1 << pos
            total += value(spec, star) / max(vi, 1e-12)
        assert total <= 2 * inst.n + rep.certificates["stop_delta"] + 1e-6


def test_solve_is_deterministic():
    inst = generate(GenConfig("mixed", 2, 6, seed=31))
    a = solve_nsw(inst, NswParams(seed=4)).to_dict()
    b = solve_nsw(inst, NswParams(seed=4)).to_dict()
    a.pop("wall_time_ms")
    b.pop("wall_time_ms")
    assert a == b


def test_pipeline_state_partitions(rng):
    # reserved goods and relaxation goods partition the instance, and the
    # rounded bundles stay inside the relaxation goods
    for trial in range(10):
        inst = random_instance(rng, (2, 3), (4, 7))
        rep = solve_nsw(inst, NswParams(seed=trial))
        if "degenerate" in rep.certificates:
            continue
        h = rep.certificates["reserved_goods"]
        rest = rep.certificates["relaxation_goods"]
        assert sorted(h + rest) == list(range(inst.m))
        for row in rep.certificates["pre_rematch_bundles"]:
            assert set(row) <= set(rest)
        assert sorted(g for row in rep.allocation for g in row) == list(range(inst.m))


def test_solve_sampled_mode_smoke():
    inst = generate(GenConfig("additive", 2, 5, seed=13))
    params = NswParams(mode=ml.Sampled(400, seed=2), max_iters=300, seed=2)
    rep = solve_nsw(inst, params)
    assert sorted(g for row in rep.allocation for g in row) == list(range(5))
    assert rep.objective["nsw"] >= 0.0
