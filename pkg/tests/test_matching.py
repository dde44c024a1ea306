import itertools
import math

import numpy as np
import pytest

from fairround.errors import InfeasibleError, InputError
from fairround.matching import NEG_INF, max_weight_matching


def brute_best(w):
    """Independent oracle: enumerate every injective assignment."""
    n, k = w.shape
    best = -math.inf
    for cols in itertools.permutations(range(k), n):
        total = sum(w[i, c] for i, c in enumerate(cols))
        best = max(best, total)
    return best


def test_single_cell():
    assert max_weight_matching([[5.0]]) == ([0], 5.0)


def test_two_by_two_example():
    # matchings: 1+4=5 versus 2+2=4
    assign, total = max_weight_matching([[1.0, 2.0], [2.0, 4.0]])
    assert assign == [0, 1] and total == 5.0


def test_all_forbidden_row_is_infeasible():
    with pytest.raises(InfeasibleError):
        max_weight_matching([[NEG_INF, NEG_INF], [1.0, 2.0]])


def test_more_agents_than_columns_is_infeasible():
    with pytest.raises(InfeasibleError):
        max_weight_matching([[1.0], [2.0]])


def test_forbidden_pairs_are_avoided():
    assign, total = max_weight_matching([[NEG_INF, 3.0], [5.0, 10.0]])
    assert assign == [1, 0] and total == 8.0


def test_optimal_against_bruteforce(rng):
    for trial in range(40):
        n = int(rng.integers(1, 6))
        k = int(rng.integers(n, 8))
        w = rng.normal(size=(n, k))
        w[rng.random(size=(n, k)) < 0.15] = NEG_INF
        try:
            assign, total = max_weight_matching(w)
        except InfeasibleError:
            assert brute_best(w) == -math.inf
            continue
        assert total == pytest.approx(brute_best(w), abs=1e-9)
        assert len(set(assign)) == n
        assert total == pytest.approx(sum(w[i, c] for i, c in enumerate(assign)), abs=1e-9)


def test_lexicographic_tie_break():
    assign, total = max_weight_matching([[1.0, 1.0], [1.0, 1.0]])
    assert assign == [0, 1] and total == 2.0


def test_column_permutation_consistency(rng):
    w = rng.normal(size=(3, 5))
    perm = rng.permutation(5)
    a1, t1 = max_weight_matching(w)
    a2, t2 = max_weight_matching(w[:, perm])
    assert t1 == pytest.approx(t2, abs=1e-9)
    assert [int(perm[c]) for c in a2] and t2 == pytest.approx(
        sum(w[i, perm[c]] for i, c in enumerate(a2)), abs=1e-9)


def test_rejects_nan_and_plus_inf():
    with pytest.raises(InputError):
        max_weight_matching([[float("nan")]])
    with pytest.raises(InputError):
        max_weight_matching([[float("inf")]])
