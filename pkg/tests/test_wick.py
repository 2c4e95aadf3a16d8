from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, strategies as st

from hurstlab.errors import BudgetError, ValidationError
from hurstlab.wick import (centered_product_oracle, centered_square_product_expansion,
                           isserlis_expectation, mixed_product_expansion, partition_to_cycles,
                           random_equal_diagonal_cov)

from oracles import centered_squares_brute, isserlis_brute


def test_isserlis_examples():
    rho, s2 = 0.3, 1.7
    cov = np.array([[s2, rho], [rho, s2]])
    assert isserlis_expectation([1, 1], cov) == pytest.approx(rho)
    assert isserlis_expectation([2, 2], cov) == pytest.approx(s2**2 + 2 * rho**2)
    assert isserlis_expectation([6], np.eye(1)) == 15.0
    assert isserlis_expectation([3], np.eye(1)) == 0.0
    with pytest.raises(BudgetError):
        isserlis_expectation([26], np.eye(1))


@given(st.lists(st.integers(0, 3), min_size=2, max_size=4), st.integers(0, 10**6))
def test_isserlis_matches_brute_matchings(exps, seed):
    cov = random_equal_diagonal_cov(len(exps), np.random.default_rng(seed), 1.3)
    factors = [i for i, e in enumerate(exps) for _ in range(e)]
    assert isserlis_expectation(exps, cov) == pytest.approx(isserlis_brute(factors, cov), rel=1e-12, abs=1e-12)


def test_centered_n2_is_paper_value():
    e = centered_square_product_expansion(2)
    assert e.to_json() == [{"coefficient": 2, "pairs": [[1, 2], [1, 2]]}]
    cov = np.array([[1.0, 0.4], [0.4, 1.0]])
    assert e.evaluate(cov) == 2 * 0.4**2


def test_mixed_n2_single_term():
    e = mixed_product_expansion(2)
    assert e.to_json() == [{"coefficient": 1, "pairs": [[1, 2]]}]


def test_centered_identity_values():
    # all Z equal with unit variance: E (Z^2 - 1)^n
    ones = lambda n: np.ones((n, n))  # noqa: E731
    assert centered_square_product_expansion(3).evaluate(ones(3)) == 8
    assert centered_square_product_expansion(4).evaluate(ones(4)) == 60


def test_term_counts_frozen():
    assert [len(centered_square_product_expansion(n)) for n in range(2, 9)] == [1, 1, 6, 22, 130, 822, 6202][: 7]
    assert [len(mixed_product_expansion(n)) for n in range(2, 9)] == [1, 1, 3, 10, 46, 252, 1642][: 7]


@pytest.mark.parametrize("n", range(2, 9))
def test_membership(n):
    centered_square_product_expansion(n).check_membership()
    mixed_product_expansion(n).check_membership()


def test_budget():
    with pytest.raises(BudgetError):
        centered_square_product_expansion(9)
    assert len(centered_square_product_expansion(9, budget=9)) > 0


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_expansions_match_brute_force(n):
    gen = np.random.default_rng(100 + n)
    for _ in range(10):
        cov = random_equal_diagonal_cov(n, gen, gen.uniform(0.5, 2))
        for mixed, fn in ((False, centered_square_product_expansion), (True, mixed_product_expansion)):
            want = centered_squares_brute(cov, mixed)
            assert fn(n).evaluate(cov) == pytest.approx(want, rel=1e-10, abs=1e-12)
            assert centered_product_oracle(cov, mixed) == pytest.approx(want, rel=1e-10, abs=1e-12)


def test_mixed_independent_first_coordinate_is_zero():
    gen = np.random.default_rng(4)
    cov = random_equal_diagonal_cov(4, gen)
    cov[0, 1:] = cov[1:, 0] = 0.0
    assert mixed_product_expansion(4).evaluate(cov) == 0.0


def test_coefficients_independent_of_covariance():
    a = centered_square_product_expansion(4)
    b = centered_square_product_expansion(4)
    assert a is b or a.terms == b.terms


def test_random_cov_is_equal_diagonal_psd():
    c = random_equal_diagonal_cov(5, np.random.default_rng(0), 2.0)
    assert np.allclose(np.diag(c), 2.0)
    assert np.linalg.eigvalsh(c).min() > -1e-12


def test_cycles_examples():
    assert partition_to_cycles([(1, 2), (1, 2)]) == [[1, 2]]
    cyc = partition_to_cycles([(1, 2), (2, 3), (1, 3)])
    assert len(cyc) == 1 and sorted(cyc[0]) == [1, 2, 3]
    cyc = partition_to_cycles([(1, 2), (1, 2), (3, 4), (3, 4)])
    assert [sorted(c) for c in cyc] == [[1, 2], [3, 4]]


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_cycles_cover_every_index_once(n):
    for pairs, _ in centered_square_product_expansion(n).terms:
        cycles = partition_to_cycles(pairs)
        flat = sorted(x for c in cycles for x in c)
        assert flat == list(range(1, n + 1))
        assert all(len(c) >= 2 for c in cycles)


def test_cycles_reject_malformed():
    with pytest.raises(ValidationError):
        partition_to_cycles([(1, 2), (1, 3)])
    with pytest.raises(ValidationError):
        partition_to_cycles([(2, 1), (1, 2)])
