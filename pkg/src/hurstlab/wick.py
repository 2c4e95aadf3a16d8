"""Gaussian moments of products of centered squares.

Two routes compute the same numbers:

* :func:`isserlis_expectation` sums pairwise covariances over all perfect
  matchings of a monomial (brute force, used as oracle);
* :func:`centered_square_product_expansion` and
  :func:`mixed_product_expansion` build integer-weighted pair-partition
  expansions once per size through Gaussian integration by parts, then
  evaluate them for any covariance.

Indices are 1-based in expansions, matching the usual ``Z_1, ..., Z_n``.
"""
from __future__ import annotations

import functools
import itertools
from collections import Counter
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import BudgetError, ValidationError

SYMBOLIC_BUDGET = 8
ISSERLIS_BUDGET = 24

Pair = tuple[int, int]


@dataclass(frozen=True)
class PairPartitionExpansion:
    """Sum of ``coefficient * prod E[Z_i Z_j]`` over pair multisets.

    ``terms`` maps a sorted tuple of pairs ``(i, j)``, ``i < j``, to an integer
    coefficient; ``kind`` is ``"centered"`` (every index twice) or ``"mixed"``
    (indices 1 and 2 once, the rest twice).
    """

    n: int
    kind: str
    terms: tuple[tuple[tuple[Pair, ...], int], ...]

    def __len__(self):
        return len(self.terms)

    def evaluate(self, cov) -> float:
        cov = np.asarray(cov, dtype=float)
        if cov.shape != (self.n, self.n):
            raise ValidationError(f"covariance must be {self.n}x{self.n}")
        total = 0.0
        for pairs, coef in self.terms:
            prod = float(coef)
            for i, j in pairs:
                prod *= cov[i - 1, j - 1]
            total += prod
        return total

    def expected_counts(self) -> Counter:
        counts = Counter({i: 2 for i in range(1, self.n + 1)})
        if self.kind == "mixed":
            counts[1] = counts[2] = 1
        return counts

    def check_membership(self) -> None:
        """Raise unless every term belongs to the declared partition family."""
        want = self.expected_counts()
        for pairs, _ in self.terms:
            got = Counter(i for p in pairs for i in p)
            if got != want or any(i >= j for i, j in pairs):
                raise ValidationError(f"term {pairs} is not a valid {self.kind} partition of size {self.n}")

    def to_json(self) -> list[dict]:
        return [{"coefficient": c, "pairs": [list(p) for p in pairs]} for pairs, c in self.terms]


def _canonical(acc: dict) -> tuple:
    return tuple(sorted((pairs, c) for pairs, c in acc.items() if c != 0))


def _add(acc: dict, pairs: Iterable[Pair], coef: int) -> None:
    key = tuple(sorted(tuple(sorted(p)) for p in pairs))
    acc[key] = acc.get(key, 0) + coef


def _check_size(n: int, budget: int) -> None:
    if n < 2:
        raise ValidationError(f"expansion size must be >= 2, got {n}")
    if n > budget:
        raise BudgetError(f"size {n} exceeds the symbolic budget {budget}; use Monte Carlo instead")


@functools.lru_cache(maxsize=None)
def _mixed_terms(n: int) -> tuple:
    if n == 2:
        return (((1, 2),), 1),
    acc: dict = {}
    prev = _mixed_terms(n - 1)
    # derivative hitting Z_m^2: relabel rank-(n-1) mixed with Z~1 = Z_2, Z~2 = Z_m
    for m in range(3, n + 1):
        rest = [k for k in range(3, n + 1) if k != m]
        relabel = {1: 2, 2: m, **{i + 3: k for i, k in enumerate(rest)}}
        for pairs, coef in prev:
            _add(acc, [(1, m)] + [(relabel[i], relabel[j]) for i, j in pairs], 2 * coef)
    # derivative hitting Z_2: E[Z1 Z2] times the centered product over 3..n
    if n - 2 >= 2:
        shift = {i: i + 2 for i in range(1, n - 1)}
        for pairs, coef in _centered_terms(n - 2):
            _add(acc, [(1, 2)] + [(shift[i], shift[j]) for i, j in pairs], coef)
    return _canonical(acc)


@functools.lru_cache(maxsize=None)
def _centered_terms(n: int) -> tuple:
    acc: dict = {}
    for m in range(2, n + 1):
        rest = [k for k in range(2, n + 1) if k != m]
        relabel = {1: 1, 2: m, **{i + 3: k for i, k in enumerate(rest)}}
        for pairs, coef in _mixed_terms(n):
            _add(acc, [(1, m)] + [(relabel[i], relabel[j]) for i, j in pairs], 2 * coef)
    return _canonical(acc)


def centered_square_product_expansion(n: int, budget: int = SYMBOLIC_BUDGET) -> PairPartitionExpansion:
    """Expansion of ``E prod_{i<=n} (Z_i^2 - E Z_i^2)`` for equal-variance ``Z``."""
    _check_size(n, budget)
    return PairPartitionExpansion(n, "centered", _centered_terms(n))


def mixed_product_expansion(n: int, budget: int = SYMBOLIC_BUDGET) -> PairPartitionExpansion:
    """Expansion of ``E Z_1 Z_2 prod_{3<=i<=n} (Z_i^2 - E Z_i^2)``."""
    _check_size(n, budget)
    return PairPartitionExpansion(n, "mixed", _mixed_terms(n))


# ---------------------------------------------------------------------------
# brute-force oracle


def isserlis_expectation(monomial: Sequence[int], cov, budget: int = ISSERLIS_BUDGET) -> float:
    """``E prod_i Z_i^{e_i}`` summed over perfect matchings of the factors.

    Parameters
    ----------
    monomial : sequence of int
        Exponent ``e_i`` of each coordinate (length = dimension of ``cov``).
    cov : array_like
        Covariance matrix of the centered Gaussian vector.
    """
    cov = np.asarray(cov, dtype=float)
    exps = tuple(int(e) for e in monomial)
    if len(exps) != cov.shape[0] or any(e < 0 for e in exps):
        raise ValidationError("monomial must list one non-negative exponent per coordinate")
    degree = sum(exps)
    if degree % 2:
        return 0.0
    if degree > budget:
        raise BudgetError(f"degree {degree} exceeds the Isserlis budget {budget}")

    @functools.lru_cache(maxsize=None)
    def moment(e: tuple) -> float:
        i = next((k for k, v in enumerate(e) if v), None)
        if i is None:
            return 1.0
        base = list(e)
        base[i] -= 1
        total = 0.0
        for j, mult in enumerate(base):
            if mult == 0:
                continue
            nxt = base.copy()
            nxt[j] -= 1
            total += mult * cov[i, j] * moment(tuple(nxt))
        return total

    return moment(exps)


def centered_product_oracle(cov, mixed: bool = False) -> float:
    """Inclusion-exclusion over Isserlis moments of the centered (or mixed) product."""
    cov = np.asarray(cov, dtype=float)
    n = cov.shape[0]
    first = 2 if mixed else 0
    free = range(first, n)
    total = 0.0
    for r in range(len(free) + 1):
        for subset in itertools.combinations(free, r):
            exps = [0] * n
            if mixed:
                exps[0] = exps[1] = 1
            weight = 1.0
            for k in free:
                if k in subset:
                    exps[k] = 2
                else:
                    weight *= -cov[k, k]
            total += weight * isserlis_expectation(exps, cov)
    return total


# ---------------------------------------------------------------------------
# derangement view


def partition_to_cycles(pairs: Sequence[Pair]) -> list[list[int]]:
    """Cycle decomposition of the derangement read off a partition in ``P_n``.

    Pairs are sorted lexicographically; starting from the smallest unused
    number the walk follows, at each step, the other unused pair holding the
    current number, until it closes. Each cycle lists its elements in visiting
    order.
    """
    pairs = [tuple(int(x) for x in p) for p in pairs]
    if not pairs or any(len(p) != 2 or p[0] >= p[1] for p in pairs):
        raise ValidationError("pairs must be (i, j) with i < j")
    counts = Counter(i for p in pairs for i in p)
    n = len(pairs)
    if set(counts) != set(range(1, n + 1)) or any(c != 2 for c in counts.values()):
        raise ValidationError("every index 1..n must appear in exactly two pairs")
    pairs.sort()
    used = [False] * n
    seen: set[int] = set()
    cycles = []
    for start in (x for p in pairs for x in p):
        if start in seen:
            continue
        cycle = [start]
        seen.add(start)
        current = start
        while True:
            k = next(k for k, p in enumerate(pairs) if not used[k] and current in p)
            used[k] = True
            i, j = pairs[k]
            current = j if i == current else i
            if current == start:
                break
            cycle.append(current)
            seen.add(current)
        cycles.append(cycle)
    return cycles


def random_equal_diagonal_cov(n: int, rng: np.random.Generator, variance: float = 1.0) -> np.ndarray:
    """Random PSD matrix with constant diagonal (a scaled correlation matrix)."""
    a = rng.standard_normal((n, n + rng.integers(0, 3)))
    c = a @ a.T
    d = np.sqrt(np.diag(c))
    return variance * c / np.outer(d, d)
