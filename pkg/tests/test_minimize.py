import itertools

import pytest
from hypothesis import given, settings, strategies as st

from cartwheels.minimize import literals_of, minimum_cover, prime_implicants, primes_by_consensus


def covered(imps, n):
    return {m for m in range(1 << n) if any(m & c == v for v, c in imps)}


def cost(imps):
    return sum(c.bit_count() for _, c in imps), len(imps)


def test_xor_has_two_primes():
    # minterms 01 and 10 of two variables
    assert sorted(prime_implicants(2, [1, 2])) == [(1, 3), (2, 3)]
    assert cost(minimum_cover(2, [1, 2])) == (4, 2)


def test_absorption():
    # x0 & x1 | x0 & !x1 == x0
    assert minimum_cover(2, [1, 3]) == [(1, 1)]


def test_literals_of():
    assert literals_of((0b001, 0b101)) == ((0, False), (2, True))


def test_variable_limit():
    with pytest.raises(ValueError):
        minimum_cover(17, [0])


def test_empty_function():
    assert minimum_cover(3, []) == []


@st.composite
def functions(draw, max_vars=4):
    n = draw(st.integers(1, max_vars))
    terms = draw(st.sets(st.integers(0, (1 << n) - 1), min_size=1))
    return n, sorted(terms)


@given(functions())
def test_consensus_agrees_with_tabular(fn):
    n, terms = fn
    full = (1 << n) - 1
    assert sorted(primes_by_consensus([(m, full) for m in terms])) == sorted(prime_implicants(n, terms))


@settings(max_examples=150)
@given(functions())
def test_cover_is_exact_and_minimal(fn):
    n, terms = fn
    cover = minimum_cover(n, terms)
    assert covered(cover, n) == set(terms)
    primes = prime_implicants(n, terms)
    best = min(
        cost(sel)
        for k in range(1, len(primes) + 1)
        for sel in itertools.combinations(primes, k)
        if covered(sel, n) == set(terms)
    )
    assert cost(cover) == best


def test_cover_is_deterministic_on_ties():
    # x0 ^ x1 ^ x2 style ties resolve the same way every time
    terms = [1, 2, 4, 7]
    assert minimum_cover(3, terms) == minimum_cover(3, list(reversed(terms)))
