from hypothesis import given
from hypothesis import strategies as st

from cesplit.pairing import pair, triple, unpair, untriple

nat = st.integers(min_value=0, max_value=10_000)


@given(nat, nat)
def test_pair_roundtrip(a, b):
    assert unpair(pair(a, b)) == (a, b)


@given(st.integers(min_value=0, max_value=200_000))
def test_unpair_roundtrip(n):
    a, b = unpair(n)
    assert pair(a, b) == n


@given(nat, nat)
def test_pair_monotone(a, b):
    assert pair(a + 1, b) > pair(a, b)
    assert pair(a, b + 1) > pair(a, b)


@given(nat, nat, nat)
def test_triple_roundtrip(a, b, c):
    assert untriple(triple(a, b, c)) == (a, b, c)


def test_small_codes():
    # the zero triple really is code zero; side 0 sorts below side 1
    assert triple(0, 0, 0) == 0
    assert triple(0, 0, 0) < triple(0, 0, 1) < triple(0, 1, 0)
