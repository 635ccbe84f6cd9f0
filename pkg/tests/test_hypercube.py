import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from disttest import hypercube as hc
from disttest.errors import ArgumentError
from disttest.hypercube import Restriction, STAR


def points(n_min=1, n_max=8):
    return st.integers(n_min, n_max).flatmap(
        lambda n: st.tuples(*[st.sampled_from((-1, 1))] * n))


def test_flip_examples():
    assert hc.flip((-1, 1, -1), 2) == (-1, -1, -1)
    assert hc.flip((1,), 1) == (-1,)


@given(points(), st.data())
def test_flip_is_an_involution(x, data):
    i = data.draw(st.integers(1, len(x)))
    y = hc.flip(x, i)
    assert hc.flip(y, i) == x
    assert sum(a != b for a, b in zip(x, y)) == 1


def test_flip_rejects_bad_coordinate():
    with pytest.raises(ArgumentError):
        hc.flip((1, 1), 3)
    with pytest.raises(ArgumentError):
        hc.flip((1, 1), 0)


def test_leq_examples():
    assert hc.leq((-1, -1), (1, -1))
    assert not hc.leq((1, -1), (-1, 1))
    assert not hc.leq((-1, 1), (1, -1))
    with pytest.raises(ArgumentError):
        hc.leq((1,), (1, 1))


@given(points())
def test_leq_reflexive(x):
    assert hc.leq(x, x)


def test_index_round_trip_up_to_16():
    for n in (1, 2, 5, 16):
        for k in range(1 << n):
            assert hc.index(hc.from_index(k, n)) == k


def test_index_encoding_is_bit_i_minus_1():
    assert hc.index((-1, -1, -1)) == 0
    assert hc.index((1, -1, -1)) == 1
    assert hc.index((-1, -1, 1)) == 4
    assert (hc.sign_table(3)[5] == np.array([1, -1, 1])).all()


def test_point_strings():
    assert hc.to_string((1, -1, 1)) == "101"
    assert hc.from_string("011") == (-1, 1, 1)
    with pytest.raises(ArgumentError):
        hc.from_string("0a1")


def test_restriction_basics():
    rho = Restriction.from_string("1*0*")
    assert str(rho) == "1*0*"
    assert rho.stars == (2, 4) and rho.width == 2
    assert rho.complete((-1, 1)) == (1, -1, -1, 1)
    assert rho.contains((1, 1, -1, -1))
    assert not rho.contains((-1, 1, -1, -1))
    assert rho.restrict((1, 1, -1, -1)) == (1, -1)
    full = [hc.index(rho.complete(c)) for c in rho.completions()]
    assert full == rho.embed_indices(np.arange(4)).tolist()
    assert Restriction.edge((1, -1, 1), 2).pattern == (1, STAR, 1)
    assert Restriction.all_stars(3).width == 3
    with pytest.raises(ArgumentError):
        Restriction((1, 2))


def _dbtk_chains(m):
    """Recursive de Bruijn-Tengbergen-Kruyswijk construction (index lists)."""
    chains = [[0, 1]]
    for k in range(1, m):
        bit = 1 << k
        new = []
        for c in chains:
            new.append(c + [c[-1] | bit])
            if len(c) > 1:
                new.append([x | bit for x in c[:-1]])
        chains = new
    return chains


@pytest.mark.parametrize("m", range(1, 11))
def test_chain_matching_agrees_with_recursive_decomposition(m):
    cm = hc.chain_matching(m)
    expected = {}
    for chain in _dbtk_chains(m):
        for a, b in zip(chain, reversed(chain)):
            expected[a] = b
    assert {k: int(v) for k, v in enumerate(cm.sigma)} == expected
    assert sorted(map(sorted, cm.chains())) == sorted(map(sorted, _dbtk_chains(m)))


@pytest.mark.parametrize("m", [1, 2, 3, 6, 9, 12])
def test_chain_matching_invariants(m):
    cm = hc.chain_matching(m)
    idx = np.arange(1 << m)
    levels = hc.popcount(idx)
    assert (cm.sigma[cm.sigma] == idx).all()
    assert (hc.popcount(cm.sigma) == m - levels).all()
    low = idx[2 * levels <= m]
    assert ((low & cm.sigma[low]) == low).all()   # z below sigma(z)


def test_chain_matching_examples():
    assert hc.chain_matching(1)((-1,)) == (1,)
    cm = hc.chain_matching(2)
    assert cm((-1, -1)) == (1, 1)
    assert cm((1, -1)) == (1, -1) and cm((-1, 1)) == (-1, 1)


def test_chain_matching_range():
    for m in (0, 25):
        with pytest.raises(ArgumentError):
            hc.chain_matching(m)
