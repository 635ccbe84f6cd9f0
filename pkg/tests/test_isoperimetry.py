import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from disttest import hypercube as hc
from disttest import isoperimetry as iso
from disttest.distributions import ExplicitDistribution
from disttest.errors import ArgumentError, LoadError
from disttest.isoperimetry import RealFunction

GRAD_EXAMPLE = RealFunction([0.5, 0.2, 0.6, 1.0])  # index order: (-,-), (+,-), (-,+), (+,+)


def tables(n_max=4):
    return st.integers(1, n_max).flatmap(
        lambda n: st.lists(st.floats(0, 1), min_size=1 << n, max_size=1 << n))


def test_directed_gradient_examples():
    f = RealFunction([1.0, 0.0])
    assert iso.directed_gradient(f, (-1,)).tolist() == [1.0]
    assert iso.directed_gradient(f, (1,)).tolist() == [0.0]
    assert np.allclose(iso.directed_gradient(GRAD_EXAMPLE, (-1, -1)), [0.3, 0.0])


def test_gradient_table_matches_pointwise(rng):
    f = RealFunction(rng.random(16))
    table = iso.gradient_table(f)
    for k in range(16):
        assert np.array_equal(table[k], iso.directed_gradient(f, hc.from_index(k, 4)))


def test_threshold_examples():
    assert iso.threshold(GRAD_EXAMPLE, 0.4).values.tolist() == [1, 0, 1, 1]
    assert iso.threshold(GRAD_EXAMPLE, 0.0).values.tolist() == [1, 1, 1, 1]


def test_dist0_examples():
    assert iso.dist0_boolean(RealFunction([0, 1], boolean=True)) == 0
    assert iso.dist0_boolean(RealFunction([1, 0], boolean=True)) == 0.5
    assert iso.dist0_boolean(RealFunction([1, 0, 0, 0], boolean=True)) == 0.25
    with pytest.raises(ArgumentError):
        iso.dist0_boolean(RealFunction([0.5, 0.0]))


def test_dist0_matches_brute_force_exhaustively():
    for n in (1, 2, 3):
        for code in range(1 << (1 << n)):
            f = RealFunction.boolean_from_bits(code, n)
            d, closure = iso.dist0_boolean(f, return_closure=True)
            assert d == iso.dist0_brute_force(f)
            assert np.mean(closure != f.values.astype(bool)) == d
            low, high = iso._up_edges(n)
            assert not np.any(closure[low] & ~closure[high])   # up-closed


def test_dist0_random_n4_against_brute_force(rng):
    for code in rng.integers(0, 1 << 16, 60):
        f = RealFunction.boolean_from_bits(int(code), 4)
        assert iso.dist0_boolean(f) == iso.dist0_brute_force(f)


def test_monotone_boolean_counts():
    # Dedekind numbers
    assert [len(iso.monotone_boolean_functions(n)) for n in (1, 2, 3)] == [3, 6, 20]


def test_dist1_examples():
    assert iso.dist1_real(RealFunction([0.3, 0.7])) == 0.0
    assert iso.dist1_real(RealFunction([0.7, 0.3])) == pytest.approx(0.2)
    assert iso.dist1_lp(RealFunction([0.7, 0.3])) == pytest.approx(0.2)


@settings(max_examples=40, deadline=None)
@given(tables(3))
def test_dist1_threshold_sum_equals_lp(values):
    f = RealFunction(values)
    assert abs(iso.dist1_real(f) - iso.dist1_lp(f)) <= 1e-7


def test_dist_tv_examples():
    assert iso.dist_tv_monotone(ExplicitDistribution.uniform(3)) == pytest.approx(0, abs=1e-12)
    value, q = iso.dist_tv_monotone(ExplicitDistribution([0.75, 0.25]), return_q=True)
    assert value == pytest.approx(0.25) and np.allclose(q, [0.5, 0.5])
    assert iso.dist_tv_monotone(ExplicitDistribution.point_mass((-1, -1))) == pytest.approx(0.75)
    # point mass at bottom: distance 1 - 2^-n
    assert iso.dist_tv_monotone(ExplicitDistribution.point_mass((-1,) * 4)) == pytest.approx(1 - 1 / 16)


def test_dist_tv_grid_oracle_n1():
    for p0 in np.linspace(0, 1, 11):
        grid = np.linspace(0, 0.5, 2001)   # monotone q has q(-1) <= 1/2
        brute = np.min(np.abs(p0 - grid))
        assert iso.dist_tv_monotone(ExplicitDistribution([p0, 1 - p0])) == pytest.approx(brute, abs=1e-3)


def test_dist_tv_optimizer_is_monotone_distribution(rng):
    mass = rng.random(8)
    p = ExplicitDistribution(mass / mass.sum())
    value, q = iso.dist_tv_monotone(p, return_q=True)
    assert q.sum() == pytest.approx(1) and (q >= -1e-12).all()
    low, high = iso._up_edges(3)
    assert (q[low] <= q[high] + 1e-12).all()
    assert 0.5 * np.abs(p.mass - q).sum() == pytest.approx(value, abs=1e-9)


def test_talagrand_examples():
    anti = RealFunction([1, 0], boolean=True)
    assert iso.talagrand_functional(anti, 1) == 0.5 == iso.talagrand_functional(anti, 2)
    mono = RealFunction([0, 0.2, 0.5, 0.9])
    assert iso.talagrand_functional(mono, 1) == 0 == iso.talagrand_functional(mono, 2)
    p = ExplicitDistribution(np.array([0.4, 0.1, 0.3, 0.2]))
    f = RealFunction.from_distribution(p)
    total = sum(np.linalg.norm(iso.directed_gradient(f, hc.from_index(k, 2))) for k in range(4))
    assert total == pytest.approx(4 * iso.talagrand_functional(f, 2))
    with pytest.raises(ArgumentError):
        iso.talagrand_functional(mono, 3)


def test_per_point_threshold_norm_examples():
    assert iso.per_point_threshold_norm(RealFunction([0.1, 0.5]), (-1,)) == 0
    assert iso.per_point_threshold_norm(RealFunction([0.7, 0.4]), (-1,)) == pytest.approx(0.3)
    # drops (0.2, 0.1) at the bottom point of n = 2
    f = RealFunction([0.5, 0.3, 0.4, 0.9])
    want = 0.2 + 0.1 * (math.sqrt(2) - 1)
    assert iso.per_point_threshold_norm(f, (-1, -1)) == pytest.approx(want, abs=1e-15)
    assert iso.threshold_integral_norm(f, (-1, -1)) == pytest.approx(want, abs=1e-15)


def test_reconstruction_is_exact(rng):
    f = RealFunction(rng.random(8))
    from fractions import Fraction
    assert iso.reconstruct_from_thresholds(f) == [Fraction(v) for v in f.values]


def test_threshold_decomposition_needs_unit_range():
    with pytest.raises(ArgumentError):
        iso.threshold_decomposition(RealFunction([1.5, 0.0]))


@settings(max_examples=40, deadline=None)
@given(tables(3), st.floats(0.1, 10), st.floats(-5, 5))
def test_identities_hold(values, alpha, beta):
    worst = iso.identity_violations(RealFunction(values), alpha, beta)
    for name, v in worst.items():
        assert v <= iso.IDENTITY_TOLERANCES[name], name


def test_cauchy_schwarz_factor():
    assert iso.cauchy_schwarz_factor(0) == 0
    assert iso.cauchy_schwarz_factor(1) == 1
    for d in range(1, 30):
        assert iso.cauchy_schwarz_factor(d) ** 2 <= sum(1 / i for i in range(1, d + 1)) + 1e-12


def test_distribution_vs_function_distance(rng):
    for n in (1, 2, 3):
        for _ in range(5):
            mass = rng.random(1 << n) ** 3
            p = ExplicitDistribution(mass / mass.sum())
            bound = 2 * (1 << n) * iso.dist1_real(RealFunction.from_distribution(p))
            assert iso.dist_tv_monotone(p) <= bound + 1e-7


def test_function_serialization(tmp_path):
    f = RealFunction([0, 1, 1, 1], boolean=True)
    iso.save_function(f, tmp_path / "f.json")
    g = iso.load_function(tmp_path / "f.json")
    assert g.boolean and np.array_equal(g.values, f.values)
    (tmp_path / "bad.json").write_text('{"kind": "function", "n": 3, "values": [0, 1]}')
    with pytest.raises(LoadError):
        iso.load_function(tmp_path / "bad.json")


def test_value_table_validation():
    with pytest.raises(ArgumentError):
        RealFunction([0.0, 1.0, 2.0])
    with pytest.raises(ArgumentError):
        RealFunction([0.0, float("nan")])
    with pytest.raises(ArgumentError):
        RealFunction([0.0, 0.5], boolean=True)
