import json
from fractions import Fraction

import numpy as np
import pytest

from disttest import distributions as dd
from disttest import hypercube as hc
from disttest.distributions import ExplicitDistribution, ProductDistribution, SparseDistribution
from disttest.errors import ArgumentError, EmptySubcubeError, LoadError
from disttest.hypercube import Restriction
from disttest.streams import make_rng, spawn_rngs


def test_product_pmf_examples():
    assert dd.pmf(ProductDistribution([0.5, 0.0]), (1, 1)) == pytest.approx(0.375)
    assert dd.pmf(ProductDistribution([0, 0, 0]), (1, -1, 1)) == pytest.approx(1 / 8)
    with pytest.raises(ArgumentError):
        dd.pmf(ProductDistribution([0, 0]), (1,))


def test_product_matches_explicit_table(rng):
    mu = rng.uniform(-1, 1, 5)
    p = ProductDistribution(mu)
    e = p.to_explicit()
    for k in range(32):
        x = hc.from_index(k, 5)
        want = np.prod([(1 + xi * m) / 2 for xi, m in zip(x, mu)])
        assert e.pmf(x) == pytest.approx(want, abs=1e-15)
        assert p.pmf(x) == pytest.approx(want, abs=1e-15)


def test_exact_product_table():
    p = ProductDistribution([Fraction(1, 2), Fraction(-1, 3)])
    e = p.to_explicit()
    assert list(e.exact) == [Fraction(1, 6), Fraction(1, 2), Fraction(1, 12), Fraction(1, 4)]


def test_conditional_uniform_is_uniform():
    u = ExplicitDistribution.uniform(4)
    c = dd.conditional(u, Restriction.from_string("1**0"))
    assert np.allclose(c.to_explicit().mass, 0.25)
    cp = dd.conditional(ProductDistribution([0.3, 0, 0, 0.1]), Restriction.from_string("1**0"))
    assert np.allclose(cp.to_explicit().mass, 0.25)


def test_conditional_of_explicit(rng):
    mass = rng.random(8)
    p = ExplicitDistribution(mass / mass.sum())
    rho = Restriction.from_string("*1*")
    c = p.conditional(rho)
    idx = rho.embed_indices(np.arange(4))
    assert np.allclose(c.mass, p.mass[idx] / p.mass[idx].sum())


def test_empty_subcube():
    p = ExplicitDistribution.point_mass((-1, -1))
    with pytest.raises(EmptySubcubeError):
        p.conditional(Restriction.from_string("1*"))
    with pytest.raises(EmptySubcubeError):
        SparseDistribution.point_mass((-1, -1)).conditional(Restriction.from_string("1*"))


def test_sampling_examples(rng):
    bottom = (-1,) * 6
    assert all(dd.sample(ExplicitDistribution.point_mass(bottom), rng) == bottom for _ in range(20))
    assert all(dd.sample(ProductDistribution([1.0] * 6), rng) == (1,) * 6 for _ in range(20))
    assert all(dd.sample(SparseDistribution.point_mass(bottom), rng) == bottom for _ in range(5))


def test_sampling_frequencies(rng):
    mu = np.array([0.6, -0.2, 0.0])
    p = ProductDistribution(mu)
    idx = p.sample_indices(rng, 200_000)
    freq = np.array([((idx >> k) & 1).mean() for k in range(3)])
    assert np.allclose(freq, (1 + mu) / 2, atol=0.005)
    e = p.to_explicit()
    counts = np.bincount(e.sample_indices(rng, 200_000), minlength=8) / 200_000
    assert np.allclose(counts, e.mass, atol=0.005)


def test_seed_determinism():
    p = ProductDistribution([0.2, 0.0, -0.4])
    a = p.sample_indices(make_rng(5), 100)
    b = p.sample_indices(make_rng(5), 100)
    assert (a == b).all()
    s1 = [r.random() for r in spawn_rngs(3, 4)]
    s2 = [r.random() for r in spawn_rngs(3, 4)]
    assert s1 == s2 and len(set(s1)) == 4


def test_is_monotone_examples():
    assert dd.is_monotone(ExplicitDistribution.uniform(3))
    assert not dd.is_monotone(ExplicitDistribution.point_mass((-1, -1, -1)))
    assert dd.is_monotone(ProductDistribution([0.1, 0.0, 0.7]))
    assert not dd.is_monotone(ProductDistribution([0.1, -0.01]))


def test_tv_exact_examples():
    u = ExplicitDistribution.uniform(1)
    assert dd.tv_exact(u, u) == 0
    assert dd.tv_exact(ExplicitDistribution([0.25, 0.75]), u) == pytest.approx(0.25)
    with pytest.raises(ArgumentError):
        dd.tv_exact(u, ExplicitDistribution.uniform(2))


def test_mass_validation():
    with pytest.raises(ArgumentError):
        ExplicitDistribution([0.5, 0.6])
    with pytest.raises(ArgumentError):
        ExplicitDistribution([1.2, -0.2])
    with pytest.raises(ArgumentError):
        ProductDistribution([1.5])


def test_minus_probability_paths_agree(rng):
    mu = rng.uniform(-0.9, 0.9, 4)
    p = ProductDistribution(mu)
    e = p.to_explicit()
    idx = np.arange(16)
    for c in range(1, 5):
        coords = np.full(16, c)
        assert np.allclose(e.minus_probability(idx, c), (1 - mu[c - 1]) / 2)
        assert np.allclose(e.edge_minus_probabilities(idx, coords), p.edge_minus_probabilities(idx, coords))


def test_instance_round_trip(tmp_path, rng):
    for d in (ProductDistribution([0.1, -0.3]), ExplicitDistribution.uniform(2)):
        path = tmp_path / "inst.json"
        dd.save_instance(d, path)
        back = dd.load_instance(path)
        assert np.allclose(back.to_explicit().mass, d.to_explicit().mass)
    (tmp_path / "bad.json").write_text(json.dumps({"kind": "nope"}))
    with pytest.raises(LoadError):
        dd.load_instance(tmp_path / "bad.json")
    with pytest.raises(LoadError):
        dd.load_instance(tmp_path / "missing.json")
