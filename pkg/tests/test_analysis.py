import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from disttest import analysis as an
from disttest.errors import ArgumentError
from disttest.instances import build_moment_matched
from disttest.streams import make_rng


def _laws(K, eps, n):
    p = build_moment_matched(K)
    return an.scaled_law(p, "yes", eps, n), an.scaled_law(p, "no", eps, n)


def test_count_distribution_examples():
    cd = an.count_distribution(2, {Fraction(0): Fraction(1)})
    assert cd.exact == (Fraction(1, 4), Fraction(1, 2), Fraction(1, 4))
    law = {Fraction(1, 3): Fraction(1, 4), Fraction(-1, 2): Fraction(3, 4)}
    mean = sum(v * w for v, w in law.items())
    assert an.count_distribution(1, law).exact[1] == (1 + mean) / 2
    fl = an.count_distribution(5, {0.3: 0.5, -0.2: 0.5})
    assert fl.probs.sum() == pytest.approx(1, abs=1e-12) and fl.exact is None


def test_q1_sides_are_identical():
    for K in (1, 2, 3):
        yes, no = _laws(K, 0.1, 100)
        assert an.count_distribution(1, yes).exact == an.count_distribution(1, no).exact
        assert an.count_tv(5, 1, yes, no) == 0.0


def test_count_moments_match_up_to_k():
    for K in (1, 2, 3, 4):
        yes, no = _laws(K, 0.1, 10_000)
        for q in range(1, 9):
            a, b = an.count_distribution(q, yes).exact, an.count_distribution(q, no).exact
            for k in range(1, K + 1):
                assert sum(c ** k * w for c, w in enumerate(a)) == sum(c ** k * w for c, w in enumerate(b))


def test_identical_laws_have_zero_tv():
    law = {0.1: 0.5, -0.1: 0.5}
    assert an.count_tv(3, 4, law, law) == 0.0


def test_exact_tv_below_subadditive_bound():
    for K in (1, 2):
        yes, no = _laws(K, Fraction(1, 20), 4)
        for n, q in ((2, 2), (3, 4), (4, 3), (2, 8)):
            assert an.count_tv(n, q, yes, no) <= an.count_tv(n, q, yes, no, "subadditive") + 1e-15


def test_float_and_rational_tv_agree():
    yes, no = _laws(1, Fraction(1, 10), 4)
    exact = an.count_tv(3, 3, yes, no)
    fy = {float(v): float(w) for v, w in yes.items()}
    fn = {float(v): float(w) for v, w in no.items()}
    assert an.count_tv(3, 3, fy, fn) == pytest.approx(exact, abs=1e-14)


def test_count_tv_errors():
    law = {0.1: 1.0}
    with pytest.raises(ArgumentError):
        an.count_tv(20, 8, law, {0.2: 1.0})
    with pytest.raises(ArgumentError):
        an.count_tv(2, 2, law, law, "approx")
    with pytest.raises(ArgumentError):
        an.count_distribution(2, {1.5: 1.0})


def test_good_set_examples():
    assert an.in_good_set([4, 4, 4], 8, 0.0)
    lo, hi = an.good_set_bounds(100, 100, 0.0)
    assert hi < 100
    assert not an.in_good_set([100] + [50] * 99, 100, 0.0)


def test_good_set_frequency_small_scale(rng):
    yes, no = _laws(2, Fraction(4, 27), 16)
    for law in (yes, no):
        r = an.sample_count_vectors(16, 8, law, 2000, rng)
        alpha = float(max(abs(v) for v in law))
        assert np.mean([an.in_good_set(row, 8, alpha) for row in r]) >= 0.99


def test_conditional_moment_ratio_examples():
    point = {Fraction(0): Fraction(1)}
    assert an.conditional_moment_ratio(4, 1, 1, point, point) == 1
    yes, no = _laws(1, 0.1, 100)
    r1 = an.conditional_moment_ratio(2, 0, 1, yes, no)
    assert r1 == (1 - Fraction(1, 100) * Fraction(1, 2) / 100) / (1 - Fraction(1, 100) * Fraction(15, 2) / 100)
    assert float(r1) == pytest.approx(1.00070, abs=1e-5)
    r2 = an.conditional_moment_ratio(2, 0, 1, *_laws(2, 0.1, 100))
    assert abs(r2 - 1) < abs(r1 - 1)


def test_ratio_approaches_one_in_k():
    for sigma in (1, -1):
        gaps = [abs(an.conditional_moment_ratio(8, 2, sigma, *_laws(K, 0.3, 10_000)) - 1)
                for K in (1, 2, 3, 4)]
        assert all(b <= a for a, b in zip(gaps, gaps[1:]))


def test_ratio_argument_checks():
    law = {Fraction(0): Fraction(1)}
    for q, d, s in ((3, 0, 1), (4, 3, 1), (4, 1, 0)):
        with pytest.raises(ArgumentError):
            an.conditional_moment_ratio(q, d, s, law, law)


def test_taylor_cross_check():
    yes, _ = _laws(2, 0.3, 100)
    exact = sum(w * (1 - v * v) ** 2 * (1 + v) ** 4 for v, w in yes.items())
    for degree in range(0, 9):
        est = an.taylor_integrand_mean(yes, 8, 2, 1, degree)
        assert abs(est.value - exact) <= est.error_bound
    assert an.taylor_integrand_mean(yes, 8, 2, 1, 8).value == exact


def test_likelihood_examples():
    x = np.random.default_rng(0).normal(size=(3, 20))
    assert an.likelihood_ratio_log(x, 0.0) == 0.0
    want = 16 * math.log(1 + math.expm1(-0.0625) / 4)
    assert an.likelihood_ratio_log(np.zeros((2, 16)), 0.5) == pytest.approx(want, abs=1e-15)
    assert want == pytest.approx(-0.24419, abs=5e-5)


def test_likelihood_permutation_invariant(rng):
    x = rng.standard_normal((4, 64))
    perm = rng.permutation(64)
    assert an.likelihood_ratio_log(x, 0.5) == an.likelihood_ratio_log(x[:, perm], 0.5)


def test_likelihood_domain():
    with pytest.raises(ArgumentError):
        an.likelihood_ratio_log(np.zeros((2, 1)), 0.5)
    with pytest.raises(ArgumentError):
        an.likelihood_ratio_log([[np.inf, 0.0]], 0.5)


def test_normal_generator_ks():
    y = make_rng(123).standard_normal(100_000)
    stat = stats.kstest(y, "norm").statistic
    assert stat < stats.kstwo.ppf(0.999, y.size)


def test_exp_gauss_check(rng):
    emp, ana = an.exp_gauss_check(0.25, 1_000_000, rng)
    assert ana == pytest.approx(math.exp(0.125)) and emp == pytest.approx(ana, rel=0.01)
    emp2, ana2 = an.exp_gauss_check(0.25, 1_000_000, rng, t=2.0)
    assert ana2 == pytest.approx(math.exp(0.5)) and emp2 == pytest.approx(ana2, rel=0.02)
    assert an.exp_gauss_check(0.0, 10, rng) == (1.0, 1.0)
