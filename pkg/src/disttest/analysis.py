"""Indistinguishability computations for the lower-bound ensembles.

With q samples from a product distribution, the per-coordinate counts of +1
outcomes are sufficient statistics. Under a random mean law D each count is a
mixture of binomials, and the count vector is a product of n iid copies.
Mean laws are dicts {mu: weight}; with Fraction entries every quantity here is
computed exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as iproduct

import numpy as np

from .errors import ArgumentError
from .instances import MomentMatchedPair
from .streams import RandomStream

MAX_COUNT_Q = 64
MAX_EXACT_CELLS = 1 << 24
MAX_RATIONAL_CELLS = 1 << 16


@dataclass(frozen=True)
class CountDistribution:
    q: int
    probs: np.ndarray
    exact: tuple | None = None


def _is_exact(law: dict) -> bool:
    return all(isinstance(v, (Fraction, int)) and isinstance(w, (Fraction, int))
               for v, w in law.items())


def scaled_law(pair: MomentMatchedPair, kind: str, eps, n: int) -> dict:
    """The law of mu = eps * a / sqrt(n), a from the pair's yes or no side.

    The scale is an exact rational: eps is read from its decimal repr and
    sqrt(n) is exact for perfect squares, otherwise the float sqrt(n) as a
    rational. Both sides share the scale, so matched moments stay exactly
    matched.
    """
    root = math.isqrt(n)
    sq = Fraction(root) if root * root == n else Fraction(math.sqrt(n))
    s = Fraction(str(eps)) / sq
    return {s * v: w for v, w in pair.law(kind).items()}


def _check_law(law: dict) -> None:
    if not law:
        raise ArgumentError("mean law is empty")
    for v, w in law.items():
        if not -1 <= v <= 1:
            raise ArgumentError(f"mean {float(v)} lies outside [-1, 1]")
        if w < 0:
            raise ArgumentError("mean-law weights must be nonnegative")


def count_distribution(q: int, mean_law: dict) -> CountDistribution:
    """Pr[r = c] = E_mu[ C(q,c) ((1+mu)/2)^c ((1-mu)/2)^(q-c) ]."""
    if not 0 <= q <= MAX_COUNT_Q:
        raise ArgumentError(f"q must lie in [0, {MAX_COUNT_Q}]")
    _check_law(mean_law)
    if _is_exact(mean_law):
        table = [Fraction(0)] * (q + 1)
        total = sum(mean_law.values())
        for mu, w in mean_law.items():
            up, down = (1 + Fraction(mu)) / 2, (1 - Fraction(mu)) / 2
            for c in range(q + 1):
                table[c] += w * math.comb(q, c) * up ** c * down ** (q - c) / total
        return CountDistribution(q, np.array([float(v) for v in table]), tuple(table))
    mus = np.array([float(v) for v in mean_law], dtype=np.float64)
    ws = np.array([float(w) for w in mean_law.values()])
    ws = ws / ws.sum()
    c = np.arange(q + 1)
    comb = np.array([math.comb(q, k) for k in c], dtype=np.float64)
    up, down = (1 + mus[:, None]) / 2, (1 - mus[:, None]) / 2
    table = ws @ (comb * up ** c * down ** (q - c))
    return CountDistribution(q, table)


def _tv(a, b):
    return sum(abs(x - y) for x, y in zip(a, b)) / 2


def count_tv(n: int, q: int, yes_law: dict, no_law: dict, mode: str = "exact") -> float:
    """Total variation between the count-vector laws of the two sides.

    ``exact`` enumerates all (q+1)^n count vectors; ``subadditive`` returns
    min(1, n * per-coordinate TV), an upper bound.
    """
    if mode not in ("exact", "subadditive"):
        raise ArgumentError(f"mode must be 'exact' or 'subadditive', not {mode!r}")
    y, m = count_distribution(q, yes_law), count_distribution(q, no_law)
    if y.exact is not None and m.exact is not None and y.exact == m.exact:
        return 0.0
    if mode == "subadditive":
        one = _tv(y.exact, m.exact) if y.exact is not None and m.exact is not None \
            else _tv(y.probs, m.probs)
        return float(min(1, n * one))
    cells = (q + 1) ** n
    if cells > MAX_EXACT_CELLS:
        raise ArgumentError(f"(q+1)^n = {cells} exceeds the exact-mode cap {MAX_EXACT_CELLS}")
    if y.exact is not None and m.exact is not None and cells <= MAX_RATIONAL_CELLS:
        total = Fraction(0)
        for cell in iproduct(range(q + 1), repeat=n):
            total += abs(math.prod((y.exact[c] for c in cell), start=Fraction(1))
                         - math.prod((m.exact[c] for c in cell), start=Fraction(1)))
        return float(total / 2)
    py, pn = np.ones(1), np.ones(1)
    for _ in range(n):
        py = np.outer(py, y.probs).ravel()
        pn = np.outer(pn, m.probs).ravel()
    return float(np.abs(py - pn).sum() / 2)


# -- good set ------------------------------------------------------------------

def good_set_bounds(n: int, q: int, alpha: float) -> tuple[float, float]:
    slack = q * alpha / 2 + math.sqrt(q) * math.log(max(n, math.e))
    return q / 2 - slack, q / 2 + slack


def in_good_set(r, q: int, alpha: float) -> bool:
    """Every count within q/2 +- (q alpha/2 + sqrt(q) ln max(n, e)), n = len(r)."""
    r = np.asarray(r)
    lo, hi = good_set_bounds(r.size, q, alpha)
    return bool(np.all((r >= lo) & (r <= hi)))


def sample_count_vectors(n: int, q: int, mean_law: dict, trials: int,
                         rng: RandomStream) -> np.ndarray:
    """``trials`` count vectors: fresh means mu_i ~ D per trial, then
    r_i ~ Bin(q, (1 + mu_i)/2)."""
    _check_law(mean_law)
    mus = np.array([float(v) for v in mean_law])
    ws = np.array([float(w) for w in mean_law.values()])
    picks = rng.choice(mus.size, size=(trials, n), p=ws / ws.sum())
    return rng.binomial(q, (1 + mus[picks]) / 2)


# -- conditional moment ratio -------------------------------------------------

def _integrand_coeffs(q: int, d: int, sigma: int) -> list[Fraction]:
    """Coefficients in mu of (1 - mu^2)^(q/2 - d) (1 + sigma mu)^(2d)."""
    poly = [Fraction(1)]
    factors = [[Fraction(1), Fraction(0), Fraction(-1)]] * (q // 2 - d) \
        + [[Fraction(1), Fraction(sigma)]] * (2 * d)
    for f in factors:
        out = [Fraction(0)] * (len(poly) + len(f) - 1)
        for i, a in enumerate(poly):
            for j, b in enumerate(f):
                out[i + j] += a * b
        poly = out
    return poly


def _check_ratio_args(q: int, d: int, sigma: int) -> None:
    if q % 2:
        raise ArgumentError(f"q must be even, got {q}")
    if not 0 <= d <= q // 2:
        raise ArgumentError(f"need 0 <= d <= q/2, got d = {d}")
    if sigma not in (-1, 1):
        raise ArgumentError("sigma must be -1 or +1")


def _integrand_mean(law: dict, q: int, d: int, sigma: int):
    total = sum(law.values())
    return sum((w * (1 - v * v) ** (q // 2 - d) * (1 + sigma * v) ** (2 * d)
                for v, w in law.items()), 0 * total) / total


def conditional_moment_ratio(q: int, d: int, sigma: int, yes_law: dict, no_law: dict):
    """E_yes[(1-mu^2)^(q/2-d) (1+sigma mu)^(2d)] / E_no[same], summed exactly
    over the finite supports (a Fraction when both laws are exact)."""
    _check_ratio_args(q, d, sigma)
    _check_law(yes_law)
    _check_law(no_law)
    if not (_is_exact(yes_law) and _is_exact(no_law)):
        yes_law = {float(v): float(w) for v, w in yes_law.items()}
        no_law = {float(v): float(w) for v, w in no_law.items()}
    return _integrand_mean(yes_law, q, d, sigma) / _integrand_mean(no_law, q, d, sigma)


@dataclass(frozen=True)
class TaylorEstimate:
    value: Fraction
    error_bound: Fraction


def taylor_integrand_mean(law: dict, q: int, d: int, sigma: int, degree: int) -> TaylorEstimate:
    """Expansion of the integrand in mu truncated at ``degree``, averaged over
    the law, with the bound sum_{k > degree} |c_k| max|mu|^k on the tail."""
    _check_ratio_args(q, d, sigma)
    coeffs = _integrand_coeffs(q, d, sigma)
    total = sum(law.values())
    moments = [sum((w * Fraction(v) ** k for v, w in law.items()), Fraction(0)) / total
               for k in range(len(coeffs))]
    top = max(abs(Fraction(v)) for v in law)
    value = sum((c * moments[k] for k, c in enumerate(coeffs[:degree + 1])), Fraction(0))
    tail = sum((abs(c) * top ** k for k, c in enumerate(coeffs) if k > degree), Fraction(0))
    return TaylorEstimate(value, tail)


# -- Gaussian likelihood ratio ---------------------------------------------------

def likelihood_ratio_log(samples, eps: float) -> float:
    """ln(f_no / f_yes) = sum_j ln(1 + W_j / sqrt n) for q samples in R^n, with
    X_j the column sums and W_j = exp(eps X_j / n^(1/4) - q eps^2 / (2 sqrt n)) - 1."""
    x = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    q, n = x.shape
    if n < 2:
        raise ArgumentError("need n >= 2")
    if not np.all(np.isfinite(x)) or not math.isfinite(eps):
        raise ArgumentError("inputs must be finite")
    X = x.sum(axis=0)
    W = np.expm1(eps * X / n ** 0.25 - q * eps ** 2 / (2 * math.sqrt(n)))
    arg = W / math.sqrt(n)
    if np.any(arg <= -1.0):
        raise ArgumentError("1 + W_j / sqrt(n) must be positive")
    return math.fsum(np.log1p(arg).tolist())


def standard_case_log_ratios(n: int, q: int, eps: float, trials: int,
                             rng: RandomStream) -> np.ndarray:
    """likelihood_ratio_log on samples x ~ N(0, I_n), one value per trial."""
    return np.array([likelihood_ratio_log(rng.standard_normal((q, n)), eps)
                     for _ in range(trials)])


def exp_gauss_check(s2: float, trials: int, rng: RandomStream, t: float = 1.0) -> tuple[float, float]:
    """(mean of exp(t Y) over Y ~ N(0, s2), exp(t^2 s2 / 2))."""
    if s2 < 0:
        raise ArgumentError("variance must be nonnegative")
    y = rng.standard_normal(trials) * math.sqrt(s2)
    return float(np.mean(np.exp(t * y))), math.exp(t * t * s2 / 2)
