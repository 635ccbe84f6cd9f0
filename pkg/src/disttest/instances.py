"""Lower-bound ensembles.

* Moment-matched pairs (A, B): two discrete laws with equal moments 1..K,
  B putting mass on -1 and A living on nonnegative values. Scaled by
  eps/sqrt(n) they give the mean vectors of the yes side (always monotone)
  and the no side (usually far from monotone).
* The monotone uniformity-hard ensemble: a sparse set of small positive biases.
* The Gaussian sign mean and the chain-matching lower bound on the distance
  of a product distribution to monotonicity.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import hypercube as hc
from .distributions import ProductDistribution
from .errors import ArgumentError, SolverError
from .streams import RandomStream

MAX_K = 8


# -- exact linear algebra ------------------------------------------------------

def solve_exact(A: list[list[Fraction]], b: list[Fraction]) -> list[Fraction]:
    """Gaussian elimination over the rationals with nonzero pivoting."""
    size = len(A)
    M = [[Fraction(v) for v in row] + [Fraction(rhs)] for row, rhs in zip(A, b)]
    for col in range(size):
        piv = next((r for r in range(col, size) if M[r][col] != 0), None)
        if piv is None:
            raise SolverError("singular system")
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for r in range(size):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * c for a, c in zip(M[r], M[col])]
    return [M[r][size] for r in range(size)]


def det_leibniz(A: list[list[Fraction]]) -> Fraction:
    """Permutation-expansion determinant; small matrices only."""
    size = len(A)
    total = Fraction(0)
    for perm in itertools.permutations(range(size)):
        inversions = sum(1 for a, b in itertools.combinations(perm, 2) if a > b)
        term = Fraction(-1 if inversions % 2 else 1)
        for r, c in enumerate(perm):
            term *= A[r][c]
            if term == 0:
                break
        total += term
    return total


def support_values(K: int) -> tuple[int, ...]:
    """alpha_j = j^3 for j = 1..K+1."""
    return tuple(j ** 3 for j in range(1, K + 2))


def moment_matrix(K: int) -> list[list[Fraction]]:
    """(K+2)x(K+2): the e1 row, the all-ones row, then rows of k-th powers of
    (-1, alpha_1, ..., alpha_{K+1}) for k = 1..K."""
    values = (-1,) + support_values(K)
    rows = [[Fraction(1)] + [Fraction(0)] * (K + 1), [Fraction(1)] * (K + 2)]
    rows += [[Fraction(v) ** k for v in values] for k in range(1, K + 1)]
    return rows


def cramer_z(K: int) -> list[Fraction]:
    """Solution of the moment system by Cramer's rule; K <= 4."""
    if K > 4:
        raise ArgumentError("the Cramer cross-check is limited to K <= 4")
    A = moment_matrix(K)
    rhs = [Fraction(1)] + [Fraction(0)] * (K + 1)
    d = det_leibniz(A)
    out = []
    for j in range(K + 2):
        Aj = [row[:j] + [rhs[r]] + row[j + 1:] for r, row in enumerate(A)]
        out.append(det_leibniz(Aj) / d)
    return out


def vandermonde_z(K: int) -> list[Fraction]:
    """Closed form: z is the kernel vector of the Vandermonde rows with z_0 = 1,
    z_i = prod_l(-1 - alpha_l) / ((alpha_i + 1) prod_{l != i}(alpha_i - alpha_l))."""
    alpha = [Fraction(a) for a in support_values(K)]
    top = math.prod((-1 - a for a in alpha), start=Fraction(1))
    out = [Fraction(1)]
    for i, ai in enumerate(alpha):
        den = (ai + 1) * math.prod((ai - al for l, al in enumerate(alpha) if l != i),
                                   start=Fraction(1))
        out.append(top / den)
    return out


# -- moment-matched pairs ------------------------------------------------------

@dataclass(frozen=True)
class MomentMatchedPair:
    K: int
    support_values: tuple[int, ...]
    z: tuple[Fraction, ...]
    A: dict
    B: dict
    z_norm: Fraction

    def law(self, kind: str) -> dict:
        if kind == "yes":
            return self.A
        if kind == "no":
            return self.B
        raise ArgumentError(f"kind must be 'yes' or 'no', not {kind!r}")

    @property
    def b_minus(self) -> Fraction:
        return self.B.get(-1, Fraction(0))

    def max_abs_value(self, kind: str) -> int:
        return max(abs(v) for v in self.law(kind))


def moment(law: dict, k: int) -> Fraction:
    """E[X^k] under a finite law {value: mass}."""
    return sum((Fraction(v) ** k * w for v, w in law.items()), Fraction(0))


def build_moment_matched(K: int) -> MomentMatchedPair:
    if not isinstance(K, int) or not 1 <= K <= MAX_K:
        raise ArgumentError(f"K must be an integer in [1, {MAX_K}], got {K!r}")
    alpha = support_values(K)
    z = solve_exact(moment_matrix(K), [Fraction(1)] + [Fraction(0)] * (K + 1))
    if z[0] != 1 or any(v == 0 for v in z):
        raise SolverError(f"unexpected moment-system solution {z}")
    norm = sum(abs(v) for v in z)
    A: dict = {}
    B: dict = {-1: z[0] / norm}
    for j in range(1, K + 2):
        if z[j] < 0:
            A[alpha[j - 1]] = -z[j] / norm
        else:
            B[alpha[j - 1]] = z[j] / norm
    A[0] = 1 - sum(A.values())
    B[0] = 1 - sum(B.values())
    return MomentMatchedPair(K=K, support_values=alpha, z=tuple(z),
                             A=dict(sorted(A.items())), B=dict(sorted(B.items())), z_norm=norm)


def default_K(n: int) -> int:
    """max(1, floor(ln n / ln ln max(n, 16))), capped at the largest supported K."""
    return min(MAX_K, max(1, math.floor(math.log(n) / math.log(math.log(max(n, 16))))))


def _exact_scale(n: int, eps) -> Fraction | None:
    """eps / sqrt(n) as a Fraction when n is a perfect square."""
    root = math.isqrt(n)
    if root * root != n:
        return None
    return Fraction(str(eps)) / root


def draw_instance(kind: str, n: int, eps: float, pair: MomentMatchedPair,
                  rng: RandomStream) -> ProductDistribution:
    """n iid values a_i from A (yes) or B (no); mean vector eps * a / sqrt(n).

    Requires eps * max|support| <= sqrt(n) for the law actually sampled, which
    keeps every mean in [-1, 1].
    """
    law = pair.law(kind)
    if n < 2:
        raise ArgumentError("draw_instance needs n >= 2")
    if not eps > 0:
        raise ArgumentError(f"eps must be positive, got {eps}")
    top = pair.max_abs_value(kind)
    if eps * top > math.sqrt(n) * (1 + 1e-12):
        raise ArgumentError(f"eps * {top} exceeds sqrt(n) = {math.sqrt(n):.6g}: "
                            "means would leave [-1, 1]")
    values = list(law)
    probs = np.array([float(law[v]) for v in values])
    picks = rng.choice(len(values), size=n, p=probs / probs.sum())
    scale = _exact_scale(n, eps)
    if scale is not None:
        return ProductDistribution([scale * values[k] for k in picks])
    mu = np.array([values[k] for k in picks], dtype=np.float64) * (eps / math.sqrt(n))
    return ProductDistribution(np.clip(mu, -1.0, 1.0))


def largest_feasible_eps(n: int, pair: MomentMatchedPair, kind: str) -> float:
    return math.sqrt(n) / pair.max_abs_value(kind)


def uniformity_hard_instance(n: int, eps: float, rng: RandomStream) -> ProductDistribution:
    """Each mean is eps / n^(1/4) with probability 1/sqrt(n), else 0."""
    if n < 1:
        raise ArgumentError("n must be positive")
    if eps > n ** 0.25:
        raise ArgumentError(f"eps = {eps} exceeds n^(1/4); biases would exceed 1")
    biased = rng.random(n) < 1.0 / math.sqrt(n)
    return ProductDistribution(np.where(biased, eps / n ** 0.25, 0.0))


def gaussian_sign_mean(mu: float) -> float:
    """E[sign(Y)] for Y ~ N(mu, 1), i.e. 2 Phi(mu) - 1 = erf(mu / sqrt 2)."""
    if not math.isfinite(mu):
        raise ArgumentError("mu must be finite")
    return math.erf(mu / math.sqrt(2.0))


def matching_distance_lower_bound(p: ProductDistribution, N) -> float:
    """Sum over pairs (x, x with its N-part replaced by sigma(x_N)), for x with
    fewer than |N|/2 plus-ones on N, of p(x) - p(y)."""
    N = sorted(set(int(i) for i in N))
    n = p.n
    if n > 12:
        raise ArgumentError("matching_distance_lower_bound enumerates and needs n <= 12")
    if not N or N[0] < 1 or N[-1] > n:
        raise ArgumentError(f"N must be a nonempty subset of 1..{n}")
    if len(N) % 2:
        raise ArgumentError(f"|N| = {len(N)} must be even")
    m = len(N)
    sigma = hc.chain_matching(m).sigma
    mass = p.to_explicit().mass
    idx = np.arange(1 << n, dtype=np.int64)
    local = np.zeros_like(idx)
    for k, i in enumerate(N):
        local |= ((idx >> (i - 1)) & 1) << k
    low = hc.popcount(local) * 2 < m
    image = sigma[local]
    mask_N = sum(1 << (i - 1) for i in N)
    spread = np.zeros_like(idx)
    for k, i in enumerate(N):
        spread |= ((image >> k) & 1) << (i - 1)
    y = (idx & ~np.int64(mask_N)) | spread
    return float(np.sum(mass[idx[low]] - mass[y[low]]))
