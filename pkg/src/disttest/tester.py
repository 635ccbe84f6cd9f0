"""Edge tester for monotonicity of a distribution under coordinate-oracle access.

For each scale w = 0..w_max the tester repeats t(w) times: draw x ~ p with an
all-stars query, pick a uniform coordinate i, and make m(w) coordinate
queries on the edge (x, i). It rejects as soon as one edge shows too many
-1 answers. Thresholds sit halfway between the null bias (at most 1/2 for
monotone p) and the alternative bias 1/2 + sqrt(eta)/2, so both one-sided
Hoeffding bounds apply.

``far_certificate`` is a white-box diagnostic for explicit far distributions:
it finds a bucket pair (gamma, ell) whose probe success probability is large
enough for the round w = 2*gamma + ell to catch it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import hypercube as hc
from .distributions import Distribution, ExplicitDistribution
from .errors import ArgumentError
from .hypercube import Point
from .oracle import QueryLedger, SubcubeOracle
from .streams import RandomStream

# Probes per batch inside one round; bounds memory at about 40 MB.
CHUNK = 1 << 18

# Upper bound on ledger / (n ln^3(n/eps) / eps^2) for the default constants,
# over 2 <= n <= 64 and 0.1 <= eps <= 0.9 (see ``query_ratio``).
QUERY_CONSTANT = 2.5e7


@dataclass(frozen=True)
class TesterConfig:
    eps: float
    c0: float = 0.1
    C_t: float = 4.0
    C_m: float = 32.0
    w_max_slack: int = 4

    def __post_init__(self):
        if not 0.0 < self.eps < 1.0:
            raise ArgumentError(f"eps must lie in (0, 1), got {self.eps}")
        for name in ("c0", "C_t", "C_m"):
            if not getattr(self, name) > 0.0:
                raise ArgumentError(f"{name} must be positive")
        if self.w_max_slack < 0:
            raise ArgumentError("w_max_slack must be nonnegative")


@dataclass(frozen=True)
class Round:
    w: int
    t: int
    eta: float
    m: int
    threshold: int


@dataclass(frozen=True)
class Trigger:
    x: Point
    i: int
    w: int
    count: int
    m: int


@dataclass
class Verdict:
    outcome: str
    ledger: QueryLedger
    trigger: Trigger | None = None

    def __post_init__(self):
        if self.outcome not in ("accept", "reject"):
            raise ArgumentError(f"outcome must be accept or reject, not {self.outcome!r}")
        if self.outcome == "reject" and self.trigger is None:
            raise ArgumentError("a reject verdict needs its trigger")

    @property
    def accepted(self) -> bool:
        return self.outcome == "accept"


@dataclass(frozen=True)
class ProbeResult:
    outcome: str
    count: int


def _ln_guard(v: float) -> float:
    return math.log(max(v, math.e))


def log_factor(n: int, eps: float) -> float:
    """L = ln(max(n/eps, e))."""
    return _ln_guard(n / eps)


def w_max(n: int, cfg: TesterConfig) -> int:
    L = log_factor(n, cfg.eps)
    return math.ceil(math.log2(n * L * L / cfg.eps ** 2)) + cfg.w_max_slack


def schedule(n: int, cfg: TesterConfig) -> list[Round]:
    if n < 2:
        raise ArgumentError("the tester needs n >= 2")
    L = log_factor(n, cfg.eps)
    lnn = _ln_guard(n)
    rounds = []
    for w in range(w_max(n, cfg) + 1):
        eta = min(1.0, cfg.c0 ** 2 * cfg.eps ** 2 * 2.0 ** w / (16.0 * n * L * lnn))
        if math.sqrt(eta) / 4.0 >= 0.5:
            continue
        m = math.ceil(cfg.C_m * L / eta)
        rounds.append(Round(w=w, t=math.ceil(cfg.C_t * 2.0 ** w * L), eta=eta, m=m,
                            threshold=math.ceil(m * (0.5 + math.sqrt(eta) / 4.0))))
    return rounds


def closed_form_queries(n: int, cfg: TesterConfig) -> int:
    """Ledger total of a run that never rejects: sum over rounds of t(1 + m)."""
    return sum(r.t * (1 + r.m) for r in schedule(n, cfg))


def query_ratio(n: int, cfg: TesterConfig) -> float:
    """closed_form_queries / (n ln^3(n/eps) / eps^2)."""
    return closed_form_queries(n, cfg) / (n * math.log(n / cfg.eps) ** 3 / cfg.eps ** 2)


def union_bound(n: int, cfg: TesterConfig) -> float:
    """Total false-reject bound for monotone targets:
    (number of probes) * exp(-C_m L / 8)."""
    probes = sum(r.t for r in schedule(n, cfg))
    return probes * math.exp(-cfg.C_m * log_factor(n, cfg.eps) / 8.0)


def bias_probe(oracle: SubcubeOracle, x: Point, i: int, m: int, threshold: int,
               rng: RandomStream) -> ProbeResult:
    """m coordinate queries on the edge (x, i); reject iff more than
    ``threshold`` of them return -1."""
    if m < 1 or not 0 <= threshold <= m:
        raise ArgumentError(f"need m >= 1 and 0 <= threshold <= m, got m={m}, threshold={threshold}")
    count = sum(oracle.coordinate_query(x, i, rng) == -1 for _ in range(m))
    return ProbeResult("reject" if count > threshold else "pass", int(count))


def edge_test(oracle: SubcubeOracle, cfg: TesterConfig, rng: RandomStream) -> Verdict:
    n = oracle.n
    if n > hc.MAX_INDEXED_DIM:
        raise ArgumentError(f"the tester indexes points and needs n <= {hc.MAX_INDEXED_DIM}")
    for r in schedule(n, cfg):
        left = r.t
        while left:
            size = min(left, CHUNK)
            left -= size
            coords = rng.integers(1, n + 1, size=size)
            run = oracle.edge_probes(coords, r.m, r.threshold, rng)
            if run.rejected:
                trigger = Trigger(x=hc.from_index(run.point, n), i=run.coord,
                                  w=r.w, count=run.count, m=r.m)
                return Verdict("reject", oracle.ledger, trigger)
    return Verdict("accept", oracle.ledger)


def run_tester(target: Distribution, cfg: TesterConfig, rng: RandomStream) -> Verdict:
    return edge_test(SubcubeOracle(target), cfg, rng)


# -- far-case certificate ----------------------------------------------------

@dataclass(frozen=True)
class Certificate:
    gamma: int
    ell: int
    eta: float
    probability: float
    threshold: float


def edge_ratios(p: ExplicitDistribution) -> np.ndarray:
    """Row x, column i-1: ((p(x^(i->-1)) - p(x^(i->+1)))^+ / (their sum))^2.
    Edges of zero mass get 0."""
    n = p.n
    idx = np.arange(1 << n, dtype=np.int64)
    out = np.zeros((1 << n, n))
    for pos in range(n):
        lo = p.mass[idx & ~np.int64(1 << pos)]
        hi = p.mass[idx | np.int64(1 << pos)]
        total = lo + hi
        with np.errstate(invalid="ignore", divide="ignore"):
            ratio = np.where(total > 0, np.maximum(lo - hi, 0.0) / total, 0.0)
        out[:, pos] = ratio ** 2
    return out


def certificate_ranges(n: int, eps: float, c0: float) -> list[tuple[int, int, float, float]]:
    """(gamma, ell, eta, success threshold) for every bucket pair, in search order."""
    lnn = _ln_guard(n)
    h = math.ceil(math.log2(4.0 * math.sqrt(n) / (c0 * eps))) + 1
    out = []
    for gamma in range(h + 1):
        xi = c0 ** 2 * eps ** 2 * 2.0 ** (2 * gamma) / (16.0 * h * lnn)
        r = max(1, math.ceil(math.log2(n / xi)) - 1)
        for ell in range(r + 1):
            eta = c0 ** 2 * eps ** 2 * 2.0 ** (2 * gamma + ell) / (16.0 * h * n * lnn)
            out.append((gamma, ell, eta, 1.0 / (r * 2.0 ** (gamma + ell))))
    return out


def far_certificate(p: Distribution, eps: float, c0: float = 0.1,
                    distance: float | None = None) -> Certificate | None:
    """First bucket pair (gamma, ell) with
    Pr_{x~p, i~[n]}[ratio(x, i) >= eta] >= 1/(r 2^(gamma+ell)), or None.

    ``distance`` may supply a known distance to monotonicity; otherwise it is
    computed by LP (n <= 8).
    """
    e = p.to_explicit()
    if e.n > 10:
        raise ArgumentError("far_certificate enumerates the cube and needs n <= 10")
    if distance is None:
        from .isoperimetry import dist_tv_monotone
        distance = dist_tv_monotone(e)
    if distance < eps:
        raise ArgumentError(f"distance to monotonicity {distance:.6g} is below eps = {eps}")
    ratios = edge_ratios(e)
    for gamma, ell, eta, need in certificate_ranges(e.n, eps, c0):
        prob = float(e.mass @ (ratios >= eta).mean(axis=1))
        if prob >= need:
            return Certificate(gamma, ell, eta, prob, need)
    return None
