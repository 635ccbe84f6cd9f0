"""Distributions on {-1,+1}^n: explicit tables, product form and sparse support.

Every distribution exposes the same small surface used by the oracle and
the tester: ``pmf``, ``pmf_indices``, ``conditional``, ``sample``,
``sample_indices`` and ``minus_probability`` (the coordinate-oracle law on
an edge). Index-based methods use the canonical encoding from
:mod:`disttest.hypercube`.
"""

from __future__ import annotations

import json
import math
from fractions import Fraction
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import hypercube as hc
from .errors import ArgumentError, EmptySubcubeError, LoadError
from .hypercube import Point, Restriction
from .streams import RandomStream

MASS_TOLERANCE = 1e-9
MONOTONE_SLACK = 1e-12
MAX_EXPLICIT_DIM = 24
MAX_PRODUCT_DIM = 1 << 20
MAX_ENUMERATION_DIM = 20


def _check_dim(n: int, x: Point) -> None:
    if len(x) != n:
        raise ArgumentError(f"dimension mismatch: point has {len(x)} coordinates, "
                            f"distribution has {n}")


def _check_restriction(n: int, rho: Restriction) -> None:
    if rho.n != n:
        raise ArgumentError(f"dimension mismatch: restriction has {rho.n} coordinates, "
                            f"distribution has {n}")


class Distribution:
    n: int
    edge_law_depends_on_point = True

    def pmf(self, x: Point) -> float:
        raise NotImplementedError

    def pmf_indices(self, idx: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def conditional(self, rho: Restriction) -> "Distribution":
        raise NotImplementedError

    def sample(self, rng: RandomStream) -> Point:
        return hc.from_index(int(self.sample_indices(rng, 1)[0]), self.n)

    def sample_indices(self, rng: RandomStream, size: int) -> np.ndarray:
        raise NotImplementedError

    def minus_probability(self, idx: np.ndarray, coord: int) -> np.ndarray:
        """Pr[x_coord = -1] on the edges through each point index (coord is 1-based)."""
        raise NotImplementedError

    def edge_minus_probabilities(self, idx: np.ndarray, coords: np.ndarray) -> np.ndarray:
        """Vectorised ``minus_probability`` over paired arrays of point indices
        and 1-based coordinates."""
        idx = np.asarray(idx, dtype=np.int64)
        bit = np.int64(1) << (np.asarray(coords, dtype=np.int64) - 1)
        lo = self.pmf_indices(idx & ~bit)
        hi = self.pmf_indices(idx | bit)
        total = lo + hi
        if np.any(total <= 0.0):
            raise EmptySubcubeError("a probed edge has zero mass")
        return lo / total

    def to_explicit(self) -> "ExplicitDistribution":
        raise NotImplementedError


class ExplicitDistribution(Distribution):
    """A full probability table over the 2^n points, in canonical index order.

    Tables whose total is within ``MASS_TOLERANCE`` of 1 are renormalised;
    anything further off is rejected. ``exact`` optionally carries the same
    table as Fractions for exact monotonicity checks.
    """

    def __init__(self, mass, exact: Sequence[Fraction] | None = None):
        mass = np.array(mass, dtype=np.float64).ravel()
        size = mass.size
        n = size.bit_length() - 1
        if size == 0 or size != 1 << n:
            raise ArgumentError(f"mass table length {size} is not a power of two")
        if n > MAX_EXPLICIT_DIM:
            raise ArgumentError(f"explicit distributions are capped at n = {MAX_EXPLICIT_DIM}")
        if not np.all(np.isfinite(mass)) or np.any(mass < 0):
            raise ArgumentError("mass entries must be finite and nonnegative")
        total = float(mass.sum())
        if abs(total - 1.0) > MASS_TOLERANCE:
            raise ArgumentError(f"mass sums to {total!r}, not 1")
        self.n = n
        self.mass = mass / total
        self.mass.setflags(write=False)
        if exact is not None:
            exact = tuple(Fraction(v) for v in exact)
            if len(exact) != size or sum(exact) != 1 or min(exact) < 0:
                raise ArgumentError("exact table must be a probability vector of matching size")
        self.exact = exact

    @classmethod
    def from_fractions(cls, masses: Sequence) -> "ExplicitDistribution":
        exact = [Fraction(v) for v in masses]
        return cls([float(v) for v in exact], exact=exact)

    @classmethod
    def uniform(cls, n: int) -> "ExplicitDistribution":
        return cls(np.full(1 << n, 1.0 / (1 << n)))

    @classmethod
    def point_mass(cls, x: Point) -> "ExplicitDistribution":
        mass = np.zeros(1 << len(x))
        mass[hc.index(x)] = 1.0
        return cls(mass)

    def __repr__(self):
        return f"ExplicitDistribution(n={self.n})"

    def pmf(self, x: Point) -> float:
        _check_dim(self.n, x)
        return float(self.mass[hc.index(x)])

    def pmf_indices(self, idx):
        return self.mass[np.asarray(idx, dtype=np.int64)]

    def conditional(self, rho: Restriction) -> "ExplicitDistribution":
        _check_restriction(self.n, rho)
        idx = rho.embed_indices(np.arange(1 << rho.width))
        sub = self.mass[idx]
        total = float(sub.sum())
        if total <= 0.0:
            raise EmptySubcubeError(f"subcube {rho} has zero mass")
        if self.exact is not None:
            ex = [self.exact[k] for k in idx]
            s = sum(ex)
            return ExplicitDistribution([float(v / s) for v in ex], exact=[v / s for v in ex])
        return ExplicitDistribution(sub / total)

    def sample_indices(self, rng, size):
        cdf = np.cumsum(self.mass)
        u = rng.random(size) * cdf[-1]
        idx = np.searchsorted(cdf, u, side="right")
        return np.minimum(idx, self.mass.size - 1).astype(np.int64)

    def minus_probability(self, idx, coord):
        idx = np.asarray(idx, dtype=np.int64)
        bit = np.int64(1) << (coord - 1)
        lo = self.mass[idx & ~bit]
        hi = self.mass[idx | bit]
        total = lo + hi
        if np.any(total <= 0.0):
            raise EmptySubcubeError(f"an edge along coordinate {coord} has zero mass")
        return lo / total

    def to_explicit(self):
        return self


class ProductDistribution(Distribution):
    """Independent coordinates with Pr[x_i = +1] = (1 + mu_i) / 2."""

    def __init__(self, mu):
        values = list(mu) if not isinstance(mu, np.ndarray) else mu
        self.exact_mu = None
        if len(values) and all(isinstance(v, (Fraction, int)) for v in values):
            self.exact_mu = tuple(Fraction(v) for v in values)
        self.mu = np.array([float(v) for v in values], dtype=np.float64)
        self.mu.setflags(write=False)
        self.n = self.mu.size
        if self.n > MAX_PRODUCT_DIM:
            raise ArgumentError(f"product distributions are capped at n = {MAX_PRODUCT_DIM}")
        if not np.all(np.isfinite(self.mu)) or np.any(np.abs(self.mu) > 1.0):
            raise ArgumentError("mean vector entries must lie in [-1, 1]")
        self.p_plus = (1.0 + self.mu) / 2.0

    @classmethod
    def uniform(cls, n: int) -> "ProductDistribution":
        return cls(np.zeros(n))

    def __repr__(self):
        return f"ProductDistribution(n={self.n})"

    def is_monotone(self) -> bool:
        return bool(np.all(self.mu >= 0))

    def pmf(self, x):
        _check_dim(self.n, x)
        x = np.asarray(x, dtype=np.float64)
        return float(np.prod((1.0 + x * self.mu) / 2.0))

    def pmf_indices(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        out = np.ones(idx.shape)
        for pos in range(self.n):
            on = ((idx >> pos) & 1).astype(bool)
            out *= np.where(on, self.p_plus[pos], 1.0 - self.p_plus[pos])
        return out

    def conditional(self, rho):
        _check_restriction(self.n, rho)
        for pos, v in enumerate(rho.pattern):
            if v != hc.STAR and 1.0 + v * self.mu[pos] == 0.0:
                raise EmptySubcubeError(f"subcube {rho} has zero mass")
        keep = [i - 1 for i in rho.stars]
        if self.exact_mu is not None:
            return ProductDistribution([self.exact_mu[k] for k in keep])
        return ProductDistribution(self.mu[keep])

    def sample(self, rng):
        if self.n <= hc.MAX_INDEXED_DIM:
            return super().sample(rng)
        bits = rng.random(self.n) < self.p_plus
        return tuple(int(v) for v in np.where(bits, 1, -1))

    def sample_indices(self, rng, size):
        if self.n > hc.MAX_INDEXED_DIM:
            raise ArgumentError("index sampling needs n <= 62")
        out = np.zeros(size, dtype=np.int64)
        fair = self.mu == 0.0
        fair_mask = sum(1 << pos for pos in np.flatnonzero(fair))
        if fair_mask:
            out |= rng.integers(0, 1 << self.n, size=size, dtype=np.int64) & fair_mask
        for pos in np.flatnonzero(~fair):
            p = self.p_plus[pos]
            if p >= 1.0:
                out |= np.int64(1) << pos
            elif p > 0.0:
                out |= (rng.random(size) < p).astype(np.int64) << pos
        return out

    def minus_probability(self, idx, coord):
        idx = np.asarray(idx, dtype=np.int64)
        pinned = np.flatnonzero(np.abs(self.mu) == 1.0)
        for pos in pinned:
            if pos == coord - 1:
                continue
            want = 1 if self.mu[pos] > 0 else 0
            if np.any(((idx >> pos) & 1) != want):
                raise EmptySubcubeError(f"an edge along coordinate {coord} has zero mass")
        return np.full(idx.shape, 1.0 - self.p_plus[coord - 1])

    edge_law_depends_on_point = False

    def coordinate_minus_probabilities(self, coords) -> np.ndarray:
        """Edge law along each coordinate; the same at every point of the support."""
        return 1.0 - self.p_plus[np.asarray(coords, dtype=np.int64) - 1]

    def edge_minus_probabilities(self, idx, coords):
        idx = np.asarray(idx, dtype=np.int64)
        coords = np.asarray(coords, dtype=np.int64)
        for pos in np.flatnonzero(np.abs(self.mu) == 1.0):
            want = 1 if self.mu[pos] > 0 else 0
            if np.any((((idx >> pos) & 1) != want) & (coords != pos + 1)):
                raise EmptySubcubeError(f"a probed edge leaves the support on coordinate {pos + 1}")
        return 1.0 - self.p_plus[coords - 1]

    def to_explicit(self):
        if self.n > MAX_EXPLICIT_DIM:
            raise ArgumentError(f"cannot materialise n = {self.n} > {MAX_EXPLICIT_DIM}")
        table = np.ones(1)
        for p in self.p_plus:
            table = np.concatenate([table * (1.0 - p), table * p])
        exact = None
        if self.exact_mu is not None:
            exact = [Fraction(1)]
            for m in self.exact_mu:
                exact = [v * (1 - m) / 2 for v in exact] + [v * (1 + m) / 2 for v in exact]
        return ExplicitDistribution(table, exact=exact)


class SparseDistribution(Distribution):
    """Finite support given as {index: mass}; used for point masses at large n."""

    def __init__(self, n: int, support: Mapping[int, float]):
        if not 0 <= n <= hc.MAX_INDEXED_DIM:
            raise ArgumentError(f"sparse distributions need n <= {hc.MAX_INDEXED_DIM}")
        items = sorted((int(k), float(v)) for k, v in support.items() if v > 0)
        if not items:
            raise ArgumentError("support is empty")
        for k, v in items:
            if not 0 <= k < (1 << n) or not math.isfinite(v):
                raise ArgumentError(f"bad support entry {k}: {v}")
        total = sum(v for _, v in items)
        if abs(total - 1.0) > MASS_TOLERANCE:
            raise ArgumentError(f"mass sums to {total!r}, not 1")
        self.n = n
        self.keys = np.array([k for k, _ in items], dtype=np.int64)
        self.values = np.array([v for _, v in items]) / total

    @classmethod
    def point_mass(cls, x: Point) -> "SparseDistribution":
        return cls(len(x), {hc.index(x): 1.0})

    def __repr__(self):
        return f"SparseDistribution(n={self.n}, support={self.keys.size})"

    def pmf_indices(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        pos = np.clip(np.searchsorted(self.keys, idx), 0, self.keys.size - 1)
        return np.where(self.keys[pos] == idx, self.values[pos], 0.0)

    def pmf(self, x):
        _check_dim(self.n, x)
        return float(self.pmf_indices(np.array([hc.index(x)]))[0])

    def conditional(self, rho):
        _check_restriction(self.n, rho)
        inside = (self.keys & rho.fixed_mask) == rho.fixed_bits
        if not np.any(inside):
            raise EmptySubcubeError(f"subcube {rho} has zero mass")
        local = np.zeros(int(inside.sum()), dtype=np.int64)
        for k, i in enumerate(rho.stars):
            local |= ((self.keys[inside] >> (i - 1)) & 1) << k
        support: dict[int, float] = {}
        for k, v in zip(local.tolist(), self.values[inside].tolist()):
            support[k] = support.get(k, 0.0) + v
        total = sum(support.values())
        return SparseDistribution(rho.width, {k: v / total for k, v in support.items()})

    def sample_indices(self, rng, size):
        cdf = np.cumsum(self.values)
        pick = np.searchsorted(cdf, rng.random(size) * cdf[-1], side="right")
        return self.keys[np.minimum(pick, self.keys.size - 1)]

    def minus_probability(self, idx, coord):
        idx = np.asarray(idx, dtype=np.int64)
        bit = np.int64(1) << (coord - 1)
        lo = self.pmf_indices(idx & ~bit)
        hi = self.pmf_indices(idx | bit)
        total = lo + hi
        if np.any(total <= 0.0):
            raise EmptySubcubeError(f"an edge along coordinate {coord} has zero mass")
        return lo / total

    def to_explicit(self):
        if self.n > MAX_EXPLICIT_DIM:
            raise ArgumentError(f"cannot materialise n = {self.n} > {MAX_EXPLICIT_DIM}")
        mass = np.zeros(1 << self.n)
        mass[self.keys] = self.values
        return ExplicitDistribution(mass)


# -- module-level operations -------------------------------------------------

def pmf(d: Distribution, x: Point) -> float:
    return d.pmf(x)


def conditional(d: Distribution, rho: Restriction) -> Distribution:
    return d.conditional(rho)


def sample(d: Distribution, rng: RandomStream) -> Point:
    return d.sample(rng)


def is_monotone(p: Distribution, slack: float = MONOTONE_SLACK) -> bool:
    """Edge test p(x) <= p(x^(i)) + slack for every x with x_i = -1.

    Uses exact Fractions when the table carries them (slack is then 0).
    """
    if isinstance(p, ProductDistribution) and p.n > MAX_ENUMERATION_DIM:
        return p.is_monotone()
    p = p.to_explicit()
    if p.n > MAX_ENUMERATION_DIM:
        raise ArgumentError(f"monotonicity check is capped at n = {MAX_ENUMERATION_DIM}")
    idx = np.arange(1 << p.n, dtype=np.int64)
    for pos in range(p.n):
        low = idx[((idx >> pos) & 1) == 0]
        if p.exact is not None:
            ex = p.exact
            if any(ex[k] > ex[k | (1 << pos)] for k in low.tolist()):
                return False
        elif np.any(p.mass[low] > p.mass[low | (1 << pos)] + slack):
            return False
    return True


def tv_exact(p: Distribution, q: Distribution) -> float:
    if p.n != q.n:
        raise ArgumentError(f"dimension mismatch: {p.n} vs {q.n}")
    if p.n > MAX_ENUMERATION_DIM:
        raise ArgumentError(f"exact TV is capped at n = {MAX_ENUMERATION_DIM}")
    a = p.to_explicit().mass
    b = q.to_explicit().mass
    return 0.5 * float(np.abs(a - b).sum())


# -- instance files ------------------------------------------------------------

def instance_to_dict(d: Distribution) -> dict:
    if isinstance(d, ProductDistribution):
        return {"kind": "product", "n": d.n, "mu": d.mu.tolist()}
    e = d.to_explicit()
    return {"kind": "explicit", "n": e.n, "mass": e.mass.tolist()}


def instance_from_dict(obj: Mapping) -> Distribution:
    try:
        kind = obj["kind"]
        n = int(obj["n"])
        if kind == "explicit":
            mass = obj["mass"]
            if len(mass) != 1 << n:
                raise LoadError(f"explicit instance with n = {n} needs {1 << n} masses")
            return ExplicitDistribution(mass)
        if kind == "product":
            mu = obj["mu"]
            if len(mu) != n:
                raise LoadError(f"product instance with n = {n} needs {n} means")
            return ProductDistribution(mu)
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, LoadError):
            raise
        raise LoadError(f"malformed instance: {exc}") from exc
    raise LoadError(f"unknown instance kind {obj.get('kind')!r}")


def save_instance(d: Distribution, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(d)) + "\n", encoding="utf-8")


def load_instance(path) -> Distribution:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise LoadError(f"cannot read instance {path}: {exc}") from exc
    return instance_from_dict(obj)
