"""Points, restrictions and the symmetric-chain matching on {-1,+1}^n.

Points are plain tuples of ``-1``/``+1`` ints, coordinates numbered 1..n.
The canonical integer encoding puts coordinate 1 in the least significant
bit: ``index(x) = sum(2**(i-1) for i with x_i == +1)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence

import numpy as np

from .errors import ArgumentError

Point = tuple[int, ...]

STAR = 0
MAX_INDEXED_DIM = 62


def check_point(x: Sequence[int]) -> Point:
    x = tuple(int(v) for v in x)
    if not x:
        raise ArgumentError("a point needs at least one coordinate")
    for v in x:
        if v not in (-1, 1):
            raise ArgumentError(f"coordinate value {v} is not -1 or +1")
    return x


def _check_coord(n: int, i: int) -> None:
    if not 1 <= i <= n:
        raise ArgumentError(f"coordinate {i} outside 1..{n}")


def index(x: Sequence[int]) -> int:
    """Canonical integer encoding of a point."""
    k = 0
    for pos, v in enumerate(x):
        if v == 1:
            k |= 1 << pos
        elif v != -1:
            raise ArgumentError(f"coordinate value {v} is not -1 or +1")
    return k


def from_index(k: int, n: int) -> Point:
    if not 0 <= k < (1 << n):
        raise ArgumentError(f"index {k} outside [0, 2^{n})")
    return tuple(1 if (k >> pos) & 1 else -1 for pos in range(n))


def flip(x: Point, i: int) -> Point:
    """Return x^(i): x with coordinate i negated."""
    _check_coord(len(x), i)
    return x[: i - 1] + (-x[i - 1],) + x[i:]


def with_coord(x: Point, i: int, value: int) -> Point:
    """Return x^(i -> value)."""
    _check_coord(len(x), i)
    if value not in (-1, 1):
        raise ArgumentError(f"coordinate value {value} is not -1 or +1")
    return x[: i - 1] + (value,) + x[i:]


def leq(x: Point, y: Point) -> bool:
    """Coordinate-wise order: x <= y iff x_i <= y_i for every i."""
    if len(x) != len(y):
        raise ArgumentError(f"dimension mismatch: {len(x)} vs {len(y)}")
    return all(a <= b for a, b in zip(x, y))


def weight(x: Point) -> int:
    """Number of +1 entries."""
    return sum(1 for v in x if v == 1)


def to_string(x: Point) -> str:
    return "".join("1" if v == 1 else "0" for v in x)


def from_string(s: str) -> Point:
    try:
        return tuple({"0": -1, "1": 1}[c] for c in s)
    except KeyError:
        raise ArgumentError(f"point string {s!r} must be over {{0,1}}") from None


def sign_table(n: int) -> np.ndarray:
    """All 2^n points as a (2^n, n) int8 array of +-1, rows in index order."""
    idx = np.arange(1 << n, dtype=np.int64)
    bits = (idx[:, None] >> np.arange(n, dtype=np.int64)) & 1
    return (2 * bits - 1).astype(np.int8)


def popcount(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=np.uint64)
    count = np.zeros(a.shape, dtype=np.int64)
    while np.any(a):
        count += (a & np.uint64(1)).astype(np.int64)
        a = a >> np.uint64(1)
    return count


@dataclass(frozen=True)
class Restriction:
    """A partial assignment in {-1,+1,*}^n; ``STAR`` (0) marks a free coordinate."""

    pattern: tuple[int, ...]

    def __post_init__(self):
        pattern = tuple(int(v) for v in self.pattern)
        if not pattern:
            raise ArgumentError("a restriction needs at least one coordinate")
        for v in pattern:
            if v not in (-1, 0, 1):
                raise ArgumentError(f"restriction entry {v} not in {{-1, *, +1}}")
        object.__setattr__(self, "pattern", pattern)

    @classmethod
    def from_string(cls, s: str) -> "Restriction":
        try:
            return cls(tuple({"0": -1, "1": 1, "*": STAR}[c] for c in s))
        except KeyError:
            raise ArgumentError(f"restriction string {s!r} must be over {{0,1,*}}") from None

    @classmethod
    def all_stars(cls, n: int) -> "Restriction":
        return cls((STAR,) * n)

    @classmethod
    def edge(cls, x: Point, i: int) -> "Restriction":
        """The one-dimensional subcube through x along coordinate i."""
        _check_coord(len(x), i)
        return cls(x[: i - 1] + (STAR,) + x[i:])

    def __str__(self) -> str:
        return "".join({-1: "0", 1: "1", STAR: "*"}[v] for v in self.pattern)

    @property
    def n(self) -> int:
        return len(self.pattern)

    @cached_property
    def stars(self) -> tuple[int, ...]:
        """1-based positions of the free coordinates, increasing."""
        return tuple(pos + 1 for pos, v in enumerate(self.pattern) if v == STAR)

    @property
    def width(self) -> int:
        return len(self.stars)

    @cached_property
    def fixed_mask(self) -> int:
        return sum(1 << pos for pos, v in enumerate(self.pattern) if v != STAR)

    @cached_property
    def fixed_bits(self) -> int:
        return sum(1 << pos for pos, v in enumerate(self.pattern) if v == 1)

    def contains(self, x: Point) -> bool:
        if len(x) != self.n:
            raise ArgumentError(f"dimension mismatch: {len(x)} vs {self.n}")
        return all(r == STAR or r == v for r, v in zip(self.pattern, x))

    def complete(self, completion: Sequence[int]) -> Point:
        """Fill the stars, in increasing coordinate order, with ``completion``."""
        if len(completion) != self.width:
            raise ArgumentError(
                f"completion has {len(completion)} values for {self.width} stars")
        values = iter(check_point(completion) if completion else ())
        return tuple(next(values) if v == STAR else v for v in self.pattern)

    def restrict(self, x: Point) -> Point:
        """Project x onto the free coordinates of this restriction."""
        return tuple(x[i - 1] for i in self.stars)

    def completions(self) -> Iterator[Point]:
        w = self.width
        for k in range(1 << w):
            yield from_index(k, w) if w else ()

    def embed_indices(self, local: np.ndarray) -> np.ndarray:
        """Map completion indices over stars(rho) to full point indices."""
        local = np.asarray(local, dtype=np.int64)
        out = np.full(local.shape, self.fixed_bits, dtype=np.int64)
        for k, i in enumerate(self.stars):
            out |= ((local >> k) & 1) << (i - 1)
        return out


# -- symmetric chain matching ------------------------------------------------

@dataclass(frozen=True)
class ChainMatching:
    """The involution sigma pairing level m/2 - r with level m/2 + r along the
    chains of the de Bruijn-Tengbergen-Kruyswijk decomposition of {-1,+1}^m.

    ``sigma[k]`` is the index of sigma(z) for the point z with index k.
    """

    m: int
    sigma: np.ndarray
    chain_key: np.ndarray

    def __call__(self, z: Point) -> Point:
        if len(z) != self.m:
            raise ArgumentError(f"dimension mismatch: {len(z)} vs {self.m}")
        return from_index(int(self.sigma[index(z)]), self.m)

    def chains(self) -> list[list[int]]:
        """The chains as lists of point indices ordered by increasing level."""
        levels = popcount(np.arange(1 << self.m))
        order = np.lexsort((levels, self.chain_key))
        keys = self.chain_key[order]
        cuts = np.flatnonzero(np.diff(keys)) + 1
        return [list(map(int, part)) for part in np.split(order, cuts)]


def chain_matching(m: int) -> ChainMatching:
    """Build sigma from the bracket form of the dBTK decomposition.

    Reading coordinates 1..m left to right with -1 as "(" and +1 as ")",
    matched bracket pairs are fixed along a chain; the unmatched positions
    always read ")))...(((", and a chain sweeps them from all-"(" to
    all-")". sigma mirrors a point's position on its chain.
    """
    if not 1 <= m <= 24:
        raise ArgumentError(f"chain matching dimension {m} outside 1..24")
    z = np.arange(1 << m, dtype=np.int64)
    bit = [(z >> pos) & 1 for pos in range(m)]

    unmatched_ones = np.zeros_like(z)
    depth = np.zeros_like(z)
    for pos in range(m):
        b = bit[pos].astype(bool)
        lone = b & (depth == 0)
        unmatched_ones |= lone.astype(np.int64) << pos
        depth += np.where(b, np.where(lone, 0, -1), 1)

    unmatched_zeros = np.zeros_like(z)
    pending = np.zeros_like(z)
    for pos in reversed(range(m)):
        b = bit[pos].astype(bool)
        lone = (~b) & (pending == 0)
        unmatched_zeros |= lone.astype(np.int64) << pos
        pending += np.where(b, 1, np.where(lone, 0, -1))
    del depth, pending

    free = unmatched_ones | unmatched_zeros
    total_free = popcount(free)
    ones_after = total_free - popcount(unmatched_ones)

    sigma = z & ~free
    seen = np.zeros_like(z)
    for pos in range(m):
        at = ((free >> pos) & 1).astype(bool)
        sigma |= (at & (seen < ones_after)).astype(np.int64) << pos
        seen += at
    return ChainMatching(m=m, sigma=sigma, chain_key=z & ~free | (free << m))
