"""Subcube-conditioning access with query accounting, and decision trees.

A :class:`SubcubeOracle` wraps a target distribution and charges one unit
to its :class:`QueryLedger` per conditioning query. The batched helpers
``sample_points`` and ``coordinate_counts`` are used by the tester; they
charge exactly what the equivalent sequence of single queries would.

Decision trees model deterministic query algorithms. ``replay_iid`` runs a
tree on a list of independent full samples (each node consumes the next
sample and reads it on the node's free coordinates) and
``leaf_distribution`` computes exact leaf probabilities under either the
subcube semantics or that replay.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Union

import numpy as np

from . import hypercube as hc
from .distributions import Distribution, ExplicitDistribution, ProductDistribution
from .errors import ArgumentError, EmptySubcubeError, LoadError
from .hypercube import Point, Restriction
from .streams import RandomStream

MAX_EXACT_DEPTH = 6
MAX_EXACT_WIDTH = 20


@dataclass
class QueryLedger:
    total_queries: int = 0
    per_width: Counter = field(default_factory=Counter)

    def charge(self, width: int, count: int = 1) -> None:
        self.total_queries += count
        self.per_width[width] += count

    def check(self) -> bool:
        return self.total_queries == sum(self.per_width.values())


class SubcubeOracle:
    """Conditional-sampling access to ``target``; single owner (mutable ledger)."""

    def __init__(self, target: Distribution, ledger: QueryLedger | None = None):
        self.target = target
        self.ledger = ledger if ledger is not None else QueryLedger()

    @property
    def n(self) -> int:
        return self.target.n

    def query(self, rho: Restriction, rng: RandomStream) -> Point:
        if rho.n != self.n:
            raise ArgumentError(f"dimension mismatch: restriction has {rho.n} coordinates, "
                                f"target has {self.n}")
        if rho.width == 0:
            x = rho.complete(())
            if self.target.pmf(x) <= 0.0:
                raise EmptySubcubeError(f"subcube {rho} has zero mass")
            self.ledger.charge(0)
            return x
        cond = self.target.conditional(rho)
        completion = cond.sample(rng)
        self.ledger.charge(rho.width)
        return rho.complete(completion)

    def coordinate_query(self, x: Point, i: int, rng: RandomStream) -> int:
        """Sample coordinate i from p conditioned on agreeing with x elsewhere."""
        rho = Restriction.edge(x, i)
        if self.n > hc.MAX_INDEXED_DIM:
            return self.query(rho, rng)[i - 1]
        pm = float(self.target.minus_probability(np.array([hc.index(x)]), i)[0])
        self.ledger.charge(1)
        return -1 if rng.random() < pm else 1

    def sample_points(self, rng: RandomStream, size: int) -> np.ndarray:
        """``size`` all-stars queries, returned as point indices."""
        idx = self.target.sample_indices(rng, size)
        self.ledger.charge(self.n, size)
        return idx

    def coordinate_counts(self, idx: np.ndarray, coords: np.ndarray, m: int,
                          rng: RandomStream) -> np.ndarray:
        """Number of -1 answers among ``m`` coordinate queries on each edge
        (idx[k], coords[k]). The m answers on one edge are i.i.d., so their
        count is drawn directly as a binomial."""
        idx = np.asarray(idx, dtype=np.int64)
        coords = np.asarray(coords, dtype=np.int64)
        counts = rng.binomial(m, self.target.edge_minus_probabilities(idx, coords))
        self.ledger.charge(1, m * idx.size)
        return counts

    def edge_probes(self, coords: np.ndarray, m: int, threshold: int,
                    rng: RandomStream) -> "ProbeRun":
        """Probe k: one all-stars query for x_k, then m coordinate queries on
        the edge (x_k, coords[k]). Probes run in order and stop after the
        first whose -1 count exceeds ``threshold``; only the probes performed
        are charged.

        When the edge law does not depend on the point (product targets), the
        points of unreported probes are never drawn: the reported point is
        sampled afresh, which has the same joint law.
        """
        coords = np.asarray(coords, dtype=np.int64)
        if getattr(self.target, "edge_law_depends_on_point", True):
            idx = self.target.sample_indices(rng, coords.size)
            pm = self.target.edge_minus_probabilities(idx, coords)
        else:
            idx = None
            pm = self.target.coordinate_minus_probabilities(coords)
        counts = rng.binomial(m, pm)
        hits = np.flatnonzero(counts > threshold)
        done = coords.size if hits.size == 0 else int(hits[0]) + 1
        self.ledger.charge(self.n, done)
        self.ledger.charge(1, m * done)
        last = done - 1
        point = int(idx[last]) if idx is not None else int(self.target.sample_indices(rng, 1)[0])
        return ProbeRun(performed=done, rejected=hits.size > 0, point=point,
                        coord=int(coords[last]), count=int(counts[last]))


@dataclass(frozen=True)
class ProbeRun:
    """Outcome of ``edge_probes``; point/coord/count describe the last probe."""

    performed: int
    rejected: bool
    point: int
    coord: int
    count: int


# -- decision trees ------------------------------------------------------------

@dataclass(frozen=True)
class Leaf:
    verdict: str

    def __post_init__(self):
        if self.verdict not in ("accept", "reject"):
            raise ArgumentError(f"leaf verdict {self.verdict!r} is not accept/reject")


@dataclass(frozen=True)
class Node:
    """A query node; ``children[k]`` follows the completion with index k
    over the node's stars (star j of the restriction is bit j-1)."""

    rho: Restriction
    children: tuple

    def __post_init__(self):
        if len(self.children) != 1 << self.rho.width:
            raise ArgumentError(f"node {self.rho} needs {1 << self.rho.width} children, "
                                f"got {len(self.children)}")


DecisionTree = Union[Leaf, Node]


def depth(t: DecisionTree) -> int:
    if isinstance(t, Leaf):
        return 0
    return 1 + max(depth(c) for c in t.children)


def max_path_width(t: DecisionTree) -> int:
    if isinstance(t, Leaf):
        return 0
    return t.rho.width + max(max_path_width(c) for c in t.children)


def leaves(t: DecisionTree, path: tuple = ()) -> dict[tuple, str]:
    """Leaf verdicts keyed by their path of completion indices from the root."""
    if isinstance(t, Leaf):
        return {path: t.verdict}
    out = {}
    for k, child in enumerate(t.children):
        out.update(leaves(child, path + (k,)))
    return out


def _completion_key(k: int, width: int) -> str:
    return "".join(str((k >> j) & 1) for j in range(width))


def tree_to_json(t: DecisionTree) -> dict:
    if isinstance(t, Leaf):
        return {"leaf": t.verdict}
    w = t.rho.width
    return {"rho": str(t.rho),
            "children": {_completion_key(k, w): tree_to_json(c) for k, c in enumerate(t.children)}}


def tree_from_json(obj: Mapping) -> DecisionTree:
    try:
        if "leaf" in obj:
            return Leaf(obj["leaf"])
        rho = Restriction.from_string(obj["rho"])
        raw = obj["children"]
        w = rho.width
        keys = [_completion_key(k, w) for k in range(1 << w)]
        if set(raw) != set(keys):
            raise LoadError(f"node {rho} must have children keyed {keys}")
        return Node(rho, tuple(tree_from_json(raw[key]) for key in keys))
    except (KeyError, TypeError, ArgumentError) as exc:
        raise LoadError(f"malformed decision tree: {exc}") from exc


def save_tree(t: DecisionTree, path) -> None:
    Path(path).write_text(json.dumps(tree_to_json(t)) + "\n", encoding="utf-8")


def load_tree(path) -> DecisionTree:
    try:
        return tree_from_json(json.loads(Path(path).read_text(encoding="utf-8")))
    except (OSError, json.JSONDecodeError) as exc:
        raise LoadError(f"cannot read tree {path}: {exc}") from exc


def replay_leaf(t: DecisionTree, samples) -> tuple:
    """Path to the leaf reached when node number c reads sample c on its stars."""
    path = []
    counter = 0
    while isinstance(t, Node):
        if counter >= len(samples):
            raise ArgumentError(f"ran out of samples after {counter} nodes")
        x = tuple(samples[counter])
        if len(x) != t.rho.n:
            raise ArgumentError(f"sample has {len(x)} coordinates, tree expects {t.rho.n}")
        k = hc.index(t.rho.restrict(x)) if t.rho.width else 0
        path.append(k)
        t = t.children[k]
        counter += 1
    return tuple(path)


def replay_iid(t: DecisionTree, samples) -> str:
    node = t
    for k in replay_leaf(t, samples):
        node = node.children[k]
    return node.verdict


def marginal(p: Distribution, coords) -> Distribution:
    """Law of x restricted to ``coords`` (1-based, increasing) for x ~ p."""
    coords = list(coords)
    if isinstance(p, ProductDistribution):
        if p.exact_mu is not None:
            return ProductDistribution([p.exact_mu[i - 1] for i in coords])
        return ProductDistribution(p.mu[[i - 1 for i in coords]])
    e = p.to_explicit()
    idx = np.arange(1 << e.n, dtype=np.int64)
    local = np.zeros_like(idx)
    for k, i in enumerate(coords):
        local |= ((idx >> (i - 1)) & 1) << k
    return ExplicitDistribution(np.bincount(local, weights=e.mass, minlength=1 << len(coords)))


def leaf_distribution(t: DecisionTree, p: Distribution, mode: str = "subcube") -> dict[tuple, float]:
    """Exact probability of reaching each leaf.

    ``subcube``: each node draws from p conditioned on its restriction.
    ``iid``: each node reads a fresh sample of p on its free coordinates,
    i.e. draws from the marginal of p there.
    """
    if mode not in ("subcube", "iid"):
        raise ArgumentError(f"mode must be 'subcube' or 'iid', not {mode!r}")
    if depth(t) > MAX_EXACT_DEPTH or max_path_width(t) > MAX_EXACT_WIDTH:
        raise ArgumentError("tree exceeds the exact-enumeration caps "
                            f"(depth {MAX_EXACT_DEPTH}, path width {MAX_EXACT_WIDTH}); "
                            "use leaf_distribution_mc")
    out: dict[tuple, float] = {}

    def walk(node, path, prob):
        if isinstance(node, Leaf):
            out[path] = out.get(path, 0.0) + prob
            return
        if prob == 0.0:
            for k, child in enumerate(node.children):
                walk(child, path + (k,), 0.0)
            return
        rho = node.rho
        if mode == "subcube":
            law = p.conditional(rho)
        else:
            law = marginal(p, rho.stars)
        weights = law.pmf_indices(np.arange(1 << rho.width)) if rho.width else np.ones(1)
        if mode == "subcube" and rho.width == 0 and p.pmf(rho.complete(())) <= 0.0:
            raise EmptySubcubeError(f"subcube {rho} has zero mass")
        for k, child in enumerate(node.children):
            walk(child, path + (k,), prob * float(weights[k]))

    walk(t, (), 1.0)
    return out


def leaf_distribution_mc(t: DecisionTree, p: Distribution, mode: str, trials: int,
                         rng: RandomStream) -> dict[tuple, float]:
    """Monte Carlo leaf frequencies for trees beyond the exact caps."""
    counts: Counter = Counter()
    for _ in range(trials):
        if mode == "iid":
            samples = [p.sample(rng) for _ in range(max(depth(t), 1))]
            counts[replay_leaf(t, samples)] += 1
            continue
        node, path = t, []
        oracle = SubcubeOracle(p)
        while isinstance(node, Node):
            x = oracle.query(node.rho, rng)
            k = hc.index(node.rho.restrict(x)) if node.rho.width else 0
            path.append(k)
            node = node.children[k]
        counts[tuple(path)] += 1
    return {path: c / trials for path, c in counts.items()}


def random_tree(n: int, max_depth: int, rng: RandomStream, star_prob: float = 0.4,
                leaf_prob: float = 0.25) -> DecisionTree:
    """A random decision tree over {-1,+1}^n, for equivalence checks."""
    if max_depth == 0 or rng.random() < leaf_prob:
        return Leaf("accept" if rng.random() < 0.5 else "reject")
    pattern = tuple(hc.STAR if rng.random() < star_prob else int(rng.choice((-1, 1)))
                    for _ in range(n))
    rho = Restriction(pattern)
    return Node(rho, tuple(random_tree(n, max_depth - 1, rng, star_prob, leaf_prob)
                           for _ in range(1 << rho.width)))
