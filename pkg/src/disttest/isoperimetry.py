"""Directed gradients, threshold decompositions and distances to monotonicity.

Real functions on {-1,+1}^n are value tables in canonical index order.
Distances use the uniform measure on the cube:

* ``dist0_boolean``: Hamming distance of a Boolean function to the nearest
  monotone Boolean function, as a minimum cut (monotone Boolean functions
  are indicators of up-closed sets).
* ``dist1_real``: L1 distance of a real function to the nearest monotone
  function, as an integral of ``dist0_boolean`` over thresholds.
* ``dist1_lp``: the same quantity from the isotonic-regression LP, kept as
  an independent check.
* ``dist_tv_monotone``: total-variation distance of a distribution to the
  nearest monotone distribution, by LP.
"""

from __future__ import annotations

import json
from fractions import Fraction
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import breadth_first_order, maximum_flow

from . import hypercube as hc
from . import lp
from .distributions import Distribution, ExplicitDistribution
from .errors import ArgumentError, LoadError, SolverError
from .hypercube import Point

MAX_EXACT_DIM = 12
MAX_LP_DIM = 8
MAX_FUNCTIONAL_DIM = 20


@dataclass(frozen=True)
class RealFunction:
    values: np.ndarray
    boolean: bool = False

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64).ravel()
        size = values.size
        if size == 0 or size & (size - 1):
            raise ArgumentError(f"value table length {size} is not a power of two")
        if not np.all(np.isfinite(values)):
            raise ArgumentError("function values must be finite")
        if self.boolean and not np.all((values == 0.0) | (values == 1.0)):
            raise ArgumentError("Boolean functions take values in {0, 1}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return self.values.size.bit_length() - 1

    @classmethod
    def from_distribution(cls, p: Distribution) -> "RealFunction":
        return cls(p.to_explicit().mass)

    @classmethod
    def boolean_from_bits(cls, code: int, n: int) -> "RealFunction":
        """The Boolean function whose truth table is the bits of ``code``."""
        return cls([(code >> k) & 1 for k in range(1 << n)], boolean=True)

    def __call__(self, x: Point) -> float:
        return float(self.values[hc.index(x)])

    def is_boolean_valued(self) -> bool:
        return bool(np.all((self.values == 0.0) | (self.values == 1.0)))


def function_to_dict(f: RealFunction) -> dict:
    return {"kind": "function", "n": f.n, "boolean": f.boolean, "values": f.values.tolist()}


def function_from_dict(obj) -> RealFunction:
    try:
        if obj["kind"] != "function":
            raise LoadError(f"expected a function record, got kind {obj['kind']!r}")
        f = RealFunction(obj["values"], boolean=bool(obj.get("boolean", False)))
    except (KeyError, TypeError, ArgumentError) as exc:
        raise LoadError(f"malformed function record: {exc}") from exc
    if f.n != obj["n"]:
        raise LoadError(f"function record declares n = {obj['n']} but has {f.values.size} values")
    return f


def save_function(f: RealFunction, path) -> None:
    Path(path).write_text(json.dumps(function_to_dict(f)) + "\n", encoding="utf-8")


def load_function(path) -> RealFunction:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise LoadError(f"cannot read function {path}: {exc}") from exc
    return function_from_dict(obj)


def _as_function(f) -> RealFunction:
    if isinstance(f, RealFunction):
        return f
    if isinstance(f, Distribution):
        return RealFunction.from_distribution(f)
    return RealFunction(f)


def _up_edges(n: int) -> tuple[np.ndarray, np.ndarray]:
    """All hypercube edges (x, y) with y = x flipped up in one coordinate."""
    idx = np.arange(1 << n, dtype=np.int64)
    lows, highs = [], []
    for pos in range(n):
        low = idx[((idx >> pos) & 1) == 0]
        lows.append(low)
        highs.append(low | (1 << pos))
    if not lows:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    return np.concatenate(lows), np.concatenate(highs)


# -- gradients and thresholds --------------------------------------------------

def gradient_table(f) -> np.ndarray:
    """Row x holds the directed gradient at point index x: entry i-1 is
    (f(x) - f(x^(i)))^+ when x_i = -1 and 0 otherwise."""
    f = _as_function(f)
    n = f.n
    idx = np.arange(1 << n, dtype=np.int64)
    out = np.zeros((1 << n, n))
    for pos in range(n):
        down = ((idx >> pos) & 1) == 0
        drop = f.values[idx[down]] - f.values[idx[down] | (1 << pos)]
        out[down, pos] = np.maximum(drop, 0.0)
    return out


def directed_gradient(f, x: Point) -> np.ndarray:
    f = _as_function(f)
    if len(x) != f.n:
        raise ArgumentError(f"dimension mismatch: point has {len(x)} coordinates, "
                            f"function has {f.n}")
    k = hc.index(x)
    out = np.zeros(f.n)
    for pos in range(f.n):
        if not (k >> pos) & 1:
            out[pos] = max(f.values[k] - f.values[k | (1 << pos)], 0.0)
    return out


def threshold(f, t: float) -> RealFunction:
    """The Boolean function x -> [f(x) >= t]."""
    f = _as_function(f)
    return RealFunction((f.values >= t).astype(np.float64), boolean=True)


def normalize(f) -> tuple[RealFunction, float, float]:
    """Affine rescaling onto [0, 1]: returns (g, alpha, beta) with f = alpha*g + beta.

    Constant functions map to the zero function with alpha = 1.
    """
    f = _as_function(f)
    lo, hi = float(f.values.min()), float(f.values.max())
    if hi == lo:
        return RealFunction(np.zeros_like(f.values)), 1.0, lo
    return RealFunction((f.values - lo) / (hi - lo)), hi - lo, lo


def threshold_levels(values) -> list[tuple[float, float]]:
    """Intervals (lo, hi] of t in [0, 1] on which f_t is constant.

    Breakpoints are the distinct values in [0, 1] together with 0 and 1; on
    (lo, hi] the threshold function equals f_hi.
    """
    vals = np.asarray(values, dtype=np.float64)
    points = np.unique(np.concatenate([[0.0, 1.0], vals[(vals >= 0.0) & (vals <= 1.0)]]))
    return [(float(a), float(b)) for a, b in zip(points[:-1], points[1:])]


def threshold_decomposition(f) -> list[tuple[float, RealFunction]]:
    """(interval length, f_t) pairs covering t in (0, 1]; f must map into [0, 1]."""
    f = _as_function(f)
    if f.values.min() < 0.0 or f.values.max() > 1.0:
        raise ArgumentError("threshold decomposition needs values in [0, 1]; normalize first")
    return [(hi - lo, threshold(f, hi)) for lo, hi in threshold_levels(f.values)]


def reconstruct_from_thresholds(f) -> list[Fraction]:
    """Sum of (interval length) * f_t in exact rational arithmetic; equals f
    pointwise, with no rounding."""
    f = _as_function(f)
    out = [Fraction(0)] * f.values.size
    for lo, hi in threshold_levels(f.values):
        weight = Fraction(hi) - Fraction(lo)
        for k in np.flatnonzero(f.values >= hi):
            out[k] += weight
    return out


# -- Boolean distance via minimum cut -----------------------------------------

def dist0_boolean(f, return_closure: bool = False):
    """Fraction of points to change to make a Boolean f monotone.

    Source edges (capacity 1) enter every point with f = 1, sink edges
    (capacity 1) leave every point with f = 0, and each hypercube edge x -> y
    with y above x gets capacity larger than any finite cut, so the source
    side of a cut is up-closed. The minimum cut counts the disagreements
    between f and the indicator of the best up-closed set.
    """
    f = _as_function(f)
    if not f.is_boolean_valued():
        raise ArgumentError("dist0_boolean needs a {0,1}-valued function")
    n = f.n
    if n > MAX_EXACT_DIM:
        raise ArgumentError(f"dist0_boolean is capped at n = {MAX_EXACT_DIM}")
    N = 1 << n
    source, sink = N, N + 1
    ones = np.flatnonzero(f.values == 1.0)
    zeros = np.flatnonzero(f.values == 0.0)
    if ones.size == 0 or zeros.size == 0:
        closure = f.values.astype(bool)
        return (0.0, closure) if return_closure else 0.0
    low, high = _up_edges(n)
    big = N + 1
    tails = np.concatenate([np.full(ones.size, source), zeros, low])
    heads = np.concatenate([ones, np.full(zeros.size, sink), high])
    caps = np.concatenate([np.ones(ones.size), np.ones(zeros.size),
                           np.full(low.size, big)]).astype(np.int32)
    graph = csr_matrix((caps, (tails, heads)), shape=(N + 2, N + 2))
    result = maximum_flow(graph, source, sink)
    value = int(result.flow_value)
    if not return_closure:
        return value / N
    flow = result.flow.tocsr() if hasattr(result, "flow") else result.residual.tocsr()
    residual = (graph - flow).tocsr()
    reverse = flow.T.tocsr()
    reachable_graph = (residual.maximum(0) + reverse.maximum(0)).tocsr()
    reachable_graph.eliminate_zeros()
    order = breadth_first_order(reachable_graph, source, directed=True,
                                return_predecessors=False)
    closure = np.zeros(N, dtype=bool)
    closure[order[order < N]] = True
    return value / N, closure


def dist0_brute_force(f) -> float:
    """Minimum over all monotone Boolean functions; exponential, n <= 4 only."""
    f = _as_function(f)
    n = f.n
    if n > 4:
        raise ArgumentError("brute force is limited to n <= 4")
    best = 1.0
    for g in monotone_boolean_functions(n):
        best = min(best, float(np.mean(g != f.values)))
    return best


_MONOTONE_CACHE: dict[int, list[np.ndarray]] = {}


def monotone_boolean_functions(n: int) -> list[np.ndarray]:
    if n not in _MONOTONE_CACHE:
        N = 1 << n
        low, high = _up_edges(n)
        found = []
        for code in range(1 << N):
            table = (np.int64(code) >> np.arange(N)) & 1
            if np.all(table[low] <= table[high]):
                found.append(table.astype(np.float64))
        _MONOTONE_CACHE[n] = found
    return _MONOTONE_CACHE[n]


# -- real-valued distance --------------------------------------------------------

def dist1_real(f) -> float:
    """min over monotone g of E_x |f(x) - g(x)|, via the threshold integral."""
    f = _as_function(f)
    if f.n > MAX_EXACT_DIM:
        raise ArgumentError(f"dist1_real is capped at n = {MAX_EXACT_DIM}")
    g, alpha, _ = normalize(f)
    low, high = _up_edges(g.n)
    total = 0.0
    for weight, ft in threshold_decomposition(g):
        if weight == 0.0 or np.all(ft.values[low] <= ft.values[high]):
            continue
        total += weight * dist0_boolean(ft)
    return alpha * total


def _edge_rows(n: int, width: int, offset: int = 0) -> np.ndarray:
    """Rows g_x - g_y <= 0 for every up-edge (x, y), over ``width`` variables."""
    low, high = _up_edges(n)
    rows = np.zeros((low.size, width))
    k = np.arange(low.size)
    rows[k, offset + low] = 1.0
    rows[k, offset + high] = -1.0
    return rows


def dist1_lp(f) -> float:
    """L1 isotonic regression as an LP: min mean e_x, e >= |f - g|, g monotone."""
    f = _as_function(f)
    if f.n > MAX_LP_DIM:
        raise ArgumentError(f"LP distances are capped at n = {MAX_LP_DIM}")
    N = 1 << f.n
    shift = float(f.values.min())
    vals = f.values - shift
    eye = np.eye(N)
    A_ub = np.vstack([np.hstack([-eye, -eye]), np.hstack([eye, -eye]), _edge_rows(f.n, 2 * N)])
    b_ub = np.concatenate([-vals, vals, np.zeros(A_ub.shape[0] - 2 * N)])
    c = np.concatenate([np.zeros(N), np.full(N, 1.0 / N)])
    return lp.solve(c, A_ub=A_ub, b_ub=b_ub).value


def dist_tv_monotone(p: Distribution, return_q: bool = False):
    """Distance in total variation from p to the set of monotone distributions."""
    e = p.to_explicit() if isinstance(p, Distribution) else ExplicitDistribution(p)
    if e.n > MAX_LP_DIM:
        raise ArgumentError(f"LP distances are capped at n = {MAX_LP_DIM}")
    N = 1 << e.n
    eye = np.eye(N)
    A_ub = np.vstack([np.hstack([-eye, -eye]), np.hstack([eye, -eye]), _edge_rows(e.n, 2 * N)])
    b_ub = np.concatenate([-e.mass, e.mass, np.zeros(A_ub.shape[0] - 2 * N)])
    A_eq = np.concatenate([np.ones(N), np.zeros(N)])[None, :]
    c = np.concatenate([np.zeros(N), np.full(N, 0.5)])
    try:
        res = lp.solve(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0])
    except SolverError as exc:
        raise SolverError(f"monotone TV program failed: {exc}") from exc
    value = max(res.value, 0.0)
    return (value, res.x[:N]) if return_q else value


# -- isoperimetric functionals -------------------------------------------------

def talagrand_functional(f, norm: int = 2) -> float:
    """E_x ||grad^- f(x)|| under the uniform measure; norm 1 or 2."""
    if norm not in (1, 2):
        raise ArgumentError(f"norm must be 1 or 2, not {norm}")
    f = _as_function(f)
    if f.n > MAX_FUNCTIONAL_DIM:
        raise ArgumentError(f"functionals are capped at n = {MAX_FUNCTIONAL_DIM}")
    grads = gradient_table(f)
    if norm == 1:
        return float(grads.sum(axis=1).mean())
    return float(np.sqrt((grads ** 2).sum(axis=1)).mean())


def poincare_via_thresholds(f) -> float:
    """E_t of the L1 functional of f_t over the finite threshold partition."""
    return sum(w * talagrand_functional(ft, 1) for w, ft in threshold_decomposition(f))


def _sorted_drops(f: RealFunction, x: Point) -> np.ndarray:
    grad = directed_gradient(f, x)
    pos = np.flatnonzero(grad > 0.0)
    order = np.argsort(-grad[pos], kind="stable")
    return grad[pos][order]


def threshold_weights(d: int) -> np.ndarray:
    """sqrt(i) - sqrt(i-1) for i = 1..d."""
    i = np.arange(1, d + 1, dtype=np.float64)
    return np.sqrt(i) - np.sqrt(i - 1.0)


def cauchy_schwarz_factor(d: int) -> float:
    """sqrt of sum_{i<=d} (sqrt(i) - sqrt(i-1))^2; bounds the threshold norm
    by this multiple of the gradient's Euclidean norm."""
    return float(np.sqrt(np.sum(threshold_weights(d) ** 2)))


def per_point_threshold_norm(f, x: Point) -> float:
    """E_t ||grad^- f_t(x)||_2 in closed form: with a_1 >= ... >= a_d the
    positive drops toward up-neighbours, sum_i a_i (sqrt(i) - sqrt(i-1))."""
    f = _as_function(f)
    a = _sorted_drops(f, x)
    return float(a @ threshold_weights(a.size))


def threshold_integral_norm(f, x: Point) -> float:
    """The same expectation by direct integration over t in [0, 1]."""
    f = _as_function(f)
    k = hc.index(x)
    neighbours = [k] + [k ^ (1 << pos) for pos in range(f.n)]
    total = 0.0
    for lo, hi in threshold_levels(f.values[neighbours]):
        total += (hi - lo) * float(np.linalg.norm(directed_gradient(threshold(f, hi), x)))
    return total


# -- identity checks -----------------------------------------------------------

IDENTITY_TOLERANCES = {
    "threshold_sum_vs_lp": 1e-7,
    "reconstruction": 0.0,
    "threshold_norm_formula": 1e-9,
    "scaling_covariance": 1e-9,
    "cauchy_schwarz": 1e-9,
    "jensen_direction": 1e-9,
    "poincare_exactness": 1e-9,
}


def identity_violations(f, alpha: float, beta: float) -> dict[str, float]:
    """Worst violation of each exact identity or inequality for f on [0, 1]
    (0 means it holds exactly; compare with ``IDENTITY_TOLERANCES``)."""
    f = _as_function(f)
    n = f.n
    out = {"threshold_sum_vs_lp": abs(dist1_real(f) - dist1_lp(f))}
    rebuilt = reconstruct_from_thresholds(f)
    out["reconstruction"] = float(max(abs(r - Fraction(v)) for r, v in zip(rebuilt, f.values)))
    g = RealFunction(alpha * f.values + beta)
    out["scaling_covariance"] = max(
        abs(dist1_real(g) - alpha * dist1_real(f)),
        abs(talagrand_functional(g, 1) - alpha * talagrand_functional(f, 1)),
        abs(talagrand_functional(g, 2) - alpha * talagrand_functional(f, 2)))
    formula = cs = jensen = 0.0
    for k in range(1 << n):
        x = hc.from_index(k, n)
        closed = per_point_threshold_norm(f, x)
        grad = directed_gradient(f, x)
        norm2 = float(np.linalg.norm(grad))
        d = int(np.count_nonzero(grad > 0))
        formula = max(formula, abs(closed - threshold_integral_norm(f, x)))
        cs = max(cs, closed - norm2 * cauchy_schwarz_factor(d),
                 float(np.sum(threshold_weights(d) ** 2) - np.sum(1.0 / np.arange(1, d + 1))))
        jensen = max(jensen, norm2 - closed)
    out["threshold_norm_formula"] = formula
    out["cauchy_schwarz"] = max(cs, 0.0)
    out["jensen_direction"] = max(jensen, 0.0)
    out["poincare_exactness"] = abs(poincare_via_thresholds(f) - talagrand_functional(f, 1))
    return out
