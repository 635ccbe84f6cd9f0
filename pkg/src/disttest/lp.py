"""Dense-tableau two-phase primal simplex with Bland's rule.

Solves ``min c.x  s.t.  A_ub x <= b_ub,  A_eq x = b_eq,  x >= 0``.
Bland's rule (lowest-index entering column, lowest-index leaving basic
variable among ratio ties) rules out cycling on the highly degenerate
monotonicity programs. Sized for a few thousand columns.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SolverError

FEAS_TOL = 1e-9
PIVOT_TOL = 1e-12


@dataclass
class LPResult:
    x: np.ndarray
    value: float
    pivots: int


def _pivot(T: np.ndarray, r: int, c: int) -> None:
    T[r] /= T[r, c]
    col = T[:, c].copy()
    col[r] = 0.0
    rows = np.flatnonzero(col)
    if rows.size == 0:
        return
    cols = np.flatnonzero(T[r])
    if cols.size * 2 < T.shape[1]:
        T[np.ix_(rows, cols)] -= np.outer(col[rows], T[r, cols])
    else:
        T[rows] -= np.outer(col[rows], T[r])


def _run(T: np.ndarray, basis: list[int], allowed: int, max_pivots: int) -> int:
    """Iterate on tableau T (objective in the last row) until optimal."""
    pivots = 0
    m = T.shape[0] - 1
    while True:
        reduced = T[-1, :allowed]
        entering = np.flatnonzero(reduced < -FEAS_TOL)
        if entering.size == 0:
            return pivots
        c = int(entering[0])
        column = T[:m, c]
        pos = np.flatnonzero(column > PIVOT_TOL)
        if pos.size == 0:
            raise SolverError("linear program is unbounded")
        ratios = T[pos, -1] / column[pos]
        best = ratios.min()
        ties = pos[ratios <= best + FEAS_TOL * max(1.0, abs(best))]
        r = int(min(ties, key=lambda row: basis[row]))
        _pivot(T, r, c)
        basis[r] = c
        pivots += 1
        if pivots > max_pivots:
            raise SolverError("simplex pivot limit exceeded")


def solve(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, max_pivots: int = 200_000) -> LPResult:
    c = np.asarray(c, dtype=np.float64)
    nvar = c.size
    A_ub = np.zeros((0, nvar)) if A_ub is None else np.asarray(A_ub, dtype=np.float64)
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=np.float64)
    A_eq = np.zeros((0, nvar)) if A_eq is None else np.asarray(A_eq, dtype=np.float64)
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=np.float64)
    m_ub, m_eq = A_ub.shape[0], A_eq.shape[0]
    m = m_ub + m_eq

    # columns: original | slacks | artificials | rhs
    rows = np.zeros((m, nvar + m_ub))
    rhs = np.concatenate([b_ub, b_eq])
    rows[:m_ub, :nvar] = A_ub
    rows[:m_ub, nvar:] = np.eye(m_ub)
    rows[m_ub:, :nvar] = A_eq
    flip = rhs < 0
    rows[flip] *= -1
    rhs = np.abs(rhs)

    basis = [-1] * m
    for r in range(m_ub):
        if not flip[r]:
            basis[r] = nvar + r
    need_art = [r for r in range(m) if basis[r] < 0]
    nstruct = nvar + m_ub
    ncols = nstruct + len(need_art)
    T = np.zeros((m + 1, ncols + 1))
    T[:m, :nstruct] = rows
    T[:m, -1] = rhs
    for k, r in enumerate(need_art):
        T[r, nstruct + k] = 1.0
        basis[r] = nstruct + k

    pivots = 0
    if need_art:
        # phase I objective: sum of artificials, expressed in nonbasic terms
        T[-1, nstruct:ncols] = 1.0
        for r in need_art:
            T[-1] -= T[r]
        pivots += _run(T, basis, ncols, max_pivots)
        if -T[-1, -1] > 1e-7:
            raise SolverError(f"linear program is infeasible (phase I value {-T[-1, -1]:.3g})")
        # drive zero-level artificials out of the basis; drop redundant rows
        keep = []
        for r in range(m):
            if basis[r] >= nstruct:
                cand = np.flatnonzero(np.abs(T[r, :nstruct]) > 1e-9)
                if cand.size == 0:
                    continue
                _pivot(T, r, int(cand[0]))
                basis[r] = int(cand[0])
                pivots += 1
            keep.append(r)
        T = np.vstack([T[keep][:, list(range(nstruct)) + [ncols]], np.zeros((1, nstruct + 1))])
        basis = [basis[r] for r in keep]
        m = len(keep)

    T[-1, :] = 0.0
    T[-1, :nvar] = c
    for r, b in enumerate(basis):
        if T[-1, b] != 0.0:
            T[-1] -= T[-1, b] * T[r]
    pivots += _run(T, basis, nstruct, max_pivots)

    x = np.zeros(nstruct)
    for r, b in enumerate(basis):
        x[b] = T[r, -1]
    x = x[:nvar]
    return LPResult(x=x, value=float(c @ x), pivots=pivots)
