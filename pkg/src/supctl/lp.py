"""Exact rational linear programming: minimize c'x subject to Ax <= b, x >= 0.

A dense two-phase tableau simplex over ``Fraction`` with Bland's pivot rule,
which is anti-cycling and makes the solver fully deterministic.  Intended for
desk-scale problems (tens of variables); exactness matters more than speed
here because optimality certificates feed exact-equality tests downstream.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from supctl.jobs import ContractError

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class LinearProgram:
    c: tuple[Fraction, ...]
    a_rows: tuple[tuple[Fraction, ...], ...]
    b: tuple[Fraction, ...]

    @classmethod
    def build(cls, c, a_rows, b) -> "LinearProgram":
        c = tuple(Fraction(v) for v in c)
        a_rows = tuple(tuple(Fraction(v) for v in row) for row in a_rows)
        b = tuple(Fraction(v) for v in b)
        if len(a_rows) != len(b):
            raise ContractError("A and b row counts differ")
        for row in a_rows:
            if len(row) != len(c):
                raise ContractError("A column count does not match c")
        return cls(c, a_rows, b)


@dataclass(frozen=True)
class LPSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: tuple[Fraction, ...] | None
    objective: Fraction | None


def _pivot(tableau: list[list[Fraction]], basis: list[int], row: int, col: int) -> None:
    piv = tableau[row][col]
    tableau[row] = [v / piv for v in tableau[row]]
    prow = tableau[row]
    for i, r in enumerate(tableau):
        if i != row and r[col] != 0:
            f = r[col]
            tableau[i] = [a - f * p for a, p in zip(r, prow)]
    basis[row] = col


def _run_simplex(tableau: list[list[Fraction]], basis: list[int], allowed: int) -> str:
    """Pivot to optimality over columns [0, allowed); Bland's rule throughout."""
    m = len(tableau) - 1
    while True:
        obj = tableau[-1]
        col = next((j for j in range(allowed) if obj[j] < 0), None)
        if col is None:
            return "optimal"
        row = None
        best_ratio = None
        for i in range(m):
            coeff = tableau[i][col]
            if coeff > 0:
                ratio = tableau[i][-1] / coeff
                if (
                    best_ratio is None
                    or ratio < best_ratio
                    or (ratio == best_ratio and basis[i] < basis[row])
                ):
                    best_ratio = ratio
                    row = i
        if row is None:
            return "unbounded"
        _pivot(tableau, basis, row, col)


def solve_lp(p: LinearProgram) -> LPSolution:
    """Optimal basic solution, or an infeasible/unbounded status."""
    n = len(p.c)
    m = len(p.a_rows)
    if m == 0:
        if all(v >= 0 for v in p.c):
            return LPSolution("optimal", tuple(ZERO for _ in range(n)), ZERO)
        return LPSolution("unbounded", None, None)

    # columns: n originals, m slacks, then one artificial per negative-rhs row
    neg_rows = [i for i in range(m) if p.b[i] < 0]
    n_art = len(neg_rows)
    width = n + m + n_art
    art_col = {r: n + m + k for k, r in enumerate(neg_rows)}
    tableau: list[list[Fraction]] = []
    basis: list[int] = []
    for i in range(m):
        row = list(p.a_rows[i]) + [ZERO] * (m + n_art) + [p.b[i]]
        row[n + i] = ONE
        if i in art_col:
            # flip the row so the artificial can start basic with positive rhs
            row = [-v for v in row]
            row[art_col[i]] = ONE
            basis.append(art_col[i])
        else:
            basis.append(n + i)
        tableau.append(row)

    if n_art:
        phase1 = [ZERO] * (width + 1)
        for r in neg_rows:
            phase1[art_col[r]] = ONE
        tableau.append(phase1)
        for i, b in enumerate(basis):
            if b >= n + m and tableau[-1][b] != 0:
                f = tableau[-1][b]
                tableau[-1] = [a - f * v for a, v in zip(tableau[-1], tableau[i])]
        status = _run_simplex(tableau, basis, width)
        if status != "optimal" or tableau[-1][-1] != 0:
            return LPSolution("infeasible", None, None)
        tableau.pop()
        # drive leftover artificials out of the basis
        drop = []
        for i, b in enumerate(basis):
            if b >= n + m:
                col = next((j for j in range(n + m) if tableau[i][j] != 0), None)
                if col is None:
                    drop.append(i)
                else:
                    _pivot(tableau, basis, i, col)
        for i in sorted(drop, reverse=True):
            del tableau[i]
            del basis[i]

    obj = [Fraction(v) for v in p.c] + [ZERO] * (width - n) + [ZERO]
    tableau.append(obj)
    for i, b in enumerate(basis):
        if tableau[-1][b] != 0:
            f = tableau[-1][b]
            tableau[-1] = [a - f * v for a, v in zip(tableau[-1], tableau[i])]
    status = _run_simplex(tableau, basis, n + m)
    if status == "unbounded":
        return LPSolution("unbounded", None, None)
    x = [ZERO] * n
    for i, b in enumerate(basis):
        if b < n:
            x[b] = tableau[i][-1]
    objective = sum((cv * xv for cv, xv in zip(p.c, x)), ZERO)
    return LPSolution("optimal", tuple(x), objective)
