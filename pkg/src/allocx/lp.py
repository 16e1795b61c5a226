"""Exact-rational linear programming via a two-phase simplex.

Small dense tableaux over ``fractions.Fraction`` with Bland's pivoting
rule: no cycling, fully deterministic, and exact — strict feasibility
questions reduce to "is the optimum positive", answered without epsilons.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

ZERO = Fraction(0)
ONE = Fraction(1)

LE = "<="
GE = ">="
EQ = "=="


class UnboundedError(RuntimeError):
    """The objective is unbounded; in this toolkit that is always a bug."""


@dataclass
class Program:
    """maximize c.x  s.t.  rows, x >= 0."""

    num_vars: int
    objective: dict[int, Fraction] = field(default_factory=dict)
    rows: list[tuple[dict[int, Fraction], str, Fraction]] = field(default_factory=list)

    def add(self, coeffs: dict[int, Fraction], sense: str, rhs: Fraction) -> None:
        if sense not in (LE, GE, EQ):
            raise ValueError(f"bad sense {sense!r}")
        self.rows.append(({k: Fraction(v) for k, v in coeffs.items() if v != 0},
                          sense, Fraction(rhs)))


@dataclass
class Solution:
    feasible: bool
    value: Fraction
    x: tuple[Fraction, ...]


def solve(program: Program) -> Solution:
    """Optimal vertex of the program, or ``feasible=False``.

    Phase one drives artificial variables out of the basis; phase two
    maximizes the objective.  Bland's rule (lowest eligible index) governs
    both entering and leaving choices.
    """
    n = program.num_vars
    rows = []
    senses = []
    for coeffs, sense, rhs in program.rows:
        row = [coeffs.get(j, ZERO) for j in range(n)]
        if rhs < 0:  # normalize to nonnegative rhs
            row = [-v for v in row]
            rhs = -rhs
            sense = {LE: GE, GE: LE, EQ: EQ}[sense]
        rows.append((row, rhs))
        senses.append(sense)

    m = len(rows)
    # column layout: structural | slacks/surpluses | artificials | rhs
    num_slack = sum(1 for s in senses if s in (LE, GE))
    slack_of = {}
    k = 0
    for i, s in enumerate(senses):
        if s in (LE, GE):
            slack_of[i] = n + k
            k += 1
    art_of = {}
    k = 0
    art_rows = []
    for i, s in enumerate(senses):
        # GE and EQ rows need an artificial; LE rows start basic on the slack
        if s in (GE, EQ):
            art_of[i] = n + num_slack + k
            art_rows.append(i)
            k += 1
    num_art = k
    width = n + num_slack + num_art + 1

    tableau = []
    basis = []
    for i, (row, rhs) in enumerate(rows):
        line = [ZERO] * width
        line[:n] = row
        if i in slack_of:
            line[slack_of[i]] = ONE if senses[i] == LE else -ONE
        if i in art_of:
            line[art_of[i]] = ONE
            basis.append(art_of[i])
        else:
            basis.append(slack_of[i])
        line[-1] = rhs
        tableau.append(line)

    def pivot(row_i: int, col_j: int) -> None:
        line = tableau[row_i]
        inv = ONE / line[col_j]
        tableau[row_i] = [v * inv for v in line]
        for r in range(m):
            if r != row_i and tableau[r][col_j] != 0:
                factor = tableau[r][col_j]
                tableau[r] = [
                    a - factor * b for a, b in zip(tableau[r], tableau[row_i])
                ]
        basis[row_i] = col_j

    def run_phase(cost: list[Fraction], allowed: int) -> Fraction:
        # cost row expressed over non-basic columns each iteration
        while True:
            reduced = cost[:]
            offset = ZERO
            for i, b in enumerate(basis):
                cb = cost[b]
                if cb != 0:
                    offset += cb * tableau[i][-1]
                    for j in range(allowed):
                        if tableau[i][j] != 0:
                            reduced[j] -= cb * tableau[i][j]
            enter = -1
            for j in range(allowed):  # Bland: lowest improving index
                if j not in basis and reduced[j] > 0:
                    enter = j
                    break
            if enter < 0:
                return offset
            leave = -1
            best: Optional[Fraction] = None
            for i in range(m):
                a = tableau[i][enter]
                if a > 0:
                    ratio = tableau[i][-1] / a
                    if best is None or ratio < best or (
                        ratio == best and basis[i] < basis[leave]
                    ):
                        best = ratio
                        leave = i
            if leave < 0:
                raise UnboundedError("unbounded linear program")
            pivot(leave, enter)

    if num_art:
        cost1 = [ZERO] * width
        for i in art_rows:
            cost1[art_of[i]] = -ONE
        best = run_phase(cost1, n + num_slack + num_art)
        if best != 0:
            return Solution(False, ZERO, tuple([ZERO] * n))
        # drive leftover artificials out of the basis
        for i in range(m):
            if basis[i] >= n + num_slack:
                for j in range(n + num_slack):
                    if tableau[i][j] != 0:
                        pivot(i, j)
                        break
        # rows still basic on an artificial are identically zero; freeze them
        for i in range(m):
            if basis[i] >= n + num_slack:
                tableau[i] = [ZERO] * width

    cost2 = [ZERO] * width
    for j, c in program.objective.items():
        cost2[j] = Fraction(c)
    value = run_phase(cost2, n + num_slack)

    x = [ZERO] * n
    for i, b in enumerate(basis):
        if b < n:
            x[b] = tableau[i][-1]
    return Solution(True, value, tuple(x))


def feasible_vertex(
    num_vars: int, rows: Sequence[tuple[dict[int, Fraction], str, Fraction]]
) -> Optional[tuple[Fraction, ...]]:
    """A basic feasible point of the system, or None.

    With a totally unimodular system and integer right-hand sides the
    returned vertex is integral — which is how the decomposition step
    extracts deterministic assignments.
    """
    program = Program(num_vars=num_vars)
    for coeffs, sense, rhs in rows:
        program.add(coeffs, sense, rhs)
    sol = solve(program)
    return sol.x if sol.feasible else None
