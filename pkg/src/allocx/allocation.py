"""Deterministic and random allocations with exact rational arithmetic.

Everything is a ``fractions.Fraction``; no floating point enters the
toolkit anywhere.  The object model stores an agent-by-column matrix whose
columns are the declared objects plus ``@``; the abstract model stores a
lottery over allocation labels.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Union

from .model import (
    OUTSIDE,
    AllocationSpace,
    Profile,
    UnknownLabelError,
)

Rational = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def rational(value: Union[int, str, Fraction]) -> Fraction:
    """Parse ``"11/12"``, ``"1"`` or pass a Fraction through."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        raise TypeError("floating point is banned here; use strings or Fractions")
    return Fraction(value.strip())


def format_rational(x: Fraction) -> str:
    """Canonical text form: ``num/den``, or ``num`` for integers."""
    if x.denominator == 1:
        return str(x.numerator)
    return f"{x.numerator}/{x.denominator}"


# ---------------------------------------------------------------------------
# Object-model allocations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeterministicAssignment:
    """One object (or ``@``) per agent."""

    items: tuple[tuple[str, str], ...]  # (agent, object-or-@), agent-sorted

    def __post_init__(self) -> None:
        agents = [a for a, _ in self.items]
        if len(set(agents)) != len(agents):
            raise ValueError("duplicate agent in assignment")
        object.__setattr__(self, "items", tuple(sorted(self.items)))

    @staticmethod
    def make(mapping: Mapping[str, str]) -> "DeterministicAssignment":
        return DeterministicAssignment(tuple(mapping.items()))

    def of(self, agent: str) -> str:
        for a, o in self.items:
            if a == agent:
                return o
        raise UnknownLabelError(agent)

    def as_dict(self) -> dict[str, str]:
        return dict(self.items)

    def __str__(self) -> str:
        return " ".join(f"{a}={o}" for a, o in self.items)


@dataclass(frozen=True)
class RandomAssignment:
    """Agent-by-column matrix of exact probabilities.

    Rows sum to one including the ``@`` column; every object column stays
    within its quota.  Rows may put mass on unacceptable objects — the IR
    check is a separate predicate, so broken mechanisms are representable.
    """

    agents: tuple[str, ...]
    rows: tuple[tuple[tuple[str, Fraction], ...], ...]

    def __post_init__(self) -> None:
        if len(self.agents) != len(self.rows):
            raise ValueError("one row per agent required")

    @staticmethod
    def make(
        profile: Profile, rows: Mapping[str, Mapping[str, Fraction]]
    ) -> "RandomAssignment":
        declared = set(profile.object_labels) | {OUTSIDE}
        packed = []
        for agent in profile.agents:
            row = dict(rows.get(agent, {}))
            total = ZERO
            entries = []
            for col in sorted(row):
                weight = row[col]
                if col not in declared:
                    raise UnknownLabelError(col)
                if weight < 0 or weight > 1:
                    raise ValueError(f"entry ({agent},{col}) = {weight} outside [0,1]")
                if weight != 0:
                    entries.append((col, weight))
                total += weight
            if total != 1:
                raise ValueError(f"row of {agent!r} sums to {total}, expected 1")
            packed.append(tuple(entries))
        result = RandomAssignment(agents=profile.agents, rows=tuple(packed))
        for o in profile.object_labels:
            mass = column_mass(result, o)
            if mass > profile.quota(o):
                raise ValueError(f"column {o!r} exceeds quota: {mass}")
        return result

    @staticmethod
    def from_deterministic(
        profile: Profile, det: DeterministicAssignment
    ) -> "RandomAssignment":
        return RandomAssignment.make(
            profile, {a: {det.of(a): ONE} for a in profile.agents}
        )

    def get(self, agent: str, col: str) -> Fraction:
        try:
            row = self.rows[self.agents.index(agent)]
        except ValueError:
            raise UnknownLabelError(agent) from None
        for c, w in row:
            if c == col:
                return w
        return ZERO

    def row(self, agent: str) -> dict[str, Fraction]:
        try:
            return dict(self.rows[self.agents.index(agent)])
        except ValueError:
            raise UnknownLabelError(agent) from None

    def is_deterministic(self) -> bool:
        return all(w in (ZERO, ONE) for row in self.rows for _, w in row)

    def to_deterministic(self) -> DeterministicAssignment:
        if not self.is_deterministic():
            raise ValueError("assignment is properly random")
        out = {}
        for agent, row in zip(self.agents, self.rows):
            cols = [c for c, w in row if w == ONE]
            out[agent] = cols[0] if cols else OUTSIDE
        return DeterministicAssignment.make(out)


def column_mass(p: RandomAssignment, o: str) -> Fraction:
    return sum((w for row in p.rows for c, w in row if c == o), ZERO)


Allocation = Union[RandomAssignment, "Lottery"]


# ---------------------------------------------------------------------------
# Lotteries (either over deterministic assignments or allocation labels)
# ---------------------------------------------------------------------------


LotteryKey = Union[str, DeterministicAssignment]


@dataclass(frozen=True)
class Lottery:
    """Probability distribution over deterministic outcomes.

    Keys are allocation labels in the abstract model and
    ``DeterministicAssignment`` values in the object model.
    """

    points: tuple[tuple[LotteryKey, Fraction], ...]

    def __post_init__(self) -> None:
        total = ZERO
        seen = set()
        for key, weight in self.points:
            if weight <= 0:
                raise ValueError(f"lottery weight {weight} must be positive")
            if key in seen:
                raise ValueError(f"duplicate lottery point {key!r}")
            seen.add(key)
            total += weight
        if total != 1:
            raise ValueError(f"lottery weights sum to {total}, expected 1")

    @staticmethod
    def make(mapping: Mapping[LotteryKey, Fraction]) -> "Lottery":
        points = [(k, w) for k, w in mapping.items() if w != 0]
        points.sort(key=lambda kw: str(kw[0]))
        return Lottery(tuple(points))

    def mass(self, keys: Iterable[LotteryKey]) -> Fraction:
        wanted = set(keys)
        return sum((w for k, w in self.points if k in wanted), ZERO)

    def support(self) -> tuple[LotteryKey, ...]:
        return tuple(k for k, _ in self.points)


# ---------------------------------------------------------------------------
# Sizes
# ---------------------------------------------------------------------------


def participation_size(
    p: Allocation, agent: str, space: Optional[AllocationSpace] = None
) -> Fraction:
    """The agent's probability of being a participant (of getting an object)."""
    if isinstance(p, RandomAssignment):
        return ONE - p.get(agent, OUTSIDE)
    if space is None:
        raise ValueError("abstract lotteries need their AllocationSpace")
    if agent not in space.agents:
        raise UnknownLabelError(agent)
    own = space.participating(agent)
    return p.mass(own)


def total_size(p: Allocation, space: Optional[AllocationSpace] = None) -> Fraction:
    agents = p.agents if isinstance(p, RandomAssignment) else (space.agents if space else ())
    if not agents:
        raise ValueError("abstract lotteries need their AllocationSpace")
    return sum((participation_size(p, a, space) for a in agents), ZERO)


def welfare_size(
    p: Allocation,
    agent: str,
    context: Union[Profile, AllocationSpace],
) -> Fraction:
    """Probability mass strictly above the outside option.

    In the object model (no indifference with ``@``) this collapses to the
    mass on acceptable objects; in abstract spaces, allocations tied with
    the outside option participate but do not count.
    """
    if isinstance(p, RandomAssignment):
        pref = context.pref(agent)
        row = p.row(agent)
        return sum((w for o, w in row.items() if o in pref.acceptable), ZERO)
    return p.mass(context.strictly_acceptable(agent))


# ---------------------------------------------------------------------------
# Birkhoff–von Neumann bridge
# ---------------------------------------------------------------------------


class DecompositionError(RuntimeError):
    """Internal failure of the decomposition; always a bug, never an input issue."""


def bvn_decompose(p: RandomAssignment, profile: Profile) -> Lottery:
    """Write ``p`` as an exact lottery over quota-respecting assignments.

    Repeatedly extracts a deterministic assignment supported on the
    positive entries (objects matched within quota via augmenting paths,
    ``@`` treated as an unlimited column) and subtracts the largest weight
    that keeps the residual decomposable.
    """
    agents = list(p.agents)
    quotas = dict(profile.objects)
    residual: dict[str, dict[str, Fraction]] = {a: dict(p.row(a)) for a in agents}
    remaining = ONE  # common row sum of the residual
    points: dict[DeterministicAssignment, Fraction] = {}

    while remaining > 0:
        det = _support_assignment(agents, quotas, residual, remaining)
        used: dict[str, int] = {}
        for a in agents:
            col = det[a]
            if col != OUTSIDE:
                used[col] = used.get(col, 0) + 1
        # Largest step keeping every column within quota * (new row sum).
        step = min(residual[a][det[a]] for a in agents)
        for o, q in quotas.items():
            u = used.get(o, 0)
            if u < q:
                col = _column_total(residual, o)
                slack = q * remaining - col
                bound_num = slack
                bound_den = q - u
                bound = bound_num / bound_den
                if bound < step:
                    step = bound
        if step <= 0:
            raise DecompositionError("no progress possible; invariant broken")
        assignment = DeterministicAssignment.make(det)
        points[assignment] = points.get(assignment, ZERO) + step
        for a in agents:
            col = det[a]
            residual[a][col] -= step
            if residual[a][col] == 0:
                del residual[a][col]
        remaining -= step

    return Lottery.make(points)


def _column_total(residual: Mapping[str, Mapping[str, Fraction]], o: str) -> Fraction:
    return sum((row.get(o, ZERO) for row in residual.values()), ZERO)


def _support_assignment(
    agents: list[str],
    quotas: Mapping[str, int],
    residual: Mapping[str, Mapping[str, Fraction]],
    remaining: Fraction,
) -> dict[str, str]:
    """One column per agent from the residual support, quotas respected.

    Columns tight against ``quota * remaining`` must be used at full quota
    or the residual stops being decomposable.  The constraint system is
    totally unimodular, so a basic feasible point of the exact LP is the
    required deterministic assignment; ``residual / remaining`` witnesses
    feasibility.
    """
    from . import lp

    entries: list[tuple[str, str]] = []
    for a in agents:
        for col in sorted(residual[a]):
            entries.append((a, col))
    index = {e: j for j, e in enumerate(entries)}

    rows: list[tuple[dict, str, Fraction]] = []
    for a in agents:
        coeffs = {index[(a, col)]: ONE for col in residual[a]}
        rows.append((coeffs, lp.EQ, ONE))
    for o in sorted(quotas):
        coeffs = {index[(a, o)]: ONE for a in agents if o in residual[a]}
        if not coeffs:
            continue
        tight = _column_total(residual, o) == quotas[o] * remaining
        rows.append((coeffs, lp.EQ if tight else lp.LE, Fraction(quotas[o])))

    vertex = lp.feasible_vertex(len(entries), rows)
    if vertex is None:
        raise DecompositionError("no support assignment; invariant broken")
    match: dict[str, str] = {}
    for (a, col), j in index.items():
        v = vertex[j]
        if v == ONE:
            match[a] = col
        elif v != 0:
            raise DecompositionError("fractional vertex from an integral system")
    if len(match) != len(agents):
        raise DecompositionError("support assignment left an agent uncovered")
    return match


def marginal(lottery: Lottery, profile: Profile) -> RandomAssignment:
    """Exact marginal matrix of a lottery over deterministic assignments."""
    rows: dict[str, dict[str, Fraction]] = {a: {} for a in profile.agents}
    for det, weight in lottery.points:
        if not isinstance(det, DeterministicAssignment):
            raise TypeError("marginal() needs an object-model lottery")
        for agent in profile.agents:
            col = det.of(agent)
            rows[agent][col] = rows[agent].get(col, ZERO) + weight
    return RandomAssignment.make(profile, rows)
