"""Comparison relations and allocation properties, plus LP-backed searches.

All comparisons run on upper-contour masses at indifference-class
thresholds, which covers both representations: object-model matrices are
compared object by object under each agent's ranking, abstract lotteries
allocation by allocation.  The strict searches (``find_*``) encode
"some inequality is strict" as a slack variable maximized by the exact
simplex: an improvement exists iff the optimum is positive.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Optional, Union

from . import lp
from .allocation import (
    ONE,
    ZERO,
    DeterministicAssignment,
    Lottery,
    RandomAssignment,
    column_mass,
    format_rational,
    participation_size,
    welfare_size,
)
from .model import (
    OUTSIDE,
    AllocationSpace,
    Preference,
    Profile,
    far_better_set,
)

Context = Union[Profile, AllocationSpace]
AllocationLike = Union[RandomAssignment, Lottery]


class Relation(enum.Enum):
    FIRST_STRICTLY_DOMINATES = "first-strictly-dominates"
    SECOND_STRICTLY_DOMINATES = "second-strictly-dominates"
    EQUIVALENT = "equivalent"
    INCOMPARABLE = "incomparable"


class AgentRelation(enum.Enum):
    EQUAL = "equal"
    FIRST_BETTER = "first-better"
    SECOND_BETTER = "second-better"
    CROSSED = "crossed"


@dataclass(frozen=True)
class Witness:
    """A checkable certificate for a verdict (usually a negative one)."""

    kind: str
    agent: Optional[str] = None
    threshold: Optional[str] = None
    lhs: Optional[Fraction] = None
    rhs: Optional[Fraction] = None
    note: str = ""

    def line(self) -> str:
        parts = []
        if self.agent is not None:
            parts.append(f"agent {self.agent}")
        if self.threshold is not None:
            parts.append(f"threshold {self.threshold}")
        if self.lhs is not None and self.rhs is not None:
            parts.append(f"{format_rational(self.lhs)} vs {format_rational(self.rhs)}")
        if self.note:
            parts.append(self.note)
        return ", ".join(parts)


@dataclass(frozen=True)
class SdVerdict:
    """Outcome of a pairwise comparison with its per-agent breakdown."""

    kind: str  # "sd" | "size" | "welfare-size" | "pareto"
    relation: Relation
    per_agent: tuple[tuple[str, AgentRelation], ...]
    witness: Optional[Witness] = None

    @property
    def first_weakly_dominates(self) -> bool:
        return self.relation in (
            Relation.FIRST_STRICTLY_DOMINATES,
            Relation.EQUIVALENT,
        )

    @property
    def second_weakly_dominates(self) -> bool:
        return self.relation in (
            Relation.SECOND_STRICTLY_DOMINATES,
            Relation.EQUIVALENT,
        )

    def line(self) -> str:
        head = f"{self.kind.upper()}: {self.relation.value}"
        if self.witness is not None:
            return f"{head} (witness: {self.witness.line()})"
        return head


# ---------------------------------------------------------------------------
# Contour thresholds and masses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Threshold:
    name: str
    columns: frozenset[str]


@lru_cache(maxsize=None)
def object_thresholds(pref: Preference) -> tuple[Threshold, ...]:
    """Upper-contour sets at each indifference class, then at ``@``."""
    out = []
    seen: list[str] = []
    for cls in pref.classes:
        seen.extend(cls)
        out.append(Threshold("~".join(cls), frozenset(seen)))
    out.append(Threshold(OUTSIDE, frozenset(seen) | {OUTSIDE}))
    return tuple(out)


@lru_cache(maxsize=None)
def space_thresholds(space: AllocationSpace, agent: str) -> tuple[Threshold, ...]:
    out = []
    seen: set[str] = set()
    for cls in space.full_classes(agent):
        seen |= cls
        out.append(Threshold("~".join(sorted(cls)), frozenset(seen)))
    return tuple(out)


def thresholds_for(ctx: Context, agent: str) -> tuple[Threshold, ...]:
    if isinstance(ctx, Profile):
        return object_thresholds(ctx.pref(agent))
    return space_thresholds(ctx, agent)


def mass_at(p: AllocationLike, agent: str, columns: Iterable[str]) -> Fraction:
    if isinstance(p, RandomAssignment):
        row = p.row(agent)
        return sum((row.get(c, ZERO) for c in columns), ZERO)
    return p.mass(columns)


def contour_masses(
    p: AllocationLike, agent: str, ctx: Context
) -> tuple[Fraction, ...]:
    return tuple(mass_at(p, agent, t.columns) for t in thresholds_for(ctx, agent))


def _vector_relation(
    mp: tuple[Fraction, ...], mq: tuple[Fraction, ...]
) -> tuple[AgentRelation, Optional[int]]:
    """Pointwise comparison; returns the first strictly-differing index."""
    first = second = None
    for k, (a, b) in enumerate(zip(mp, mq)):
        if a > b and first is None:
            first = k
        if b > a and second is None:
            second = k
    if first is None and second is None:
        return AgentRelation.EQUAL, None
    if second is None:
        return AgentRelation.FIRST_BETTER, first
    if first is None:
        return AgentRelation.SECOND_BETTER, second
    return AgentRelation.CROSSED, min(first, second)


def _aggregate(
    kind: str,
    rows: list[tuple[str, AgentRelation, Optional[Witness]]],
) -> SdVerdict:
    per_agent = tuple((a, r) for a, r, _ in rows)
    kinds = {r for _, r, _ in rows}
    witness = None
    if kinds <= {AgentRelation.EQUAL}:
        relation = Relation.EQUIVALENT
    elif kinds <= {AgentRelation.EQUAL, AgentRelation.FIRST_BETTER}:
        relation = Relation.FIRST_STRICTLY_DOMINATES
        witness = next(w for _, r, w in rows if r is AgentRelation.FIRST_BETTER)
    elif kinds <= {AgentRelation.EQUAL, AgentRelation.SECOND_BETTER}:
        relation = Relation.SECOND_STRICTLY_DOMINATES
        witness = next(w for _, r, w in rows if r is AgentRelation.SECOND_BETTER)
    else:
        relation = Relation.INCOMPARABLE
        witness = next(
            w
            for _, r, w in rows
            if r in (AgentRelation.CROSSED, AgentRelation.FIRST_BETTER)
        )
    return SdVerdict(kind, relation, per_agent, witness)


# ---------------------------------------------------------------------------
# Pairwise comparisons
# ---------------------------------------------------------------------------


def _ctx_agents(ctx: Context) -> tuple[str, ...]:
    return ctx.agents


def sd_compare(p: AllocationLike, q: AllocationLike, ctx: Context) -> SdVerdict:
    """First-order stochastic dominance, agent by agent."""
    _check_same_shape(p, q, ctx)
    rows = []
    for agent in _ctx_agents(ctx):
        ts = thresholds_for(ctx, agent)
        mp = tuple(mass_at(p, agent, t.columns) for t in ts)
        mq = tuple(mass_at(q, agent, t.columns) for t in ts)
        rel, k = _vector_relation(mp, mq)
        wit = None
        if k is not None:
            wit = Witness("sd", agent, ts[k].name, mp[k], mq[k])
        rows.append((agent, rel, wit))
    return _aggregate("sd", rows)


def size_compare(
    p: AllocationLike, q: AllocationLike, ctx: Context
) -> SdVerdict:
    """Componentwise comparison of participation-size vectors."""
    _check_same_shape(p, q, ctx)
    space = ctx if isinstance(ctx, AllocationSpace) else None
    rows = []
    for agent in _ctx_agents(ctx):
        a = participation_size(p, agent, space)
        b = participation_size(q, agent, space)
        rel, _ = _vector_relation((a,), (b,))
        wit = Witness("size", agent, None, a, b) if rel is not AgentRelation.EQUAL else None
        rows.append((agent, rel, wit))
    return _aggregate("size", rows)


def welfare_size_compare(
    p: AllocationLike, q: AllocationLike, ctx: Context
) -> SdVerdict:
    """Like size_compare but counting only mass strictly above ``@``."""
    _check_same_shape(p, q, ctx)
    rows = []
    for agent in _ctx_agents(ctx):
        a = welfare_size(p, agent, ctx)
        b = welfare_size(q, agent, ctx)
        rel, _ = _vector_relation((a,), (b,))
        wit = (
            Witness("welfare-size", agent, None, a, b)
            if rel is not AgentRelation.EQUAL
            else None
        )
        rows.append((agent, rel, wit))
    return _aggregate("welfare-size", rows)


def _check_same_shape(p: AllocationLike, q: AllocationLike, ctx: Context) -> None:
    if isinstance(ctx, Profile):
        if not isinstance(p, RandomAssignment) or not isinstance(q, RandomAssignment):
            raise TypeError("object-model comparison needs RandomAssignments")
        if p.agents != ctx.agents or q.agents != ctx.agents:
            raise ValueError("allocation does not match the profile's agents")
    else:
        if not isinstance(p, Lottery) or not isinstance(q, Lottery):
            raise TypeError("abstract comparison needs Lotteries")


def far_better_thresholds(ctx: Context, agent: str) -> tuple[Threshold, ...]:
    """Thresholds restricted to allocations far better than the outside option."""
    if isinstance(ctx, Profile):
        fb = far_better_set(ctx.pref(agent))
        return tuple(
            t for t in object_thresholds(ctx.pref(agent)) if t.name != OUTSIDE
            and all(o in fb or o not in t.columns for o in t.columns)
            and t.columns <= fb
        )
    fb = ctx.far_better(agent)
    out = []
    for t in space_thresholds(ctx, agent):
        if t.columns <= fb:
            out.append(t)
    return tuple(out)


def upper_equivalent(
    p: AllocationLike, q: AllocationLike, ctx: Context
) -> tuple[bool, Optional[Witness]]:
    """Equality of contour masses at every far-better threshold."""
    _check_same_shape(p, q, ctx)
    for agent in _ctx_agents(ctx):
        for t in far_better_thresholds(ctx, agent):
            a = mass_at(p, agent, t.columns)
            b = mass_at(q, agent, t.columns)
            if a != b:
                return False, Witness("upper-equivalence", agent, t.name, a, b)
    return True, None


def welfare_equivalent(p: AllocationLike, q: AllocationLike, ctx: Context) -> bool:
    return sd_compare(p, q, ctx).relation is Relation.EQUIVALENT


# ---------------------------------------------------------------------------
# Allocation properties (object model unless stated otherwise)
# ---------------------------------------------------------------------------


def is_IR(p: AllocationLike, ctx: Context) -> tuple[bool, Optional[Witness]]:
    """No positive mass strictly below the outside option."""
    if isinstance(p, RandomAssignment):
        for agent in ctx.agents:
            acceptable = ctx.pref(agent).acceptable
            for col, weight in p.row(agent).items():
                if col != OUTSIDE and col not in acceptable:
                    return False, Witness("ir", agent, col, weight, ZERO)
        return True, None
    for label, weight in p.points:
        for agent in ctx.participant_set(label):
            pref = ctx.pref(agent)
            out_k = pref.outside_class_index
            if pref.classes.index(_class_of(pref, label)) > out_k:
                return False, Witness("ir", agent, label, weight, ZERO)
    return True, None


def _class_of(pref, label):
    for cls in pref.classes:
        if label in cls:
            return cls
    raise KeyError(label)


def is_non_wasteful(
    p: RandomAssignment, profile: Profile
) -> tuple[bool, Optional[Witness]]:
    """IR, and nobody prefers an unexhausted object to something they hold."""
    ok, wit = is_IR(p, profile)
    if not ok:
        return False, wit
    unexhausted = [
        o for o in profile.object_labels if column_mass(p, o) < profile.quota(o)
    ]
    for agent in profile.agents:
        pref = profile.pref(agent)
        row = p.row(agent)
        for o in unexhausted:
            if o not in pref.acceptable:
                continue
            for held, weight in row.items():
                if weight > 0 and pref.prefers(o, held):
                    return False, Witness(
                        "non-wasteful",
                        agent,
                        o,
                        column_mass(p, o),
                        Fraction(profile.quota(o)),
                        note=f"prefers {o} to held {held}",
                    )
    return True, None


def is_envy_free(
    p: RandomAssignment, profile: Profile
) -> tuple[bool, Optional[Witness]]:
    """Every agent's lottery sd-dominates every other agent's, in own eyes."""
    for i in profile.agents:
        ts = object_thresholds(profile.pref(i))
        row_i = p.row(i)
        mi = tuple(
            sum((row_i.get(c, ZERO) for c in t.columns), ZERO) for t in ts
        )
        for j in profile.agents:
            if i == j:
                continue
            row_j = p.row(j)
            mj = tuple(
                sum((row_j.get(c, ZERO) for c in t.columns), ZERO) for t in ts
            )
            rel, k = _vector_relation(mi, mj)
            if rel in (AgentRelation.SECOND_BETTER, AgentRelation.CROSSED):
                # find a threshold where j's lottery beats i's own
                bad = next(
                    idx for idx, (a, b) in enumerate(zip(mi, mj)) if b > a
                )
                return False, Witness(
                    "envy", i, ts[bad].name, mi[bad], mj[bad], note=f"envies {j}"
                )
    return True, None


def satisfies_ETE(
    mechanism: Callable[[Profile], RandomAssignment],
    profiles: Iterable[Profile],
) -> tuple[bool, Optional[Witness]]:
    """Equal preferences imply equal lotteries, over the given profiles."""
    for profile in profiles:
        groups: dict[Preference, list[str]] = {}
        for agent in profile.agents:
            groups.setdefault(profile.pref(agent), []).append(agent)
        twins = [agents for agents in groups.values() if len(agents) > 1]
        if not twins:
            continue
        p = mechanism(profile)
        for agents in twins:
            first = p.row(agents[0])
            for other in agents[1:]:
                if p.row(other) != first:
                    return False, Witness(
                        "ete",
                        other,
                        None,
                        None,
                        None,
                        note=f"differs from {agents[0]} at {profile.canonical_key()}",
                    )
    return True, None


def pareto_compare(
    x: DeterministicAssignment, y: DeterministicAssignment, profile: Profile
) -> SdVerdict:
    rows = []
    for agent in profile.agents:
        pref = profile.pref(agent)
        ox, oy = x.of(agent), y.of(agent)
        if pref.prefers(ox, oy):
            rel: AgentRelation = AgentRelation.FIRST_BETTER
        elif pref.prefers(oy, ox):
            rel = AgentRelation.SECOND_BETTER
        else:
            rel = AgentRelation.EQUAL
        wit = (
            Witness("pareto", agent, None, None, None, note=f"{ox} vs {oy}")
            if rel is not AgentRelation.EQUAL
            else None
        )
        rows.append((agent, rel, wit))
    return _aggregate("pareto", rows)


# ---------------------------------------------------------------------------
# Deterministic enumeration and ex-post efficiency
# ---------------------------------------------------------------------------


def enumerate_ir_deterministic(
    profile: Profile, limit: int = 200_000
) -> tuple[DeterministicAssignment, ...]:
    """All quota-feasible assignments of acceptable objects (or ``@``)."""
    agents = profile.agents
    out: list[DeterministicAssignment] = []
    left = dict(profile.objects)

    def recurse(k: int, current: dict[str, str]) -> None:
        if len(out) > limit:
            raise RuntimeError(f"more than {limit} deterministic assignments")
        if k == len(agents):
            out.append(DeterministicAssignment.make(dict(current)))
            return
        agent = agents[k]
        options = [OUTSIDE] + [
            o
            for cls in profile.pref(agent).classes
            for o in cls
            if left[o] > 0
        ]
        for o in options:
            current[agent] = o
            if o != OUTSIDE:
                left[o] -= 1
            recurse(k + 1, current)
            if o != OUTSIDE:
                left[o] += 1
        del current[agent]

    recurse(0, {})
    return tuple(out)


def pareto_efficient_deterministic(
    profile: Profile, limit: int = 200_000
) -> tuple[DeterministicAssignment, ...]:
    """IR assignments not strictly Pareto dominated by another IR assignment.

    Non-IR assignments are never efficient (swapping an unacceptable
    object for ``@`` improves its holder), so the IR enumeration suffices.
    """
    candidates = enumerate_ir_deterministic(profile, limit)
    out = []
    for x in candidates:
        dominated = False
        for y in candidates:
            if y is x:
                continue
            verdict = pareto_compare(y, x, profile)
            if verdict.relation is Relation.FIRST_STRICTLY_DOMINATES:
                dominated = True
                break
        if not dominated:
            out.append(x)
    return tuple(out)


def is_ExPE(p: AllocationLike, ctx: Context, limit: int = 200_000) -> bool:
    """Decomposability into Pareto-efficient deterministic outcomes.

    Object model: exact-rational feasibility of expressing ``p`` as a
    convex combination of the enumerated efficient assignments.  Abstract
    model: the support must consist of Pareto-efficient allocations.
    """
    if isinstance(p, Lottery) and isinstance(ctx, AllocationSpace):
        efficient = _abstract_efficient(ctx)
        return all(label in efficient for label, _ in p.points)
    assert isinstance(p, RandomAssignment) and isinstance(ctx, Profile)
    efficient = pareto_efficient_deterministic(ctx, limit)
    program = lp.Program(num_vars=len(efficient))
    cols = list(ctx.object_labels) + [OUTSIDE]
    for ai, agent in enumerate(ctx.agents):
        for col in cols:
            coeffs = {
                k: ONE for k, det in enumerate(efficient) if det.of(agent) == col
            }
            program.add(coeffs, lp.EQ, p.get(agent, col))
    program.add({k: ONE for k in range(len(efficient))}, lp.EQ, ONE)
    return lp.solve(program).feasible


def _abstract_efficient(space: AllocationSpace) -> frozenset[str]:
    ranks = {
        agent: {
            label: k
            for k, cls in enumerate(space.full_classes(agent))
            for label in cls
        }
        for agent in space.agents
    }
    efficient = set()
    for a in space.allocations:
        dominated = False
        for b in space.allocations:
            if a == b:
                continue
            better = [ranks[i][b] < ranks[i][a] for i in space.agents]
            worse = [ranks[i][b] > ranks[i][a] for i in space.agents]
            if any(better) and not any(worse):
                dominated = True
                break
        if not dominated:
            efficient.add(a)
    return frozenset(efficient)


# ---------------------------------------------------------------------------
# Strict-improvement searches (shared LP constraint builder)
# ---------------------------------------------------------------------------


class _SearchSpace:
    """Variables and contour data for candidate allocations over a context."""

    def __init__(self, p: AllocationLike, ctx: Context):
        self.ctx = ctx
        self.p = p
        self.agents = list(_ctx_agents(ctx))
        if isinstance(ctx, Profile):
            assert isinstance(p, RandomAssignment)
            self.variables: list[tuple[str, str]] = []
            self.by_agent: dict[str, list[int]] = {a: [] for a in self.agents}
            for agent in self.agents:
                for cls in ctx.pref(agent).classes:
                    for o in cls:
                        self.by_agent[agent].append(len(self.variables))
                        self.variables.append((agent, o))
        else:
            assert isinstance(p, Lottery)
            self.variables = [("", label) for label in ctx.allocations]

    def base_rows(self) -> list[tuple[dict[int, Fraction], str, Fraction]]:
        rows: list[tuple[dict[int, Fraction], str, Fraction]] = []
        ctx = self.ctx
        if isinstance(ctx, Profile):
            for agent in self.agents:
                coeffs = {j: ONE for j in self.by_agent[agent]}
                rows.append((coeffs, lp.LE, ONE))  # remainder goes to '@'
            for o in ctx.object_labels:
                coeffs = {
                    j: ONE
                    for j, (_, obj) in enumerate(self.variables)
                    if obj == o
                }
                if coeffs:
                    rows.append((coeffs, lp.LE, Fraction(ctx.quota(o))))
        else:
            rows.append(
                ({j: ONE for j in range(len(self.variables))}, lp.EQ, ONE)
            )
        return rows

    def threshold_terms(self, agent: str) -> list[tuple[str, dict[int, Fraction], Fraction]]:
        """(name, candidate-mass coefficients, p-mass) per threshold.

        Vacuous thresholds (contours whose candidate mass is identically
        one) are dropped; in the object model that is the ``@`` contour,
        in the abstract model the whole-space contour.
        """
        ctx = self.ctx
        out = []
        if isinstance(ctx, Profile):
            ts = object_thresholds(ctx.pref(agent))[:-1]
            for t in ts:
                coeffs = {
                    j: ONE
                    for j in self.by_agent[agent]
                    if self.variables[j][1] in t.columns
                }
                out.append((t.name, coeffs, mass_at(self.p, agent, t.columns)))
        else:
            ts = space_thresholds(ctx, agent)
            for t in ts:
                coeffs = {
                    j: ONE
                    for j, (_, label) in enumerate(self.variables)
                    if label in t.columns
                }
                if len(coeffs) == len(self.variables):
                    continue  # whole space: both masses are one
                out.append((t.name, coeffs, mass_at(self.p, agent, t.columns)))
        return out

    def size_terms(self, agent: str) -> tuple[dict[int, Fraction], Fraction]:
        ctx = self.ctx
        if isinstance(ctx, Profile):
            coeffs = {j: ONE for j in self.by_agent[agent]}
            return coeffs, participation_size(self.p, agent)
        own = ctx.participating(agent)
        coeffs = {
            j: ONE
            for j, (_, label) in enumerate(self.variables)
            if label in own
        }
        return coeffs, participation_size(self.p, agent, ctx)

    def extract(self, x: tuple[Fraction, ...]) -> AllocationLike:
        ctx = self.ctx
        if isinstance(ctx, Profile):
            rows: dict[str, dict[str, Fraction]] = {a: {} for a in self.agents}
            for j, (agent, o) in enumerate(self.variables):
                if x[j] != 0:
                    rows[agent][o] = x[j]
            for agent in self.agents:
                rest = ONE - sum(rows[agent].values(), ZERO)
                if rest != 0:
                    rows[agent][OUTSIDE] = rest
            return RandomAssignment.make(ctx, rows)
        return Lottery.make(
            {label: x[j] for j, (_, label) in enumerate(self.variables) if x[j] != 0}
        )


def _solve_search(
    space: _SearchSpace,
    strict_groups: list[list[tuple[dict[int, Fraction], Fraction]]],
    extra_rows: list[tuple[dict[int, Fraction], str, Fraction]],
) -> Optional[AllocationLike]:
    """Maximize a slack bounded by each group's total surplus.

    Each group is a list of (coefficients, base) terms whose individual
    surpluses are forced nonnegative elsewhere, so "sum of surpluses >= s"
    with s > 0 certifies that every group has a strictly positive term.
    """
    nvars = len(space.variables)
    slack = nvars
    program = lp.Program(num_vars=nvars + 1, objective={slack: ONE})
    for coeffs, sense, rhs in space.base_rows():
        program.add(coeffs, sense, rhs)
    for coeffs, sense, rhs in extra_rows:
        program.add(coeffs, sense, rhs)
    for group in strict_groups:
        coeffs: dict[int, Fraction] = {slack: -ONE}
        base = ZERO
        for term, rhs in group:
            for j, c in term.items():
                coeffs[j] = coeffs.get(j, ZERO) + c
            base += rhs
        program.add(coeffs, lp.GE, base)
    solution = lp.solve(program)
    if not solution.feasible or solution.value <= 0:
        return None
    return space.extract(solution.x[:-1])


def find_sd_improvement(
    p: AllocationLike, ctx: Context
) -> Optional[AllocationLike]:
    """An allocation strictly sd-dominating ``p``, or None (ordinal efficiency)."""
    space = _SearchSpace(p, ctx)
    weak_rows = []
    all_terms = []
    for agent in space.agents:
        for _, coeffs, base in space.threshold_terms(agent):
            weak_rows.append((coeffs, lp.GE, base))
            all_terms.append((coeffs, base))
    result = _solve_search(space, [all_terms], weak_rows)
    if result is not None:
        verdict = sd_compare(result, p, ctx)
        if verdict.relation is not Relation.FIRST_STRICTLY_DOMINATES:
            raise AssertionError("search returned a non-dominating allocation")
    return result


def find_bidominating(
    p: AllocationLike, ctx: Context
) -> Optional[AllocationLike]:
    """An allocation that strictly sd- and strictly size-dominates ``p``."""
    space = _SearchSpace(p, ctx)
    rows = []
    sd_terms = []
    size_terms = []
    for agent in space.agents:
        for _, coeffs, base in space.threshold_terms(agent):
            rows.append((coeffs, lp.GE, base))
            sd_terms.append((coeffs, base))
        coeffs, base = space.size_terms(agent)
        rows.append((coeffs, lp.GE, base))
        size_terms.append((coeffs, base))
    result = _solve_search(space, [sd_terms, size_terms], rows)
    if result is not None:
        _assert_bidominates(result, p, ctx)
    return result


def find_strongly_bidominating(
    p: AllocationLike, ctx: Context
) -> Optional[AllocationLike]:
    """A strong bidominator: strictly-better agents gain participation.

    Searches coalition candidates T (the strictly-better set) largest
    first, lexicographic within a size; agents outside T are pinned to
    welfare-equivalent lotteries.  First feasible T wins.
    """
    space = _SearchSpace(p, ctx)
    agents = space.agents
    sizes = {
        a: participation_size(
            p, a, ctx if isinstance(ctx, AllocationSpace) else None
        )
        for a in agents
    }
    candidates = [a for a in agents if sizes[a] < 1]
    for size in range(len(candidates), 0, -1):
        for team in itertools.combinations(candidates, size):
            rows = []
            sd_groups: list[list[tuple[dict[int, Fraction], Fraction]]] = []
            for agent in agents:
                terms = space.threshold_terms(agent)
                if agent in team:
                    group = []
                    for _, coeffs, base in terms:
                        rows.append((coeffs, lp.GE, base))
                        group.append((coeffs, base))
                    sd_groups.append(group)
                    coeffs, base = space.size_terms(agent)
                    rows.append((coeffs, lp.GE, base))
                    sd_groups.append([(coeffs, base)])
                else:
                    for _, coeffs, base in terms:
                        rows.append((coeffs, lp.EQ, base))
                    coeffs, base = space.size_terms(agent)
                    rows.append((coeffs, lp.GE, base))
            result = _solve_search(space, sd_groups, rows)
            if result is not None:
                _assert_strongly_bidominates(result, p, ctx)
                return result
    return None


def _assert_bidominates(
    q: AllocationLike, p: AllocationLike, ctx: Context
) -> None:
    sd = sd_compare(q, p, ctx)
    size = size_compare(q, p, ctx)
    if (
        sd.relation is not Relation.FIRST_STRICTLY_DOMINATES
        or size.relation is not Relation.FIRST_STRICTLY_DOMINATES
    ):
        raise AssertionError("search returned a non-bidominating allocation")


def _assert_strongly_bidominates(
    q: AllocationLike, p: AllocationLike, ctx: Context
) -> None:
    _assert_bidominates(q, p, ctx)
    sd = sd_compare(q, p, ctx)
    size = dict(size_compare(q, p, ctx).per_agent)
    for agent, rel in sd.per_agent:
        if rel is AgentRelation.FIRST_BETTER and size[agent] is not AgentRelation.FIRST_BETTER:
            raise AssertionError(
                f"agent {agent} strictly gains without a larger participation size"
            )


def bidominates(q: AllocationLike, p: AllocationLike, ctx: Context) -> bool:
    sd = sd_compare(q, p, ctx)
    size = size_compare(q, p, ctx)
    return (
        sd.relation is Relation.FIRST_STRICTLY_DOMINATES
        and size.relation is Relation.FIRST_STRICTLY_DOMINATES
    )


def strongly_bidominates(
    q: AllocationLike, p: AllocationLike, ctx: Context
) -> bool:
    if not bidominates(q, p, ctx):
        return False
    sd = dict(sd_compare(q, p, ctx).per_agent)
    size = dict(size_compare(q, p, ctx).per_agent)
    return all(
        size[a] is AgentRelation.FIRST_BETTER
        for a, rel in sd.items()
        if rel is AgentRelation.FIRST_BETTER
    )
