"""Core domain vocabulary: agents, objects, preferences, profiles, spaces.

Two representations coexist.  The *object model* assigns copies of
indivisible objects to agents who rank objects strictly above an outside
option (written ``@``); unlisted objects are unacceptable.  The *abstract
model* ranks whole allocations, each with a declared participant set, and
there indifference with the outside option is representable.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence

#: Reserved label for the outside option.
OUTSIDE = "@"

STRICT = "strict"
WEAK = "weak"


class DomainError(ValueError):
    """An input lies outside the declared preference domain."""


class UnknownLabelError(KeyError):
    """An agent/object/allocation label is not declared."""


def _check_label(label: str) -> str:
    if not label or any(ch.isspace() for ch in label):
        raise ValueError(f"bad label {label!r}: empty or contains whitespace")
    for ch in ">~:=#":
        if ch in label:
            raise ValueError(f"bad label {label!r}: reserved character {ch!r}")
    return label


# ---------------------------------------------------------------------------
# Preferences over objects (outside option strictly below every listed object)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Preference:
    """Weak order over acceptable objects, best class first.

    Every listed object is strictly above ``@``; unlisted objects are
    unacceptable and mutually tied below ``@``.  Members of a class are
    kept sorted so equal preferences compare equal.
    """

    classes: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        canon = []
        for cls in self.classes:
            if not cls:
                raise ValueError("empty indifference class")
            members = tuple(sorted(cls))
            for o in members:
                _check_label(o)
                if o == OUTSIDE:
                    raise ValueError("'@' cannot appear inside a preference class")
                if o in seen:
                    raise ValueError(f"object {o!r} listed twice")
                seen.add(o)
            canon.append(members)
        object.__setattr__(self, "classes", tuple(canon))

    # -- basic queries ------------------------------------------------------

    @property
    def acceptable(self) -> frozenset[str]:
        return frozenset(o for cls in self.classes for o in cls)

    @property
    def is_strict(self) -> bool:
        return all(len(cls) == 1 for cls in self.classes)

    def class_index(self, o: str) -> int:
        """Rank of the class containing ``o`` (0 = best)."""
        for k, cls in enumerate(self.classes):
            if o in cls:
                return k
        raise UnknownLabelError(o)

    def prefers(self, x: str, y: str) -> bool:
        """True iff x is strictly better than y (either may be '@')."""
        rx = self._order_key(x)
        ry = self._order_key(y)
        return rx < ry

    def _order_key(self, x: str) -> tuple[int, int]:
        # (tier, class) with tiers: acceptable=0, outside=1, unacceptable=2
        if x == OUTSIDE:
            return (1, 0)
        for k, cls in enumerate(self.classes):
            if x in cls:
                return (0, k)
        return (2, 0)

    def __str__(self) -> str:
        return format_preference(self)


def preference(*classes: Iterable[str] | str) -> Preference:
    """Build a Preference from classes given best-first.

    ``preference("a", ["b", "c"], "d")`` means a > b ~ c > d > @.
    """
    out = []
    for cls in classes:
        out.append((cls,) if isinstance(cls, str) else tuple(cls))
    return Preference(tuple(out))


def format_preference(pref: Preference) -> str:
    parts = [" ~ ".join(cls) for cls in pref.classes]
    parts.append(OUTSIDE)
    return " > ".join(parts)


def parse_preference(text: str) -> Preference:
    """Parse ``"a ~ b > c > @"``; the ``@`` group must come last, alone."""
    groups = [g.strip() for g in text.split(">")]
    if not groups or groups[-1] != OUTSIDE:
        raise ValueError(f"preference {text!r} must end with '> @' (or be '@')")
    classes = []
    for g in groups[:-1]:
        members = tuple(m.strip() for m in g.split("~"))
        if any(not m for m in members):
            raise ValueError(f"empty member in class {g!r}")
        classes.append(members)
    return Preference(tuple(classes))


# -- operations on preferences ----------------------------------------------


def upper_contour(
    pref: Preference, x: str, objects: Optional[Iterable[str]] = None
) -> frozenset[str]:
    """Everything weakly better than ``x``, including ``@`` when x is '@'.

    For an unacceptable ``x`` the unacceptables count as one bottom tier,
    so the contour is the whole object set plus ``@`` (pass ``objects`` to
    resolve it; otherwise unacceptable thresholds are rejected).
    """
    if x == OUTSIDE:
        return frozenset(pref.acceptable) | {OUTSIDE}
    if objects is not None:
        universe = frozenset(objects)
        if x not in universe:
            raise UnknownLabelError(x)
        if x not in pref.acceptable:
            return universe | {OUTSIDE}
    k = pref.class_index(x)  # raises UnknownLabelError when undeclared
    return frozenset(o for cls in pref.classes[: k + 1] for o in cls)


def far_better_set(pref: Preference) -> frozenset[str]:
    """Acceptable objects with something acceptable strictly below them.

    Equals the acceptable set minus its worst indifference class.
    """
    if len(pref.classes) <= 1:
        return frozenset()
    return frozenset(o for cls in pref.classes[:-1] for o in cls)


def truncate(pref: Preference, o: str) -> Preference:
    """Keep the upper contour of ``o`` in place; everything else drops out."""
    if o not in far_better_set(pref):
        raise DomainError(f"cannot truncate at {o!r}: not above the bottom class")
    k = pref.class_index(o)
    return Preference(pref.classes[: k + 1])


def contractions(pref: Preference, o: str, domain: str = STRICT) -> tuple[Preference, ...]:
    """All domain preferences whose acceptable set is the upper contour of o.

    The acceptable *set* is what a contraction preserves; the internal
    order may differ.  In the strict domain this is just the truncation;
    in the weak domain it is every weak order on the invariant set,
    enumerated deterministically.
    """
    if o not in far_better_set(pref):
        raise DomainError(f"cannot contract at {o!r}: not above the bottom class")
    kept = sorted(upper_contour(pref, o))
    if domain == STRICT:
        if not pref.is_strict:
            raise DomainError("strict-domain contraction of a weak preference")
        return (truncate(pref, o),)
    if domain == WEAK:
        return tuple(
            Preference(part) for part in _ordered_set_partitions(tuple(kept))
        )
    raise DomainError(f"unknown domain {domain!r}")


def contract_above(pref: Preference, o: str) -> Preference:
    """Keep only the objects strictly better than ``o``; order preserved."""
    if o not in pref.acceptable:
        raise DomainError(f"cannot contract above {o!r}: unacceptable")
    k = pref.class_index(o)
    return Preference(pref.classes[:k])


def _ordered_set_partitions(
    elems: tuple[str, ...]
) -> Iterator[tuple[tuple[str, ...], ...]]:
    """Ordered set partitions; first class ranges over subsets by (size, lex)."""
    if not elems:
        yield ()
        return
    n = len(elems)
    for size in range(1, n + 1):
        for head in itertools.combinations(elems, size):
            rest = tuple(e for e in elems if e not in head)
            for tail in _ordered_set_partitions(rest):
                yield (head,) + tail


# ---------------------------------------------------------------------------
# Profiles (object model)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Profile:
    """A market: agents, objects with quotas, and one preference per agent.

    Fields are canonicalized (agents and objects sorted) so structural
    equality doubles as canonical-profile equality.
    """

    agents: tuple[str, ...]
    objects: tuple[tuple[str, int], ...]
    prefs: tuple[Preference, ...]

    def __post_init__(self) -> None:
        if not self.agents:
            raise ValueError("profile needs at least one agent")
        if len(set(self.agents)) != len(self.agents):
            raise ValueError("duplicate agent labels")
        labels = [o for o, _ in self.objects]
        if len(set(labels)) != len(labels):
            raise ValueError("duplicate object labels")
        if OUTSIDE in labels or OUTSIDE in self.agents:
            raise ValueError("'@' is reserved for the outside option")
        for a in self.agents:
            _check_label(a)
        for o, q in self.objects:
            _check_label(o)
            if q < 1:
                raise ValueError(f"quota of {o!r} must be >= 1")
        declared = set(labels)
        for a, pref in zip(self.agents, self.prefs):
            extra = pref.acceptable - declared
            if extra:
                raise UnknownLabelError(
                    f"pref of {a!r} mentions undeclared objects {sorted(extra)}"
                )

    @staticmethod
    def make(
        agents: Sequence[str],
        objects: Mapping[str, int],
        prefs: Mapping[str, Preference],
    ) -> "Profile":
        agent_tuple = tuple(sorted(agents))
        missing = [a for a in agent_tuple if a not in prefs]
        if missing:
            raise ValueError(f"missing preferences for agents {missing}")
        return Profile(
            agents=agent_tuple,
            objects=tuple(sorted(objects.items())),
            prefs=tuple(prefs[a] for a in agent_tuple),
        )

    # -- accessors -----------------------------------------------------------

    @property
    def object_labels(self) -> tuple[str, ...]:
        return tuple(o for o, _ in self.objects)

    def quota(self, o: str) -> int:
        for label, q in self.objects:
            if label == o:
                return q
        raise UnknownLabelError(o)

    def pref(self, agent: str) -> Preference:
        try:
            return self.prefs[self.agents.index(agent)]
        except ValueError:
            raise UnknownLabelError(agent) from None

    def replace_pref(self, agent: str, new: Preference) -> "Profile":
        if agent not in self.agents:
            raise UnknownLabelError(agent)
        return Profile(
            agents=self.agents,
            objects=self.objects,
            prefs=tuple(
                new if a == agent else p for a, p in zip(self.agents, self.prefs)
            ),
        )

    @property
    def is_strict(self) -> bool:
        return all(p.is_strict for p in self.prefs)

    def canonical_key(self) -> tuple:
        """Hashable canonical encoding; the patch-table and memo key."""
        return (self.agents, self.objects, tuple(p.classes for p in self.prefs))


# ---------------------------------------------------------------------------
# Abstract allocation spaces
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AbstractPref:
    """Weak order over an agent's own allocations plus ``@``.

    Unlike object-model preferences, ``@`` sits inside the class list, may
    tie with allocations, and allocations may even rank below it.
    """

    classes: tuple[tuple[str, ...], ...]

    def __post_init__(self) -> None:
        seen: set[str] = set()
        canon = []
        for cls in self.classes:
            if not cls:
                raise ValueError("empty indifference class")
            members = tuple(sorted(cls))
            for x in members:
                if x in seen:
                    raise ValueError(f"label {x!r} listed twice")
                seen.add(x)
            canon.append(members)
        if OUTSIDE not in seen:
            raise ValueError("abstract preference must place '@'")
        object.__setattr__(self, "classes", tuple(canon))

    @property
    def outside_class_index(self) -> int:
        for k, cls in enumerate(self.classes):
            if OUTSIDE in cls:
                return k
        raise AssertionError("unreachable: '@' checked in __post_init__")

    def __str__(self) -> str:
        return " > ".join(" ~ ".join(cls) for cls in self.classes)


def parse_abstract_preference(text: str) -> AbstractPref:
    groups = [g.strip() for g in text.split(">")]
    classes = []
    for g in groups:
        members = tuple(m.strip() for m in g.split("~"))
        if any(not m for m in members):
            raise ValueError(f"empty member in class {g!r}")
        classes.append(members)
    return AbstractPref(tuple(classes))


@dataclass(frozen=True)
class AllocationSpace:
    """Finite allocation set with participant lists and per-agent orders."""

    agents: tuple[str, ...]
    allocations: tuple[str, ...]
    participants: tuple[frozenset[str], ...]
    prefs: tuple[AbstractPref, ...]

    def __post_init__(self) -> None:
        if len(set(self.allocations)) != len(self.allocations):
            raise ValueError("duplicate allocation labels")
        if not any(not s for s in self.participants):
            raise ValueError("need an allocation in which nobody participates")
        for sets in self.participants:
            undeclared = sets - set(self.agents)
            if undeclared:
                raise UnknownLabelError(f"undeclared participants {sorted(undeclared)}")
        for agent, pref in zip(self.agents, self.prefs):
            own = self.participating(agent)
            listed = {x for cls in pref.classes for x in cls} - {OUTSIDE}
            if listed != own:
                raise ValueError(
                    f"order of {agent!r} must cover exactly its allocations "
                    f"{sorted(own)}, got {sorted(listed)}"
                )

    @staticmethod
    def make(
        participants: Mapping[str, Iterable[str]],
        prefs: Mapping[str, AbstractPref],
    ) -> "AllocationSpace":
        allocations = tuple(sorted(participants))
        agents = tuple(sorted(prefs))
        return AllocationSpace(
            agents=agents,
            allocations=allocations,
            participants=tuple(frozenset(participants[a]) for a in allocations),
            prefs=tuple(prefs[a] for a in agents),
        )

    # -- accessors -----------------------------------------------------------

    def participant_set(self, allocation: str) -> frozenset[str]:
        try:
            return self.participants[self.allocations.index(allocation)]
        except ValueError:
            raise UnknownLabelError(allocation) from None

    def participating(self, agent: str) -> set[str]:
        return {
            a for a, inside in zip(self.allocations, self.participants)
            if agent in inside
        }

    def pref(self, agent: str) -> AbstractPref:
        try:
            return self.prefs[self.agents.index(agent)]
        except ValueError:
            raise UnknownLabelError(agent) from None

    def full_classes(self, agent: str) -> tuple[frozenset[str], ...]:
        """The agent's weak order over *all* allocations.

        Allocations the agent does not participate in join the class of
        ``@``; the ``@`` marker itself is kept so the outside option stays
        comparable.
        """
        pref = self.pref(agent)
        own = self.participating(agent)
        others = frozenset(a for a in self.allocations if a not in own)
        out = []
        for k, cls in enumerate(pref.classes):
            members = frozenset(cls)
            if k == pref.outside_class_index:
                members = members | others
            out.append(members)
        return tuple(out)

    def strictly_acceptable(self, agent: str) -> frozenset[str]:
        pref = self.pref(agent)
        k = pref.outside_class_index
        return frozenset(
            x for cls in pref.classes[:k] for x in cls if x != OUTSIDE
        )

    def far_better(self, agent: str) -> frozenset[str]:
        """Own allocations with an acceptable own allocation strictly below."""
        pref = self.pref(agent)
        out_k = pref.outside_class_index
        own = self.participating(agent)
        result = set()
        for k, cls in enumerate(pref.classes):
            if k >= out_k:
                break
            # need an own allocation in a strictly lower class still >= '@'
            below = any(
                x in own
                for j in range(k + 1, out_k + 1)
                for x in pref.classes[j]
                if x != OUTSIDE
            )
            if below:
                result.update(x for x in cls if x in own)
        return frozenset(result)


# ---------------------------------------------------------------------------
# Universes of profiles
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class UniverseSpec:
    """A finite profile domain for exhaustive sweeps."""

    n_agents: int
    objects: tuple[tuple[str, int], ...]
    domain: str = STRICT
    cap: Optional[int] = None

    def __post_init__(self) -> None:
        if self.n_agents < 1:
            raise ValueError("need at least one agent")
        if self.domain not in (STRICT, WEAK):
            raise DomainError(f"unknown domain {self.domain!r}")
        if self.cap is not None and self.cap < 1:
            raise ValueError("cap must be positive")

    @property
    def agent_labels(self) -> tuple[str, ...]:
        return tuple(str(i + 1) for i in range(self.n_agents))

    def describe(self) -> str:
        objs = " ".join(f"{o}:{q}" for o, q in self.objects)
        cap = f",cap={self.cap}" if self.cap is not None else ""
        return f"n={self.n_agents},objects=[{objs}],{self.domain}{cap}"


def universe(
    n: int, m: int, domain: str = STRICT, cap: Optional[int] = None, quota: int = 1
) -> UniverseSpec:
    """Universe with agents 1..n and objects a,b,c,... of equal quota."""
    if m > 26:
        raise ValueError("at most 26 default object labels")
    labels = [chr(ord("a") + k) for k in range(m)]
    return UniverseSpec(n, tuple((o, quota) for o in labels), domain, cap)


def domain_preferences(objects: Sequence[str], domain: str = STRICT) -> tuple[Preference, ...]:
    """Every admissible preference over ``objects``, in canonical order."""
    labels = tuple(sorted(objects))
    out: list[Preference] = []
    if domain == STRICT:
        for k in range(len(labels) + 1):
            for perm in itertools.permutations(labels, k):
                out.append(Preference(tuple((o,) for o in perm)))
        return tuple(out)
    if domain == WEAK:
        for k in range(len(labels) + 1):
            for subset in itertools.combinations(labels, k):
                for part in _ordered_set_partitions(subset):
                    out.append(Preference(part))
        return tuple(out)
    raise DomainError(f"unknown domain {domain!r}")


def count_profiles(spec: UniverseSpec) -> int:
    return len(domain_preferences([o for o, _ in spec.objects], spec.domain)) ** spec.n_agents


class ProfileEnumeration:
    """Deterministic profile iterator; remembers whether the cap cut it off."""

    def __init__(self, spec: UniverseSpec, start: int = 0, stop: Optional[int] = None):
        self.spec = spec
        self.truncated = False
        self.yielded = 0
        self._start = start
        self._stop = stop

    def __iter__(self) -> Iterator[Profile]:
        spec = self.spec
        labels = spec.agent_labels
        prefs = domain_preferences([o for o, _ in spec.objects], spec.domain)
        total = len(prefs) ** spec.n_agents
        stop = total if self._stop is None else min(self._stop, total)
        if spec.cap is not None and stop - self._start > spec.cap:
            stop = self._start + spec.cap
            self.truncated = True
        for index in range(self._start, stop):
            choice = []
            rem = index
            for _ in range(spec.n_agents):
                rem, k = divmod(rem, len(prefs))
                choice.append(prefs[k])
            # first agent varies fastest; reverse for a sorted-feel order
            self.yielded += 1
            yield Profile(
                agents=labels,
                objects=spec.objects,
                prefs=tuple(choice),
            )


def enumerate_profiles(
    spec: UniverseSpec, start: int = 0, stop: Optional[int] = None
) -> ProfileEnumeration:
    """Every profile of the universe exactly once, canonically ordered.

    The returned enumeration is restartable and splittable via
    ``start``/``stop`` for parallel sweeps; ``spec.cap`` truncates with an
    explicit flag, never silently.
    """
    return ProfileEnumeration(spec, start, stop)
