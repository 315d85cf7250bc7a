"""Deterministic finite automata with a controllability partition.

States are dense integer ids (0..n-1) with optional display names; events
are identified by name through a shared ``EventTable``.  Everything is
immutable after construction, so automata and languages can be shared
between threads and reused across operations without copying.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Iterable, Iterator, Mapping, Sequence


class ModelError(ValueError):
    """An input model violates a structural requirement."""


@dataclass(frozen=True)
class Event:
    name: str
    controllable: bool


class EventTable:
    """Ordered alphabet with a total controllable/uncontrollable partition."""

    __slots__ = ("events", "_index")

    def __init__(self, events: Iterable):
        evs = []
        for e in events:
            evs.append(e if isinstance(e, Event) else Event(*e))
        names = [e.name for e in evs]
        if any(not n for n in names):
            raise ModelError("event names must be non-empty")
        if len(set(names)) != len(names):
            raise ModelError(f"duplicate event names in {names}")
        self.events: tuple[Event, ...] = tuple(evs)
        self._index = {e.name: i for i, e in enumerate(self.events)}

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.events)

    def __len__(self) -> int:
        return len(self.events)

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ModelError(f"unknown event {name!r}") from None

    def controllable(self, name: str) -> bool:
        return self.events[self.index(name)].controllable

    @property
    def controllables(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.events if e.controllable)

    @property
    def uncontrollables(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.events if not e.controllable)

    def merge(self, other: "EventTable") -> "EventTable":
        """Union of two tables; a shared name with conflicting tags is a model error."""
        evs = list(self.events)
        for e in other.events:
            if e.name in self._index:
                if self.events[self._index[e.name]].controllable != e.controllable:
                    raise ModelError(f"conflicting controllability for shared event {e.name!r}")
            else:
                evs.append(e)
        return EventTable(evs)

    def __eq__(self, other) -> bool:
        return isinstance(other, EventTable) and self.events == other.events

    def __hash__(self) -> int:
        return hash(self.events)

    def __repr__(self) -> str:
        tags = ", ".join(f"{e.name}{'' if e.controllable else '!'}" for e in self.events)
        return f"EventTable({tags})"


class FiniteLanguage:
    """A finite set of event-name strings (tuples), canonically ordered."""

    __slots__ = ("strings",)

    def __init__(self, strings: Iterable[Sequence[str]]):
        object.__setattr__(self, "strings", frozenset(tuple(s) for s in strings))

    def __setattr__(self, *a):  # immutable
        raise AttributeError("FiniteLanguage is immutable")

    def __contains__(self, s) -> bool:
        return tuple(s) in self.strings

    def __len__(self) -> int:
        return len(self.strings)

    def __iter__(self) -> Iterator[tuple[str, ...]]:
        return iter(self.sorted())

    def __eq__(self, other) -> bool:
        if isinstance(other, FiniteLanguage):
            return self.strings == other.strings
        if isinstance(other, (set, frozenset)):
            return self.strings == {tuple(s) for s in other}
        return NotImplemented

    def __hash__(self) -> int:
        return hash(self.strings)

    def sorted(self) -> list[tuple[str, ...]]:
        return sorted(self.strings)

    def __repr__(self) -> str:
        shown = [" ".join(s) if s else "ε" for s in self.sorted()]
        return "{" + ", ".join(shown) + "}"


class Automaton:
    """Deterministic automaton over an ``EventTable``.

    ``transitions`` maps ``(state, event_name) -> state``.  The zero-state
    automaton (``initial is None``) is the canonical empty automaton and
    recognizes the empty language.
    """

    __slots__ = ("table", "num_states", "initial", "marked", "transitions", "state_names", "_out")

    def __init__(
        self,
        table: EventTable,
        num_states: int,
        initial: int | None,
        marked: Iterable[int],
        transitions: Mapping[tuple[int, str], int],
        state_names: Sequence[str] | None = None,
    ):
        self.table = table
        self.num_states = int(num_states)
        if self.num_states == 0:
            if initial is not None or transitions:
                raise ModelError("empty automaton cannot have an initial state or transitions")
        elif initial is None or not (0 <= initial < self.num_states):
            raise ModelError(f"initial state {initial!r} out of range")
        self.initial = initial
        self.marked = frozenset(marked)
        if any(not (0 <= m < self.num_states) for m in self.marked):
            raise ModelError("marked state out of range")
        trans = {}
        out: list[list[str]] = [[] for _ in range(self.num_states)]
        for (x, e), y in transitions.items():
            if not (0 <= x < self.num_states and 0 <= y < self.num_states):
                raise ModelError(f"transition ({x},{e})->{y} references a missing state")
            if e not in table:
                raise ModelError(f"transition uses unknown event {e!r}")
            trans[(x, e)] = y
            out[x].append(e)
        self.transitions = trans
        idx = table.index
        self._out = tuple(tuple(sorted(es, key=idx)) for es in out)
        if state_names is None:
            state_names = tuple(f"s{i}" for i in range(self.num_states))
        else:
            state_names = tuple(state_names)
            if len(state_names) != self.num_states:
                raise ModelError("state_names length mismatch")
        self.state_names = state_names

    # -- basic queries -------------------------------------------------

    @property
    def is_empty(self) -> bool:
        return self.num_states == 0

    def step(self, state: int, event: str) -> int | None:
        return self.transitions.get((state, event))

    def enabled(self, state: int) -> tuple[str, ...]:
        """Events with a transition out of ``state``, in event-table order."""
        return self._out[state]

    def is_marked(self, state: int) -> bool:
        return state in self.marked

    def run(self, string: Sequence[str]) -> int | None:
        """Final state after reading ``string`` from the initial state, or None."""
        if self.is_empty:
            return None
        x = self.initial
        for e in string:
            x = self.transitions.get((x, e))
            if x is None:
                return None
        return x

    def accepts(self, string: Sequence[str]) -> bool:
        x = self.run(string)
        return x is not None and x in self.marked

    def state_kind(self, state: int) -> str:
        """'controllable', 'uncontrollable' or 'mixed', by outgoing transitions.

        A state with no outgoing transitions counts as controllable (there is
        nothing a supervisor would be forced to keep).
        """
        ctrl = self.table.controllable
        kinds = {ctrl(e) for e in self._out[state]}
        if kinds == {True} or not kinds:
            return "controllable"
        if kinds == {False}:
            return "uncontrollable"
        return "mixed"

    @classmethod
    def empty(cls, table: EventTable) -> "Automaton":
        return cls(table, 0, None, (), {})

    def __repr__(self) -> str:
        return f"Automaton({self.num_states} states, {len(self.transitions)} transitions, {len(self.marked)} marked)"


# -- operations ---------------------------------------------------------


def natural_projection(string: Sequence[str], sub_alphabet: Iterable[str]) -> tuple[str, ...]:
    """Erase all events outside ``sub_alphabet``, preserving order."""
    keep = frozenset(sub_alphabet)
    return tuple(e for e in string if e in keep)


def trim(a: Automaton) -> Automaton:
    """Restrict to states both reachable and co-reachable; marked language unchanged."""
    return trim_with_map(a)[0]


def trim_with_map(a: Automaton) -> tuple[Automaton, dict[int, int]]:
    """Like :func:`trim` but also returns the old-state -> new-state map."""
    if a.is_empty:
        return a, {}
    reach = [a.initial]
    seen = {a.initial}
    for x in reach:
        for e in a.enabled(x):
            y = a.transitions[(x, e)]
            if y not in seen:
                seen.add(y)
                reach.append(y)
    # co-reachable via reverse edges, restricted to the reachable part
    rev: dict[int, list[int]] = {x: [] for x in seen}
    for (x, e), y in a.transitions.items():
        if x in seen and y in seen:
            rev[y].append(x)
    co = set(m for m in a.marked if m in seen)
    stack = list(co)
    while stack:
        y = stack.pop()
        for x in rev[y]:
            if x not in co:
                co.add(x)
                stack.append(x)
    keep = [x for x in reach if x in co]  # BFS discovery order -> deterministic ids
    if a.initial not in co:
        return Automaton.empty(a.table), {}
    remap = {x: i for i, x in enumerate(keep)}
    trans = {
        (remap[x], e): remap[y]
        for (x, e), y in a.transitions.items()
        if x in remap and y in remap
    }
    out = Automaton(
        a.table,
        len(keep),
        remap[a.initial],
        (remap[m] for m in a.marked if m in remap),
        trans,
        tuple(a.state_names[x] for x in keep),
    )
    return out, remap


def sync_product(a: Automaton, b: Automaton) -> Automaton:
    """Synchronous product: shared events synchronize, private events interleave."""
    return sync_product_with_map(a, b)[0]


def sync_product_with_map(a: Automaton, b: Automaton) -> tuple[Automaton, dict[int, tuple[int, int]]]:
    """Product automaton plus the state -> (a_state, b_state) map (trim result)."""
    table = a.table.merge(b.table)
    if a.is_empty or b.is_empty:
        return Automaton.empty(table), {}
    start = (a.initial, b.initial)
    ids = {start: 0}
    order = [start]
    trans: dict[tuple[int, str], int] = {}
    queue = deque([start])
    a_names = frozenset(a.table.names)
    b_names = frozenset(b.table.names)
    while queue:
        xa, xb = pair = queue.popleft()
        src = ids[pair]
        for e in table.names:
            if e in a_names:
                ya = a.step(xa, e)
                if ya is None:
                    continue
            else:
                ya = xa
            if e in b_names:
                yb = b.step(xb, e)
                if yb is None:
                    continue
            else:
                yb = xb
            nxt = (ya, yb)
            if nxt not in ids:
                ids[nxt] = len(order)
                order.append(nxt)
                queue.append(nxt)
            trans[(src, e)] = ids[nxt]
    marked = [ids[p] for p in order if p[0] in a.marked and p[1] in b.marked]
    names = tuple(f"{a.state_names[p[0]]}|{b.state_names[p[1]]}" for p in order)
    prod = Automaton(table, len(order), 0, marked, trans, names)
    prod_trim, remap = trim_with_map(prod)
    pair_of = {remap[i]: order[i] for i in range(len(order)) if i in remap}
    return prod_trim, pair_of


def enumerate_language(a: Automaton, max_len: int) -> FiniteLanguage:
    """All marked strings of length <= ``max_len``, in event-index order."""
    if max_len < 0:
        raise ValueError("max_len must be >= 0")
    out: list[tuple[str, ...]] = []
    if a.is_empty:
        return FiniteLanguage(out)
    prefix: list[str] = []

    def rec(x: int):
        if x in a.marked:
            out.append(tuple(prefix))
        if len(prefix) == max_len:
            return
        for e in a.enabled(x):
            prefix.append(e)
            rec(a.transitions[(x, e)])
            prefix.pop()

    rec(a.initial)
    return FiniteLanguage(out)


def marked_language_subset(a: Automaton, b: Automaton) -> bool:
    """Exact check that Lm(a) ⊆ Lm(b) by product traversal (b completed with a sink)."""
    if a.is_empty:
        return True
    if b.is_empty:
        return trim(a).is_empty
    at = trim(a)
    if at.is_empty:
        return True
    DEAD = -1
    queue = deque([(at.initial, b.initial)])
    seen = {(at.initial, b.initial)}
    while queue:
        xa, xb = queue.popleft()
        if xa in at.marked and (xb == DEAD or xb not in b.marked):
            return False
        for e in at.enabled(xa):
            ya = at.transitions[(xa, e)]
            yb = DEAD if xb == DEAD else (b.step(xb, e) if e in b.table else None)
            if yb is None:
                yb = DEAD
            if (ya, yb) not in seen:
                seen.add((ya, yb))
                queue.append((ya, yb))
    return True


def marked_language_equal(a: Automaton, b: Automaton) -> bool:
    return marked_language_subset(a, b) and marked_language_subset(b, a)


def is_controllable(k: Automaton, g: Automaton) -> bool:
    """Controllability of Lm(k) w.r.t. g: no plant-enabled uncontrollable event
    may escape the prefix closure of Lm(k).

    Requires identical event tables and Lm(k) ⊆ Lm(g) (model error otherwise).
    """
    if k.table != g.table:
        raise ModelError("is_controllable requires identical event tables")
    kt = trim(k)
    if kt.is_empty:
        return True  # closure of the empty language is empty; condition is vacuous
    if g.is_empty:
        raise ModelError("Lm(k) not contained in Lm(g)")
    uncontrollable = frozenset(g.table.uncontrollables)
    queue = deque([(kt.initial, g.initial)])
    seen = {(kt.initial, g.initial)}
    while queue:
        xk, xg = queue.popleft()
        if xk in kt.marked and xg not in g.marked:
            raise ModelError("Lm(k) not contained in Lm(g)")
        enabled_k = kt.enabled(xk)
        for e in enabled_k:
            if g.step(xg, e) is None:
                raise ModelError("Lm(k) not contained in Lm(g)")
        for e in g.enabled(xg):
            if e in uncontrollable and e not in enabled_k:
                return False
        for e in enabled_k:
            nxt = (kt.transitions[(xk, e)], g.transitions[(xg, e)])
            if nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return True
