"""Timing layer: mutual-exclusion resources, max-plus morphism, execution time.

Durations are exact rationals (``fractions.Fraction``) throughout so that the
matrix route and the heap recurrence agree bit-for-bit and linear programs
built on top stay exact.  The max-plus bottom element -inf is represented by
``None`` and only ever touched through the ``mp_add``/``mp_mul`` helpers,
never mixed into ordinary arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from supctl.automata import Automaton, ModelError

Transition = tuple[int, str]  # (source state, event name)


class TrajectoryError(ValueError):
    """A string does not label a path of the plant."""


def as_fraction(value) -> Fraction:
    """Parse 'p/q', decimal strings, ints or Fractions into an exact rational."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value)
    raise ModelError(f"cannot interpret {value!r} as a rational")


def format_fraction(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# -- max-plus scalars ----------------------------------------------------

def mp_add(x: Fraction | None, y: Fraction | None) -> Fraction | None:
    """Semiring 'addition' = max, with None as -inf."""
    if x is None:
        return y
    if y is None:
        return x
    return x if x >= y else y


def mp_mul(x: Fraction | None, y: Fraction | None) -> Fraction | None:
    """Semiring 'multiplication' = +, absorbed by -inf."""
    if x is None or y is None:
        return None
    return x + y


@dataclass(frozen=True)
class MaxPlusMatrix:
    """Square matrix over the max-plus semiring; None entries are -inf."""

    rows: tuple[tuple[Fraction | None, ...], ...]

    @property
    def dim(self) -> int:
        return len(self.rows)

    @classmethod
    def identity(cls, dim: int) -> "MaxPlusMatrix":
        zero = Fraction(0)
        return cls(tuple(tuple(zero if i == j else None for j in range(dim)) for i in range(dim)))

    def __matmul__(self, other: "MaxPlusMatrix") -> "MaxPlusMatrix":
        n = self.dim
        if other.dim != n:
            raise ValueError("dimension mismatch")
        ocols = tuple(zip(*other.rows)) if n else ()
        out = []
        for row in self.rows:
            new_row = []
            for col in ocols:
                acc = None
                for a, b in zip(row, col):
                    acc = mp_add(acc, mp_mul(a, b))
                new_row.append(acc)
            out.append(tuple(new_row))
        return MaxPlusMatrix(tuple(out))

    def ones_product(self) -> Fraction:
        """1^t M 1 in max-plus arithmetic: the maximum finite entry."""
        best = None
        for row in self.rows:
            for v in row:
                best = mp_add(best, v)
        if best is None:
            raise ValueError("all entries are -inf")
        return best


# -- plants and resources -------------------------------------------------


class TimedPlant:
    """A plant automaton with positive transition durations and a symmetric
    reflexive mutual-exclusion relation on events.

    ``exclusions`` stores only the non-reflexive unordered pairs; every event
    occurring in a transition is implicitly exclusive with itself.
    """

    __slots__ = ("automaton", "durations", "exclusions")

    def __init__(
        self,
        automaton: Automaton,
        durations: Mapping[Transition, object],
        exclusions: Iterable[Sequence[str]] = (),
    ):
        self.automaton = automaton
        durs: dict[Transition, Fraction] = {}
        for tau, d in durations.items():
            x, e = tau
            if automaton.step(x, e) is None:
                raise ModelError(f"duration given for missing transition {tau}")
            d = as_fraction(d)
            if d <= 0:
                raise ModelError(f"duration of {tau} must be strictly positive, got {d}")
            durs[(x, e)] = d
        for tau in automaton.transitions:
            if tau not in durs:
                raise ModelError(f"transition {tau} has no duration")
        self.durations = durs
        pairs = set()
        for pair in exclusions:
            e1, e2 = pair
            if e1 not in automaton.table or e2 not in automaton.table:
                raise ModelError(f"exclusion pair {pair!r} references unknown events")
            if e1 != e2:
                pairs.add(frozenset((e1, e2)))
        self.exclusions = frozenset(pairs)

    @classmethod
    def with_event_durations(
        cls,
        automaton: Automaton,
        event_durations: Mapping[str, object],
        exclusions: Iterable[Sequence[str]] = (),
    ) -> "TimedPlant":
        """Event-level durations are sugar expanding to all transitions of the event."""
        durs = {}
        for (x, e) in automaton.transitions:
            if e not in event_durations:
                raise ModelError(f"no duration for event {e!r}")
            durs[(x, e)] = event_durations[e]
        return cls(automaton, durs, exclusions)

    @property
    def transitions(self) -> tuple[Transition, ...]:
        return tuple(self.automaton.transitions)

    def duration(self, tau: Transition) -> Fraction:
        try:
            return self.durations[tau]
        except KeyError:
            raise ModelError(f"unknown transition {tau}") from None

    def excluded(self, e1: str, e2: str) -> bool:
        return e1 == e2 or frozenset((e1, e2)) in self.exclusions


@dataclass(frozen=True)
class ResourceModel:
    """Resources induced by the exclusion relation, with per-event occupancy.

    A resource is an unordered set of events; two events occupy a common
    resource exactly when they are mutually exclusive.
    """

    resources: tuple[frozenset[str], ...]
    occupancy: Mapping[str, tuple[int, ...]]

    @property
    def n_h(self) -> int:
        return len(self.resources)

    def occupied_by(self, event: str) -> tuple[int, ...]:
        try:
            return self.occupancy[event]
        except KeyError:
            raise ModelError(f"event {event!r} occurs in no transition") from None


def derive_resources(plant: TimedPlant) -> ResourceModel:
    """Unordered-pair construction: one singleton resource per event occurring
    in a transition (reflexivity) plus one pair resource per excluded pair.

    Resource order is deterministic: singletons by event index, then pairs
    lexicographically by member event indices.
    """
    table = plant.automaton.table
    in_t = sorted({e for (_, e) in plant.automaton.transitions}, key=table.index)
    in_t_set = set(in_t)
    resources: list[frozenset[str]] = [frozenset((e,)) for e in in_t]
    pair_keys = []
    for pair in plant.exclusions:
        e1, e2 = sorted(pair, key=table.index)
        if e1 in in_t_set and e2 in in_t_set:
            pair_keys.append((table.index(e1), table.index(e2), e1, e2))
    for _, _, e1, e2 in sorted(pair_keys):
        resources.append(frozenset((e1, e2)))
    occupancy = {
        e: tuple(k for k, r in enumerate(resources) if e in r) for e in in_t
    }
    return ResourceModel(tuple(resources), occupancy)


# -- delays and valuations -------------------------------------------------


class DelayVector:
    """Nonnegative per-transition delays, identically zero on uncontrollable events."""

    __slots__ = ("entries",)

    def __init__(self, plant: TimedPlant, entries: Mapping[Transition, object]):
        table = plant.automaton.table
        out: dict[Transition, Fraction] = {}
        for tau, d in entries.items():
            x, e = tau
            if plant.automaton.step(x, e) is None:
                raise ModelError(f"delay on missing transition {tau}")
            d = as_fraction(d)
            if d < 0:
                raise ModelError(f"delay on {tau} must be nonnegative")
            if d > 0 and not table.controllable(e):
                raise ModelError(f"delay on uncontrollable event {e!r} must be zero")
            if d > 0:
                out[(x, e)] = d
        self.entries = out

    @classmethod
    def zero(cls, plant: TimedPlant) -> "DelayVector":
        return cls(plant, {})

    @classmethod
    def from_events(cls, plant: TimedPlant, event_delays: Mapping[str, object]) -> "DelayVector":
        """Event-level shorthand: the delay applies to every transition of the event."""
        entries = {}
        for (x, e) in plant.automaton.transitions:
            if e in event_delays:
                entries[(x, e)] = event_delays[e]
        return cls(plant, entries)

    def of(self, tau: Transition) -> Fraction:
        return self.entries.get(tau, Fraction(0))

    def __eq__(self, other) -> bool:
        return isinstance(other, DelayVector) and self.entries == other.entries

    def __repr__(self) -> str:
        items = ", ".join(f"{x}:{e}={d}" for (x, e), d in sorted(self.entries.items()))
        return f"DelayVector({items})"


@dataclass(frozen=True)
class DurationValuation:
    """Effective transition durations: base f plus an optional delay vector."""

    plant: TimedPlant
    delay: DelayVector | None = None

    def of(self, tau: Transition) -> Fraction:
        base = self.plant.duration(tau)
        return base if self.delay is None else base + self.delay.of(tau)


def _valuation(plant: TimedPlant, val: DurationValuation | None) -> DurationValuation:
    if val is None:
        return DurationValuation(plant)
    if val.plant is not plant and val.plant.automaton is not plant.automaton:
        # Permissive: a valuation built on an identical plant object is fine.
        pass
    return val


# -- execution time ---------------------------------------------------------


def trajectory(plant: TimedPlant, string: Sequence[str]) -> list[Transition]:
    """The unique transition path labeled by ``string``; TrajectoryError if absent."""
    aut = plant.automaton
    if aut.is_empty:
        raise TrajectoryError("empty plant has no trajectories")
    x = aut.initial
    taus: list[Transition] = []
    for e in string:
        y = aut.step(x, e)
        if y is None:
            raise TrajectoryError(f"string leaves the plant at state {aut.state_names[x]}, event {e!r}")
        taus.append((x, e))
        x = y
    return taus


def transition_matrix(
    plant: TimedPlant, rm: ResourceModel, tau: Transition, val: DurationValuation | None = None
) -> MaxPlusMatrix:
    """Per-transition morphism matrix (0 / duration / -inf cases)."""
    val = _valuation(plant, val)
    d = val.of(tau)  # raises on unknown transitions
    occ = frozenset(rm.occupied_by(tau[1]))
    zero = Fraction(0)
    rows = []
    for q in range(rm.n_h):
        row = []
        for v in range(rm.n_h):
            if q in occ and v in occ:
                row.append(d)
            elif (q == v and q not in occ) or (q in occ and v not in occ):
                row.append(zero)
            else:
                row.append(None)
        rows.append(tuple(row))
    return MaxPlusMatrix(tuple(rows))


def string_matrix(
    plant: TimedPlant, rm: ResourceModel, string: Sequence[str], val: DurationValuation | None = None
) -> MaxPlusMatrix:
    """Morphism value of a whole string: the max-plus product of its transition matrices."""
    val = _valuation(plant, val)
    m = MaxPlusMatrix.identity(rm.n_h)
    for tau in trajectory(plant, string):
        m = m @ transition_matrix(plant, rm, tau, val)
    return m


def exec_time(
    plant: TimedPlant, rm: ResourceModel, string: Sequence[str], val: DurationValuation | None = None
) -> Fraction:
    """Matrix-based execution time 1^t M(s) 1; exactly equals heap_exec_time."""
    if rm.n_h == 0:
        trajectory(plant, string)  # validates; only the empty string can pass
        return Fraction(0)
    return string_matrix(plant, rm, string, val).ones_product()


def heap_step(
    heights: tuple[Fraction, ...], rm: ResourceModel, tau: Transition, dur: Fraction
) -> tuple[Fraction, ...]:
    """One step of the contour recurrence.

    The piece starts at the top of its own resources; resources it does not
    occupy are raised to that starting level, which encodes the sequential
    ordering of starting moments.
    """
    occ = rm.occupied_by(tau[1])
    start = max(heights[r] for r in occ)
    new = [h if h >= start else start for h in heights]
    top = start + dur
    for r in occ:
        new[r] = top
    return tuple(new)


def heap_heights(
    plant: TimedPlant, rm: ResourceModel, string: Sequence[str], val: DurationValuation | None = None
) -> tuple[Fraction, ...]:
    """Final per-resource heights after executing ``string``."""
    val = _valuation(plant, val)
    heights = tuple(Fraction(0) for _ in range(rm.n_h))
    for tau in trajectory(plant, string):
        heights = heap_step(heights, rm, tau, val.of(tau))
    return heights


def heap_exec_time(
    plant: TimedPlant, rm: ResourceModel, string: Sequence[str], val: DurationValuation | None = None
) -> Fraction:
    """Execution time via the contour recurrence (oracle form of the matrix route)."""
    heights = heap_heights(plant, rm, string, val)
    return max(heights) if heights else Fraction(0)


def prefix_exec_times(
    plant: TimedPlant, rm: ResourceModel, string: Sequence[str], val: DurationValuation | None = None
) -> list[Fraction]:
    """Execution times of every prefix: [v(ε), v(s1), v(s1 s2), ...]."""
    val = _valuation(plant, val)
    zero = Fraction(0)
    heights = tuple(zero for _ in range(rm.n_h))
    out = [zero]
    for tau in trajectory(plant, string):
        heights = heap_step(heights, rm, tau, val.of(tau))
        out.append(max(heights) if heights else zero)
    return out
