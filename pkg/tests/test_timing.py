import random
from fractions import Fraction

import pytest

from supctl.automata import ModelError, enumerate_language
from supctl.timing import (
    DelayVector,
    DurationValuation,
    MaxPlusMatrix,
    TimedPlant,
    TrajectoryError,
    derive_resources,
    exec_time,
    heap_exec_time,
    prefix_exec_times,
    string_matrix,
    transition_matrix,
)

from helpers import build_automaton, par_plant, random_plant, serial_plant


def sample_strings(plant, rng, depth, count):
    lang = sorted(enumerate_language(plant.automaton, depth).strings)
    closed = sorted({s[:i] for s in lang for i in range(len(s) + 1)})
    if not closed:
        return []
    return [closed[rng.randrange(len(closed))] for _ in range(count)]


# -- resource derivation -----------------------------------------------------


def test_resources_serial():
    plant = serial_plant()
    rm = derive_resources(plant)
    assert rm.resources == (frozenset({"a"}), frozenset({"b"}), frozenset({"a", "b"}))
    assert rm.n_h == 3
    assert [rm.resources[i] for i in rm.occupied_by("a")] == [frozenset({"a"}), frozenset({"a", "b"})]


def test_resources_par():
    rm = derive_resources(par_plant())
    assert rm.resources == (frozenset({"a"}), frozenset({"b"}))
    assert set(rm.occupied_by("a")).isdisjoint(rm.occupied_by("b"))


def test_occupancy_intersects_iff_excluded():
    rng = random.Random(3)
    for _ in range(30):
        plant = random_plant(rng)
        rm = derive_resources(plant)
        events = sorted({e for (_, e) in plant.automaton.transitions})
        for e1 in events:
            for e2 in events:
                share = bool(set(rm.occupied_by(e1)) & set(rm.occupied_by(e2)))
                assert share == plant.excluded(e1, e2)


def test_plant_validation():
    aut = serial_plant().automaton
    with pytest.raises(ModelError):
        TimedPlant(aut, {(0, "a"): 2})  # missing duration for (1, b)
    with pytest.raises(ModelError):
        TimedPlant(aut, {(0, "a"): 0, (1, "b"): 3})  # nonpositive
    with pytest.raises(ModelError):
        TimedPlant(aut, {(0, "a"): 2, (1, "b"): 3}, [("a", "zzz")])


# -- transition matrices -----------------------------------------------------


def test_matrix_par_example():
    plant = par_plant()
    rm = derive_resources(plant)
    m = transition_matrix(plant, rm, (0, "a"))
    assert m.rows == ((Fraction(2), Fraction(0)), (None, Fraction(0)))


def test_empty_string_matrix_is_identity():
    plant = serial_plant()
    rm = derive_resources(plant)
    assert string_matrix(plant, rm, ()) == MaxPlusMatrix.identity(rm.n_h)
    assert exec_time(plant, rm, ()) == 0


def test_full_occupancy_matrix_is_constant():
    aut = build_automaton([("a", True)], ["x0", "x1"], "x0", ["x1"], [("x0", "a", "x1")])
    plant = TimedPlant(aut, {(0, "a"): Fraction(5, 2)}, [])
    rm = derive_resources(plant)
    m = transition_matrix(plant, rm, (0, "a"))
    assert all(v == Fraction(5, 2) for row in m.rows for v in row)


# -- execution times ----------------------------------------------------------


def test_exec_serial_is_sum():
    plant = serial_plant()
    rm = derive_resources(plant)
    assert exec_time(plant, rm, ("a", "b")) == 5
    assert heap_exec_time(plant, rm, ("a", "b")) == 5


def test_exec_par_is_max_like():
    plant = par_plant()
    rm = derive_resources(plant)
    # hand recurrence: after a heights (2, 0); b starts at height(r_b)=0 -> (2, 3)
    assert heap_exec_time(plant, rm, ("a", "b")) == 3
    assert exec_time(plant, rm, ("a", "b")) == 3


def test_exec_empty_string_and_bad_string():
    plant = serial_plant()
    rm = derive_resources(plant)
    assert heap_exec_time(plant, rm, ()) == 0
    with pytest.raises(TrajectoryError):
        exec_time(plant, rm, ("b",))


def test_oracle_equivalence_random():
    rng = random.Random(42)
    for _ in range(150):
        plant = random_plant(rng)
        rm = derive_resources(plant)
        if rm.n_h > 6:
            continue
        for s in sample_strings(plant, rng, 6, 3):
            assert exec_time(plant, rm, s) == heap_exec_time(plant, rm, s)


def test_prefix_monotonicity():
    rng = random.Random(5)
    for _ in range(60):
        plant = random_plant(rng)
        rm = derive_resources(plant)
        for s in sample_strings(plant, rng, 6, 2):
            times = prefix_exec_times(plant, rm, s)
            assert all(t1 <= t2 for t1, t2 in zip(times, times[1:]))


def test_duration_monotonicity():
    rng = random.Random(9)
    for _ in range(60):
        plant = random_plant(rng)
        rm = derive_resources(plant)
        ctrl = [tau for tau in plant.transitions if plant.automaton.table.controllable(tau[1])]
        if not ctrl:
            continue
        bumped = DelayVector(plant, {tau: Fraction(rng.randint(0, 3)) for tau in ctrl})
        val = DurationValuation(plant, bumped)
        for s in sample_strings(plant, rng, 5, 2):
            assert heap_exec_time(plant, rm, s) <= heap_exec_time(plant, rm, s, val)


def test_degenerate_bounds():
    rng = random.Random(31)
    for _ in range(40):
        base = random_plant(rng, max_states=4, max_events=3)
        names = base.automaton.table.names
        full_pairs = [(a, b) for i, a in enumerate(names) for b in names[i + 1:]]
        full = TimedPlant(base.automaton, base.durations, full_pairs)
        rm_full = derive_resources(full)
        none = TimedPlant(base.automaton, base.durations, [])
        rm_none = derive_resources(none)
        for s in sample_strings(base, rng, 5, 2):
            # full exclusion serializes: execution time is the duration sum
            total = sum((full.duration(tau) for tau in _walk(full, s)), Fraction(0))
            assert exec_time(full, rm_full, s) == total
            # reflexive-only: matrix route still equals the recurrence
            assert exec_time(none, rm_none, s) == heap_exec_time(none, rm_none, s)


def test_morphism_property():
    rng = random.Random(17)
    for _ in range(40):
        plant = random_plant(rng, max_states=4, max_events=3)
        rm = derive_resources(plant)
        if rm.n_h > 6:
            continue
        for s in sample_strings(plant, rng, 6, 2):
            for cut in range(len(s) + 1):
                left = string_matrix(plant, rm, s[:cut])
                # the suffix is walked from the intermediate state
                m = left
                x = plant.automaton.run(s[:cut])
                for e in s[cut:]:
                    m = m @ transition_matrix(plant, rm, (x, e))
                    x = plant.automaton.step(x, e)
                assert m == string_matrix(plant, rm, s)


def test_delay_vector_constraints():
    plant = serial_plant()
    with pytest.raises(ModelError):
        DelayVector(plant, {(1, "b"): 1})  # b uncontrollable
    with pytest.raises(ModelError):
        DelayVector(plant, {(0, "a"): -1})
    d = DelayVector.from_events(plant, {"a": Fraction(3, 2)})
    assert d.of((0, "a")) == Fraction(3, 2)
    val = DurationValuation(plant, d)
    assert val.of((0, "a")) == Fraction(7, 2)
    assert val.of((1, "b")) == 3


def _walk(plant, s):
    x = plant.automaton.initial
    for e in s:
        yield (x, e)
        x = plant.automaton.step(x, e)
