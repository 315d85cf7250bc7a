import random
from fractions import Fraction

import pytest

from supctl.automata import EventTable, enumerate_language
from supctl.jobs import (
    ContractError,
    JobSet,
    JobSpec,
    earliness_of_language,
    earliness_of_string,
    earliness_of_times,
    job_exec_time,
    job_times,
    satisfies_jobs,
)
from supctl.timing import DelayVector, DurationValuation, TimedPlant, derive_resources, exec_time

from helpers import (
    build_automaton,
    chain_automaton,
    random_jobset,
    random_plant,
    serial_jobs,
    serial_plant,
)


def test_job_exec_time_projection_example():
    # four-event chain, job alphabet {a, c}: completion at prefix abc
    aut = chain_automaton([("a", True), ("b", True), ("c", True), ("d", True)], ["a", "b", "c", "d"])
    plant = TimedPlant(
        aut,
        {(0, "a"): 2, (1, "b"): 3, (2, "c"): 4, (3, "d"): 5},
        [("a", "b"), ("a", "c"), ("a", "d"), ("b", "c"), ("b", "d"), ("c", "d")],
    )
    rm = derive_resources(plant)
    job = JobSpec("j", ["a", "c"], chain_automaton([("a", True), ("c", True)], ["a", "c"]), 20)
    t = job_exec_time(plant, rm, job, ("a", "b", "c", "d"))
    assert t == exec_time(plant, rm, ("a", "b", "c"))
    assert t == 9


def test_job_exec_time_no_event_is_zero():
    plant = serial_plant()
    rm = derive_resources(plant)
    job = serial_jobs(4, 6).jobs[1]  # alphabet {b}
    assert job_exec_time(plant, rm, job, ("a",)) == 0


def test_serial_job_times():
    plant = serial_plant()
    rm = derive_resources(plant)
    jobs = serial_jobs(4, 6)
    assert job_times(plant, rm, jobs, ("a", "b")) == (2, 5)


def test_satisfies_jobs():
    plant = serial_plant()
    rm = derive_resources(plant)
    assert satisfies_jobs(plant, rm, serial_jobs(4, 6), ("a", "b")) is True
    assert satisfies_jobs(plant, rm, serial_jobs(4, 4), ("a", "b")) is False
    # empty string does not complete nonempty job requirements
    assert satisfies_jobs(plant, rm, serial_jobs(4, 6), ()) is False


def test_earliness_values():
    jobs = serial_jobs(20, 12)
    assert earliness_of_times(jobs, (Fraction(16), Fraction(10))) == 6
    assert earliness_of_times(jobs, (Fraction(17), Fraction(11))) == 4
    assert earliness_of_times(jobs, (Fraction(20), Fraction(12))) == 0
    with pytest.raises(ContractError):
        earliness_of_times(jobs, (Fraction(21), Fraction(10)))


def test_earliness_language():
    jobs = serial_jobs(20, 12)
    assert earliness_of_language(jobs, {}) == 0
    table = {
        ("s1",): (Fraction(16), Fraction(10)),
        ("s5",): (Fraction(17), Fraction(11)),
    }
    assert earliness_of_language(jobs, table) == 6
    assert earliness_of_language(jobs, {("s5",): (Fraction(17), Fraction(11))}) == 4


def test_earliness_of_string_contract():
    plant = serial_plant()
    rm = derive_resources(plant)
    jobs = serial_jobs(4, 6)
    assert earliness_of_string(plant, rm, jobs, ("a", "b")) == 3
    with pytest.raises(ContractError):
        earliness_of_string(plant, rm, jobs, ("a",))


def test_delays_never_decrease_job_times_and_earliness_antitone():
    rng = random.Random(77)
    cases = 0
    for _ in range(80):
        plant = random_plant(rng)
        rm = derive_resources(plant)
        jobset = random_jobset(rng, plant)
        ctrl = [tau for tau in plant.transitions if plant.automaton.table.controllable(tau[1])]
        if not ctrl:
            continue
        delay = DelayVector(plant, {tau: Fraction(rng.randint(0, 2)) for tau in ctrl})
        val = DurationValuation(plant, delay)
        for s in enumerate_language(plant.automaton, 4).sorted()[:4]:
            base = job_times(plant, rm, jobset, s)
            bumped = job_times(plant, rm, jobset, s, val)
            assert all(b >= a for a, b in zip(base, bumped))
            if satisfies_jobs(plant, rm, jobset, s) and satisfies_jobs(plant, rm, jobset, s, val):
                assert earliness_of_string(plant, rm, jobset, s, val) <= earliness_of_string(
                    plant, rm, jobset, s
                )
                cases += 1
            elif satisfies_jobs(plant, rm, jobset, s) and not satisfies_jobs(plant, rm, jobset, s, val):
                cases += 1  # feasibility lost by delay: allowed direction
            else:
                # delays can never make an infeasible string feasible
                assert not (
                    not satisfies_jobs(plant, rm, jobset, s) and satisfies_jobs(plant, rm, jobset, s, val)
                )
    assert cases >= 10


def test_subset_monotonicity_of_language_earliness():
    jobs = serial_jobs(20, 12)
    t1 = {("x",): (Fraction(16), Fraction(10))}
    t2 = dict(t1)
    t2[("y",)] = (Fraction(14), Fraction(9))
    assert earliness_of_language(jobs, t1) <= earliness_of_language(jobs, t2)


def test_jobset_validation():
    with pytest.raises(Exception):
        JobSpec("", ["a"], chain_automaton([("a", True)], ["a"]), 4)
    with pytest.raises(Exception):
        JobSpec("j", ["a"], chain_automaton([("b", True)], ["b"]), 4)
    with pytest.raises(Exception):
        JobSpec("j", ["a"], chain_automaton([("a", True)], ["a"]), 0)
    plant = serial_plant()
    partial = JobSet([JobSpec("j", ["a"], chain_automaton([("a", True)], ["a"]), 4)])
    with pytest.raises(Exception):
        partial.check_cover(plant)
    serial_jobs(4, 6).check_cover(plant)
