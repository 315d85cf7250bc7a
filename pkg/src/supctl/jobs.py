"""Job requirements with deadlines, completion times and earliness measures."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from supctl.automata import Automaton, FiniteLanguage, ModelError, natural_projection
from supctl.timing import (
    DurationValuation,
    ResourceModel,
    TimedPlant,
    as_fraction,
    prefix_exec_times,
)


class ContractError(ValueError):
    """An operation was called outside its stated precondition."""


class JobSpec:
    """One job: a regular language over a sub-alphabet plus a deadline."""

    __slots__ = ("name", "alphabet", "language", "deadline")

    def __init__(self, name: str, alphabet, language: Automaton, deadline):
        if not name:
            raise ModelError("job name must be non-empty")
        self.name = name
        self.alphabet = frozenset(alphabet)
        if not self.alphabet:
            raise ModelError(f"job {name!r} has an empty alphabet")
        for e in language.table.names:
            if e not in self.alphabet:
                raise ModelError(f"job {name!r}: language event {e!r} outside its alphabet")
        self.language = language
        self.deadline = as_fraction(deadline)
        if self.deadline <= 0:
            raise ModelError(f"job {name!r}: deadline must be positive")

    def completes(self, string: Sequence[str]) -> bool:
        """True when the projection of ``string`` onto the job alphabet is in the job language."""
        return self.language.accepts(natural_projection(string, self.alphabet))

    def __repr__(self) -> str:
        return f"JobSpec({self.name!r}, deadline={self.deadline})"


class JobSet:
    """Indexed family of jobs plus an optional general logic requirement.

    The standing alphabet-cover assumption (every plant event belongs to some
    job alphabet) is validated against a plant at synthesis time, not here,
    since a job set alone does not know the plant alphabet.
    """

    __slots__ = ("jobs", "logic")

    def __init__(self, jobs: Sequence[JobSpec], logic: Automaton | None = None):
        names = [j.name for j in jobs]
        if len(set(names)) != len(names):
            raise ModelError(f"duplicate job names: {names}")
        self.jobs = tuple(jobs)
        self.logic = logic

    def __iter__(self):
        return iter(self.jobs)

    def __len__(self) -> int:
        return len(self.jobs)

    def by_name(self, name: str) -> JobSpec:
        for j in self.jobs:
            if j.name == name:
                return j
        raise ModelError(f"no job named {name!r}")

    def alphabet_union(self) -> frozenset[str]:
        out: frozenset[str] = frozenset()
        for j in self.jobs:
            out |= j.alphabet
        return out

    def check_cover(self, plant: TimedPlant) -> None:
        missing = set(plant.automaton.table.names) - self.alphabet_union()
        if missing:
            raise ModelError(f"plant events not covered by any job alphabet: {sorted(missing)}")


def job_exec_time(
    plant: TimedPlant,
    rm: ResourceModel,
    job: JobSpec,
    string: Sequence[str],
    val: DurationValuation | None = None,
) -> Fraction:
    """Execution time of the longest prefix ending with an event of the job
    alphabet; zero when the string contains no such event."""
    last = -1
    for i, e in enumerate(string):
        if e in job.alphabet:
            last = i
    times = prefix_exec_times(plant, rm, string, val)
    return times[last + 1] if last >= 0 else Fraction(0)


def job_times(
    plant: TimedPlant,
    rm: ResourceModel,
    jobset: JobSet,
    string: Sequence[str],
    val: DurationValuation | None = None,
) -> tuple[Fraction, ...]:
    """Per-job execution times of one string, in job order (single timing pass)."""
    times = prefix_exec_times(plant, rm, string, val)
    out = []
    for job in jobset:
        last = -1
        for i, e in enumerate(string):
            if e in job.alphabet:
                last = i
        out.append(times[last + 1] if last >= 0 else Fraction(0))
    return tuple(out)


def satisfies_jobs(
    plant: TimedPlant,
    rm: ResourceModel,
    jobset: JobSet,
    string: Sequence[str],
    val: DurationValuation | None = None,
) -> bool:
    """Membership in the deadline-satisfaction language: every job is completed
    and its completion time is within the deadline (<=, exact rationals)."""
    if not all(job.completes(string) for job in jobset):
        return False
    times = job_times(plant, rm, jobset, string, val)
    return all(t <= job.deadline for t, job in zip(times, jobset))


def earliness_of_times(jobset: JobSet, times: Sequence[Fraction]) -> Fraction:
    """Sum of (deadline - completion time) over all jobs; requires every t <= d."""
    if len(times) != len(jobset.jobs):
        raise ContractError("one completion time per job required")
    total = Fraction(0)
    for job, t in zip(jobset, times):
        if t > job.deadline:
            raise ContractError(f"job {job.name!r} misses its deadline ({t} > {job.deadline})")
        total += job.deadline - t
    return total


def earliness_of_string(
    plant: TimedPlant,
    rm: ResourceModel,
    jobset: JobSet,
    string: Sequence[str],
    val: DurationValuation | None = None,
) -> Fraction:
    if not all(job.completes(string) for job in jobset):
        raise ContractError("earliness is defined only for strings completing every job")
    return earliness_of_times(jobset, job_times(plant, rm, jobset, string, val))


def earliness_of_language(
    jobset: JobSet, times_per_string: Mapping[tuple[str, ...], Sequence[Fraction]]
) -> Fraction:
    """Earliness of a finite language: the max over its strings; 0 for the empty set."""
    best = Fraction(0)
    first = True
    for times in times_per_string.values():
        e = earliness_of_times(jobset, times)
        if first or e > best:
            best = e
            first = False
    return best
