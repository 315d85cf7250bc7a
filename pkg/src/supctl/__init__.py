"""Timed supervisory control toolkit.

Plants are time-weighted automata (an automaton, positive transition
durations, and a mutual-exclusion relation on events).  The package
synthesizes supremal controllable supervisors under per-job deadlines,
optimizes delay insertion for minimum total earliness, and computes
minimal deadline-relaxation sets, with brute-force oracles for every
stage at desk scale.
"""

from supctl.automata import (
    Automaton,
    EventTable,
    FiniteLanguage,
    ModelError,
    enumerate_language,
    is_controllable,
    natural_projection,
    sync_product,
    trim,
)
from supctl.timing import (
    DelayVector,
    DurationValuation,
    MaxPlusMatrix,
    ResourceModel,
    TimedPlant,
    TrajectoryError,
    derive_resources,
    exec_time,
    heap_exec_time,
)
from supctl.jobs import JobSet, JobSpec, earliness_of_language, earliness_of_times, job_exec_time, satisfies_jobs

__all__ = [
    "Automaton",
    "DelayVector",
    "DurationValuation",
    "EventTable",
    "FiniteLanguage",
    "JobSet",
    "JobSpec",
    "MaxPlusMatrix",
    "ModelError",
    "ResourceModel",
    "TimedPlant",
    "TrajectoryError",
    "derive_resources",
    "earliness_of_language",
    "earliness_of_times",
    "enumerate_language",
    "exec_time",
    "heap_exec_time",
    "is_controllable",
    "job_exec_time",
    "natural_projection",
    "satisfies_jobs",
    "sync_product",
    "trim",
]
