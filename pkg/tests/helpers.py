"""Shared fixture builders, random instance generators and naive oracles.

Oracles here are written independently of the library's algorithmic path:
subset enumeration, definition-level language operations and grid search.
They are deliberately slow and only used at desk scale.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

from supctl.automata import (
    Automaton,
    EventTable,
    FiniteLanguage,
    enumerate_language,
    is_controllable,
    natural_projection,
)
from supctl.jobs import JobSet, JobSpec, job_times, satisfies_jobs
from supctl.timing import DelayVector, DurationValuation, TimedPlant, derive_resources


def build_automaton(events, states, initial, marked, transitions) -> Automaton:
    """Compact builder: states and transitions by name."""
    table = EventTable(events)
    idx = {name: i for i, name in enumerate(states)}
    trans = {(idx[src], e): idx[dst] for src, e, dst in transitions}
    return Automaton(table, len(states), idx[initial], (idx[m] for m in marked), trans, states)


def chain_automaton(events, string, marked_end=True) -> Automaton:
    """Linear automaton accepting exactly one string."""
    states = [f"q{i}" for i in range(len(string) + 1)]
    transitions = [(f"q{i}", e, f"q{i+1}") for i, e in enumerate(string)]
    marked = [states[-1]] if marked_end else []
    return build_automaton(events, states, "q0", marked, transitions)


# -- the small shared fixtures ------------------------------------------


def serial_plant() -> TimedPlant:
    """a controllable (2), b uncontrollable (3); full mutual exclusion."""
    aut = build_automaton(
        [("a", True), ("b", False)], ["x0", "x1", "x2"], "x0", ["x2"],
        [("x0", "a", "x1"), ("x1", "b", "x2")],
    )
    return TimedPlant(aut, {(0, "a"): 2, (1, "b"): 3}, [("a", "b")])


def par_plant() -> TimedPlant:
    """Same shape as serial_plant but with reflexive-only exclusion."""
    aut = build_automaton(
        [("a", True), ("b", False)], ["x0", "x1", "x2"], "x0", ["x2"],
        [("x0", "a", "x1"), ("x1", "b", "x2")],
    )
    return TimedPlant(aut, {(0, "a"): 2, (1, "b"): 3}, [])


def uc_automaton() -> Automaton:
    """Root with uncontrollable branches u1 (marked leaf) and u2; u2 leads to
    controllable choices c1/c2, both marked."""
    return build_automaton(
        [("u1", False), ("u2", False), ("c1", True), ("c2", True)],
        ["q0", "q1", "q2", "q3", "q4"],
        "q0",
        ["q1", "q3", "q4"],
        [("q0", "u1", "q1"), ("q0", "u2", "q2"), ("q2", "c1", "q3"), ("q2", "c2", "q4")],
    )


def serial_jobs(d1, d2) -> JobSet:
    return JobSet(
        [
            JobSpec("job1", ["a"], chain_automaton([("a", True)], ["a"]), d1),
            JobSpec("job2", ["b"], chain_automaton([("b", False)], ["b"]), d2),
        ]
    )


# -- definition-level language oracles ------------------------------------


def shuffle_strings(u, v):
    """All interleavings of two strings (definition of the shuffle product)."""
    u, v = tuple(u), tuple(v)
    if not u:
        return {v}
    if not v:
        return {u}
    return {(u[0],) + w for w in shuffle_strings(u[1:], v)} | {(v[0],) + w for w in shuffle_strings(u, v[1:])}


def naive_sync(lang_a, alpha_a, lang_b, alpha_b, max_len):
    """Definition-level synchronous product: strings over the union alphabet
    whose projections land in the component languages."""
    union = sorted(set(alpha_a) | set(alpha_b))
    out = set()
    strings_a = {tuple(s) for s in lang_a}
    strings_b = {tuple(s) for s in lang_b}
    for n in range(max_len + 1):
        for s in itertools.product(union, repeat=n):
            if natural_projection(s, alpha_a) in strings_a and natural_projection(s, alpha_b) in strings_b:
                out.add(s)
    return out


def language_automaton(table: EventTable, strings) -> Automaton:
    """Prefix-tree automaton for a finite set of strings."""
    nodes = {(): 0}
    order = [()]
    for s in sorted(set(tuple(x) for x in strings)):
        for i in range(1, len(s) + 1):
            p = s[:i]
            if p not in nodes:
                nodes[p] = len(order)
                order.append(p)
    trans = {}
    for p in order:
        if p:
            trans[(nodes[p[:-1]], p[-1])] = nodes[p]
    marked = [nodes[tuple(s)] for s in set(tuple(x) for x in strings)]
    names = ["ε" if not p else " ".join(p) for p in order]
    return Automaton(table, len(order), 0, marked, trans, names)


def brute_supremal_controllable(candidates, g: Automaton):
    """The union of all controllable subsets of ``candidates`` w.r.t. g.

    Controllable languages are closed under union, so the union over all
    controllable subsets is the supremal controllable sublanguage of the
    candidate set.  Pure subset enumeration; |candidates| must stay small.
    """
    candidates = sorted(set(tuple(s) for s in candidates))
    best: set[tuple] = set()
    for r in range(len(candidates) + 1):
        for combo in itertools.combinations(candidates, r):
            sub = set(combo)
            if sub <= best:
                continue
            aut = language_automaton(g.table, sub)
            if is_controllable(aut, g):
                best |= sub
    return best


def brute_minimal_controllable(strings, g: Automaton):
    """All minimal nonempty controllable sublanguages of a finite language,
    by enumerating every subset."""
    strings = sorted(set(tuple(s) for s in strings))
    controllable_subsets = []
    for r in range(1, len(strings) + 1):
        for combo in itertools.combinations(strings, r):
            aut = language_automaton(g.table, combo)
            if is_controllable(aut, g):
                controllable_subsets.append(frozenset(combo))
    minimal = [
        s for s in controllable_subsets
        if not any(t < s for t in controllable_subsets)
    ]
    return set(minimal)


# -- random instance generation -------------------------------------------


def random_plant(rng: random.Random, max_states=5, max_events=4, acyclic=False) -> TimedPlant:
    """Random small deterministic plant with random durations and exclusions."""
    n_events = rng.randint(2, max_events)
    events = [(f"e{i}", rng.random() < 0.6) for i in range(n_events)]
    if not any(c for _, c in events):
        events[0] = (events[0][0], True)
    n_states = rng.randint(2, max_states)
    table = EventTable(events)
    trans = {}
    for x in range(n_states):
        for i, (e, _) in enumerate(events):
            if rng.random() < 0.45:
                lo = x + 1 if acyclic else 0
                if lo >= n_states:
                    continue
                trans[(x, e)] = rng.randint(lo, n_states - 1)
    marked = [x for x in range(n_states) if rng.random() < 0.5] or [n_states - 1]
    aut = Automaton(table, n_states, 0, marked, trans)
    durations = {}
    for tau in aut.transitions:
        durations[tau] = Fraction(rng.randint(1, 8), rng.choice([1, 1, 2]))
    names = [e for e, _ in events]
    pairs = []
    for i in range(len(names)):
        for j in range(i + 1, len(names)):
            if rng.random() < 0.4:
                pairs.append((names[i], names[j]))
    return TimedPlant(aut, durations, pairs)


def random_jobset(rng: random.Random, plant: TimedPlant, max_jobs=3, deadline_hi=14) -> JobSet:
    """Random job family covering the plant alphabet, with single-string or
    small-language job requirements derived from plant behavior."""
    names = list(plant.automaton.table.names)
    k = rng.randint(1, min(max_jobs, len(names)))
    # partition then optionally overlap, keeping the cover assumption
    rng.shuffle(names)
    groups = [names[i::k] for i in range(k)]
    for g in groups:
        extra = rng.choice(names)
        if extra not in g and rng.random() < 0.3:
            g.append(extra)
    jobs = []
    sample = enumerate_language(plant.automaton, 4).sorted()
    for i, group in enumerate(groups):
        evs = [(e, plant.automaton.table.controllable(e)) for e in sorted(group, key=plant.automaton.table.index)]
        projections = {natural_projection(s, group) for s in sample} or {()}
        chosen = rng.sample(sorted(projections), k=min(len(projections), rng.randint(1, 2)))
        lang = language_automaton(EventTable(evs), chosen)
        jobs.append(JobSpec(f"j{i}", group, lang, Fraction(rng.randint(2, deadline_hi))))
    return JobSet(jobs)


def grid_search_delays(plant, rm, jobset, language, step: Fraction, box_hi: Fraction):
    """Dense grid search for min over D of max-string earliness, subject to all
    deadlines; returns (best earliness, best DelayVector) or (None, None)."""
    variables = sorted(
        {tau for s in language for tau in _path(plant, s) if plant.automaton.table.controllable(tau[1])}
    )
    points = []
    ticks = []
    t = Fraction(0)
    while t <= box_hi:
        ticks.append(t)
        t += step
    best = None
    best_vec = None
    for combo in itertools.product(ticks, repeat=len(variables)):
        vec = DelayVector(plant, dict(zip(variables, combo)))
        val = DurationValuation(plant, vec)
        worst = Fraction(0)
        ok = True
        for s in language:
            times = job_times(plant, rm, jobset, s, val)
            if any(t > j.deadline for t, j in zip(times, jobset)):
                ok = False
                break
            e = sum((j.deadline - t for j, t in zip(jobset, times)), Fraction(0))
            if e > worst:
                worst = e
        if ok and (best is None or worst < best):
            best = worst
            best_vec = vec
    return best, best_vec


def _path(plant, string):
    aut = plant.automaton
    x = aut.initial
    out = []
    for e in string:
        out.append((x, e))
        x = aut.step(x, e)
    return out
