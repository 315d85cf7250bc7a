"""Supervisor synthesis: deadline-satisfaction trees, the supremal-controllable
fixpoint, and synthesis under relaxed deadlines.

The deadline tree annotates each node with the accumulated max-plus row vector
(the per-resource height profile, i.e. 1^t M(s)), the elapsed time and the
per-job completion times.  The row vector is all any extension needs, by
associativity of the morphism; the full-matrix route stays available in
``timing.exec_time`` as the independent oracle.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from supctl.automata import (
    Automaton,
    FiniteLanguage,
    ModelError,
    sync_product_with_map,
    trim_with_map,
)
from supctl.jobs import JobSet, job_times
from supctl.timing import (
    DurationValuation,
    ResourceModel,
    TimedPlant,
    heap_step,
)


@dataclass(frozen=True)
class TreeNode:
    """Annotation of one deadline-tree state (the (k+2)-tuple plus component states)."""

    plant_state: int
    logic_state: int | None
    job_states: tuple[int, ...]
    heights: tuple[Fraction, ...]
    elapsed: Fraction
    times: tuple[Fraction, ...]


@dataclass
class JobTree:
    """Trim tree automaton for the deadline-satisfaction language, with annotations."""

    automaton: Automaton
    plant_state_of: dict[int, int]
    node_of: dict[int, TreeNode]

    @property
    def is_empty(self) -> bool:
        return self.automaton.is_empty


@dataclass
class SynthesisResult:
    """A synthesized supervisor plus its language-level summary."""

    automaton: Automaton
    plant_state_of: dict[int, int]
    language: FiniteLanguage | None  # None when the supervisor is cyclic
    job_times: dict[tuple[str, ...], tuple[Fraction, ...]] | None

    @property
    def is_empty(self) -> bool:
        return self.automaton.is_empty


def is_acyclic(a: Automaton) -> bool:
    color: dict[int, int] = {}

    def visit(x: int) -> bool:
        color[x] = 1
        for e in a.enabled(x):
            y = a.transitions[(x, e)]
            c = color.get(y)
            if c == 1:
                return False
            if c is None and not visit(y):
                return False
        color[x] = 2
        return True

    if a.is_empty:
        return True
    return visit(a.initial)


# -- deadline tree (Algorithm-1 style construction) -------------------------


def build_job_tree(
    plant: TimedPlant,
    rm: ResourceModel,
    jobset: JobSet,
    val: DurationValuation | None = None,
) -> JobTree:
    """Breadth-first tree of plant strings consistent with the logic and job
    languages, cut as soon as some job time strictly exceeds its deadline.

    Nodes are marked when every component accepts; the final tree is trimmed.
    The alphabet-cover assumption makes the tree finite (every event advances
    some job clock and durations are positive).
    """
    jobset.check_cover(plant)
    val = val if val is not None else DurationValuation(plant)
    aut = plant.automaton
    logic = jobset.logic
    if aut.is_empty or (logic is not None and logic.is_empty):
        return JobTree(Automaton.empty(aut.table), {}, {})
    deadlines = [j.deadline for j in jobset]
    max_deadline = max(deadlines)
    job_auts = [j.language for j in jobset]
    job_alphabets = [j.alphabet for j in jobset]
    logic_alpha = frozenset(logic.table.names) if logic is not None else frozenset()

    zero = Fraction(0)
    root = TreeNode(
        aut.initial,
        logic.initial if logic is not None else None,
        tuple(a.initial for a in job_auts),
        tuple(zero for _ in range(rm.n_h)),
        zero,
        tuple(zero for _ in deadlines),
    )
    nodes = [root]
    transitions: dict[tuple[int, str], int] = {}
    queue = deque([0])
    while queue:
        nid = queue.popleft()
        node = nodes[nid]
        if node.elapsed > max_deadline:
            continue  # every extension would push some job past its deadline
        for e in aut.enabled(node.plant_state):
            if logic is not None and e in logic_alpha:
                ls = logic.step(node.logic_state, e)
                if ls is None:
                    continue
            else:
                ls = node.logic_state
            js = list(node.job_states)
            dead = False
            for i, alpha in enumerate(job_alphabets):
                if e in alpha:
                    nxt = job_auts[i].step(js[i], e)
                    if nxt is None:
                        dead = True
                        break
                    js[i] = nxt
            if dead:
                continue
            tau = (node.plant_state, e)
            heights = heap_step(node.heights, rm, tau, val.of(tau))
            elapsed = max(heights) if heights else zero
            times = tuple(
                elapsed if e in alpha else t for t, alpha in zip(node.times, job_alphabets)
            )
            if any(t > d for t, d in zip(times, deadlines)):
                continue  # cut: strictly late (boundary-exact strings are kept)
            child = TreeNode(aut.step(node.plant_state, e), ls, tuple(js), heights, elapsed, times)
            cid = len(nodes)
            nodes.append(child)
            transitions[(nid, e)] = cid
            queue.append(cid)

    marked = []
    for nid, node in enumerate(nodes):
        ok = node.plant_state in aut.marked
        if ok and logic is not None:
            ok = node.logic_state in logic.marked
        if ok:
            ok = all(s in a.marked for s, a in zip(node.job_states, job_auts))
        if ok:
            marked.append(nid)
    tree = Automaton(aut.table, len(nodes), 0, marked, transitions)
    trimmed, remap = trim_with_map(tree)
    plant_state_of = {new: nodes[old].plant_state for old, new in remap.items()}
    node_of = {new: nodes[old] for old, new in remap.items()}
    return JobTree(trimmed, plant_state_of, node_of)


# -- supremal controllable fixpoint ------------------------------------------


def supcon(
    spec: Automaton, g: Automaton, plant_state_of: Mapping[int, int]
) -> tuple[Automaton, dict[int, int]]:
    """Supremal controllable sublanguage of Lm(spec) w.r.t. g.

    Iteratively removes spec states at which the plant enables an
    uncontrollable event the spec does not carry, then re-trims; works on
    cyclic inputs.  Each spec state must be annotated with its plant state.
    """
    if spec.is_empty:
        return spec, {}
    for x in range(spec.num_states):
        if x not in plant_state_of:
            raise ModelError(f"spec state {x} carries no plant state")
    uncontrollables = spec.table.uncontrollables
    alive = set(range(spec.num_states))

    def trim_alive() -> None:
        if spec.initial not in alive:
            alive.clear()
            return
        reach = {spec.initial}
        stack = [spec.initial]
        while stack:
            x = stack.pop()
            for e in spec.enabled(x):
                y = spec.transitions[(x, e)]
                if y in alive and y not in reach:
                    reach.add(y)
                    stack.append(y)
        rev: dict[int, list[int]] = {x: [] for x in reach}
        for (x, e), y in spec.transitions.items():
            if x in reach and y in reach:
                rev[y].append(x)
        co = {m for m in spec.marked if m in reach}
        stack = list(co)
        while stack:
            y = stack.pop()
            for x in rev[y]:
                if x not in co:
                    co.add(x)
                    stack.append(x)
        alive.intersection_update(reach & co)

    while True:
        trim_alive()
        if not alive:
            return Automaton.empty(spec.table), {}
        bad = set()
        for x in alive:
            px = plant_state_of[x]
            for u in uncontrollables:
                if g.step(px, u) is None:
                    continue
                y = spec.transitions.get((x, u))
                if y is None or y not in alive:
                    bad.add(x)
                    break
        if not bad:
            break
        alive -= bad

    # rebuild with deterministic ids (BFS over the surviving part)
    order = [spec.initial]
    seen = {spec.initial}
    for x in order:
        for e in spec.enabled(x):
            y = spec.transitions[(x, e)]
            if y in alive and y not in seen:
                seen.add(y)
                order.append(y)
    remap = {x: i for i, x in enumerate(order)}
    trans = {
        (remap[x], e): remap[y]
        for (x, e), y in spec.transitions.items()
        if x in remap and y in remap
    }
    out = Automaton(
        spec.table,
        len(order),
        0,
        (remap[m] for m in spec.marked if m in remap),
        trans,
        tuple(spec.state_names[x] for x in order),
    )
    return out, {remap[x]: plant_state_of[x] for x in order}


def _language_summary(
    plant: TimedPlant,
    rm: ResourceModel,
    jobset: JobSet,
    aut: Automaton,
    val: DurationValuation | None,
) -> tuple[FiniteLanguage | None, dict | None]:
    if aut.is_empty:
        return FiniteLanguage([]), {}
    if not is_acyclic(aut):
        return None, None
    from supctl.automata import enumerate_language

    lang = enumerate_language(aut, aut.num_states)
    times = {s: job_times(plant, rm, jobset, s, val) for s in lang.sorted()}
    return lang, times


def sup_c(
    plant: TimedPlant,
    rm: ResourceModel,
    jobset: JobSet,
    val: DurationValuation | None = None,
) -> SynthesisResult:
    """Supremal controllable deadline-satisfying sublanguage (tree + supcon)."""
    tree = build_job_tree(plant, rm, jobset, val)
    sup, ps = supcon(tree.automaton, plant.automaton, tree.plant_state_of)
    lang, times = _language_summary(plant, rm, jobset, sup, val)
    return SynthesisResult(sup, ps, lang, times)


# -- relaxed synthesis --------------------------------------------------------


def _fold_product(parts: Sequence[Automaton]) -> tuple[Automaton, dict[int, int]]:
    """Synchronous product of several automata, keeping the map onto the first
    component's states (the plant annotation required by supcon)."""
    acc = parts[0]
    acc_map = {x: x for x in range(acc.num_states)}
    for nxt in parts[1:]:
        prod, pair_of = sync_product_with_map(acc, nxt)
        acc_map = {s: acc_map[pair_of[s][0]] for s in pair_of}
        acc = prod
        if acc.is_empty:
            return acc, {}
    return acc, acc_map


@dataclass(frozen=True)
class _ATNode:
    plant_state: int
    job_states: tuple[int, ...]  # tracked jobs only
    heights: tuple[Fraction, ...]
    elapsed: Fraction
    times: tuple[Fraction, ...]  # tracked jobs only


def _build_deadline_tracker(
    plant: TimedPlant,
    rm: ResourceModel,
    tracked: Sequence,
    val: DurationValuation,
    loop_on_equal: bool,
) -> Automaton:
    """The deadline-tracking automaton: a tree over plant strings that accepts
    exactly the strings meeting every tracked job's language and deadline.

    Once the elapsed time of a node reaches every tracked deadline, events
    outside the tracked alphabets self-loop there instead of growing the tree
    (they can no longer influence any tracked completion); equal-annotation
    loop states are merged.  With no tracked jobs the tracker degenerates to
    a single accepting state looping on the whole alphabet.
    """
    aut = plant.automaton
    table = aut.table
    zero = Fraction(0)
    tracked_alpha = frozenset().union(*(j.alphabet for j in tracked)) if tracked else frozenset()
    untracked_events = [e for e in table.names if e not in tracked_alpha]
    deadlines = [j.deadline for j in tracked]
    job_auts = [j.language for j in tracked]
    alphabets = [j.alphabet for j in tracked]

    def is_loop(node: _ATNode) -> bool:
        if loop_on_equal:
            return all(node.elapsed >= d for d in deadlines)
        return all(node.elapsed > d for d in deadlines)

    root = _ATNode(
        aut.initial,
        tuple(a.initial for a in job_auts),
        tuple(zero for _ in range(rm.n_h)),
        zero,
        tuple(zero for _ in deadlines),
    )
    nodes = [root]
    transitions: dict[tuple[int, str], int] = {}
    loop_id_of: dict[_ATNode, int] = {}
    loop_states: set[int] = set()
    untracked_set = frozenset(untracked_events)
    queue = deque([0])
    if is_loop(root):
        loop_id_of[root] = 0
        loop_states.add(0)
        for e in untracked_events:
            transitions[(0, e)] = 0
    while queue:
        nid = queue.popleft()
        node = nodes[nid]
        looping = nid in loop_states
        for e in aut.enabled(node.plant_state):
            if looping and e in untracked_set:
                continue  # covered by the self-loop
            js = list(node.job_states)
            dead = False
            for i, alpha in enumerate(alphabets):
                if e in alpha:
                    nxt = job_auts[i].step(js[i], e)
                    if nxt is None:
                        dead = True
                        break
                    js[i] = nxt
            if dead:
                continue
            tau = (node.plant_state, e)
            heights = heap_step(node.heights, rm, tau, val.of(tau))
            elapsed = max(heights) if heights else zero
            times = tuple(
                elapsed if e in alpha else t for t, alpha in zip(node.times, alphabets)
            )
            if any(t > d for t, d in zip(times, deadlines)):
                continue
            child = _ATNode(aut.step(node.plant_state, e), tuple(js), heights, elapsed, times)
            if is_loop(child):
                cid = loop_id_of.get(child)
                if cid is None:
                    cid = len(nodes)
                    nodes.append(child)
                    loop_id_of[child] = cid
                    loop_states.add(cid)
                    for u in untracked_events:
                        transitions[(cid, u)] = cid
                    queue.append(cid)
                transitions[(nid, e)] = cid
            else:
                cid = len(nodes)
                nodes.append(child)
                transitions[(nid, e)] = cid
                queue.append(cid)

    marked = [
        nid
        for nid, node in enumerate(nodes)
        if all(s in a.marked for s, a in zip(node.job_states, job_auts))
    ]
    return Automaton(table, len(nodes), 0, marked, transitions)


def sup_cr(
    plant: TimedPlant,
    rm: ResourceModel,
    jobset: JobSet,
    relaxed: Iterable[str],
    val: DurationValuation | None = None,
    loop_on_equal: bool = True,
) -> SynthesisResult:
    """Supremal controllable sublanguage when the deadlines of ``relaxed`` jobs
    are dropped (their language requirements remain in force).

    Builds the logic/job product, intersects with the deadline tracker of the
    still-tracked jobs, and applies the supcon fixpoint.  The result may be
    cyclic (events of relaxed-only alphabets can repeat freely), in which case
    the language summary fields are None.
    """
    jobset.check_cover(plant)
    val = val if val is not None else DurationValuation(plant)
    relaxed = set(relaxed)
    for name in relaxed:
        jobset.by_name(name)  # validates
    tracked = [j for j in jobset if j.name not in relaxed]

    parts = [plant.automaton]
    if jobset.logic is not None:
        parts.append(jobset.logic)
    parts.extend(j.language for j in jobset)
    g_l, gl_plant = _fold_product(parts)
    if g_l.is_empty:
        return SynthesisResult(Automaton.empty(plant.automaton.table), {}, FiniteLanguage([]), {})

    tracker = _build_deadline_tracker(plant, rm, tracked, val, loop_on_equal)
    h, pair_of = sync_product_with_map(g_l, tracker)
    h_plant = {s: gl_plant[pair_of[s][0]] for s in pair_of}
    sup, ps = supcon(h, plant.automaton, h_plant)
    lang, times = _language_summary(plant, rm, jobset, sup, val)
    return SynthesisResult(sup, ps, lang, times)
