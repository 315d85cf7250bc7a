"""Enumeration of all nonempty minimal controllable sublanguages of a finite
controllable language, by bottom-up evaluation over its prefix tree.

Values are sets of languages.  At a controllable node a supervisor keeps
exactly one branch (or stops, when the node is marked); at an uncontrollable
node it must keep every branch, so the branch families combine by elementwise
union.  Mixed nodes are normalized first: deleting the controllable exits of a
mixed state does not change the result, since no minimal language can use an
exit the uncontrollable siblings force it to leave anyway.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

from supctl.automata import Automaton, FiniteLanguage, is_controllable, trim
from supctl.jobs import ContractError


class FamilyLimitExceeded(RuntimeError):
    """The language family outgrew the configured cap."""


@dataclass(frozen=True)
class LanguageFamily:
    """A deduplicated set of finite languages with a canonical order."""

    members: frozenset[frozenset[tuple[str, ...]]]

    @classmethod
    def of(cls, members) -> "LanguageFamily":
        return cls(frozenset(frozenset(tuple(s) for s in m) for m in members))

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[FiniteLanguage]:
        return iter(self.sorted())

    def sorted(self) -> list[FiniteLanguage]:
        keyed = sorted(tuple(sorted(m)) for m in self.members)
        return [FiniteLanguage(m) for m in keyed]

    def __contains__(self, language) -> bool:
        if isinstance(language, FiniteLanguage):
            return language.strings in self.members
        return frozenset(tuple(s) for s in language) in self.members


def collapse_mixed_states(tree: Automaton) -> Automaton:
    """Remove the controllable exits of every mixed state, then re-trim."""
    ctrl = tree.table.controllable
    doomed = set()
    for x in range(tree.num_states):
        if tree.state_kind(x) == "mixed":
            for e in tree.enabled(x):
                if ctrl(e):
                    doomed.add((x, e))
    if not doomed:
        return tree
    trans = {k: v for k, v in tree.transitions.items() if k not in doomed}
    pruned = Automaton(
        tree.table, tree.num_states, tree.initial, tree.marked, trans, tree.state_names
    )
    return trim(pruned)


def _prefix(event: str, family: list[frozenset]) -> list[frozenset]:
    return [frozenset((event,) + s for s in lang) for lang in family]


def minimal_controllable_sublanguages(
    tree: Automaton, g: Automaton, max_members: int = 10000
) -> LanguageFamily:
    """All nonempty minimal controllable sublanguages of Lm(tree) w.r.t. g.

    ``tree`` must be a trim tree-shaped automaton whose marked language is
    nonempty and controllable w.r.t. g; mixed states are normalized here.
    Worst-case family size is exponential; ``max_members`` aborts the
    computation with a diagnostic instead of thrashing.
    """
    if tree.is_empty or not tree.marked:
        raise ContractError("the input language must be nonempty")
    if not is_controllable(tree, g):
        raise ContractError("the input language must be controllable")
    work = collapse_mixed_states(tree)

    sub_order: list[int] = []  # post-order over the tree
    stack = [work.initial]
    seen = set()
    while stack:
        x = stack.pop()
        if x in seen:
            continue
        seen.add(x)
        sub_order.append(x)
        for e in work.enabled(x):
            stack.append(work.transitions[(x, e)])
    sub_order.reverse()

    eps = frozenset({()})
    family_at: dict[int, list[frozenset]] = {}
    for x in sub_order:
        branches = work.enabled(x)
        if not branches:
            family_at[x] = [eps]  # leaves of a trim tree are marked
            continue
        branch_families = [
            _prefix(e, family_at[work.transitions[(x, e)]]) for e in branches
        ]
        if work.state_kind(x) == "uncontrollable":
            acc = [frozenset()]
            for fam in branch_families:
                nxt = []
                for base in acc:
                    for lang in fam:
                        nxt.append(base | lang)
                        if len(nxt) > max_members:
                            raise FamilyLimitExceeded(
                                f"family exceeds {max_members} members at state {x}"
                            )
                acc = _dedup(nxt)
            family_at[x] = acc
        else:
            merged: list[frozenset] = []
            for fam in branch_families:
                merged.extend(fam)
            if work.is_marked(x):
                merged.append(eps)
            family_at[x] = _dedup(merged)
            if len(family_at[x]) > max_members:
                raise FamilyLimitExceeded(f"family exceeds {max_members} members at state {x}")

    return LanguageFamily.of(family_at[work.initial])


def _dedup(families: list[frozenset]) -> list[frozenset]:
    seen = set()
    out = []
    for f in families:
        if f not in seen:
            seen.add(f)
            out.append(f)
    return out
