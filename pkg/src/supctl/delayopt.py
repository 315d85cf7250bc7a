"""Optimal delay insertion for minimum total job earliness.

Adding a delay vector D (nonnegative, zero on uncontrollable transitions) to
the base durations changes every job completion time into a piecewise-affine
function of D: within a fixed pattern of argmax choices of the height
recurrence, each resource height is a single affine expression, and the
pattern is valid exactly on the polyhedron where each fixed choice dominates
its alternatives.  Exact mode enumerates the (finitely many) patterns the
recurrence can generate and solves one epigraph LP per pattern; heuristic mode
re-derives the pattern at the current point and iterates LP solves to a
fixpoint from several deterministic starts.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

from supctl.automata import FiniteLanguage
from supctl.jobs import ContractError, JobSet, job_times, satisfies_jobs
from supctl.lp import LinearProgram, solve_lp
from supctl.minlang import LanguageFamily, minimal_controllable_sublanguages
from supctl.synthesis import SynthesisResult, sup_c
from supctl.timing import (
    DelayVector,
    DurationValuation,
    ResourceModel,
    TimedPlant,
    Transition,
    trajectory,
)

ZERO = Fraction(0)


class PatternBudgetExceeded(RuntimeError):
    """Exact-mode pattern enumeration outgrew the configured cap."""


@dataclass(frozen=True)
class DelayContext:
    """Ordered delay variables: the controllable transitions along a language."""

    variables: tuple[Transition, ...]

    @classmethod
    def for_language(cls, plant: TimedPlant, language: Iterable[Sequence[str]]) -> "DelayContext":
        table = plant.automaton.table
        seen = set()
        for s in language:
            for tau in trajectory(plant, s):
                if table.controllable(tau[1]):
                    seen.add(tau)
        ordered = tuple(sorted(seen, key=lambda t: (t[0], table.index(t[1]))))
        return cls(ordered)

    def __len__(self) -> int:
        return len(self.variables)

    def index(self, tau: Transition) -> int:
        return self.variables.index(tau)

    def vector(self, plant: TimedPlant, point: Sequence[Fraction]) -> DelayVector:
        return DelayVector(plant, dict(zip(self.variables, point)))

    def point_of(self, delay: DelayVector) -> tuple[Fraction, ...]:
        return tuple(delay.of(tau) for tau in self.variables)


@dataclass(frozen=True)
class AffineExpr:
    """coeffs . D + const, coefficients being occurrence counts (nonnegative ints)."""

    coeffs: tuple[int, ...]
    const: Fraction

    @classmethod
    def constant(cls, nvars: int, value: Fraction) -> "AffineExpr":
        return cls((0,) * nvars, value)

    def shift(self, value: Fraction) -> "AffineExpr":
        return AffineExpr(self.coeffs, self.const + value)

    def bump(self, var: int) -> "AffineExpr":
        c = list(self.coeffs)
        c[var] += 1
        return AffineExpr(tuple(c), self.const)

    def evaluate(self, point: Sequence[Fraction]) -> Fraction:
        return sum((c * p for c, p in zip(self.coeffs, point) if c), ZERO) + self.const


@dataclass(frozen=True)
class Ineq:
    """coeffs . D + const >= 0 over the context variables."""

    coeffs: tuple[int, ...]
    const: Fraction

    @classmethod
    def geq(cls, a: AffineExpr, b: AffineExpr) -> "Ineq":
        return cls(tuple(x - y for x, y in zip(a.coeffs, b.coeffs)), a.const - b.const)

    def always_true(self) -> bool:
        return self.const >= 0 and all(c >= 0 for c in self.coeffs)

    def always_false(self) -> bool:
        return self.const < 0 and all(c <= 0 for c in self.coeffs)

    def holds_at(self, point: Sequence[Fraction]) -> bool:
        return sum((c * p for c, p in zip(self.coeffs, point) if c), ZERO) + self.const >= 0


@dataclass(frozen=True)
class StringPattern:
    """One resolution of all argmax choices for one string: per-job affine
    completion times, valid on the stated region."""

    job_exprs: tuple[AffineExpr, ...]
    region: tuple[Ineq, ...]


@dataclass(frozen=True)
class DelayRegion:
    """Polyhedron of optimal delays (H-representation) with one witness point."""

    ineqs: tuple[Ineq, ...]
    witness: tuple[Fraction, ...]
    variables: tuple[Transition, ...]

    def contains(self, delay: DelayVector) -> bool:
        """Membership of the projection onto the region's variables.

        Delays on transitions outside the variable set cannot influence the
        optimized language, so the optimal-delay set is a cylinder over them.
        """
        point = tuple(delay.of(tau) for tau in self.variables)
        return all(iq.holds_at(point) for iq in self.ineqs)

    def witness_vector(self, plant: TimedPlant) -> DelayVector:
        return DelayVector(plant, dict(zip(self.variables, self.witness)))


@dataclass
class LanguageDelayResult:
    language: FiniteLanguage
    e_star: Fraction
    regions: tuple[DelayRegion, ...]
    mode: str
    variables: tuple[Transition, ...]


@dataclass
class OptimalDelayReport:
    per_language: tuple[LanguageDelayResult, ...]
    optimal_earliness: Fraction
    optimal_languages: tuple[FiniteLanguage, ...]
    optimal_regions: tuple[DelayRegion, ...]
    supcf_per_witness: tuple[tuple[tuple[Fraction, ...], FiniteLanguage], ...]
    variables: tuple[Transition, ...]


def _dedupe_exprs(exprs: Iterable[AffineExpr]) -> list[AffineExpr]:
    seen = set()
    out = []
    for e in exprs:
        if e not in seen:
            seen.add(e)
            out.append(e)
    return out


def _dominates(a: AffineExpr, b: AffineExpr) -> bool:
    """a >= b over the whole nonnegative orthant."""
    return a.const >= b.const and all(x >= y for x, y in zip(a.coeffs, b.coeffs))


def _region_feasible(region: Sequence[Ineq], nvars: int) -> bool:
    rows = []
    rhs = []
    for iq in region:
        if iq.always_true():
            continue
        if iq.always_false():
            return False
        rows.append(tuple(-c for c in iq.coeffs))
        rhs.append(iq.const)
    if not rows:
        return True
    sol = solve_lp(LinearProgram.build((ZERO,) * nvars, rows, rhs))
    return sol.status != "infeasible"


def _completion_positions(jobset: JobSet, s: Sequence[str]) -> list[int | None]:
    out = []
    for job in jobset:
        pos = None
        for i, e in enumerate(s):
            if e in job.alphabet:
                pos = i
        out.append(pos)
    return out


@dataclass(frozen=True)
class _BranchState:
    heights: tuple[AffineExpr, ...]
    region: tuple[Ineq, ...]
    job_exprs: tuple[AffineExpr | None, ...]


def _extend_region(region: tuple[Ineq, ...], new: Iterable[Ineq]) -> tuple[Ineq, ...] | None:
    """Append nontrivial inequalities; None when one is identically false."""
    acc = list(region)
    for iq in new:
        if iq.always_false():
            return None
        if not iq.always_true() and iq not in acc:
            acc.append(iq)
    return tuple(acc)


def symbolic_job_times(
    plant: TimedPlant,
    rm: ResourceModel,
    jobset: JobSet,
    s: Sequence[str],
    ctx: DelayContext,
    max_patterns: int = 4096,
) -> list[StringPattern]:
    """All argmax patterns of the height recurrence for one string, each with
    its per-job affine completion times and validity region.

    Choices appear wherever two incomparable affine heights compete: at the
    contact level of the executing transition, at the raise of non-occupied
    resources, and at the final max over resources for each job completion
    prefix.  Regions are kept satisfiable (checked by exact LP) as branching
    proceeds, so the pattern list covers the delay orthant without dead
    entries."""
    taus = trajectory(plant, s)
    nvars = len(ctx)
    table = plant.automaton.table
    var_of = {tau: i for i, tau in enumerate(ctx.variables)}
    completions = _completion_positions(jobset, s)
    zero_expr = AffineExpr.constant(nvars, ZERO)

    states = [
        _BranchState(
            tuple(zero_expr for _ in range(rm.n_h)),
            (),
            tuple(None for _ in jobset.jobs),
        )
    ]
    for k, tau in enumerate(taus):
        occ = rm.occupied_by(tau[1])
        occ_set = set(occ)
        base_dur = plant.duration(tau)
        var = var_of.get(tau)
        next_states: list[_BranchState] = []
        for st in states:
            cands = _dedupe_exprs(st.heights[r] for r in occ)
            options: list[tuple[AffineExpr, tuple[Ineq, ...]]] = []
            for c in cands:
                region = _extend_region(st.region, (Ineq.geq(c, o) for o in cands if o is not c))
                if region is None:
                    continue
                options.append((c, region))
            if len(options) > 1:
                options = [(c, r) for c, r in options if _region_feasible(r, nvars)]
            for ell, region in options:
                top = ell.shift(base_dur)
                if var is not None:
                    top = top.bump(var)
                # raise decisions, one per distinct non-occupied height
                distinct = _dedupe_exprs(st.heights[r] for r in range(rm.n_h) if r not in occ_set)
                branches: list[tuple[tuple[Ineq, ...], dict[AffineExpr, AffineExpr]]] = [(region, {})]
                for h in distinct:
                    grown = []
                    for reg, choice in branches:
                        if _dominates(h, ell):
                            grown.append((reg, {**choice, h: h}))
                            continue
                        if _dominates(ell, h):
                            grown.append((reg, {**choice, h: ell}))
                            continue
                        keep = _extend_region(reg, (Ineq.geq(h, ell),))
                        if keep is not None:
                            grown.append((keep, {**choice, h: h}))
                        raise_ = _extend_region(reg, (Ineq.geq(ell, h),))
                        if raise_ is not None:
                            grown.append((raise_, {**choice, h: ell}))
                    branches = grown
                    if len(branches) > max_patterns:
                        raise PatternBudgetExceeded(
                            f"more than {max_patterns} raise branches at step {k}"
                        )
                if len(branches) > 1:
                    branches = [(r, ch) for r, ch in branches if _region_feasible(r, nvars)]
                for reg, choice in branches:
                    heights = tuple(
                        top if r in occ_set else choice[st.heights[r]]
                        for r in range(rm.n_h)
                    )
                    next_states.append(_BranchState(heights, reg, st.job_exprs))
        states = next_states
        if len(states) > max_patterns:
            raise PatternBudgetExceeded(f"more than {max_patterns} patterns at step {k}")

        finishing = [i for i, pos in enumerate(completions) if pos == k]
        if finishing:
            resolved: list[_BranchState] = []
            for st in states:
                tops = _dedupe_exprs(st.heights)
                options = []
                for c in tops:
                    region = _extend_region(st.region, (Ineq.geq(c, o) for o in tops if o is not c))
                    if region is None:
                        continue
                    options.append((c, region))
                if len(options) > 1:
                    options = [(c, r) for c, r in options if _region_feasible(r, nvars)]
                for expr, region in options:
                    jexprs = list(st.job_exprs)
                    for i in finishing:
                        jexprs[i] = expr
                    resolved.append(_BranchState(st.heights, region, tuple(jexprs)))
            states = resolved
            if len(states) > max_patterns:
                raise PatternBudgetExceeded(f"more than {max_patterns} patterns at step {k}")

    out = []
    seen = set()
    for st in states:
        jexprs = tuple(e if e is not None else zero_expr for e in st.job_exprs)
        key = (jexprs, st.region)
        if key not in seen:
            seen.add(key)
            out.append(StringPattern(jexprs, st.region))
    return out


def pattern_at(
    plant: TimedPlant,
    rm: ResourceModel,
    jobset: JobSet,
    s: Sequence[str],
    ctx: DelayContext,
    point: Sequence[Fraction],
) -> StringPattern:
    """The single pattern realized at a concrete delay point (ties resolved
    deterministically toward the first maximal expression)."""
    taus = trajectory(plant, s)
    nvars = len(ctx)
    var_of = {tau: i for i, tau in enumerate(ctx.variables)}
    completions = _completion_positions(jobset, s)
    zero_expr = AffineExpr.constant(nvars, ZERO)
    heights = [zero_expr for _ in range(rm.n_h)]
    region: list[Ineq] = []
    jexprs: list[AffineExpr | None] = [None for _ in jobset.jobs]

    def pick_max(exprs: list[AffineExpr]) -> AffineExpr:
        cands = _dedupe_exprs(exprs)
        vals = [c.evaluate(point) for c in cands]
        best = max(range(len(cands)), key=lambda i: (vals[i], -i))
        chosen = cands[best]
        for o in cands:
            if o is not chosen:
                iq = Ineq.geq(chosen, o)
                if not iq.always_true() and iq not in region:
                    region.append(iq)
        return chosen

    for k, tau in enumerate(taus):
        occ = rm.occupied_by(tau[1])
        occ_set = set(occ)
        ell = pick_max([heights[r] for r in occ])
        top = ell.shift(plant.duration(tau))
        var = var_of.get(tau)
        if var is not None:
            top = top.bump(var)
        for r in range(rm.n_h):
            if r in occ_set:
                heights[r] = top
            else:
                h = heights[r]
                if h.evaluate(point) >= ell.evaluate(point):
                    iq = Ineq.geq(h, ell)
                    if not iq.always_true() and iq not in region:
                        region.append(iq)
                else:
                    iq = Ineq.geq(ell, h)
                    if not iq.always_true() and iq not in region:
                        region.append(iq)
                    heights[r] = ell
        finishing = [i for i, pos in enumerate(completions) if pos == k]
        if finishing:
            expr = pick_max(list(heights))
            for i in finishing:
                jexprs[i] = expr

    final = tuple(e if e is not None else zero_expr for e in jexprs)
    return StringPattern(final, tuple(region))


# -- the optimization ---------------------------------------------------------


def _epigraph_lp(
    jobset: JobSet,
    patterns: Sequence[StringPattern],
    nvars: int,
):
    """min z subject to: per-string earliness <= z, per-(string,job) deadline
    feasibility, and all region inequalities.  Variables are (z, D...)."""
    deadlines = [j.deadline for j in jobset]
    rows = []
    rhs = []
    for pat in patterns:
        coeff_sum = [0] * nvars
        const_sum = ZERO
        for expr, d in zip(pat.job_exprs, deadlines):
            for i, c in enumerate(expr.coeffs):
                coeff_sum[i] += c
            const_sum += d - expr.const
            rows.append((ZERO,) + tuple(Fraction(c) for c in expr.coeffs))
            rhs.append(d - expr.const)
        # sum_i (d_i - t_i(D)) <= z
        rows.append((Fraction(-1),) + tuple(Fraction(-c) for c in coeff_sum))
        rhs.append(-const_sum)
        for iq in pat.region:
            rows.append((ZERO,) + tuple(Fraction(-c) for c in iq.coeffs))
            rhs.append(iq.const)
    c = (Fraction(1),) + (ZERO,) * nvars
    return LinearProgram.build(c, rows, rhs)


def _earliness_rows(pat: StringPattern, jobset: JobSet, nvars: int, bound: Fraction) -> Ineq:
    """sum_i (d_i - t_i(D)) <= bound, as an Ineq over D."""
    coeff_sum = [0] * nvars
    const = -bound
    for expr, job in zip(pat.job_exprs, jobset):
        for i, c in enumerate(expr.coeffs):
            coeff_sum[i] += c
        const += job.deadline - expr.const
    # const + sum d - sum t_const - coeff.D <= 0  ==  coeff.D - const >= 0
    return Ineq(tuple(coeff_sum), -const)


def _optimal_region(
    combo: Sequence[StringPattern], jobset: JobSet, nvars: int, e_star: Fraction
) -> tuple[Ineq, ...]:
    ineqs: list[Ineq] = []
    for pat in combo:
        for iq in pat.region:
            if not iq.always_true() and iq not in ineqs:
                ineqs.append(iq)
        for expr, job in zip(pat.job_exprs, jobset):
            iq = Ineq(tuple(-c for c in expr.coeffs), job.deadline - expr.const)
            if not iq.always_true() and iq not in ineqs:
                ineqs.append(iq)
        iq = _earliness_rows(pat, jobset, nvars, e_star)
        if not iq.always_true() and iq not in ineqs:
            ineqs.append(iq)
    return tuple(ineqs)


def optimize_language_delays(
    plant: TimedPlant,
    rm: ResourceModel,
    jobset: JobSet,
    language: FiniteLanguage,
    mode: str = "exact",
    max_patterns: int = 4096,
) -> LanguageDelayResult:
    """Minimize the worst-string earliness of a finite language over delay
    vectors, subject to every deadline staying satisfied on every string.

    Exact mode enumerates pattern combinations and returns every optimal
    region with a witness; heuristic mode ('slp') iterates fix-pattern /
    solve-LP to a fixpoint from deterministic starts."""
    strings = language.sorted()
    if not strings:
        raise ContractError("delay optimization needs a nonempty language")
    for s in strings:
        if not satisfies_jobs(plant, rm, jobset, s):
            raise ContractError("language must satisfy all deadlines at zero delay")
    ctx = DelayContext.for_language(plant, strings)
    nvars = len(ctx)
    if mode == "exact":
        return _optimize_exact(plant, rm, jobset, strings, language, ctx, max_patterns)
    if mode == "slp":
        return _optimize_slp(plant, rm, jobset, strings, language, ctx)
    raise ValueError(f"unknown mode {mode!r}")


def _optimize_exact(plant, rm, jobset, strings, language, ctx, max_patterns):
    nvars = len(ctx)
    per_string = [
        symbolic_job_times(plant, rm, jobset, s, ctx, max_patterns) for s in strings
    ]
    total = 1
    for pats in per_string:
        total *= len(pats)
        if total > max_patterns:
            raise PatternBudgetExceeded(
                f"{total}+ pattern combinations across {len(strings)} strings"
            )
    best: Fraction | None = None
    optimal: list[tuple[tuple[StringPattern, ...], tuple[Fraction, ...]]] = []
    for combo in itertools.product(*per_string):
        sol = solve_lp(_epigraph_lp(jobset, combo, nvars))
        if sol.status != "optimal":
            continue
        e_val = sol.objective
        witness = sol.x[1:]
        if best is None or e_val < best:
            best = e_val
            optimal = [(combo, witness)]
        elif e_val == best:
            optimal.append((combo, witness))
    if best is None:
        raise ContractError("no feasible pattern; language infeasible under delays")
    regions = []
    seen = set()
    for combo, witness in optimal:
        ineqs = _optimal_region(combo, jobset, nvars, best)
        if ineqs in seen:
            continue
        seen.add(ineqs)
        regions.append(DelayRegion(ineqs, tuple(witness), ctx.variables))
    return LanguageDelayResult(language, best, tuple(regions), "exact", ctx.variables)


def _true_earliness(plant, rm, jobset, strings, val) -> Fraction | None:
    worst = ZERO
    for s in strings:
        times = job_times(plant, rm, jobset, s, val)
        if any(t > j.deadline for t, j in zip(times, jobset)):
            return None
        e = sum((j.deadline - t for j, t in zip(jobset, times)), ZERO)
        if e > worst:
            worst = e
    return worst


def _optimize_slp(plant, rm, jobset, strings, language, ctx, max_iters: int = 25):
    nvars = len(ctx)
    spike = max(j.deadline for j in jobset)
    starts = [tuple(ZERO for _ in range(nvars))]
    for i in range(nvars):
        starts.append(tuple(spike if j == i else ZERO for j in range(nvars)))
    best: Fraction | None = None
    best_region: DelayRegion | None = None
    for start in starts:
        point = start
        seen_combos = set()
        for _ in range(max_iters):
            combo = tuple(pattern_at(plant, rm, jobset, s, ctx, point) for s in strings)
            key = tuple((p.job_exprs, p.region) for p in combo)
            if key in seen_combos:
                break
            seen_combos.add(key)
            sol = solve_lp(_epigraph_lp(jobset, combo, nvars))
            if sol.status != "optimal":
                break
            point = sol.x[1:]
            val = DurationValuation(plant, ctx.vector(plant, point))
            true_e = _true_earliness(plant, rm, jobset, strings, val)
            if true_e is None:
                continue
            if best is None or true_e < best:
                best = true_e
                best_region = DelayRegion(
                    _optimal_region(combo, jobset, nvars, true_e), tuple(point), ctx.variables
                )
    if best is None:  # zero delay is always feasible by the precondition
        val = DurationValuation(plant)
        best = _true_earliness(plant, rm, jobset, strings, val)
        best_region = DelayRegion((), tuple(ZERO for _ in range(nvars)), ctx.variables)
    return LanguageDelayResult(language, best, (best_region,), "slp", ctx.variables)


# -- whole-supervisor reports --------------------------------------------------


def min_earliness_sublanguage(
    plant: TimedPlant,
    rm: ResourceModel,
    jobset: JobSet,
    result: SynthesisResult,
    val: DurationValuation | None = None,
    max_members: int = 10000,
) -> FiniteLanguage:
    """The union of all minimum-earliness controllable job-satisfaction
    sublanguages at a fixed valuation: every minimal sublanguage achieving the
    least earliness, merged."""
    if result.is_empty:
        raise ContractError("supervisor is empty")
    family = minimal_controllable_sublanguages(result.automaton, plant.automaton, max_members)
    best: Fraction | None = None
    chosen: list[FiniteLanguage] = []
    for member in family:
        strings = member.sorted()
        e = _true_earliness(plant, rm, jobset, strings, val)
        if e is None:
            continue  # infeasible under this valuation
        if best is None or e < best:
            best = e
            chosen = [member]
        elif e == best:
            chosen.append(member)
    if best is None:
        return FiniteLanguage([])
    merged = set()
    for m in chosen:
        merged |= m.strings
    return FiniteLanguage(merged)


def optimal_delay_report(
    plant: TimedPlant,
    rm: ResourceModel,
    jobset: JobSet,
    result: SynthesisResult,
    mode: str = "exact",
    max_patterns: int = 4096,
    max_members: int = 10000,
) -> OptimalDelayReport:
    """Optimize every minimal controllable sublanguage of a nonempty
    supervisor, keep the globally best, and report the collected optimal
    regions plus, per witness, the minimum-earliness sublanguage realized
    under that witness (re-verified against a fresh synthesis)."""
    if result.is_empty:
        raise ContractError("optimal delays require a nonempty supervisor")
    family = minimal_controllable_sublanguages(result.automaton, plant.automaton, max_members)
    per_language = []
    for member in family:
        per_language.append(
            optimize_language_delays(plant, rm, jobset, member, mode, max_patterns)
        )
    best = min(r.e_star for r in per_language)
    optimal_languages = tuple(r.language for r in per_language if r.e_star == best)
    optimal_regions = tuple(
        region for r in per_language if r.e_star == best for region in r.regions
    )
    all_vars = tuple(
        sorted(
            {tau for r in per_language for tau in r.variables},
            key=lambda t: (t[0], plant.automaton.table.index(t[1])),
        )
    )
    supcf_entries = []
    seen_witnesses = set()
    for r in per_language:
        if r.e_star != best:
            continue
        for region in r.regions:
            witness = region.witness_vector(plant)
            key = tuple(sorted(witness.entries.items()))
            if key in seen_witnesses:
                continue
            seen_witnesses.add(key)
            val = DurationValuation(plant, witness)
            sup_lang = _supcf_under(plant, rm, jobset, family, best, val)
            fresh = sup_c(plant, rm, jobset, val)
            if fresh.language is not None and not all(
                s in fresh.language for s in sup_lang
            ):
                raise RuntimeError("witness verification failed: supCF escapes sup_c(f+D)")
            supcf_entries.append((region.witness, sup_lang))
    return OptimalDelayReport(
        tuple(per_language),
        best,
        optimal_languages,
        optimal_regions,
        tuple(supcf_entries),
        all_vars,
    )


def _supcf_under(plant, rm, jobset, family: LanguageFamily, target: Fraction, val):
    chosen = []
    for member in family:
        e = _true_earliness(plant, rm, jobset, member.sorted(), val)
        if e is not None and e == target:
            chosen.append(member)
    merged = set()
    for m in chosen:
        merged |= m.strings
    return FiniteLanguage(merged)
