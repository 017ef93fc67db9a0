"""
Checks of a recorded run on the hard instance.

Milestones are found by full policy equality with oracle_policy. The
assumption, ordering and closed-form checks are applied to every policy
that label_phases can place in a Sequence(B) phase; a milestone those
checks never reached is itself a failure.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import AbstractSet, Dict, List, Optional, Sequence, Tuple

from .constants import Criterion
from .evaluation import appeal, total_reward_values
from .instance import (
    Configuration,
    HardInstance,
    InstanceParams,
    Phase,
    PhaseTag,
    bits_to_int,
    build,
    counter_successor,
    exit_targets,
    int_to_bits,
    oracle_policy,
    phase_schedule,
    closed_form_c_value,
    initial_policy,
)
from .iteration import RunConfig, TraceRecord, default_max_iterations, run
from .mdp import policies_equal
from .models import Mdp, Policy

logger = logging.getLogger(__name__)


class Strictness(str, Enum):
    STRICT = "strict"
    REPORT = "report"


@dataclass(frozen=True)
class CheckFailure:
    name: str
    iteration: Optional[int] = None
    state: Optional[str] = None
    left: Optional[Fraction] = None
    right: Optional[Fraction] = None
    detail: str = ""


@dataclass
class CheckReport:
    """
    Outcome of a group of named checks.

    Attributes:
        counts: How many times each check was evaluated
        failures: Every failed evaluation, with its witness
        mismatches: Findings recorded in report mode; they never fail the report
    """

    counts: Dict[str, int] = field(default_factory=dict)
    failures: List[CheckFailure] = field(default_factory=list)
    mismatches: List[CheckFailure] = field(default_factory=list)

    def check(self, name: str, ok: bool, **witness) -> bool:
        self.counts[name] = self.counts.get(name, 0) + 1
        if not ok:
            self.failures.append(CheckFailure(name, **witness))
        return ok

    def mismatch(self, name: str, **witness) -> None:
        self.counts.setdefault(name, 0)
        self.mismatches.append(CheckFailure(name, **witness))

    def merge(self, other: "CheckReport") -> "CheckReport":
        for name, count in other.counts.items():
            self.counts[name] = self.counts.get(name, 0) + count
        self.failures.extend(other.failures)
        self.mismatches.extend(other.mismatches)
        return self

    @property
    def passed(self) -> bool:
        return not self.failures

    def failed(self, name: str) -> List[CheckFailure]:
        return [f for f in self.failures if f.name == name]

    def first_failure(self, name: str) -> Optional[CheckFailure]:
        failures = self.failed(name)
        return failures[0] if failures else None


@dataclass
class MilestoneReport:
    milestones: List[Tuple[int, Configuration]]
    missing: List[Configuration]
    order_ok: bool
    iteration_count: int
    terminated: bool
    n: int

    @property
    def passed(self) -> bool:
        return (
            self.terminated
            and self.order_ok
            and not self.missing
            and self.iteration_count >= 2**self.n
        )

    def to_checks(self) -> CheckReport:
        report = CheckReport()
        report.check("terminated", self.terminated)
        report.check(
            "counter-order",
            self.order_ok,
            detail=str([bits_to_int(b) for _, b in self.milestones]),
        )
        report.check(
            "milestones-complete",
            not self.missing,
            detail=f"missing {[bits_to_int(b) for b in self.missing]}",
        )
        report.check(
            "iteration-bound",
            self.iteration_count >= 2**self.n,
            left=Fraction(self.iteration_count),
            right=Fraction(2**self.n),
        )
        return report


def _total_values(instance: HardInstance, trace: TraceRecord, k: int):
    record = trace.iterations[k]
    if record.values is not None and record.values.criterion is Criterion.TOTAL:
        return record.values.values
    return total_reward_values(instance.mdp, record.policy)


def find_milestones(
    instance: HardInstance, trace: TraceRecord
) -> List[Tuple[int, Configuration]]:
    """Iterations whose policy equals the Seq(B, 0) oracle for its own B."""
    milestone_policies = {}
    found = []
    for record in trace.iterations:
        bits = instance.configuration_of(record.policy)
        if bits not in milestone_policies:
            milestone_policies[bits] = oracle_policy(
                instance.params, bits, PhaseTag.seq(0)
            )
        if policies_equal(record.policy, milestone_policies[bits]):
            found.append((record.index, bits))
    return found


def verify_counter(trace: TraceRecord, params: InstanceParams) -> MilestoneReport:
    instance = build(params)
    milestones = find_milestones(instance, trace)
    seen = {bits_to_int(bits) for _, bits in milestones}
    order = [bits_to_int(bits) for _, bits in milestones]
    missing = [int_to_bits(v, params.n) for v in range(2**params.n) if v not in seen]
    report = MilestoneReport(
        milestones=milestones,
        missing=missing,
        order_ok=order == list(range(len(order))),
        iteration_count=trace.iteration_count,
        terminated=trace.terminated,
        n=params.n,
    )
    logger.info(
        f"Found {len(milestones)} of {2**params.n} milestones "
        f"in {trace.iteration_count} iterations"
    )
    if not trace.terminated:
        logger.warning("Trace did not terminate; milestone report is partial")
    return report


def label_phases(
    trace: TraceRecord, params: InstanceParams
) -> List[Optional[Tuple[Configuration, PhaseTag]]]:
    """Phase of each iteration, when the policy matches its predicted oracle."""
    instance = build(params)
    milestones = find_milestones(instance, trace)
    labels: List[Optional[Tuple[Configuration, PhaseTag]]] = [None] * len(
        trace.iterations
    )
    bounds = [k for k, _ in milestones[1:]] + [len(trace.iterations)]
    for (start, bits), stop in zip(milestones, bounds):
        for offset, tag in enumerate(phase_schedule(params, bits)):
            k = start + offset
            if k >= stop:
                break
            expected = oracle_policy(params, bits, tag)
            if policies_equal(trace.iterations[k].policy, expected):
                labels[k] = (bits, tag)
    return labels


def _first_difference(instance: HardInstance, expected, observed):
    for state, (e, o) in enumerate(zip(expected, observed)):
        if e != o:
            return (
                instance.names[state],
                instance.label_of(state, e),
                instance.label_of(state, o),
            )
    return None


def verify_phases(
    trace: TraceRecord,
    params: InstanceParams,
    strictness: Strictness = Strictness.STRICT,
) -> CheckReport:
    """Compare every policy between milestones with its predicted phase."""
    instance = build(params)
    report = CheckReport()

    def issue(name: str, **witness) -> None:
        if strictness is Strictness.STRICT:
            report.check(name, False, **witness)
        else:
            report.mismatch(name, **witness)
            logger.warning(f"Phase mismatch ({name}): {witness}")

    milestones = find_milestones(instance, trace)
    if not milestones or milestones[0][0] != 0:
        issue("phase-structure", iteration=0, detail="run does not start at a milestone")
    else:
        report.check("phase-structure", True)

    for pos, (start, bits) in enumerate(milestones):
        schedule = phase_schedule(params, bits)
        if pos + 1 < len(milestones):
            stop, next_bits = milestones[pos + 1]
            if next_bits != counter_successor(bits, params.n):
                issue(
                    "phase-structure",
                    iteration=stop,
                    detail=f"milestone {bits_to_int(next_bits)} follows {bits_to_int(bits)}",
                )
            if stop - start != len(schedule):
                issue(
                    "phase-structure",
                    iteration=stop,
                    detail=f"{stop - start} policies between milestones "
                    f"{bits_to_int(bits)} and {bits_to_int(next_bits)}, "
                    f"expected {len(schedule)}",
                )
        else:
            stop = len(trace.iterations)
            if trace.terminated and (
                bits != params.full or stop - start != len(schedule)
            ):
                issue(
                    "phase-structure",
                    iteration=stop - 1,
                    detail=f"run ended {stop - start} policies after milestone "
                    f"{bits_to_int(bits)}",
                )

        for offset, tag in enumerate(schedule):
            k = start + offset
            if k >= stop:
                break
            expected = oracle_policy(params, bits, tag)
            diff = _first_difference(instance, expected, trace.iterations[k].policy)
            if diff is None:
                report.check("phase-match", True)
            else:
                name, want, got = diff
                issue(
                    "phase-match",
                    iteration=k,
                    state=name,
                    detail=f"B={bits_to_int(bits)} {tag}: expected {want}, observed {got}",
                )
    return report


def check_sequence_policy(
    instance: HardInstance,
    bits: Configuration,
    values: Sequence[Fraction],
    report: CheckReport,
    iteration: Optional[int] = None,
) -> CheckReport:
    """Assumption and ordering inequalities at a Sequence(bits) policy."""
    params = instance.params
    n = params.n
    mdp = instance.mdp
    ids = instance.ids

    def val(name: str) -> Fraction:
        return values[ids[name]]

    def check(name, ok, state=None, left=None, right=None):
        report.check(
            name, ok, iteration=iteration, state=state, left=left, right=right
        )

    cap = Fraction(params.scale * 2**n)
    y, x = val("y"), val("x")
    check("y-above-x", y > x, "y", y, x)
    for i in range(1, n + 1):
        b = val(f"b{i}")
        check("b-positive", b > 0, f"b{i}", b, Fraction(0))
        check("g-bounded", val(f"g{i}") <= cap, f"g{i}", val(f"g{i}"), cap)
        for j in exit_targets(params, i):
            a = appeal(mdp, values, ids[f"b{i}"], instance.action(f"b{i}", f"f{j}"))
            check("exit-unappealing", a < b, f"b{i}", a, b)
        if i in bits:
            check("closed-bit-margin", b > y + 6 * n + 1, f"b{i}", b, y + 6 * n + 1)

    c = {i: val(f"c{i}") for i in range(1, n + 2)}
    members = sorted(bits)
    for i in members:
        for j in members:
            if i < j:
                bound = c[j] + params.scale * (2 ** (j - 1) - 2 ** (i - 1))
                check("c-gap-bound", c[i] <= bound, f"c{i}", c[i], bound)
            if i <= j:
                check("c-monotone", c[i] >= c[j], f"c{i}", c[i], c[j])
    extended = members + [n + 1]
    for i in extended:
        for j in extended:
            if i < j:
                check("c-strict-order", c[i] > c[j], f"c{i}", c[i], c[j])
    for k in range(0, n + 1):
        t = min([j for j in bits if j > k] + [n + 1])
        for j in range(k + 1, n + 2):
            if j != t:
                check("next-c-dominates", c[t] > c[j], f"c{t}", c[t], c[j])
    for i in range(1, n + 1):
        if i not in bits:
            k = min([j for j in bits if j > i] + [n + 1])
            left = val(f"f{i}") + 4 * n + 1
            check("f-below-next-c", left < c[k], f"f{i}", left, c[k])
    if bits:
        m = min(bits)
        for j in range(1, n + 1):
            if j != m:
                check(
                    "f-min-maximal",
                    val(f"f{m}") > val(f"f{j}"),
                    f"f{m}",
                    val(f"f{m}"),
                    val(f"f{j}"),
                )
    return report


def _check_milestone_coverage(
    name: str,
    milestones: List[Tuple[int, Configuration]],
    evaluated: AbstractSet[int],
    report: CheckReport,
) -> None:
    """Every milestone iteration must have been evaluated as a Seq(B, 0) policy."""
    report.check(name, bool(milestones), detail="no milestone policy in the trace")
    for k, bits in milestones:
        report.check(
            name,
            k in evaluated,
            iteration=k,
            detail=f"milestone {bits_to_int(bits)} was not evaluated",
        )


def verify_assumptions(trace: TraceRecord, params: InstanceParams) -> CheckReport:
    instance = build(params)
    report = CheckReport()
    n = params.n
    sink = instance.ids[f"c{n + 1}"]
    labels = label_phases(trace, params)
    evaluated = set()
    for k, label in enumerate(labels):
        values = _total_values(instance, trace, k)
        report.check(
            "sink-zero",
            values[sink] == 0,
            iteration=k,
            state=f"c{n + 1}",
            left=values[sink],
            right=Fraction(0),
        )
        if label is None:
            continue
        bits, tag = label
        if tag.phase is Phase.SEQ:
            check_sequence_policy(instance, bits, values, report, k)
            evaluated.add(k)
        elif tag.phase is Phase.R2:
            y = values[instance.ids["y"]]
            x = values[instance.ids["x"]]
            report.check(
                "reset-threshold",
                y + 6 * n + 1 < x,
                iteration=k,
                state="x",
                left=y + 6 * n + 1,
                right=x,
            )
    _check_milestone_coverage(
        "assumption-coverage", find_milestones(instance, trace), evaluated, report
    )
    return report


def verify_closed_forms(trace: TraceRecord, params: InstanceParams) -> CheckReport:
    instance = build(params)
    report = CheckReport()
    evaluated = set()
    for k, label in enumerate(label_phases(trace, params)):
        if label is None or label[1].phase is not Phase.SEQ:
            continue
        bits = label[0]
        evaluated.add(k)
        values = _total_values(instance, trace, k)
        for i in range(1, params.n + 1):
            observed = values[instance.ids[f"c{i}"]]
            expected = closed_form_c_value(params, bits, i)
            report.check(
                "c-closed-form",
                observed == expected,
                iteration=k,
                state=f"c{i}",
                left=observed,
                right=expected,
            )
            if i in bits:
                b = values[instance.ids[f"b{i}"]]
                g = values[instance.ids[f"g{i}"]]
                report.check(
                    "b-equals-g", b == g, iteration=k, state=f"b{i}", left=b, right=g
                )
    _check_milestone_coverage(
        "closed-form-coverage", find_milestones(instance, trace), evaluated, report
    )
    return report


def verify_monotonicity(trace: TraceRecord, mdp: Optional[Mdp] = None) -> CheckReport:
    """Consecutive values never decrease and rise somewhere; no policy repeats."""
    report = CheckReport()

    def pairs(k):
        record = trace.iterations[k]
        if record.values is None:
            if mdp is None:
                raise ValueError("Trace has no values and no MDP was given")
            values = total_reward_values(mdp, record.policy)
            return [(v,) for v in values]
        if record.values.gain is None:
            return [(v,) for v in record.values.values]
        return list(zip(record.values.gain, record.values.values))

    previous = pairs(0) if trace.iterations else None
    for k in range(1, len(trace.iterations)):
        current = pairs(k)
        dropped = [s for s, (a, b) in enumerate(zip(previous, current)) if b < a]
        if dropped:
            s = dropped[0]
            report.check(
                "monotone",
                False,
                iteration=k,
                state=str(s),
                left=previous[s][-1],
                right=current[s][-1],
            )
        else:
            report.check(
                "monotone",
                current != previous,
                iteration=k,
                detail="values unchanged",
            )
        previous = current

    # Bucketed by hash; equality within a bucket decides.
    seen: Dict[int, List[Tuple[Policy, int]]] = {}
    for record in trace.iterations:
        bucket = seen.setdefault(hash(record.policy.choice), [])
        first = next(
            (k for p, k in bucket if policies_equal(p, record.policy)), record.index
        )
        if first == record.index:
            bucket.append((record.policy, record.index))
        report.check(
            "no-repeat",
            first == record.index,
            iteration=record.index,
            detail=f"same policy as iteration {first}",
        )
    return report


def verify_criterion_equivalence(params: InstanceParams) -> CheckReport:
    """Run both criteria from the initial policy and compare them step by step."""
    instance = build(params)
    start = initial_policy(params)
    budget = default_max_iterations(params.n)
    total = run(instance.mdp, start, RunConfig(Criterion.TOTAL, budget))
    average = run(instance.mdp, start, RunConfig(Criterion.AVERAGE, budget))
    report = CheckReport()
    report.check(
        "trace-length",
        total.iteration_count == average.iteration_count,
        left=Fraction(total.iteration_count),
        right=Fraction(average.iteration_count),
    )
    for t, a in zip(total.iterations, average.iterations):
        switches_t = {(d.state, d.from_action, d.to_action) for d in t.switches}
        switches_a = {(d.state, d.from_action, d.to_action) for d in a.switches}
        report.check("switch-sets", switches_t == switches_a, iteration=t.index)
        for s, (g, bias, value) in enumerate(
            zip(a.values.gain, a.values.values, t.values.values)
        ):
            name = instance.names[s]
            report.check(
                "gain-zero", g == 0, iteration=t.index, state=name, left=g, right=Fraction(0)
            )
            report.check(
                "bias-equals-value",
                bias == value,
                iteration=t.index,
                state=name,
                left=bias,
                right=value,
            )
    return report
