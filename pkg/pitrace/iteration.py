import logging
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

from .constants import (
    BUDGET_FACTOR,
    BUDGET_SLACK,
    GENERIC_MAX_ITERATIONS,
    Criterion,
    TieMode,
)
from .errors import AmbiguousArgmax, IterationBudgetExceeded, PitraceError
from .evaluation import ValueReport, appeal, evaluate, gain_appeal
from .mdp import check_policy, switch
from .models import Mdp, Policy

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SwitchDecision:
    """
    A switchable action, or the action a greedy step switched to.

    Attributes:
        state: State whose action changes
        from_action: Action chosen by the current policy
        to_action: Improving action
        appeal_gap: Gain gap when via_gain is set, otherwise the value (or bias) gap
        via_gain: True when the action strictly improves the gain
    """

    state: int
    from_action: int
    to_action: int
    appeal_gap: Fraction
    via_gain: bool = False


@dataclass(frozen=True)
class IterationRecord:
    index: int
    policy: Policy
    values: Optional[ValueReport]
    switches: Tuple[SwitchDecision, ...]


@dataclass
class TraceRecord:
    iterations: List[IterationRecord] = field(default_factory=list)
    terminated: bool = False

    @property
    def final_policy(self) -> Policy:
        return self.iterations[-1].policy

    @property
    def iteration_count(self) -> int:
        return len(self.iterations) - 1

    @property
    def policies(self) -> List[Policy]:
        return [record.policy for record in self.iterations]


@dataclass(frozen=True)
class RunConfig:
    criterion: Criterion = Criterion.TOTAL
    max_iterations: int = GENERIC_MAX_ITERATIONS
    tie_mode: TieMode = TieMode.LOWEST
    record_values: bool = True

    def __post_init__(self):
        if self.max_iterations < 1:
            raise PitraceError(
                f"max_iterations must be at least 1, got {self.max_iterations}"
            )


def default_max_iterations(n: Optional[int] = None) -> int:
    """Budget for generated instance n, or the generic budget when n is None."""
    if n is None:
        return GENERIC_MAX_ITERATIONS
    return BUDGET_FACTOR * 2**n + BUDGET_SLACK


def _key(mdp: Mdp, report: ValueReport, state: int, action: int):
    if report.criterion is Criterion.TOTAL:
        return (appeal(mdp, report.values, state, action),)
    return (
        gain_appeal(mdp, report.gain, state, action),
        appeal(mdp, report.values, state, action),
    )


def _decision(state, current, action, key, current_key) -> Optional[SwitchDecision]:
    if key <= current_key:
        return None
    if len(key) == 2 and key[0] > current_key[0]:
        return SwitchDecision(state, current, action, key[0] - current_key[0], True)
    return SwitchDecision(state, current, action, key[-1] - current_key[-1])


def switchable_actions(
    mdp: Mdp, policy: Policy, report: ValueReport
) -> Tuple[Tuple[SwitchDecision, ...], ...]:
    """
    Per state, every action that beats the current one.

    Total reward compares appeal against value. Average reward compares
    (gain appeal, bias appeal) lexicographically; the current action's
    pair is exactly (G(s), B(s) + G(s)) by the evaluation equations.
    """
    result = []
    for state in mdp.states:
        current = policy[state]
        current_key = _key(mdp, report, state, current)
        found = []
        for action in range(len(mdp.actions[state])):
            if action == current:
                continue
            decision = _decision(
                state, current, action, _key(mdp, report, state, action), current_key
            )
            if decision is not None:
                found.append(decision)
        result.append(tuple(found))
    return tuple(result)


def greedy_step(
    mdp: Mdp,
    policy: Policy,
    report: ValueReport,
    tie_mode: TieMode = TieMode.LOWEST,
    switchable: Optional[Sequence[Sequence[SwitchDecision]]] = None,
) -> Tuple[Policy, List[SwitchDecision]]:
    """Switch every improvable state to its most appealing action."""
    if switchable is None:
        switchable = switchable_actions(mdp, policy, report)
    decisions = []
    for state, options in enumerate(switchable):
        if not options:
            continue
        keys = [
            _key(mdp, report, state, a) for a in range(len(mdp.actions[state]))
        ]
        best = max(keys)
        winners = [a for a, k in enumerate(keys) if k == best]
        if len(winners) > 1 and tie_mode is TieMode.STRICT:
            raise AmbiguousArgmax(state, winners)
        chosen = winners[0]
        current = policy[state]
        decisions.append(
            _decision(state, current, chosen, best, keys[current])
        )
    if not decisions:
        raise PitraceError("greedy_step called on a policy with no switchable action")
    new_policy = switch(mdp, policy, [(d.state, d.to_action) for d in decisions])
    return new_policy, decisions


def run(mdp: Mdp, initial: Policy, config: Optional[RunConfig] = None) -> TraceRecord:
    """
    Greedy policy iteration from initial until no action is switchable.

    Raises:
        IterationBudgetExceeded: more than config.max_iterations improvement
            steps would be needed; the exception carries the partial trace
    """
    config = config or RunConfig()
    check_policy(mdp, initial)
    trace = TraceRecord()
    policy = initial
    index = 0
    while True:
        report = evaluate(mdp, policy, config.criterion)
        switchable = switchable_actions(mdp, policy, report)
        kept = report if config.record_values else None
        if not any(switchable):
            trace.iterations.append(IterationRecord(index, policy, kept, ()))
            trace.terminated = True
            logger.info(
                f"Policy iteration terminated after {index} iterations "
                f"({config.criterion.value} reward)"
            )
            return trace

        next_policy, decisions = greedy_step(
            mdp, policy, report, config.tie_mode, switchable
        )
        trace.iterations.append(
            IterationRecord(index, policy, kept, tuple(decisions))
        )
        logger.debug(f"Iteration {index}: {len(decisions)} switches")
        if index >= config.max_iterations:
            logger.warning(
                f"Iteration budget of {config.max_iterations} exhausted"
            )
            raise IterationBudgetExceeded(trace)
        policy = next_policy
        index += 1


def check_optimal(
    mdp: Mdp, policy: Policy, report: ValueReport
) -> Tuple[bool, List[Tuple[int, int]]]:
    """True iff nothing is switchable; otherwise every (state, action) witness."""
    witnesses = [
        (d.state, d.to_action)
        for options in switchable_actions(mdp, policy, report)
        for d in options
    ]
    return not witnesses, witnesses
