import logging
from fractions import Fraction
from typing import Iterable, Tuple

from .errors import InvalidPolicyError, InvalidSwitchError
from .models import Mdp, Policy, ValidationReport, Violation
from .rational import format_rational

logger = logging.getLogger(__name__)


def validate(mdp: Mdp) -> ValidationReport:
    """Check every structural invariant of an MDP and list each violation."""
    report = ValidationReport()
    n = mdp.n_states
    if n == 0:
        report.violations.append(Violation(0, None, "MDP has no states"))
    for state, actions in enumerate(mdp.actions):
        if not actions:
            report.violations.append(Violation(state, None, "state has no actions"))
        for index, action in enumerate(actions):
            if not isinstance(action.reward, Fraction):
                report.violations.append(
                    Violation(state, index, "reward is not an exact rational")
                )
            if not action.transitions:
                report.violations.append(
                    Violation(state, index, "action has no transitions")
                )
                continue
            seen = set()
            total = Fraction(0)
            for target, prob in action.transitions:
                if not isinstance(target, int) or not 0 <= target < n:
                    report.violations.append(
                        Violation(state, index, f"target {target} is not a state")
                    )
                if target in seen:
                    report.violations.append(
                        Violation(state, index, f"target {target} listed twice")
                    )
                seen.add(target)
                if not isinstance(prob, Fraction):
                    report.violations.append(
                        Violation(state, index, "probability is not an exact rational")
                    )
                    continue
                if prob <= 0:
                    report.violations.append(
                        Violation(
                            state,
                            index,
                            f"probability {format_rational(prob)} to {target} is not positive",
                        )
                    )
                total += prob
            if total != 1:
                report.violations.append(
                    Violation(
                        state,
                        index,
                        f"probabilities sum to {format_rational(total)} ≠ 1",
                    )
                )
    if not report.ok:
        logger.debug(f"Validation found {len(report.violations)} violation(s)")
    return report


def check_policy(mdp: Mdp, policy: Policy) -> None:
    """Raise InvalidPolicyError unless the policy is total and in range."""
    if len(policy) != mdp.n_states:
        raise InvalidPolicyError(
            f"Policy covers {len(policy)} states, MDP has {mdp.n_states}"
        )
    for state, index in enumerate(policy):
        if not 0 <= index < len(mdp.actions[state]):
            raise InvalidPolicyError(
                f"Action {index} out of range at state {state} "
                f"({len(mdp.actions[state])} actions)"
            )


def switch(
    mdp: Mdp, policy: Policy, changes: Iterable[Tuple[int, int]]
) -> Policy:
    """Return a copy of policy with the given (state, action) changes applied."""
    choice = list(policy.choice)
    touched = set()
    for state, index in changes:
        if not 0 <= state < mdp.n_states:
            raise InvalidSwitchError(f"State {state} does not exist")
        if state in touched:
            raise InvalidSwitchError(f"State {state} changed twice")
        if not 0 <= index < len(mdp.actions[state]):
            raise InvalidSwitchError(
                f"Action {index} out of range at state {state}"
            )
        touched.add(state)
        choice[state] = index
    return Policy(tuple(choice))


def policies_equal(p1: Policy, p2: Policy) -> bool:
    if len(p1) != len(p2):
        raise InvalidPolicyError(
            f"Cannot compare policies over {len(p1)} and {len(p2)} states"
        )
    return p1.choice == p2.choice
