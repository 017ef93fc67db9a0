"""
Exact policy evaluation.

Every evaluation first condenses the policy graph into strongly connected
components. Components are solved sinks-first, so each linear system only
covers one component and everything downstream of it is already known.
Closed components are the recurrent classes of the policy.
"""

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .constants import Criterion
from .errors import IllDefinedTotalReward, InvalidPolicyError
from .linalg import solve_linear
from .mdp import check_policy
from .models import Action, Mdp, Policy

logger = logging.getLogger(__name__)

ValueVector = Tuple[Fraction, ...]

ZERO = Fraction(0)
ONE = Fraction(1)


@dataclass(frozen=True)
class ChainStructure:
    recurrent_classes: Tuple[Tuple[int, ...], ...]
    transient_states: Tuple[int, ...]


@dataclass(frozen=True)
class GainBias:
    gain: ValueVector
    bias: ValueVector


@dataclass(frozen=True)
class ValueReport:
    """
    Values of one policy under one criterion.

    Attributes:
        criterion: The criterion the values were computed for
        values: Total-reward values, or the bias vector for the average criterion
        gain: Gain vector (average criterion only)
    """

    criterion: Criterion
    values: ValueVector
    gain: Optional[ValueVector] = None


def _chosen(mdp: Mdp, policy: Policy, state: int) -> Action:
    return mdp.actions[state][policy[state]]


def _components(mdp: Mdp, policy: Policy) -> List[Tuple[List[int], bool]]:
    """Tarjan's SCCs of the policy graph, sinks first, each with a closed flag."""
    n = mdp.n_states
    succ = [_chosen(mdp, policy, s).targets for s in range(n)]
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: List[int] = []
    result: List[Tuple[List[int], bool]] = []
    counter = 0

    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            node, i = work[-1]
            if i < len(succ[node]):
                work[-1] = (node, i + 1)
                nxt = succ[node][i]
                if index[nxt] == -1:
                    index[nxt] = low[nxt] = counter
                    counter += 1
                    stack.append(nxt)
                    on_stack[nxt] = True
                    work.append((nxt, 0))
                elif on_stack[nxt]:
                    low[node] = min(low[node], index[nxt])
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == node:
                        break
                comp.sort()
                members = set(comp)
                closed = all(t in members for s in comp for t in succ[s])
                result.append((comp, closed))
    return result


def chain_structure(mdp: Mdp, policy: Policy) -> ChainStructure:
    check_policy(mdp, policy)
    recurrent = []
    transient = []
    for comp, closed in _components(mdp, policy):
        if closed:
            recurrent.append(tuple(comp))
        else:
            transient.extend(comp)
    recurrent.sort()
    return ChainStructure(tuple(recurrent), tuple(sorted(transient)))


def _solve_block(
    mdp: Mdp,
    policy: Policy,
    comp: List[int],
    base: Dict[int, Fraction],
    known: List[Optional[Fraction]],
) -> None:
    """Solve v = base + P v on a transient component, writing into known."""
    members = {s: k for k, s in enumerate(comp)}
    if len(comp) == 1:
        s = comp[0]
        stay = ZERO
        acc = base[s]
        for t, p in _chosen(mdp, policy, s).transitions:
            if t == s:
                stay += p
            else:
                acc += p * known[t]
        known[s] = acc / (ONE - stay)
        return

    size = len(comp)
    matrix = [[ZERO] * size for _ in range(size)]
    rhs = []
    for row, s in enumerate(comp):
        matrix[row][row] = ONE
        acc = base[s]
        for t, p in _chosen(mdp, policy, s).transitions:
            col = members.get(t)
            if col is None:
                acc += p * known[t]
            else:
                matrix[row][col] -= p
        rhs.append(acc)
    for s, v in zip(comp, solve_linear(matrix, rhs)):
        known[s] = v


def stationary_distribution(
    mdp: Mdp, policy: Policy, recurrent_class: Sequence[int]
) -> Dict[int, Fraction]:
    """Stationary distribution of the policy restricted to a recurrent class."""
    comp = list(recurrent_class)
    if len(comp) == 1:
        return {comp[0]: ONE}
    members = {s: k for k, s in enumerate(comp)}
    size = len(comp)
    # Column s of row t holds delta(s, t) - p(t | s); the last row is sum = 1.
    matrix = [[ZERO] * size for _ in range(size)]
    for col, s in enumerate(comp):
        matrix[col][col] += ONE
        for t, p in _chosen(mdp, policy, s).transitions:
            matrix[members[t]][col] -= p
    matrix[-1] = [ONE] * size
    rhs = [ZERO] * (size - 1) + [ONE]
    return dict(zip(comp, solve_linear(matrix, rhs)))


def total_reward_values(mdp: Mdp, policy: Policy) -> ValueVector:
    """
    Expected total reward from every state.

    Recurrent states get value 0, which requires every recurrent state's
    chosen action to carry reward 0.

    Raises:
        IllDefinedTotalReward: a recurrent state collects nonzero reward
    """
    check_policy(mdp, policy)
    values: List[Optional[Fraction]] = [None] * mdp.n_states
    for comp, closed in _components(mdp, policy):
        if closed:
            for s in comp:
                reward = _chosen(mdp, policy, s).reward
                if reward != 0:
                    raise IllDefinedTotalReward(s, reward)
                values[s] = ZERO
        else:
            base = {s: _chosen(mdp, policy, s).reward for s in comp}
            _solve_block(mdp, policy, comp, base, values)
    return tuple(values)


def gain_bias_values(mdp: Mdp, policy: Policy) -> GainBias:
    """
    Gain and bias of a policy.

    On each recurrent class the bias is normalized so that its
    stationary-weighted sum is zero.
    """
    check_policy(mdp, policy)
    n = mdp.n_states
    gain: List[Optional[Fraction]] = [None] * n
    bias: List[Optional[Fraction]] = [None] * n
    for comp, closed in _components(mdp, policy):
        if closed:
            sigma = stationary_distribution(mdp, policy, comp)
            g = sum((sigma[s] * _chosen(mdp, policy, s).reward for s in comp), ZERO)
            for s in comp:
                gain[s] = g
            _solve_class_bias(mdp, policy, comp, sigma, g, bias)
        else:
            _solve_block(mdp, policy, comp, {s: ZERO for s in comp}, gain)
            base = {s: _chosen(mdp, policy, s).reward - gain[s] for s in comp}
            _solve_block(mdp, policy, comp, base, bias)
    return GainBias(tuple(gain), tuple(bias))


def _solve_class_bias(mdp, policy, comp, sigma, g, bias) -> None:
    if len(comp) == 1:
        bias[comp[0]] = ZERO
        return
    members = {s: k for k, s in enumerate(comp)}
    size = len(comp)
    matrix = [[ZERO] * size for _ in range(size)]
    rhs = []
    for row, s in enumerate(comp):
        matrix[row][row] = ONE
        for t, p in _chosen(mdp, policy, s).transitions:
            matrix[row][members[t]] -= p
        rhs.append(_chosen(mdp, policy, s).reward - g)
    # The dropped row is implied by the others once the class gain is used.
    matrix[-1] = [sigma[s] for s in comp]
    rhs[-1] = ZERO
    for s, v in zip(comp, solve_linear(matrix, rhs)):
        bias[s] = v


def evaluate(mdp: Mdp, policy: Policy, criterion: Criterion) -> ValueReport:
    if criterion is Criterion.TOTAL:
        return ValueReport(criterion, total_reward_values(mdp, policy))
    gb = gain_bias_values(mdp, policy)
    return ValueReport(criterion, gb.bias, gb.gain)


def _action(mdp: Mdp, state: int, action: int) -> Action:
    if not 0 <= state < mdp.n_states:
        raise InvalidPolicyError(f"State {state} does not exist")
    if not 0 <= action < len(mdp.actions[state]):
        raise InvalidPolicyError(f"Action {action} out of range at state {state}")
    return mdp.actions[state][action]


def appeal(mdp: Mdp, values: Sequence[Fraction], state: int, action: int) -> Fraction:
    """r(s, a) + sum p(s'|s, a) * values(s')."""
    act = _action(mdp, state, action)
    return act.reward + sum((p * values[t] for t, p in act.transitions), ZERO)


def gain_appeal(mdp: Mdp, gain: Sequence[Fraction], state: int, action: int) -> Fraction:
    act = _action(mdp, state, action)
    return sum((p * gain[t] for t, p in act.transitions), ZERO)


def bias_appeal(
    mdp: Mdp,
    gain: Sequence[Fraction],
    bias: Sequence[Fraction],
    state: int,
    action: int,
) -> Fraction:
    """r(s, a) - G(s) + sum p(s'|s, a) * B(s')."""
    return appeal(mdp, bias, state, action) - gain[state]
