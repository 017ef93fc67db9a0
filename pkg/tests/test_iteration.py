import itertools
from fractions import Fraction

import pytest

from pitrace.constants import Criterion, TieMode
from pitrace.errors import AmbiguousArgmax, IterationBudgetExceeded, PitraceError
from pitrace.evaluation import evaluate, total_reward_values
from pitrace.instance import InstanceParams, build, initial_policy
from pitrace.iteration import (
    RunConfig,
    check_optimal,
    default_max_iterations,
    greedy_step,
    run,
    switchable_actions,
)
from pitrace.models import Mdp, Policy
from pitrace.serialize import trace_lines
from pitrace.verify import verify_monotonicity

from .conftest import det, random_absorbing_mdp

F = Fraction


def all_policies(mdp):
    for choice in itertools.product(*(range(len(a)) for a in mdp.actions)):
        yield Policy(choice)


def test_single_step_to_optimum(choice_mdp):
    trace = run(choice_mdp, Policy((0, 0)))
    assert trace.terminated
    assert trace.iteration_count == 1
    (decision,) = trace.iterations[0].switches
    assert (decision.state, decision.from_action, decision.to_action) == (0, 0, 1)
    assert decision.appeal_gap == 2
    assert trace.final_policy == Policy((1, 0))


def test_optimal_start_terminates_immediately(choice_mdp):
    trace = run(choice_mdp, Policy((1, 0)))
    assert trace.iteration_count == 0
    assert trace.iterations[0].switches == ()


@pytest.mark.parametrize("seed", range(200))
def test_run_reaches_brute_force_optimum(seed):
    mdp = random_absorbing_mdp(seed, n_states=2 + seed % 5)
    best = [
        max(values)
        for values in zip(*(total_reward_values(mdp, p) for p in all_policies(mdp)))
    ]
    for criterion in Criterion:
        trace = run(mdp, Policy((0,) * mdp.n_states), RunConfig(criterion=criterion))
        assert trace.terminated
        assert list(total_reward_values(mdp, trace.final_policy)) == best
        ok, witnesses = check_optimal(
            mdp, trace.final_policy, evaluate(mdp, trace.final_policy, criterion)
        )
        assert ok and witnesses == []


def test_values_improve_monotonically():
    for seed in range(25):
        mdp = random_absorbing_mdp(seed, n_states=6)
        trace = run(mdp, Policy((0,) * mdp.n_states))
        assert verify_monotonicity(trace).passed


def test_switchable_actions_lists_every_improvement(chain_mdp):
    policy = Policy((0, 1, 0, 0))
    report = evaluate(chain_mdp, policy, Criterion.TOTAL)
    switchable = switchable_actions(chain_mdp, policy, report)
    assert [len(options) for options in switchable] == [0, 1, 0, 0]
    (decision,) = switchable[1]
    assert decision.to_action == 0
    assert decision.appeal_gap == 4
    ok, witnesses = check_optimal(chain_mdp, policy, report)
    assert not ok and witnesses == [(1, 0)]


def test_average_criterion_prefers_gain(two_cycle_mdp):
    policy = Policy((0, 0, 0))
    report = evaluate(two_cycle_mdp, policy, Criterion.AVERAGE)
    new_policy, (decision,) = greedy_step(two_cycle_mdp, policy, report)
    assert new_policy == Policy((1, 0, 0))
    assert decision.via_gain
    assert decision.appeal_gap == 3


def test_greedy_step_without_improvement_raises(choice_mdp):
    policy = Policy((1, 0))
    report = evaluate(choice_mdp, policy, Criterion.TOTAL)
    with pytest.raises(PitraceError):
        greedy_step(choice_mdp, policy, report)


def test_ties_take_lowest_index_or_raise():
    mdp = Mdp(((det(1, 0), det(1, 2), det(1, 2)), (det(1),)))
    trace = run(mdp, Policy((0, 0)))
    assert trace.final_policy == Policy((1, 0))

    with pytest.raises(AmbiguousArgmax) as excinfo:
        run(mdp, Policy((0, 0)), RunConfig(tie_mode=TieMode.STRICT))
    assert excinfo.value.state == 0
    assert excinfo.value.actions == (1, 2)


def test_budget_exceeded_keeps_partial_trace():
    params = InstanceParams(2)
    mdp = build(params).mdp
    with pytest.raises(IterationBudgetExceeded) as excinfo:
        run(mdp, initial_policy(params), RunConfig(max_iterations=5))
    trace = excinfo.value.trace
    assert not trace.terminated
    assert trace.iteration_count == 5
    assert [r.index for r in trace.iterations] == list(range(6))
    assert trace.iterations[-1].switches


def test_run_config_validation():
    with pytest.raises(PitraceError):
        RunConfig(max_iterations=0)


def test_default_max_iterations():
    assert default_max_iterations() == 10**6
    assert default_max_iterations(1) == 16 * 2 + 64
    assert default_max_iterations(10) == 16 * 1024 + 64


def test_values_not_recorded_on_request(choice_mdp):
    trace = run(choice_mdp, Policy((0, 0)), RunConfig(record_values=False))
    assert all(r.values is None for r in trace.iterations)


@pytest.mark.parametrize("n, expected", [(1, 9), (2, 27), (3, 63)])
@pytest.mark.parametrize("criterion", list(Criterion))
def test_hard_instance_iteration_count(n, expected, criterion):
    params = InstanceParams(n)
    trace = run(
        build(params).mdp,
        initial_policy(params),
        RunConfig(criterion, default_max_iterations(n)),
    )
    assert trace.terminated
    assert trace.iteration_count == expected == 9 * (2**n - 1)


@pytest.mark.slow
@pytest.mark.parametrize("n", range(4, 11))
def test_hard_instance_iteration_count_larger(n):
    params = InstanceParams(n)
    trace = run(
        build(params).mdp,
        initial_policy(params),
        RunConfig(
            tie_mode=TieMode.STRICT,
            max_iterations=default_max_iterations(n),
            record_values=False,
        ),
    )
    assert trace.terminated
    assert trace.iteration_count == 9 * (2**n - 1)
    assert trace.iteration_count >= 2**n


@pytest.mark.parametrize("n", [1, 2, 3])
def test_hard_instance_has_no_ties(n):
    params = InstanceParams(n)
    trace = run(
        build(params).mdp,
        initial_policy(params),
        RunConfig(tie_mode=TieMode.STRICT, max_iterations=default_max_iterations(n)),
    )
    assert trace.terminated


def test_runs_are_deterministic():
    params = InstanceParams(2)
    mdp = build(params).mdp
    first = list(trace_lines(run(mdp, initial_policy(params))))
    second = list(trace_lines(run(mdp, initial_policy(params))))
    assert first == second


def test_first_switch_on_the_lane():
    params = InstanceParams(3)
    instance = build(params)
    policy = initial_policy(params)
    report = evaluate(instance.mdp, policy, Criterion.TOTAL)
    switchable = switchable_actions(instance.mdp, policy, report)
    lane_moves = [
        (instance.names[d.state], instance.label_of(d.state, d.to_action))
        for options in switchable
        for d in options
        if instance.names[d.state].startswith("d")
        and instance.label_of(d.state, d.to_action).startswith("d")
    ]
    assert lane_moves == [("d1", "d0")]
    ok, witnesses = check_optimal(instance.mdp, policy, report)
    assert not ok
    assert (instance.state("d1"), instance.action("d1", "d0")) in witnesses


def test_final_policy_sets_every_bit():
    params = InstanceParams(1)
    instance = build(params)
    trace = run(instance.mdp, initial_policy(params))
    assert instance.configuration_of(trace.final_policy) == {1}
    final = trace.final_policy
    report = evaluate(instance.mdp, final, Criterion.TOTAL)
    ok, _ = check_optimal(instance.mdp, final, report)
    assert ok


def test_sink_only_mdp_is_optimal():
    mdp = Mdp(((det(0),),))
    report = evaluate(mdp, Policy((0,)), Criterion.TOTAL)
    ok, witnesses = check_optimal(mdp, Policy((0,)), report)
    assert ok and witnesses == []
