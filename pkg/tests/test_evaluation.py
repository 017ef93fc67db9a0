import itertools
import random
from fractions import Fraction

import pytest

from pitrace.constants import Criterion
from pitrace.errors import IllDefinedTotalReward, InvalidPolicyError
from pitrace.evaluation import (
    appeal,
    bias_appeal,
    chain_structure,
    evaluate,
    gain_appeal,
    gain_bias_values,
    stationary_distribution,
    total_reward_values,
)
from pitrace.instance import (
    InstanceParams,
    Phase,
    build,
    int_to_bits,
    oracle_policy,
    phase_schedule,
)
from pitrace.models import Action, Mdp, Policy

from .conftest import det, random_absorbing_mdp, random_mdp

F = Fraction


def random_policy(mdp, rng):
    return Policy(tuple(rng.randrange(len(actions)) for actions in mdp.actions))


def test_chain_structure_separates_recurrent_classes(two_cycle_mdp):
    structure = chain_structure(two_cycle_mdp, Policy((0, 0, 0)))
    assert structure.recurrent_classes == ((0, 1), (2,))
    assert structure.transient_states == ()

    structure = chain_structure(two_cycle_mdp, Policy((1, 0, 0)))
    assert structure.recurrent_classes == ((2,),)
    assert structure.transient_states == (0, 1)


def test_total_reward_on_chain(chain_mdp):
    # v3 = 0, v2 = 4, v1 = 1 + (4 + 0) / 2 = 3, v0 = 2 + 3
    assert total_reward_values(chain_mdp, Policy((0, 0, 0, 0))) == (5, 3, 4, 0)
    assert total_reward_values(chain_mdp, Policy((0, 1, 0, 0))) == (1, -1, 4, 0)


def test_total_reward_with_self_loop():
    mdp = Mdp(((Action(F(3), ((0, F(2, 3)), (1, F(1, 3)))),), (det(1),)))
    assert total_reward_values(mdp, Policy((0, 0))) == (9, 0)


def test_total_reward_rejects_rewarding_recurrent_state(two_cycle_mdp):
    with pytest.raises(IllDefinedTotalReward) as excinfo:
        total_reward_values(two_cycle_mdp, Policy((1, 0, 0)))
    assert excinfo.value.state == 2
    assert excinfo.value.reward == 5


def test_total_reward_solves_every_random_policy():
    rng = random.Random(7)
    for seed in range(200):
        mdp = random_absorbing_mdp(seed, n_states=rng.randint(2, 6))
        policy = random_policy(mdp, rng)
        values = total_reward_values(mdp, policy)
        for s in mdp.states:
            assert values[s] == appeal(mdp, values, s, policy[s])
        assert values[-1] == 0


def test_total_reward_matches_value_sweeps_on_acyclic_mdps():
    rng = random.Random(11)
    for seed in range(200):
        mdp = random_absorbing_mdp(seed, n_states=rng.randint(2, 6), acyclic=True)
        policy = random_policy(mdp, rng)
        swept = [F(0)] * mdp.n_states
        # one sweep per state reaches the fixed point when every step moves up
        for _ in range(mdp.n_states):
            swept = [
                action.reward + sum(p * swept[t] for t, p in action.transitions)
                for action in (mdp.actions[s][policy[s]] for s in mdp.states)
            ]
        assert list(total_reward_values(mdp, policy)) == swept


def test_total_reward_multi_state_transient_component():
    # 0 and 1 feed each other before leaving to the sink
    mdp = Mdp(
        (
            (Action(F(2), ((1, F(1, 2)), (2, F(1, 2)))),),
            (Action(F(-1), ((0, F(1, 3)), (2, F(2, 3)))),),
            (det(2),),
        )
    )
    values = total_reward_values(mdp, Policy((0, 0, 0)))
    assert values == (F(9, 5), F(-2, 5), 0)


def test_gain_bias_on_two_cycle(two_cycle_mdp):
    gb = gain_bias_values(two_cycle_mdp, Policy((0, 0, 0)))
    assert gb.gain == (2, 2, 5)
    assert gb.bias == (F(-1, 2), F(1, 2), 0)


def test_gain_bias_on_transient_state(two_cycle_mdp):
    gb = gain_bias_values(two_cycle_mdp, Policy((1, 0, 0)))
    # 1 -> 0 -> 2: both transient states inherit gain 5
    assert gb.gain == (5, 5, 5)
    assert gb.bias == (-5, -7, 0)


def test_stationary_distribution_of_biased_cycle():
    mdp = Mdp(
        (
            (Action(F(0), ((0, F(1, 2)), (1, F(1, 2)))),),
            (det(0),),
        )
    )
    assert stationary_distribution(mdp, Policy((0, 0)), (0, 1)) == {
        0: F(2, 3),
        1: F(1, 3),
    }


def test_gain_bias_equations_on_random_multichain_mdps():
    rng = random.Random(11)
    for seed in range(200):
        mdp = random_mdp(seed, n_states=rng.randint(1, 6))
        policy = random_policy(mdp, rng)
        gb = gain_bias_values(mdp, policy)
        for s in mdp.states:
            a = policy[s]
            assert gb.gain[s] == gain_appeal(mdp, gb.gain, s, a)
            assert bias_appeal(mdp, gb.gain, gb.bias, s, a) == gb.bias[s]
        for cls in chain_structure(mdp, policy).recurrent_classes:
            sigma = stationary_distribution(mdp, policy, cls)
            assert sum(sigma.values()) == 1
            assert sum(sigma[s] * gb.bias[s] for s in cls) == 0


def test_average_equals_total_when_everything_is_absorbed():
    for seed in range(30):
        mdp = random_absorbing_mdp(seed)
        for choice in itertools.islice(
            itertools.product(*(range(len(a)) for a in mdp.actions)), 10
        ):
            policy = Policy(choice)
            report = evaluate(mdp, policy, Criterion.AVERAGE)
            assert set(report.gain) == {0}
            assert report.values == evaluate(mdp, policy, Criterion.TOTAL).values


def test_evaluate_report_shape(choice_mdp):
    total = evaluate(choice_mdp, Policy((1, 0)), Criterion.TOTAL)
    assert total.values == (3, 0) and total.gain is None
    average = evaluate(choice_mdp, Policy((1, 0)), Criterion.AVERAGE)
    assert average.gain == (0, 0)


def test_evaluation_rejects_bad_policy(choice_mdp):
    with pytest.raises(InvalidPolicyError):
        total_reward_values(choice_mdp, Policy((0,)))
    with pytest.raises(InvalidPolicyError):
        appeal(choice_mdp, (0, 0), 0, 5)
    with pytest.raises(InvalidPolicyError):
        gain_appeal(choice_mdp, (0, 0), 3, 0)


def oracle_policies(n):
    params = InstanceParams(n)
    for value in range(2**n):
        bits = int_to_bits(value, n)
        for tag in phase_schedule(params, bits):
            yield bits, tag, oracle_policy(params, bits, tag)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_lane_appeals_depend_on_lane_position(n):
    instance = build(InstanceParams(n))
    for _, tag, policy in oracle_policies(n):
        if tag.phase is not Phase.SEQ:
            continue
        values = total_reward_values(instance.mdp, policy)
        y = values[instance.state("y")]
        for j in range(1, 2 * n + 1):
            lane = appeal(
                instance.mdp,
                values,
                instance.state(f"d{j}"),
                instance.action(f"d{j}", f"d{j - 1}"),
            )
            if j <= tag.step + 1:
                assert lane == y + 4 * n - j + 1, (tag, j)
            else:
                assert lane == y - 1, (tag, j)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_bit_gadget_values_at_oracle_policies(n):
    instance = build(InstanceParams(n))
    for bits, tag, policy in oracle_policies(n):
        values = total_reward_values(instance.mdp, policy)
        for i in range(1, n + 1):
            b = instance.state(f"b{i}")
            a = instance.action(f"b{i}", f"a{i}")
            if policy[b] == a:
                assert values[b] == values[instance.state(f"g{i}")]
            else:
                assert appeal(instance.mdp, values, b, a) < values[b] + 1, (
                    sorted(bits),
                    tag,
                    i,
                )
