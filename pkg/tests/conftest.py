import io
import logging
import random
from fractions import Fraction

import pytest

from pitrace.models import Action, Mdp

F = Fraction


def det(target, reward=0, label=None):
    return Action.deterministic(target, reward, label)


def random_absorbing_mdp(
    seed: int, n_states: int = 5, max_actions: int = 3, acyclic: bool = False
) -> Mdp:
    """
    Every action moves to a higher state with positive probability; the last state absorbs.

    With acyclic, non-sink actions never return to their own state.
    """
    rng = random.Random(seed)
    sink = n_states - 1
    rows = []
    for s in range(sink):
        row = []
        for _ in range(rng.randint(1, max_actions)):
            lo = s + 1 if acyclic else s
            k = rng.randint(1, min(3, n_states - lo))
            targets = sorted(rng.sample(range(lo, n_states), k))
            if targets == [s]:
                targets = [s, sink]
            weights = [rng.randint(1, 4) for _ in targets]
            total = sum(weights)
            row.append(
                Action(
                    F(rng.randint(-5, 5)),
                    tuple((t, F(w, total)) for t, w in zip(targets, weights)),
                )
            )
        rows.append(tuple(row))
    rows.append((det(sink),))
    return Mdp(tuple(rows))


def random_mdp(seed: int, n_states: int = 6, max_actions: int = 3) -> Mdp:
    """Arbitrary transitions, so policies may have several recurrent classes."""
    rng = random.Random(seed)
    rows = []
    for _ in range(n_states):
        row = []
        for _ in range(rng.randint(1, max_actions)):
            width = rng.randint(1, min(2, n_states))
            targets = sorted(rng.sample(range(n_states), width))
            weights = [rng.randint(1, 3) for _ in targets]
            total = sum(weights)
            row.append(
                Action(
                    F(rng.randint(-3, 3)),
                    tuple((t, F(w, total)) for t, w in zip(targets, weights)),
                )
            )
        rows.append(tuple(row))
    return Mdp(tuple(rows))


@pytest.fixture
def capture_logging():
    log_capture = io.StringIO()
    handler = logging.StreamHandler(log_capture)
    logger = logging.getLogger()
    logger.addHandler(handler)
    logger.setLevel(logging.DEBUG)
    yield log_capture
    logger.removeHandler(handler)


@pytest.fixture
def choice_mdp():
    """State 0 picks a reward of 1 or 3 on its way to the sink."""
    return Mdp(((det(1, 1), det(1, 3)), (det(1),)))


@pytest.fixture
def chain_mdp():
    """0 -> 1 -> 2 -> 3 (sink), with a coin flip at state 1."""
    return Mdp(
        (
            (det(1, 2),),
            (
                Action(F(1), ((2, F(1, 2)), (3, F(1, 2)))),
                det(3, -1),
            ),
            (det(3, 4),),
            (det(3),),
        )
    )


@pytest.fixture
def two_cycle_mdp():
    """States 0 and 1 alternate with rewards 1 and 3; state 2 self-loops with reward 5."""
    return Mdp(
        (
            (det(1, 1), det(2, 0)),
            (det(0, 3),),
            (det(2, 5),),
        )
    )
