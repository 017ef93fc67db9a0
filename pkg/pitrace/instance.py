"""
Generator for the exponential lower-bound family.

Instance n has a deceleration lane d_0..d_2n, one five-state bit gadget
(b_i, f_i, g_i, r_i, c_i) per bit, the escape states x and y, and the sink
c_{n+1}. Starting from initial_policy, greedy policy iteration counts
through all 2^n bit configurations. oracle_policy predicts every policy
the run visits.
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from functools import lru_cache
from typing import AbstractSet, Dict, FrozenSet, List, Optional, Tuple

from .errors import InstanceError, InvalidPhase
from .models import Action, Mdp, Policy

logger = logging.getLogger(__name__)

Configuration = FrozenSet[int]

EXIT_EDGE_MODES = ("upward", "all")


@dataclass(frozen=True)
class InstanceParams:
    """
    Attributes:
        n: Number of counter bits
        exit_edges: "upward" gives b_i an action to f_j for j > i only;
            "all" gives one for every j != i
    """

    n: int
    exit_edges: str = "upward"

    def __post_init__(self):
        if not isinstance(self.n, int) or self.n < 1:
            raise InstanceError(f"n must be a positive integer, got {self.n!r}")
        if self.exit_edges not in EXIT_EDGE_MODES:
            raise InstanceError(
                f"exit_edges must be one of {EXIT_EDGE_MODES}, got {self.exit_edges!r}"
            )

    @property
    def scale(self) -> int:
        """10n + 4, the unit of every bit reward."""
        return 10 * self.n + 4

    @property
    def rho(self) -> Fraction:
        """Probability that a_i leaves b_i for g_i."""
        return Fraction(1, self.scale * 2**self.n)

    @property
    def full(self) -> Configuration:
        return frozenset(range(1, self.n + 1))


@dataclass(frozen=True)
class StateRole:
    kind: str  # D, Bit, F, G, R, C, X, Y
    index: Optional[int] = None

    @property
    def name(self) -> str:
        prefix = {"D": "d", "Bit": "b", "F": "f", "G": "g", "R": "r", "C": "c"}
        if self.kind in prefix:
            return f"{prefix[self.kind]}{self.index}"
        return self.kind.lower()


@dataclass(frozen=True, eq=False)
class HardInstance:
    params: InstanceParams
    mdp: Mdp
    roles: Tuple[StateRole, ...]
    ids: Dict[str, int] = field(repr=False)
    labels: Tuple[Dict[str, int], ...] = field(repr=False)

    @property
    def names(self) -> Tuple[str, ...]:
        return tuple(role.name for role in self.roles)

    def state(self, name: str) -> int:
        try:
            return self.ids[name]
        except KeyError:
            raise InstanceError(f"No state named {name!r}")

    def action(self, name: str, label: str) -> int:
        try:
            return self.labels[self.state(name)][label]
        except KeyError:
            raise InstanceError(f"State {name!r} has no action {label!r}")

    def policy_from_labels(self, choices: Dict[str, str]) -> Policy:
        missing = set(self.ids) - set(choices)
        if missing:
            raise InstanceError(f"No choice given for {sorted(missing)}")
        choice = [0] * self.mdp.n_states
        for name, label in choices.items():
            choice[self.state(name)] = self.action(name, label)
        return Policy(tuple(choice))

    def label_of(self, state: int, action: int) -> str:
        return self.mdp.actions[state][action].label

    def configuration_of(self, policy: Policy) -> Configuration:
        """Bits whose b_i selects a_i."""
        return frozenset(
            i
            for i in range(1, self.params.n + 1)
            if self.label_of(self.state(f"b{i}"), policy[self.state(f"b{i}")])
            == f"a{i}"
        )


def _roles(n: int) -> List[StateRole]:
    roles = [StateRole("D", k) for k in range(2 * n + 1)]
    for i in range(1, n + 1):
        roles += [
            StateRole("Bit", i),
            StateRole("F", i),
            StateRole("G", i),
            StateRole("R", i),
            StateRole("C", i),
        ]
    roles += [StateRole("X"), StateRole("Y"), StateRole("C", n + 1)]
    return roles


def exit_targets(params: InstanceParams, i: int) -> List[int]:
    """Bits j with an action (b_i, f_j)."""
    if params.exit_edges == "all":
        return [j for j in range(1, params.n + 1) if j != i]
    return list(range(i + 1, params.n + 1))


@lru_cache(maxsize=32)
def build(params: InstanceParams) -> HardInstance:
    n = params.n
    scale = params.scale
    roles = _roles(n)
    ids = {role.name: sid for sid, role in enumerate(roles)}
    actions: Dict[str, List[Action]] = {role.name: [] for role in roles}

    def edge(source: str, target: str, reward) -> None:
        actions[source].append(Action.deterministic(ids[target], reward, target))

    sink = f"c{n + 1}"
    edge(sink, sink, 0)

    edge("d0", "y", 4 * n + 1)
    edge("d0", "x", 4 * n + 1)
    for k in range(1, 2 * n + 1):
        edge(f"d{k}", "y", 0)
        edge(f"d{k}", "x", 0)
        edge(f"d{k}", f"d{k - 1}", -1)

    rho = params.rho
    for i in range(1, n + 1):
        b, f, g, r, c = (f"{p}{i}" for p in "bfgrc")
        actions[b].append(
            Action(Fraction(0), ((ids[b], 1 - rho), (ids[g], rho)), f"a{i}")
        )
        for k in range(1, 2 * i + 1):
            edge(b, f"d{k}", 2 * k)
        edge(b, "y", 1)
        edge(b, "x", 0)
        for j in exit_targets(params, i):
            edge(b, f"f{j}", 4 * n + 1)
        edge(f, b, -scale * 2 ** (i - 1) - 4 * n)
        edge(g, r, scale * 2**i)
        for j in range(i + 1, n + 2):
            edge(r, f"c{j}", -1)
        edge(c, r, 0)
        edge(c, f, 4 * n + 1)

    for i in range(1, n + 1):
        edge("x", f"f{i}", 0)
    edge("x", sink, -1)
    for i in range(1, n + 2):
        edge("y", f"c{i}", 0)

    mdp = Mdp(tuple(tuple(actions[role.name]) for role in roles))
    labels = tuple(
        {a.label: index for index, a in enumerate(actions[role.name])}
        for role in roles
    )
    logger.debug(f"Built instance n={n} with {mdp.n_states} states")
    return HardInstance(params, mdp, tuple(roles), ids, labels)


def _check_bits(params: InstanceParams, bits: AbstractSet[int]) -> Configuration:
    bits = frozenset(bits)
    if not bits <= params.full:
        raise InstanceError(f"Configuration {sorted(bits)} has bits outside 1..{params.n}")
    return bits


def min_missing(params: InstanceParams, bits: AbstractSet[int]) -> Optional[int]:
    missing = params.full - frozenset(bits)
    return min(missing) if missing else None


def _next_above(bits: AbstractSet[int], i: int, n: int) -> int:
    return min([j for j in bits if j > i] + [n + 1])


class Phase(str, Enum):
    SEQ = "Seq"
    R1 = "R1"
    R2 = "R2"
    R3 = "R3"


@dataclass(frozen=True)
class PhaseTag:
    phase: Phase
    step: int = 0

    @classmethod
    def seq(cls, step: int) -> "PhaseTag":
        return cls(Phase.SEQ, step)

    def __str__(self) -> str:
        if self.phase is Phase.SEQ:
            return f"Seq({self.step})"
        return self.phase.value


def phase_schedule(params: InstanceParams, bits: AbstractSet[int]) -> List[PhaseTag]:
    """Phases visited from milestone bits up to the next milestone."""
    bits = _check_bits(params, bits)
    i = min_missing(params, bits)
    if i is None:
        return [PhaseTag.seq(j) for j in range(2 * params.n + 1)]
    return [PhaseTag.seq(j) for j in range(2 * i + 2)] + [
        PhaseTag(Phase.R1),
        PhaseTag(Phase.R2),
        PhaseTag(Phase.R3),
    ]


def _sequence_labels(n: int, bits: Configuration, j: int) -> Dict[str, str]:
    choices = {}
    for k in range(2 * n + 1):
        choices[f"d{k}"] = f"d{k - 1}" if 1 <= k <= min(j, 2 * n) else "y"
    for i in range(1, n + 1):
        if i in bits:
            choices[f"b{i}"] = f"a{i}"
        elif j == 0:
            choices[f"b{i}"] = "y"
        elif j == 1:
            choices[f"b{i}"] = f"d{2 * i}"
        else:
            choices[f"b{i}"] = f"d{min(j - 1, 2 * i)}"
        choices[f"c{i}"] = f"f{i}" if i in bits else f"r{i}"
        choices[f"r{i}"] = f"c{_next_above(bits, i, n)}"
        choices[f"f{i}"] = f"b{i}"
        choices[f"g{i}"] = f"r{i}"
    choices["y"] = f"c{_next_above(bits, 0, n)}"
    choices["x"] = f"f{min(bits)}" if bits else f"c{n + 1}"
    choices[f"c{n + 1}"] = f"c{n + 1}"
    return choices


def oracle_labels(
    params: InstanceParams, bits: AbstractSet[int], tag: PhaseTag
) -> Dict[str, str]:
    """Predicted action label at every state for phase tag of configuration bits."""
    bits = _check_bits(params, bits)
    n = params.n
    i = min_missing(params, bits)
    if tag.phase is Phase.SEQ:
        limit = 2 * n if i is None else 2 * i + 1
        if not 0 <= tag.step <= limit:
            raise InvalidPhase(
                f"Seq step {tag.step} outside 0..{limit} for {sorted(bits)}"
            )
        return _sequence_labels(n, bits, tag.step)
    if i is None:
        raise InvalidPhase(f"{tag} does not exist for the full configuration")

    step = 2 * i + 2 if tag.phase is Phase.R1 else 2 * i + 3
    choices = _sequence_labels(n, bits, step)
    choices[f"b{i}"] = f"a{i}"
    if tag.phase is Phase.R1:
        return choices

    choices[f"c{i}"] = f"f{i}"
    choices["x"] = f"f{i}"
    for j in range(1, i):
        choices[f"b{j}"] = f"f{i}"
    if tag.phase is Phase.R2:
        return choices

    choices["y"] = f"c{i}"
    for j in range(1, i):
        choices[f"r{j}"] = f"c{i}"
    for k in range(2 * n + 1):
        choices[f"d{k}"] = "x"
    for j in range(i + 1, n + 1):
        if j not in bits:
            choices[f"b{j}"] = "x"
    return choices


def oracle_policy(
    params: InstanceParams, bits: AbstractSet[int], tag: PhaseTag
) -> Policy:
    return build(params).policy_from_labels(oracle_labels(params, bits, tag))


def initial_policy(params: InstanceParams) -> Policy:
    """Every lane state and bit state to y, c_i to r_i, r_i, x and y to the sink."""
    n = params.n
    sink = f"c{n + 1}"
    choices = {f"d{k}": "y" for k in range(2 * n + 1)}
    for i in range(1, n + 1):
        choices.update(
            {
                f"b{i}": "y",
                f"f{i}": f"b{i}",
                f"g{i}": f"r{i}",
                f"r{i}": sink,
                f"c{i}": f"r{i}",
            }
        )
    choices.update({"x": sink, "y": sink, sink: sink})
    return build(params).policy_from_labels(choices)


def closed_form_c_value(
    params: InstanceParams, bits: AbstractSet[int], i: int
) -> Fraction:
    """Value of c_i at any Sequence(bits) policy."""
    bits = _check_bits(params, bits)
    if not 1 <= i <= params.n:
        raise InstanceError(f"Bit index {i} outside 1..{params.n}")
    total = sum(params.scale * 2 ** (j - 1) for j in bits if j >= i)
    return Fraction(total - (0 if i in bits else 1))


def counter_successor(bits: AbstractSet[int], n: int) -> Configuration:
    """Binary increment: set the lowest clear bit and clear everything below it."""
    params = InstanceParams(n)
    bits = _check_bits(params, bits)
    i = min_missing(params, bits)
    if i is None:
        raise InstanceError("The full configuration has no successor")
    return frozenset(j for j in bits if j > i) | {i}


def bits_to_int(bits: AbstractSet[int]) -> int:
    return sum(2 ** (j - 1) for j in bits)


def int_to_bits(value: int, n: int) -> Configuration:
    if not 0 <= value < 2**n:
        raise InstanceError(f"{value} is not an {n}-bit configuration")
    return frozenset(j for j in range(1, n + 1) if value >> (j - 1) & 1)
