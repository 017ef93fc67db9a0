from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, List, Optional, Tuple


@dataclass(frozen=True)
class Action:
    """
    One action of a state.

    Attributes:
        reward: Exact reward collected when the action is taken
        transitions: (target state, probability) pairs, zero entries omitted
        label: Optional short name, e.g. the target of a deterministic action
    """

    reward: Fraction
    transitions: Tuple[Tuple[int, Fraction], ...]
    label: Optional[str] = None

    @classmethod
    def deterministic(cls, target: int, reward=0, label: Optional[str] = None):
        return cls(Fraction(reward), ((target, Fraction(1)),), label)

    @property
    def targets(self) -> Tuple[int, ...]:
        return tuple(t for t, _ in self.transitions)


@dataclass(frozen=True)
class Mdp:
    """A finite MDP; state ids are the dense range [0, n_states)."""

    actions: Tuple[Tuple[Action, ...], ...]

    @property
    def n_states(self) -> int:
        return len(self.actions)

    @property
    def states(self) -> range:
        return range(len(self.actions))

    def action(self, state: int, index: int) -> Action:
        return self.actions[state][index]


@dataclass(frozen=True)
class Policy:
    choice: Tuple[int, ...]

    def __len__(self) -> int:
        return len(self.choice)

    def __getitem__(self, state: int) -> int:
        return self.choice[state]

    def __iter__(self) -> Iterator[int]:
        return iter(self.choice)


@dataclass(frozen=True)
class Violation:
    state: int
    action: Optional[int]
    reason: str


@dataclass
class ValidationReport:
    violations: List[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "OK"
        return "; ".join(
            f"state {v.state}"
            + (f" action {v.action}" if v.action is not None else "")
            + f": {v.reason}"
            for v in self.violations
        )
