class PitraceError(Exception):
    """Base class for all pitrace failures"""

    pass


class FormatError(PitraceError):
    """Raised when an instance, trace or rational string cannot be parsed"""

    pass


class InvalidPolicyError(PitraceError):
    """Raised when a policy is not a total, in-range choice for its MDP"""

    pass


class InvalidSwitchError(PitraceError):
    """Raised when a change set names an unknown state/action or repeats a state"""

    pass


class SingularSystem(PitraceError):
    """Raised when a linear system has no unique solution"""

    pass


class IllDefinedTotalReward(PitraceError):
    """Raised when a recurrent state collects nonzero reward under the policy"""

    def __init__(self, state: int, reward):
        self.state = state
        self.reward = reward
        super().__init__(
            f"Total reward is undefined: recurrent state {state} has reward {reward}"
        )


class AmbiguousArgmax(PitraceError):
    """Raised in strict tie mode when two actions share the maximal appeal"""

    def __init__(self, state: int, actions):
        self.state = state
        self.actions = tuple(actions)
        super().__init__(
            f"Appeal tie at state {state} between actions {list(self.actions)}"
        )


class IterationBudgetExceeded(PitraceError):
    """Raised when a run hits max_iterations; the partial trace is attached"""

    def __init__(self, trace):
        self.trace = trace
        super().__init__(
            f"Iteration budget exhausted after {trace.iteration_count} iterations"
        )


class InstanceError(PitraceError):
    """Raised for invalid hard-instance parameters or configurations"""

    pass


class InvalidPhase(InstanceError):
    """Raised when a phase tag does not exist for the given configuration"""

    pass


class TraceMismatch(PitraceError):
    """Raised when a trace references states or actions its instance lacks"""

    pass
