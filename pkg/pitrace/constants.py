from enum import Enum


class Criterion(str, Enum):
    TOTAL = "total"
    AVERAGE = "average"


class TieMode(str, Enum):
    LOWEST = "lowest"  # smallest action index wins the argmax
    STRICT = "strict"  # ties at a switched state raise AmbiguousArgmax


# Exit codes
EXIT_OK = 0
EXIT_IO = 1  # unreadable or unwritable path
EXIT_USAGE = 2  # same code click uses for usage errors
EXIT_VALIDATION = 3  # invalid MDP, malformed input, trace/instance mismatch
EXIT_BUDGET = 4
EXIT_VERIFY = 5
EXIT_EVALUATION = 6

# Iteration budgets
GENERIC_MAX_ITERATIONS = 10**6
BUDGET_SLACK = 64
BUDGET_FACTOR = 16  # realized runs need 9 * (2^n - 1) iterations

# Output locations
OUTPUT_DIR_ENV = "PITRACE_OUTPUT_DIR"
DEFAULT_OUTPUT_DIR = "."

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
