"""Exact linear solves over the rationals."""

from fractions import Fraction
from math import lcm
from typing import List, Sequence

from .errors import SingularSystem


def _integer_rows(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]):
    rows = []
    for row, b in zip(matrix, rhs):
        entries = [Fraction(v) for v in row] + [Fraction(b)]
        scale = lcm(*(v.denominator for v in entries))
        rows.append([v.numerator * (scale // v.denominator) for v in entries])
    return rows


def solve_linear(
    matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]
) -> List[Fraction]:
    """
    Solve matrix @ x = rhs exactly.

    Rows are scaled to integers and reduced with fraction-free (Bareiss)
    elimination, choosing the largest-magnitude pivot in each column.
    Back substitution runs in exact rationals.

    Raises:
        SingularSystem: the matrix is not square or has no unique solution
    """
    n = len(matrix)
    if len(rhs) != n or any(len(row) != n for row in matrix):
        raise SingularSystem(f"Expected a square {n}x{n} system")
    if n == 0:
        return []

    m = _integer_rows(matrix, rhs)
    prev = 1
    for k in range(n):
        pivot = max(range(k, n), key=lambda r: abs(m[r][k]))
        if m[pivot][k] == 0:
            raise SingularSystem(f"No pivot in column {k}")
        if pivot != k:
            m[k], m[pivot] = m[pivot], m[k]
        pk = m[k][k]
        for i in range(k + 1, n):
            lead = m[i][k]
            row_i = m[i]
            row_k = m[k]
            for j in range(k + 1, n + 1):
                row_i[j] = (row_i[j] * pk - lead * row_k[j]) // prev
            row_i[k] = 0
        prev = pk

    x = [Fraction(0)] * n
    for i in range(n - 1, -1, -1):
        acc = Fraction(m[i][n])
        for j in range(i + 1, n):
            if m[i][j]:
                acc -= m[i][j] * x[j]
        x[i] = acc / m[i][i]
    return x
