# cr_app/linalg.py
"""Exact linear algebra over Q(i) and over truncated series."""
from __future__ import annotations

import logging
from typing import List, Sequence

from .exceptions import CertificationError, SingularMatrix
from .series import ONE, ZERO, GaussianRational, TruncatedSeries

logger = logging.getLogger(__name__)

Vector = List[GaussianRational]
Matrix = List[List[GaussianRational]]


class EchelonBasis:
    """Row-reduced basis of a growing subspace of Q(i)^n."""

    def __init__(self, dimension: int):
        self.dimension = dimension
        self._rows: List[Vector] = []
        self._pivots: List[int] = []

    @property
    def rank(self) -> int:
        return len(self._rows)

    @property
    def is_full(self) -> bool:
        return self.rank == self.dimension

    def reduce(self, vector: Sequence[GaussianRational]) -> Vector:
        if len(vector) != self.dimension:
            raise ValueError(f'expected a vector of length {self.dimension}')
        reduced = [GaussianRational.coerce(x) for x in vector]
        for row, pivot in zip(self._rows, self._pivots):
            factor = reduced[pivot]
            if factor.is_zero:
                continue
            reduced = [x - factor * y for x, y in zip(reduced, row)]
        return reduced

    def insert(self, vector: Sequence[GaussianRational]) -> bool:
        """Add vector to the span; True when it raised the rank."""
        reduced = self.reduce(vector)
        pivot = next((k for k, x in enumerate(reduced) if not x.is_zero), None)
        if pivot is None:
            return False
        scale = reduced[pivot]
        reduced = [x / scale for x in reduced]
        # keep the basis fully reduced so reduce() needs a single pass
        for n, row in enumerate(self._rows):
            factor = row[pivot]
            if not factor.is_zero:
                self._rows[n] = [x - factor * y for x, y in zip(row, reduced)]
        self._rows.append(reduced)
        self._pivots.append(pivot)
        return True


def identity_matrix(n: int) -> Matrix:
    return [[ONE if i == j else ZERO for j in range(n)] for i in range(n)]


def invert_matrix(matrix: Sequence[Sequence[GaussianRational]]) -> Matrix:
    """Gauss-Jordan inverse with exact pivots."""
    n = len(matrix)
    if any(len(row) != n for row in matrix):
        raise ValueError('matrix is not square')
    x = [[GaussianRational.coerce(v) for v in row] for row in matrix]
    y = identity_matrix(n)

    for i in range(n):
        for j in range(i, n):
            if not x[j][i].is_zero:
                if i != j:
                    x[i], x[j] = x[j], x[i]
                    y[i], y[j] = y[j], y[i]
                break
        else:
            raise SingularMatrix('matrix is not invertible')

        pivot = x[i][i]
        x[i] = [v / pivot for v in x[i]]
        y[i] = [v / pivot for v in y[i]]

        for j in range(n):
            if j == i or x[j][i].is_zero:
                continue
            factor = x[j][i]
            x[j] = [a - factor * b for a, b in zip(x[j], x[i])]
            y[j] = [a - factor * b for a, b in zip(y[j], y[i])]

    return y


def matrix_vector(matrix: Sequence[Sequence[TruncatedSeries]],
                  vector: Sequence[TruncatedSeries]) -> List[TruncatedSeries]:
    result = []
    for row in matrix:
        acc = None
        for entry, value in zip(row, vector):
            term = entry * value
            acc = term if acc is None else acc + term
        result.append(acc)
    return result


def solve_series_system(matrix: Sequence[Sequence[TruncatedSeries]],
                        rhs: Sequence[TruncatedSeries]) -> List[TruncatedSeries]:
    """
    Solve A(x) u = b over truncated series by the contraction
    u <- A(0)^-1 (b - (A(x) - A(0)) u). Since A(x) - A(0) has order >= 1,
    each pass fixes one more degree and the iteration is stationary after
    at most `precision` passes.
    """
    n = len(matrix)
    frame = rhs[0].frame
    precision = min(min(entry.precision for row in matrix for entry in row),
                    min(entry.precision for entry in rhs))
    constant = [[entry.constant_term() for entry in row] for row in matrix]
    inverse = invert_matrix(constant)
    delta = [
        [(entry - TruncatedSeries.constant(frame, precision, c)).truncate(precision)
         for entry, c in zip(row, crow)]
        for row, crow in zip(matrix, constant)
    ]
    b = [entry.truncate(precision) for entry in rhs]

    u = [TruncatedSeries.zero(frame, precision) for _ in range(n)]
    for step in range(precision + 1):
        correction = matrix_vector(delta, u)
        residual = [bl - cl for bl, cl in zip(b, correction)]
        updated = []
        for j in range(n):
            acc = TruncatedSeries.zero(frame, precision)
            for l in range(n):
                if not inverse[j][l].is_zero:
                    acc = acc + residual[l].scale(inverse[j][l])
            updated.append(acc)
        if updated == u:
            logger.debug('series system stationary after %d passes', step)
            break
        u = updated
    else:
        raise CertificationError('series system did not become stationary')
    return u


def invert_series_matrix(matrix: Sequence[Sequence[TruncatedSeries]]) -> List[List[TruncatedSeries]]:
    """Columns u_i with A(x) u_i = e_i; raises SingularMatrix when A(0) is singular."""
    n = len(matrix)
    frame = matrix[0][0].frame
    precision = min(entry.precision for row in matrix for entry in row)
    columns = []
    for i in range(n):
        rhs = [TruncatedSeries.constant(frame, precision, 1 if l == i else 0) for l in range(n)]
        columns.append(solve_series_system(matrix, rhs))
    return columns
