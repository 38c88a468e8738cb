"""
Exact sparse linear algebra over Q.

SparseRow is a dictionary key -> Fraction whose missing entries are zero
(zero values are removed as soon as they appear). EchelonBasis keeps rows in
insertion order, each with its own pivot, together with the expression of
the row in terms of the original vectors, so that any vector of the span can
be written back in the original basis with exact coefficients.
"""

from fractions import Fraction
from typing import Hashable, Iterable


class SparseRow(dict):
    def __init__(self, data=()):
        if isinstance(data, SparseRow):
            super().__init__(data)
        else:
            if isinstance(data, dict):
                data = data.items()
            super().__init__()
            self.__iadd__(data)

    def __getitem__(self, key):
        return self.get(key, Fraction(0))

    def __mul__(self, n):
        if n == 0:
            return SparseRow()
        return SparseRow((k, n * x) for (k, x) in self.items())

    def __rmul__(self, n):
        return self.__mul__(n)

    def iadd_coef(self, coef, other):  # self += coef*other
        if coef == 0:
            return self
        for k, x in other.items():
            if x == 0:
                continue
            x2 = self.get(k, 0) + coef * x
            if x2 == 0:
                del self[k]
            else:
                self[k] = x2
        return self

    def __iadd__(self, other):
        if isinstance(other, dict):
            other = other.items()
        for k, x in other:
            if x == 0:
                continue
            if not isinstance(x, Fraction):
                x = Fraction(x)
            x2 = self.get(k, 0) + x
            if x2 == 0:
                del self[k]
            else:
                self[k] = x2
        return self

    def __add__(self, other):
        res = SparseRow(self)
        res.__iadd__(other)
        return res

    def __sub__(self, other):
        res = SparseRow(self)
        res.iadd_coef(-1, other)
        return res

    def pivot(self) -> Hashable:
        return min(self.keys())


class EchelonBasis:
    """Incrementally built row-echelon form with back-references to the inserted vectors."""

    def __init__(self):
        self._rows: list[tuple[Hashable, SparseRow, SparseRow]] = []
        self.size = 0

    def __len__(self) -> int:
        return self.size

    def reduce(self, vector: SparseRow) -> tuple[SparseRow, SparseRow]:
        """
        Return (remainder, coordinates). The remainder is zero iff the vector lies
        in the span; coordinates then express it in the inserted vectors.
        """
        remainder = SparseRow(vector)
        coordinates = SparseRow()
        for pivot, row, row_combo in self._rows:
            c = remainder[pivot]
            if c == 0:
                continue
            factor = c / row[pivot]
            remainder.iadd_coef(-factor, row)
            coordinates.iadd_coef(factor, row_combo)
        return remainder, coordinates

    def contains(self, vector: SparseRow) -> bool:
        remainder, _ = self.reduce(vector)
        return not remainder

    def coordinates(self, vector: SparseRow) -> SparseRow | None:
        remainder, coordinates = self.reduce(vector)
        return None if remainder else coordinates

    def insert(self, vector: SparseRow) -> bool:
        """Add the vector if it is independent; returns whether it was added."""
        remainder, coordinates = self.reduce(vector)
        if not remainder:
            return False
        combo = SparseRow({self.size: Fraction(1)})
        combo.iadd_coef(-1, coordinates)
        self._rows.append((remainder.pivot(), remainder, combo))
        self.size += 1
        return True


def rank(vectors: Iterable[SparseRow]) -> int:
    basis = EchelonBasis()
    for v in vectors:
        basis.insert(v)
    return len(basis)
