"""Monomial bases for moment matrices.

The order-r basis in n variables is every exponent vector alpha in N^n with
|alpha| <= r, listed in graded lexicographic order (total degree first, then
lexicographic on the vector).  Its size is C(n+r, r).
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb
from typing import Iterator

__all__ = ["basis_size", "monomials_upto", "MonomialBasis"]


def basis_size(n: int, r: int) -> int:
    """Number of monomials of degree <= r in n variables: C(n+r, r)."""
    if n < 1 or r < 0:
        raise ValueError("need n >= 1 and r >= 0")
    return comb(n + r, r)


def _monomials_of_degree(n: int, d: int) -> Iterator[tuple[int, ...]]:
    """Exponent vectors with |alpha| = d, in lexicographic order."""
    if n == 1:
        yield (d,)
        return
    for first in range(d, -1, -1):
        for rest in _monomials_of_degree(n - 1, d - first):
            yield (first, *rest)


def monomials_upto(n: int, r: int) -> list[tuple[int, ...]]:
    """All exponent vectors with |alpha| <= r in graded lexicographic order."""
    if n < 1 or r < 0:
        raise ValueError("need n >= 1 and r >= 0")
    out: list[tuple[int, ...]] = []
    for d in range(r + 1):
        out.extend(_monomials_of_degree(n, d))
    return out


@dataclass(frozen=True)
class MonomialBasis:
    """Indexed monomial basis of degree <= r in n variables."""

    n: int
    r: int
    exponents: tuple[tuple[int, ...], ...]

    @staticmethod
    def create(n: int, r: int) -> "MonomialBasis":
        return MonomialBasis(n, r, tuple(monomials_upto(n, r)))

    def __len__(self) -> int:
        return len(self.exponents)

    def index_map(self) -> dict[tuple[int, ...], int]:
        return {e: i for i, e in enumerate(self.exponents)}

    def degrees(self) -> tuple[int, ...]:
        return tuple(sum(e) for e in self.exponents)
